import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from infinipatch import kernels
from infinipatch.errors import ShapeError


def conv_oracle(x, w, bias=None):
    c_in, h, wd = x.shape
    n_out, _, kh, kw = w.shape
    out = np.zeros((n_out, h - kh + 1, wd - kw + 1), dtype=np.float64)
    for o in range(n_out):
        for y in range(out.shape[1]):
            for xx in range(out.shape[2]):
                s = 0.0
                for c in range(c_in):
                    for i in range(kh):
                        for j in range(kw):
                            s += float(w[o, c, i, j]) * float(x[c, y + i, xx + j])
                out[o, y, xx] = s + (0.0 if bias is None else float(bias[o]))
    return out


def tconv_oracle(x, w):
    c_in, h, wd = x.shape
    n_out, _, k, _ = w.shape
    out = np.zeros((n_out, 2 * (h - 1) + k, 2 * (wd - 1) + k))
    for o in range(n_out):
        for c in range(c_in):
            for y in range(h):
                for xx in range(wd):
                    for a in range(k):
                        for b in range(k):
                            out[o, 2 * y + a, 2 * xx + b] += float(w[o, c, a, b]) * float(x[c, y, xx])
    return out


def test_conv_all_ones():
    out = kernels.conv2d_valid(np.ones((1, 3, 3)), np.ones((1, 1, 3, 3)), np.zeros(1))
    assert out.shape == (1, 1, 1) and out[0, 0, 0] == 9.0


def test_conv_scale_kernel(rng):
    x = rng.normal(size=(1, 6, 5)).astype(np.float32)
    out = kernels.conv2d_valid(x, np.full((1, 1, 1, 1), 2.0))
    assert np.array_equal(out, 2 * x)


def test_conv_ramp_against_loop():
    x = np.arange(16, dtype=np.float32).reshape(1, 4, 4)
    w = np.zeros((1, 1, 3, 3), dtype=np.float32)
    w[0, 0, :2, :2] = [[1, 0], [0, -1]]
    out = kernels.conv2d_valid(x, w)
    assert out.shape == (1, 2, 2)
    np.testing.assert_array_equal(out, conv_oracle(x, w))
    np.testing.assert_array_equal(out, np.full((1, 2, 2), -5.0))


def test_conv_random_against_loop(rng):
    x = rng.normal(size=(3, 7, 6)).astype(np.float32)
    w = rng.normal(size=(2, 3, 3, 3)).astype(np.float32)
    b = rng.normal(size=2).astype(np.float32)
    np.testing.assert_allclose(kernels.conv2d_valid(x, w, b), conv_oracle(x, w, b), rtol=1e-5, atol=1e-5)


def test_conv_stride2(rng):
    x = rng.normal(size=(2, 9, 9)).astype(np.float32)
    w = rng.normal(size=(3, 2, 3, 3)).astype(np.float32)
    out = kernels.conv2d_valid(x, w, stride=2)
    assert out.shape == (3, 4, 4)
    np.testing.assert_allclose(out, conv_oracle(x, w)[:, ::2, ::2], rtol=1e-5, atol=1e-5)


def test_conv_batched_matches_single(rng):
    x = rng.normal(size=(3, 2, 6, 6)).astype(np.float32)
    w = rng.normal(size=(4, 2, 3, 3)).astype(np.float32)
    out = kernels.conv2d_valid(x, w)
    for n in range(3):
        assert np.array_equal(out[n], kernels.conv2d_valid(x[n], w))


def test_conv_errors():
    with pytest.raises(ShapeError):
        kernels.conv2d_valid(np.ones((2, 5, 5)), np.ones((1, 1, 3, 3)))
    with pytest.raises(ShapeError):
        kernels.conv2d_valid(np.ones((1, 2, 5)), np.ones((1, 1, 3, 3)))
    with pytest.raises(ShapeError):
        kernels.conv2d_valid(np.ones((5, 5)), np.ones((1, 1, 3, 3)))


def test_tconv_single_tap(rng):
    k = rng.normal(size=(1, 1, 3, 3)).astype(np.float32)
    assert np.array_equal(kernels.tconv2d_stride2_valid(np.ones((1, 1, 1)), k)[0], k[0, 0])


def test_tconv_overlap_center():
    out = kernels.tconv2d_stride2_valid(np.ones((1, 2, 2)), np.ones((1, 1, 3, 3)))
    assert out.shape == (1, 5, 5) and out[0, 2, 2] == 4.0
    np.testing.assert_array_equal(out, tconv_oracle(np.ones((1, 2, 2)), np.ones((1, 1, 3, 3))))


@pytest.mark.parametrize("n", range(1, 33))
def test_tconv_shape(n):
    out = kernels.tconv2d_stride2_valid(np.ones((1, n, 1)), np.ones((1, 1, 3, 3)))
    assert out.shape[-2:] == (2 * n + 1, 3)


def test_tconv_random_against_loop(rng):
    x = rng.normal(size=(2, 4, 3)).astype(np.float32)
    w = rng.normal(size=(3, 2, 3, 3)).astype(np.float32)
    np.testing.assert_allclose(kernels.tconv2d_stride2_valid(x, w), tconv_oracle(x, w), rtol=1e-5, atol=1e-5)


def test_tconv_empty():
    with pytest.raises(ShapeError):
        kernels.tconv2d_stride2_valid(np.ones((1, 0, 3)), np.ones((1, 1, 3, 3)))


def test_blur_constant_and_center():
    assert np.allclose(kernels.blur3(np.full((2, 6, 5), 3.5)), 3.5)
    x = np.zeros((1, 3, 3), np.float32)
    x[0, 1, 1] = 16.0
    assert kernels.blur3(x)[0, 0, 0] == 4.0


def test_blur_equals_conv(rng):
    x = rng.normal(size=(1, 5, 5)).astype(np.float32)
    b = np.array([1.0, 2.0, 1.0])
    w = (np.outer(b, b) / 16.0).reshape(1, 1, 3, 3)
    np.testing.assert_array_equal(kernels.blur3(x), kernels.conv2d_valid(x, w))


def test_blur_depthwise(rng):
    x = rng.normal(size=(3, 6, 6)).astype(np.float32)
    out = kernels.blur3(x)
    for c in range(3):
        assert np.array_equal(out[c], kernels.blur3(x[c : c + 1])[0])
    with pytest.raises(ShapeError):
        kernels.blur3(np.ones((1, 2, 5)))


def test_modulated_neutral(rng):
    x = rng.normal(size=(3, 6, 6)).astype(np.float32)
    w = rng.normal(size=(2, 3, 3, 3)).astype(np.float32)
    assert np.array_equal(kernels.modulated_conv(x, w, np.ones(3), demodulate=False), kernels.conv2d_valid(x, w))


def test_modulated_unit_norm(rng):
    x = rng.normal(size=(2, 5, 5)).astype(np.float32)
    w = rng.normal(size=(1, 2, 3, 3))
    w = (w / np.sqrt(np.square(w).sum())).astype(np.float32)
    np.testing.assert_allclose(kernels.modulated_conv(x, w, np.ones(2)), kernels.conv2d_valid(x, w), atol=1e-6)


def test_modulated_materialized(rng):
    x = rng.normal(size=(3, 6, 6)).astype(np.float32)
    w = rng.normal(size=(4, 3, 3, 3)).astype(np.float32)
    s = rng.normal(size=3).astype(np.float32)
    wm = w.astype(np.float64) * s[None, :, None, None]
    wm /= np.sqrt(np.square(wm).sum(axis=(1, 2, 3), keepdims=True) + 1e-8)
    np.testing.assert_allclose(kernels.modulated_conv(x, w, s), conv_oracle(x, wm), rtol=1e-5, atol=1e-5)
    with pytest.raises(ShapeError):
        kernels.modulated_conv(x, w, np.ones(2))


def test_leaky_relu(rng):
    assert kernels.leaky_relu(np.float32(1.0)) == 1.0
    assert np.isclose(kernels.leaky_relu(np.float32(-1.0)), -0.2)
    x = rng.normal(size=(2, 4, 4)).astype(np.float32)
    out = kernels.leaky_relu(x)
    for v, o in zip(x.ravel(), out.ravel()):
        assert o == (v if v > 0 else np.float32(0.2) * v)


def test_add_noise(rng):
    x = rng.normal(size=(3, 4, 4)).astype(np.float32)
    n = rng.normal(size=(1, 4, 4)).astype(np.float32)
    assert np.array_equal(kernels.add_noise(x, n, np.zeros(3)), x)
    assert np.array_equal(kernels.add_noise(np.zeros_like(x), n, np.ones(3)), np.repeat(n, 3, axis=0))
    s = rng.normal(size=3).astype(np.float32)
    out = kernels.add_noise(x, n, s)
    for c in range(3):
        for i in range(4):
            for j in range(4):
                assert out[c, i, j] == x[c, i, j] + s[c] * n[0, i, j]
    with pytest.raises(ShapeError):
        kernels.add_noise(x, n[:, :3], np.ones(3))


@settings(max_examples=40, deadline=None)
@given(h=st.integers(1, 64), w=st.integers(1, 64))
def test_shape_laws(h, w):
    x = np.ones((1, h, w), np.float32)
    k3 = np.ones((1, 1, 3, 3), np.float32)
    assert kernels.tconv2d_stride2_valid(x, k3).shape[-2:] == (2 * h + 1, 2 * w + 1)
    if h >= 3 and w >= 3:
        assert kernels.conv2d_valid(x, k3).shape[-2:] == (h - 2, w - 2)
        assert kernels.blur3(x).shape[-2:] == (h - 2, w - 2)
        if h % 2 and w % 2:
            assert all(s % 2 for s in kernels.blur3(x).shape[-2:])
    else:
        with pytest.raises(ShapeError):
            kernels.conv2d_valid(x, k3)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), dy=st.integers(0, 4), dx=st.integers(0, 4))
def test_translation_equivariance(seed, dy, dx):
    r = np.random.default_rng(seed)
    x = r.normal(size=(2, 14, 14)).astype(np.float32)
    w = r.normal(size=(3, 2, 3, 3)).astype(np.float32)
    full = kernels.conv2d_valid(x, w)
    part = kernels.conv2d_valid(x[:, dy : dy + 8, dx : dx + 8], w)
    assert np.array_equal(part, full[:, dy : dy + 6, dx : dx + 6])
    tfull = kernels.tconv2d_stride2_valid(x, w)
    tpart = kernels.tconv2d_stride2_valid(x[:, dy : dy + 8, dx : dx + 8], w)
    # interior pixels (those receiving every tap) agree after a shift of 2 per input pixel
    assert np.array_equal(tpart[:, 1:-1, 1:-1], tfull[:, 2 * dy + 1 : 2 * dy + 16, 2 * dx + 1 : 2 * dx + 16])


def test_determinism_across_threads(rng):
    from concurrent.futures import ThreadPoolExecutor

    x = rng.normal(size=(4, 12, 12)).astype(np.float32)
    w = rng.normal(size=(4, 4, 3, 3)).astype(np.float32)
    s = rng.normal(size=4).astype(np.float32)
    ref = kernels.modulated_conv(x, w, s).tobytes()
    with ThreadPoolExecutor(4) as pool:
        outs = list(pool.map(lambda _: kernels.modulated_conv(x, w, s).tobytes(), range(8)))
    assert all(o == ref for o in outs)


def test_outputs_finite(rng):
    x = rng.normal(size=(2, 7, 7)).astype(np.float32)
    w = rng.normal(size=(2, 2, 3, 3)).astype(np.float32)
    for out in (kernels.conv2d_valid(x, w), kernels.tconv2d_stride2_valid(x, w), kernels.blur3(x),
                kernels.modulated_conv(x, w, np.zeros(2))):
        assert np.all(np.isfinite(out))
