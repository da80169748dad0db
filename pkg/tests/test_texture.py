import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from infinipatch import planner, preset, texture
from infinipatch.errors import ShapeError, UnachievableSizeError
from infinipatch.fields import noise_spec, sample_global, sample_noise_window
from infinipatch.structure import mapping
from infinipatch.verify import noisy_weights
from infinipatch.weights import init_weights


def noise_for(cfg, zs_origin, seed=0):
    _, frames = planner.frames(cfg)
    out = {}
    for layer in texture.noise_layers(cfg.texture):
        fr = frames[layer.name]
        out[layer.name] = sample_noise_window(noise_spec(seed, layer.noise_id),
                                              (fr.origin(zs_origin[0]), fr.origin(zs_origin[1])), fr.size, fr.size)
    return out


@pytest.fixture(scope="module")
def field():
    return np.random.default_rng(5).normal(size=(8, 15, 15)).astype(np.float32)


@pytest.fixture(scope="module")
def latent(cfg, noisy):
    return mapping(noisy, sample_global(0, cfg.zg_dim), cfg.mapping_depth)


def render(cfg, weights, latent, field, s, seed=0):
    n = cfg.zs_size
    return texture.forward_texture(field[:, s[0] : s[0] + n, s[1] : s[1] + n], latent, noise_for(cfg, s, seed),
                                   cfg.texture, weights)


def test_size_chains():
    full = preset("full")
    assert texture.size_chain(11, full.texture) == [11, 17, 29, 53, 101]
    assert texture.block_out(101, full.texture) == 197
    assert texture.size_chain(5, preset("test").texture) == [5, 7, 11]


def test_backward_shape():
    assert texture.backward_shape(101, preset("full").texture) == 11
    assert texture.backward_shape(11, preset("test").texture) == 5
    with pytest.raises(UnachievableSizeError) as info:
        texture.backward_shape(100, preset("full").texture)
    assert 101 in info.value.nearest


def test_test_forward_shape(cfg, noisy, latent, field):
    assert render(cfg, noisy, latent, field, (0, 0)).shape == (3, 11, 11)


def test_full_forward_shape():
    full = preset("full")
    w = init_weights(full, 0)
    lat = mapping(w, sample_global(0, full.zg_dim), full.mapping_depth)
    z_s = np.random.default_rng(0).normal(size=(256, 11, 11)).astype(np.float32)
    out = texture.forward_texture(z_s, lat, noise_for(full, (0, 0)), full.texture, w)
    assert out.shape == (3, 101, 101) and np.all(np.isfinite(out))


def test_zero_network(cfg, field):
    w = {k: np.zeros_like(v) for k, v in init_weights(cfg, 0).items()}
    w["texture.to_rgb.bias"] = np.array([0.1, -0.2, 0.3], np.float32)
    lat = np.zeros(cfg.zg_dim, np.float32)
    out = texture.forward_texture(field[:, :5, :5], lat, noise_for(cfg, (0, 0)), cfg.texture, w)
    assert out.shape == (3, 11, 11)
    np.testing.assert_array_equal(out, np.tanh(w["texture.to_rgb.bias"])[:, None, None] * np.ones((3, 11, 11)))


def test_small_input_names_layer(cfg, weights, latent):
    with pytest.raises(ShapeError, match="texture.b0.up"):
        texture.forward_texture(np.zeros((8, 1, 1), np.float32), latent, {}, cfg.texture, weights)
    with pytest.raises(ShapeError):
        texture.forward_texture(np.zeros((8, 4, 4), np.float32), latent, {}, cfg.texture, weights)


def test_layers_have_unique_noise_ids():
    for name in ("test", "full"):
        ids = [layer.noise_id for layer in texture.noise_layers(preset(name).texture)]
        assert len(set(ids)) == len(ids)


def test_stride_law(cfg, noisy, latent, field):
    a = render(cfg, noisy, latent, field, (2, 2))
    b = render(cfg, noisy, latent, field, (2, 3))
    s = cfg.stride
    assert np.array_equal(b[:, :, : 11 - s], a[:, :, s:])
    assert not np.array_equal(b, a)


def test_center_alignment_support(cfg, noisy, latent, field):
    z = field[:, :5, :5].copy()
    noise = noise_for(cfg, (0, 0))
    base = texture.forward_texture(z, latent, noise, cfg.texture, noisy)
    z[:, 2, 2] += 3.0
    moved = texture.forward_texture(z, latent, noise, cfg.texture, noisy)
    ys, xs = np.nonzero(np.any(moved != base, axis=0))
    assert (ys.min() + ys.max()) / 2 == 5 and (xs.min() + xs.max()) / 2 == 5


def test_center_alignment_peak(cfg):
    # symmetric positive kernels and zero biases keep the stack linear around z_S = 0
    w = init_weights(cfg, 0)
    for name in list(w):
        if name.endswith(".weight") and name.startswith("texture") and not name.endswith("style.weight"):
            k = w[name].shape[-1]
            kern = texture_kernel(k)
            w[name] = np.broadcast_to(kern, w[name].shape).astype(np.float32).copy()
        elif name.endswith("style.weight"):
            w[name] = np.zeros_like(w[name])
    z = np.zeros((8, 5, 5), np.float32)
    z[:, 2, 2] = 1e-3
    noise = noise_for(cfg, (0, 0))
    out = texture.forward_texture(z, np.zeros(cfg.zg_dim, np.float32), noise, cfg.texture, w)
    resp = np.abs(out).sum(axis=0)
    assert np.unravel_index(np.argmax(resp), resp.shape) == (5, 5)


def texture_kernel(k):
    if k == 1:
        return np.ones((1, 1))
    b = np.array([1.0, 2.0, 1.0])
    return np.outer(b, b)


def test_padded_keeps_doubling(cfg, noisy, latent, field):
    n = 5
    noise = {}
    for layer in texture.noise_layers(cfg.texture):
        m = n * 2 ** (layer.block + 1)
        noise[layer.name] = np.zeros((1, m, m), np.float32)
    out = texture.forward_texture_padded(field[:, :n, :n], latent, noise, cfg.texture, noisy)
    assert out.shape == (3, 20, 20) and texture.padded_size_chain(5, cfg.texture) == [5, 10, 20]


def test_padded_twin_is_not_seamless(cfg, noisy, latent, field):
    def padded(s):
        noise = {}
        for layer in texture.noise_layers(cfg.texture):
            k = 2 ** (layer.block + 1)
            noise[layer.name] = sample_noise_window(noise_spec(0, layer.noise_id), (k * s[0], k * s[1]), 5 * k, 5 * k)
        return texture.forward_texture_padded(field[:, s[0] : s[0] + 5, s[1] : s[1] + 5], latent, noise,
                                              cfg.texture, noisy)

    a, b = padded((0, 0)), padded((0, 1))
    # overlap in output space: a columns 4.. vs b columns ..16
    diff = np.abs(a[:, :, 4:] - b[:, :, :16]).max(axis=(0, 1))
    assert diff.max() > 1e-3
    # zero padding leaks in from the window edges: b's left edge and a's right edge
    bad = np.nonzero(diff)[0]
    assert 0 in bad and 15 in bad


@settings(max_examples=30, deadline=None)
@given(y0=st.integers(0, 10), x0=st.integers(0, 10), y1=st.integers(0, 10), x1=st.integers(0, 10),
       wseed=st.integers(0, 2**31), nseed=st.integers(0, 2**31))
def test_seam_theorem(y0, x0, y1, x1, wseed, nseed):
    cfg = preset("test")
    w = noisy_weights(cfg, wseed, np.random.default_rng(wseed))
    lat = mapping(w, sample_global(nseed, cfg.zg_dim), cfg.mapping_depth)
    field = np.random.default_rng(nseed).normal(size=(8, 15, 15)).astype(np.float32)
    a = render(cfg, w, lat, field, (y0, x0), nseed)
    b = render(cfg, w, lat, field, (y1, x1), nseed)
    s, p = cfg.stride, cfg.patch_size
    dy, dx = s * (y1 - y0), s * (x1 - x0)
    lo_y, hi_y = max(0, dy), min(p, dy + p)
    lo_x, hi_x = max(0, dx), min(p, dx + p)
    if hi_y > lo_y and hi_x > lo_x:
        assert np.array_equal(a[:, lo_y:hi_y, lo_x:hi_x], b[:, lo_y - dy : hi_y - dy, lo_x - dx : hi_x - dx])
