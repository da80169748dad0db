"""Row-streaming output writers: 8-bit RGB PNG and the IFGR float dump.

Both accept rows as float32 ``(3, rows, width)`` arrays in tanh range and
never hold more than the rows they are given.  Fed the same rows, they emit
the same bytes however the rows are grouped into calls.
"""

import struct
import zlib

import numpy as np

from .errors import SinkError

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"
RAW_MAGIC = b"IFGR"
IDAT_SIZE = 1 << 16


def to_uint8(rgb):
    """Map tanh outputs to bytes: ``(x + 1) / 2 * 255``, clamped, rounded half to even."""
    x = np.asarray(rgb, dtype=np.float64)
    return np.rint(np.clip((x + 1.0) / 2.0 * 255.0, 0.0, 255.0)).astype(np.uint8)


class _Writer:
    def __init__(self, out):
        self.out = out
        self.height = self.width = None
        self.rows_written = 0

    def begin(self, height, width):
        self.height, self.width = height, width
        self._write(self._header())

    def write_rows(self, rows):
        rows = np.asarray(rows, dtype=np.float32)
        if rows.ndim != 3 or rows.shape[0] != 3 or rows.shape[2] != self.width:
            raise SinkError(f"expected (3, r, {self.width}) rows, got {rows.shape}")
        for r in range(rows.shape[1]):
            self._row(rows[:, r, :])
            self.rows_written += 1

    def close(self):
        if self.rows_written != self.height:
            raise SinkError(f"wrote {self.rows_written} of {self.height} rows")
        self._finish()

    def _write(self, data):
        try:
            self.out.write(data)
        except OSError as exc:
            raise SinkError(f"writing output failed: {exc}") from exc

    def _header(self):
        return b""

    def _finish(self):
        pass


class PngWriter(_Writer):
    def _header(self):
        self._z = zlib.compressobj(6)
        self._pending = b""
        ihdr = struct.pack(">IIBBBBB", self.width, self.height, 8, 2, 0, 0, 0)
        return PNG_SIGNATURE + _chunk(b"IHDR", ihdr)

    def _row(self, row):
        self._pending += self._z.compress(b"\x00" + to_uint8(row).T.tobytes())
        while len(self._pending) >= IDAT_SIZE:
            self._write(_chunk(b"IDAT", self._pending[:IDAT_SIZE]))
            self._pending = self._pending[IDAT_SIZE:]

    def _finish(self):
        data = self._pending + self._z.flush()
        for i in range(0, len(data), IDAT_SIZE):
            self._write(_chunk(b"IDAT", data[i : i + IDAT_SIZE]))
        self._write(_chunk(b"IEND", b""))


class RawWriter(_Writer):
    """``IFGR``, u32 height, u32 width, then row-major interleaved RGB float32 (little-endian)."""

    def _header(self):
        return RAW_MAGIC + struct.pack("<II", self.height, self.width)

    def _row(self, row):
        self._write(np.ascontiguousarray(row.T, dtype="<f4").tobytes())


def _chunk(kind, data):
    crc = zlib.crc32(data, zlib.crc32(kind)) & 0xFFFFFFFF
    return struct.pack(">I", len(data)) + kind + data + struct.pack(">I", crc)


def writer_for(fmt, out):
    if fmt == "png":
        return PngWriter(out)
    if fmt == "raw":
        return RawWriter(out)
    raise ValueError(f"unknown output format {fmt!r}")


def write_image(rgb, out, fmt="png"):
    """Write a whole ``(3, h, w)`` canvas through the streaming writer."""
    rgb = np.asarray(rgb, dtype=np.float32)
    w = writer_for(fmt, out)
    w.begin(rgb.shape[1], rgb.shape[2])
    w.write_rows(rgb)
    w.close()


def read_raw(data):
    if data[:4] != RAW_MAGIC:
        raise ValueError("not an IFGR dump")
    h, w = struct.unpack("<II", data[4:12])
    pix = np.frombuffer(data[12:], dtype="<f4").reshape(h, w, 3)
    return np.ascontiguousarray(pix.transpose(2, 0, 1)).astype(np.float32)
