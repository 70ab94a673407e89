"""Model and sample containers, CSV and PGM emitters.

Container layout (little-endian): 8-byte magic, ``u32`` rows, ``u32`` cols,
type-specific fields, ``f64`` payload, then a ``u32`` CRC32 of everything
before it.  Models add two length-prefixed UTF-8 unit names and one sampler
mode byte per side after the dimensions.
"""
from __future__ import annotations

import csv
import struct
import zlib
from pathlib import Path

import numpy as np

from .errors import ChecksumError, TruncatedPayload, VersionError
from .model import ExpRbmModel, SamplerMode
from .units import get_unit

MODEL_MAGIC = b"EXPRBM01"
SAMPLES_MAGIC = b"EXPSMP01"


def _seal(body: bytes) -> bytes:
    return body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)


def _unseal(raw: bytes, magic: bytes) -> memoryview:
    if len(raw) < len(magic) + 4:
        raise TruncatedPayload("file too short")
    if raw[:len(magic)] != magic:
        raise VersionError(f"bad magic {raw[:len(magic)]!r}, expected {magic!r}")
    body, (crc,) = raw[:-4], struct.unpack("<I", raw[-4:])
    if zlib.crc32(body) & 0xFFFFFFFF != crc:
        raise ChecksumError("CRC32 mismatch")
    return memoryview(body)


def _name(s: str) -> bytes:
    b = s.encode("utf-8")
    return struct.pack("<I", len(b)) + b


def encode_model(model: ExpRbmModel) -> bytes:
    I, J = model.W.shape
    parts = [MODEL_MAGIC, struct.pack("<II", I, J),
             _name(model.visible_spec.name), _name(model.hidden_spec.name),
             struct.pack("<BB", int(model.visible_mode), int(model.hidden_mode)),
             np.ascontiguousarray(model.W, dtype="<f8").tobytes(),
             np.ascontiguousarray(model.b_visible, dtype="<f8").tobytes(),
             np.ascontiguousarray(model.b_hidden, dtype="<f8").tobytes()]
    return _seal(b"".join(parts))


class _Reader:
    def __init__(self, buf: memoryview, pos: int):
        self.buf, self.pos = buf, pos

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise TruncatedPayload("unexpected end of data")
        out = bytes(self.buf[self.pos:self.pos + n])
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def floats(self, n: int) -> np.ndarray:
        return np.frombuffer(self.take(8 * n), dtype="<f8").astype(np.float64)


def decode_model(raw: bytes) -> ExpRbmModel:
    r = _Reader(_unseal(raw, MODEL_MAGIC), len(MODEL_MAGIC))
    I, J = r.unpack("<II")
    names = []
    for _ in range(2):
        (n,) = r.unpack("<I")
        names.append(r.take(n).decode("utf-8"))
    vm, hm = r.unpack("<BB")
    W = r.floats(I * J).reshape(I, J)
    bv = r.floats(I)
    bh = r.floats(J)
    if r.pos != len(r.buf):
        raise TruncatedPayload("trailing bytes after model payload")
    return ExpRbmModel(W, bv, bh, get_unit(names[0]), get_unit(names[1]),
                       SamplerMode(vm), SamplerMode(hm))


def save_model(model: ExpRbmModel, path):
    Path(path).write_bytes(encode_model(model))


def load_model(path) -> ExpRbmModel:
    return decode_model(Path(path).read_bytes())


def encode_samples(X) -> bytes:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    N, D = X.shape
    return _seal(SAMPLES_MAGIC + struct.pack("<II", N, D)
                 + np.ascontiguousarray(X, dtype="<f8").tobytes())


def decode_samples(raw: bytes) -> np.ndarray:
    r = _Reader(_unseal(raw, SAMPLES_MAGIC), len(SAMPLES_MAGIC))
    N, D = r.unpack("<II")
    X = r.floats(N * D).reshape(N, D)
    if r.pos != len(r.buf):
        raise TruncatedPayload("trailing bytes after samples payload")
    return X


def save_samples(X, path):
    Path(path).write_bytes(encode_samples(X))


def load_samples(path) -> np.ndarray:
    return decode_samples(Path(path).read_bytes())


def fmt_real(v) -> str:
    """17 significant digits, '.' decimal separator regardless of locale."""
    return format(float(v), ".17g")


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt_real(v) if isinstance(v, (float, np.floating)) else v for v in row])


def tile_filters(filters, shape, cols=None, pad=1) -> np.ndarray:
    """Lay out filters (one per row) as a uint8 mosaic.

    Each filter is min-max scaled to [0, 255] on its own; constant filters
    map to mid-gray.
    """
    F = np.atleast_2d(np.asarray(filters, dtype=float))
    h, w = shape
    k = F.shape[0]
    cols = cols or int(np.ceil(np.sqrt(k)))
    rows = int(np.ceil(k / cols))
    img = np.zeros((rows * (h + pad) + pad, cols * (w + pad) + pad), dtype=np.uint8)
    for i, f in enumerate(F):
        lo, hi = f.min(), f.max()
        scaled = np.full(f.shape, 127.5) if hi == lo else (f - lo) / (hi - lo) * 255.0
        tile = np.rint(scaled).astype(np.uint8).reshape(h, w)
        r, c = divmod(i, cols)
        y0, x0 = pad + r * (h + pad), pad + c * (w + pad)
        img[y0:y0 + h, x0:x0 + w] = tile
    return img


def encode_pgm(img) -> bytes:
    img = np.asarray(img, dtype=np.uint8)
    h, w = img.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + img.tobytes()


def write_pgm(path, img):
    Path(path).write_bytes(encode_pgm(img))
