"""Datasets: IDX parsing, preprocessing and the bars-and-stripes generator."""
from __future__ import annotations

import enum
import math
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import MalformedMagic, TruncatedPayload, UnsupportedType
from .rng import RngStream

# IDX type byte -> (big-endian dtype, scale applied on load)
IDX_TYPES = {
    0x08: (np.dtype(">u1"), 1.0 / 255.0),
    0x0D: (np.dtype(">f4"), 1.0),
    0x0E: (np.dtype(">f8"), 1.0),
}


@dataclass
class Dataset:
    """Row-major observations plus what was done to them."""

    X: np.ndarray
    binarized: bool = False
    mean: float | None = None
    std: float | None = None
    split: str | None = None
    splits: dict = field(default_factory=dict, repr=False)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def subset(self, name: str) -> "Dataset":
        return self.splits[name]


def load_idx(path) -> Dataset:
    """Read an IDX file; ubyte payloads are scaled to [0, 1]."""
    raw = Path(path).read_bytes()
    return Dataset(parse_idx(raw))


def parse_idx(raw: bytes) -> np.ndarray:
    if len(raw) < 4 or raw[0] != 0 or raw[1] != 0:
        raise MalformedMagic("not an IDX file (bad magic)")
    type_byte, ndim = raw[2], raw[3]
    if type_byte not in IDX_TYPES:
        raise UnsupportedType(f"unsupported IDX type byte 0x{type_byte:02x}")
    if ndim < 1:
        raise MalformedMagic("IDX file declares zero dimensions")
    header = 4 + 4 * ndim
    if len(raw) < header:
        raise TruncatedPayload("IDX header is truncated")
    dims = struct.unpack(f">{ndim}I", raw[4:header])
    dtype, scale = IDX_TYPES[type_byte]
    count = math.prod(dims)
    if len(raw) - header != count * dtype.itemsize:
        raise TruncatedPayload(
            f"payload holds {len(raw) - header} bytes, dims {dims} need {count * dtype.itemsize}")
    arr = np.frombuffer(raw, dtype=dtype, offset=header, count=count).astype(np.float64)
    if scale != 1.0:
        arr = arr * scale
    n = dims[0]
    return arr.reshape(n, -1) if ndim > 1 else arr.reshape(n, 1)


def write_idx(path, array, dtype="u1", shape=None):
    """Write ``array`` as IDX.  ``u1`` expects values in [0, 1] or raw bytes."""
    Path(path).write_bytes(encode_idx(array, dtype, shape))


def encode_idx(array, dtype="u1", shape=None) -> bytes:
    a = np.asarray(array)
    codes = {"u1": 0x08, "f4": 0x0D, "f8": 0x0E}
    code = codes[dtype]
    if dtype == "u1":
        if a.dtype != np.uint8:
            a = np.rint(np.clip(a, 0.0, 1.0) * 255.0).astype(np.uint8)
    else:
        a = a.astype(">" + dtype)
    dims = tuple(shape) if shape is not None else a.shape
    if math.prod(dims) != a.size:
        raise ValueError("shape does not match the array size")
    head = bytes([0, 0, code, len(dims)]) + struct.pack(f">{len(dims)}I", *dims)
    return head + a.astype(IDX_TYPES[code][0]).tobytes()


class Preprocess(enum.Enum):
    BINARIZE = "binarize"
    NORMALIZE_STD = "normalize"
    NONE = "none"


def preprocess(ds: Dataset, mode=Preprocess.NONE, split=(1.0, 0.0, 0.0), seed=0,
               threshold=0.5, pm=False) -> Dataset:
    """Shuffle-split ``ds`` and binarize or rescale it.

    The returned dataset holds the training split in ``X`` and every split in
    ``splits``.  ``pm`` maps binary values to ±0.5.  Standardization divides
    by the global standard deviation of the training split only.
    """
    fr = tuple(float(f) for f in split)
    if len(fr) != 3 or min(fr) < 0 or abs(sum(fr) - 1.0) > 1e-9:
        raise ValueError(f"split fractions must be three nonnegative numbers summing to 1, got {split}")
    mode = Preprocess(mode)
    X = np.asarray(ds.X, dtype=float)
    n = X.shape[0]
    order = RngStream(seed, 0).permutation(n)
    n_train = int(round(fr[0] * n))
    n_valid = int(round(fr[1] * n))
    n_valid = min(n_valid, n - n_train)
    idx = {"train": order[:n_train], "valid": order[n_train:n_train + n_valid],
           "test": order[n_train + n_valid:]}
    mean = std = None
    binarized = False
    if mode is Preprocess.BINARIZE:
        X = (X >= threshold).astype(float)
        if pm:
            X = X - 0.5
        binarized = True
    elif mode is Preprocess.NORMALIZE_STD:
        train = X[idx["train"]]
        mean = float(train.mean())
        std = float(train.std())
        if std == 0:
            raise ValueError("training split has zero variance")
        X = X / std
    base = Dataset(X, binarized, mean, std)
    splits = {k: replace(base, X=X[v], split=k) for k, v in idx.items()}
    out = replace(splits["train"], splits=splits)
    return out


def generate_bars_and_stripes(size: int, n: int, seed=0) -> Dataset:
    """``n`` binary ``size x size`` images, flattened row-major.

    Each image picks horizontal or vertical orientation with probability 1/2
    and switches every line on with probability 1/2.
    """
    rng = RngStream(seed, 0)
    lines = rng.uniform((n, size)) < 0.5
    vertical = rng.uniform(n) < 0.5
    imgs = np.repeat(lines[:, :, None], size, axis=2)  # constant along rows
    imgs[vertical] = np.transpose(imgs[vertical], (0, 2, 1))
    return Dataset(imgs.reshape(n, size * size).astype(float), binarized=True)


def bars_and_stripes_distribution(size: int):
    """All distinct patterns and their generating probabilities."""
    pats = {}
    for vertical in (False, True):
        for code in range(2 ** size):
            line = np.array([(code >> k) & 1 for k in range(size)], dtype=float)
            img = np.repeat(line[:, None], size, axis=1)
            if vertical:
                img = img.T
            key = tuple(img.reshape(-1))
            pats[key] = pats.get(key, 0.0) + 0.5 / 2 ** size
    X = np.array(list(pats), dtype=float)
    return X, np.array(list(pats.values()))
