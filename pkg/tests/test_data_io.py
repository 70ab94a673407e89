import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from exprbm.data import (Dataset, Preprocess, bars_and_stripes_distribution, encode_idx,
                         generate_bars_and_stripes, parse_idx, preprocess)
from exprbm.errors import (ChecksumError, MalformedMagic, TruncatedPayload, UnsupportedType,
                           VersionError)
from exprbm.fileio import (decode_model, decode_samples, encode_model, encode_pgm,
                           encode_samples, fmt_real, tile_filters, write_csv)
from exprbm.model import ExpRbmModel, SamplerMode

finite = st.floats(-1e6, 1e6, allow_nan=False)


def test_idx_ubyte_roundtrip():
    X = np.array([[0, 255, 128, 1]], dtype=np.uint8)
    out = parse_idx(encode_idx(X, shape=(1, 2, 2)))
    np.testing.assert_allclose(out, X / 255.0)


@given(arrays(np.float64, (4, 3), elements=finite))
@settings(max_examples=30, deadline=None)
def test_idx_float_roundtrip(X):
    assert np.array_equal(parse_idx(encode_idx(X, "f8")), X)


def test_idx_errors():
    good = encode_idx(np.zeros((2, 2), dtype=np.uint8))
    with pytest.raises(MalformedMagic):
        parse_idx(b"\x01" + good[1:])
    with pytest.raises(UnsupportedType):
        parse_idx(good[:2] + b"\x0b" + good[3:])
    with pytest.raises(TruncatedPayload):
        parse_idx(good[:-1])
    with pytest.raises(TruncatedPayload):
        parse_idx(bytes([0, 0, 8, 3]) + struct.pack(">I", 2))


def test_preprocess_binarize_and_pm():
    ds = Dataset(np.array([[0.2, 0.6], [0.5, 0.4]]))
    np.testing.assert_array_equal(preprocess(ds, "binarize").splits["train"].X.sum(), 2)
    pm = preprocess(ds, Preprocess.BINARIZE, pm=True)
    assert set(np.unique(pm.X)) == {-0.5, 0.5}


def test_preprocess_standardizes_with_train_split():
    g = np.random.default_rng(0)
    ds = Dataset(g.normal(0, 3, size=(100, 4)))
    out = preprocess(ds, "normalize", split=(0.6, 0.2, 0.2), seed=1)
    assert out.X.std() == pytest.approx(1.0, rel=1e-12)
    assert sum(s.n for s in out.splits.values()) == 100
    with pytest.raises(ValueError):
        preprocess(ds, "none", split=(0.5, 0.2, 0.2))


def test_bars_and_stripes_structure():
    X = generate_bars_and_stripes(4, 300, seed=0).X.reshape(-1, 4, 4)
    rows_const = np.all(X == X[:, :, :1], axis=(1, 2))
    cols_const = np.all(X == X[:, :1, :], axis=(1, 2))
    assert np.all(rows_const | cols_const)
    assert np.array_equal(generate_bars_and_stripes(4, 10, seed=3).X,
                          generate_bars_and_stripes(4, 10, seed=3).X)


def test_bars_and_stripes_size_two_covers_support():
    X = generate_bars_and_stripes(2, 2000, seed=1).X
    assert len({tuple(r) for r in X}) == 6
    P, p = bars_and_stripes_distribution(2)
    assert len(P) == 6 and p.sum() == pytest.approx(1.0)


def test_bas_distribution_size_four():
    P, p = bars_and_stripes_distribution(4)
    assert len(P) == 30
    # 28 patterns at 1/32; all-off and all-on arise from both orientations
    assert -(p * np.log(p)).sum() == pytest.approx(28 / 32 * np.log(32) + 2 / 16 * np.log(16))


@given(arrays(np.float64, (3, 2), elements=finite), st.sampled_from(["sigmoid", "softplus", "poisson"]))
@settings(max_examples=30, deadline=None)
def test_model_roundtrip(W, hidden):
    m = ExpRbmModel(W, np.arange(3.0), [1.5, -2.0], "linear", hidden,
                    SamplerMode.GAUSSIAN_APPROX, SamplerMode.EXACT_WHEN_AVAILABLE)
    r = decode_model(encode_model(m))
    assert np.array_equal(r.W, m.W) and np.array_equal(r.b_hidden, m.b_hidden)
    assert r.hidden_spec.name == hidden and r.visible_mode is SamplerMode.GAUSSIAN_APPROX
    assert encode_model(r) == encode_model(m)


def test_model_container_errors():
    raw = encode_model(ExpRbmModel.zeros(2, 2))
    with pytest.raises(ChecksumError):
        decode_model(raw[:20] + bytes([raw[20] ^ 1]) + raw[21:])
    with pytest.raises(VersionError):
        decode_model(b"EXPRBM99" + raw[8:])
    with pytest.raises(TruncatedPayload):
        decode_model(raw[:5])


def test_samples_roundtrip():
    X = np.random.default_rng(0).normal(size=(5, 7))
    assert np.array_equal(decode_samples(encode_samples(X)), X)


def test_csv_uses_round_trip_reals(tmp_path):
    p = tmp_path / "t.csv"
    write_csv(p, ["a", "b"], [(0.1, 2), (1 / 3, "x")])
    lines = p.read_text().splitlines()
    assert lines[0] == "a,b" and float(lines[2].split(",")[0]) == 1 / 3
    assert fmt_real(0.1) == "0.10000000000000001"


def test_tile_filters_and_pgm():
    F = np.array([[0, 1, 2, 3.0], [5, 5, 5, 5.0]])
    img = tile_filters(F, (2, 2), cols=2)
    assert img.shape == (4, 7)
    assert img[1:3, 1:3].min() == 0 and img[1:3, 1:3].max() == 255
    assert np.all(img[1:3, 4:6] == 128)
    raw = encode_pgm(img)
    assert raw.startswith(b"P5\n7 4\n255\n") and len(raw) == 11 + 28
