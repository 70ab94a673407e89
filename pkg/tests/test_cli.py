import csv
import json

import numpy as np
import pytest

from exprbm.cli import main
from exprbm.fileio import load_model, load_samples


@pytest.fixture
def bas(tmp_path):
    p = tmp_path / "bas.idx"
    assert main(["bas-gen", "--size", "3", "--n", "60", "--out", str(p), "--seed", "1", "--quiet"]) == 0
    return p


def test_train_sample_eval_pipeline(tmp_path, bas):
    model = tmp_path / "m.bin"
    metrics = tmp_path / "m.csv"
    rc = main(["train", "--data", str(bas), "--hidden", "4", "--epochs", "3", "--lr", "0.05",
               "--batch", "20", "--out", str(model), "--metrics", str(metrics), "--quiet"])
    assert rc == 0
    rows = list(csv.DictReader(metrics.open()))
    assert [int(r["epoch"]) for r in rows] == [1, 2, 3]
    assert set(rows[0]) == {"epoch", "recon_error", "wall_time_s"}

    samples = tmp_path / "s.bin"
    assert main(["sample", "--model", str(model), "--n", "40", "--steps", "2", "--chains", "8",
                 "--data", str(bas), "--out", str(samples), "--quiet"]) == 0
    S = load_samples(samples)
    assert S.shape == (40, 9)

    report = tmp_path / "r.json"
    assert main(["eval-isl", "--samples", str(samples), "--valid", str(bas), "--test", str(bas),
                 "--model", str(model), "--out", str(report), "--quiet"]) == 0
    r = json.loads(report.read_text())
    assert 0.5 < r["beta_star"] < 1 and np.isfinite(r["isl_test"])
    assert sorted(r["filter_ranking"]) == [0, 1, 2, 3]


def test_train_is_reproducible(tmp_path, bas):
    outs = []
    for k in range(2):
        out = tmp_path / f"m{k}.bin"
        main(["train", "--data", str(bas), "--hidden", "3", "--epochs", "2", "--seed", "4",
              "--threads", "1", "--out", str(out), "--quiet"])
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_train_with_continuous_units(tmp_path, bas):
    out = tmp_path / "m.bin"
    assert main(["train", "--data", str(bas), "--visible-unit", "linear", "--hidden-unit", "relu",
                 "--hidden-mode", "gaussian", "--hidden", "3", "--epochs", "2", "--out", str(out),
                 "--quiet"]) == 0
    m = load_model(out)
    assert m.hidden_spec.name == "relu" and m.hidden_mode.name == "GAUSSIAN_APPROX"


def test_verify_unit_csv(tmp_path):
    out = tmp_path / "v.csv"
    assert main(["verify-unit", "--unit", "linear", "--eta=-1,0,1", "--points", "11",
                 "--out", str(out), "--quiet"]) == 0
    rows = list(csv.DictReader(out.open()))
    assert list(rows[0]) == ["eta", "y", "exact_density", "gaussian_density"]
    for r in rows:
        assert float(r["exact_density"]) == pytest.approx(float(r["gaussian_density"]), abs=1e-8)


def test_base_measure_stdout(capsys):
    assert main(["base-measure", "--unit", "linear", "--points", "3", "--quiet"]) == 0
    vals = [float(line.split(",")[1]) for line in capsys.readouterr().out.split()]
    assert vals == pytest.approx([np.sqrt(2 * np.pi)] * 3, rel=1e-9)


def test_filters_hist_info(tmp_path, bas, capsys):
    model = tmp_path / "m.bin"
    main(["train", "--data", str(bas), "--hidden", "5", "--epochs", "1", "--out", str(model), "--quiet"])
    pgm = tmp_path / "f.pgm"
    assert main(["filters", "--model", str(model), "--top", "4", "--out", str(pgm), "--quiet"]) == 0
    assert pgm.read_bytes().startswith(b"P5\n")
    assert len((tmp_path / "f.csv").read_text().splitlines()) == 5
    hist = tmp_path / "h.csv"
    assert main(["hist", "--model", str(model), "--data", str(bas), "--bins", "4",
                 "--out", str(hist), "--quiet"]) == 0
    assert sum(int(r["count"]) for r in csv.DictReader(hist.open())) == 60 * 5
    capsys.readouterr()
    assert main(["info", "--model", str(model)]) == 0
    assert json.loads(capsys.readouterr().out)["hidden"] == 5


def test_exit_codes(tmp_path, bas):
    bad = tmp_path / "bad.idx"
    bad.write_bytes(b"\x07\x00\x08\x01")
    assert main(["train", "--data", str(bad), "--out", str(tmp_path / "x"), "--quiet"]) == 3
    assert main(["info", "--model", str(tmp_path / "missing"), "--quiet"]) == 3
    with pytest.raises(SystemExit) as e:
        main(["train"])
    assert e.value.code == 2
    assert main(["filters", "--model", str(tmp_path / "missing"), "--by", "activation",
                 "--out", str(tmp_path / "f.pgm"), "--quiet"]) == 2
    # exponential hidden units under a huge step blow up
    rc = main(["train", "--data", str(bas), "--visible-unit", "linear", "--hidden-unit", "exp",
               "--hidden-mode", "gaussian", "--lr", "100", "--momentum", "0.9", "--epochs", "50",
               "--hidden", "4", "--init-range", "1", "--out", str(tmp_path / "d.bin"), "--quiet"])
    assert rc == 4
