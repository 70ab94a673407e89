"""Command-line entry point: ``exprbm <command> [options]``.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical divergence.
Negative values in comma lists need the ``--eta=-2,0,2`` form.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from contextlib import nullcontext
from pathlib import Path

import numpy as np

from . import data as data_mod
from . import evaluation as ev
from .errors import DataFormatError, DivergenceDetected, DomainError, QuadratureFailure
from .fileio import (load_model, load_samples, save_model, save_samples, tile_filters,
                     write_csv, write_pgm)
from .model import SamplerMode
from .rng import RngStream
from .sampling import base_measure_integral, gaussian_density, normalized_conditional
from .training import PositivePhase, TrainConfig, init_model, rates_fpcd_generate, train
from .units import UNIT_NAMES, Support, get_unit

log = logging.getLogger("exprbm")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_DIVERGED = 0, 2, 3, 4


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _shape(text: str) -> tuple[int, int]:
    try:
        h, w = text.lower().split("x")
        return int(h), int(w)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected HxW, got {text!r}")


def _load_rows(path) -> np.ndarray:
    """Rows from an IDX file or a samples container."""
    raw = Path(path).read_bytes()
    if raw[:8] == b"EXPSMP01":
        return load_samples(path)
    return data_mod.Dataset(data_mod.parse_idx(raw)).X


def _prepare_training_data(X, visible, mode, threshold):
    spec = get_unit(visible)
    if mode == "auto":
        if spec.support in (Support.BINARY01, Support.BINARY_PM):
            mode = "binarize"
        elif spec.support is Support.CONTINUOUS_REAL:
            mode = "normalize"
        else:
            mode = "none"
    ds = data_mod.preprocess(data_mod.Dataset(X), mode, threshold=threshold,
                             pm=spec.support is Support.BINARY_PM)
    return ds.X


def cmd_train(args):
    X = _load_rows(args.data)
    X = _prepare_training_data(X, args.visible_unit, args.preprocess, args.threshold)
    config = TrainConfig(cd_steps=args.cd, epochs=args.epochs, learning_rate=args.lr,
                         momentum=args.momentum, batch_size=args.batch, seed=args.seed,
                         weight_init_range=args.init_range,
                         visible_mode=args.visible_mode, hidden_mode=args.hidden_mode,
                         positive_phase=args.positive_phase)
    model = init_model(X.shape[1], args.hidden, args.visible_unit, args.hidden_unit, config)

    def report(m, _model):
        log.info("epoch %d  recon %.6f  %.1fs", m.epoch, m.recon_error, m.wall_time_s)

    result = train(model, X, config, callback=report)
    save_model(result.model, args.out)
    if args.metrics:
        write_csv(args.metrics, ["epoch", "recon_error", "wall_time_s"],
                  [(h.epoch, float(h.recon_error), float(h.wall_time_s)) for h in result.history])
    log.info("wrote %s", args.out)


def cmd_sample(args):
    model = load_model(args.model)
    rng = RngStream(args.seed, 3)
    X = None
    if args.data:
        X = _prepare_training_data(_load_rows(args.data), model.visible_spec.name, "auto", 0.5)
    init = None
    if X is None:
        init = np.zeros((args.chains, model.n_visible))
    S = rates_fpcd_generate(model, args.n, args.steps, args.fast_rate, args.fast_decay, rng,
                            data=X, n_chains=args.chains, init=init)
    save_samples(S, args.out)
    log.info("wrote %d samples to %s", S.shape[0], args.out)


def cmd_eval_isl(args):
    S = _load_rows(args.samples)
    V = _load_rows(args.valid)
    T = _load_rows(args.test)
    report = ev.evaluate_samples(S, V, T)
    if args.model:
        model = load_model(args.model)
        Xt = _prepare_training_data(T, model.visible_spec.name, "auto", 0.5)
        rng = RngStream(args.seed, 4)
        report.recon_error = ev.reconstruction_error(model, Xt, rng)
        hist = ev.activation_histogram(model, Xt, bins=64, rng=rng)
        report.activation_histogram = hist.pairs()
        report.filter_ranking = [int(i) for i in ev.filter_variance_ranking(model)]
    text = report.to_json()
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)


def cmd_verify_unit(args):
    spec = get_unit(args.unit)
    rows = []
    for eta in args.eta:
        table = normalized_conditional(eta, spec)
        y = table.y_grid
        if not table.discrete and len(y) > args.points:
            idx = np.unique(np.linspace(0, len(y) - 1, args.points).round().astype(int))
        else:
            idx = np.arange(len(y))
        q = gaussian_density(y[idx], eta, spec)
        for yi, p, g in zip(y[idx], table.density[idx], q):
            rows.append((float(eta), float(yi), float(p), float(g)))
    write_csv(args.out, ["eta", "y", "exact_density", "gaussian_density"], rows)


def cmd_base_measure(args):
    spec = get_unit(args.unit)
    etas = np.linspace(args.eta_min, args.eta_max, args.points)
    rows = [(float(e), base_measure_integral(e, spec)) for e in etas]
    if args.out:
        write_csv(args.out, ["eta", "integral"], rows)
    else:
        for e, v in rows:
            print(f"{e:.17g},{v:.17g}")


def cmd_filters(args):
    if args.by == "activation" and not args.data:
        raise ValueError("--by activation needs --data")
    model = load_model(args.model)
    X = None
    if args.by == "activation":
        X =_prepare_training_data(_load_rows(args.data), model.visible_spec.name, "auto", 0.5)
    order = ev.filter_variance_ranking(model, by=args.by, data=X)[:args.top]
    F = model.W[:, order].T
    shape = args.shape
    if shape is None:
        side = math.isqrt(model.n_visible)
        shape = (side, side) if side * side == model.n_visible else (1, model.n_visible)
    write_pgm(args.out, tile_filters(F, shape))
    csv_path = Path(args.out).with_suffix(".csv")
    write_csv(csv_path, ["hidden_index"] + [f"w{i}" for i in range(model.n_visible)],
              [[int(j)] + [float(v) for v in model.W[:, j]] for j in order])
    log.info("wrote %s and %s", args.out, csv_path)


def cmd_hist(args):
    model = load_model(args.model)
    X = _prepare_training_data(_load_rows(args.data), model.visible_spec.name, "auto", 0.5)
    h = ev.activation_histogram(model, X, bins=args.bins, mode=args.mode, rng=RngStream(args.seed, 5))
    rows = []
    logc = h.log_counts
    for lo, hi, c, lc in zip(h.edges[:-1], h.edges[1:], h.counts, logc):
        rows.append((float(lo), float(hi), int(c), float(lc) if np.isfinite(lc) else ""))
    header = ["bin_lo", "bin_hi", "count", "log_count"]
    if args.out:
        write_csv(args.out, header, rows)
    else:
        print(",".join(header))
        for r in rows:
            print(",".join(format(v, ".17g") if isinstance(v, float) else str(v) for v in r))


def cmd_bas_gen(args):
    ds = data_mod.generate_bars_and_stripes(args.size, args.n, seed=args.seed)
    data_mod.write_idx(args.out, ds.X, shape=(args.n, args.size, args.size))
    log.info("wrote %d %dx%d images to %s", args.n, args.size, args.size, args.out)


def cmd_info(args):
    m = load_model(args.model)
    info = {"visible": m.n_visible, "hidden": m.n_hidden,
            "visible_unit": m.visible_spec.name, "hidden_unit": m.hidden_spec.name,
            "visible_mode": m.visible_mode.name.lower(), "hidden_mode": m.hidden_mode.name.lower(),
            "max_abs_weight": float(np.max(np.abs(m.W), initial=0.0))}
    print(json.dumps(info, indent=2))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=None,
                        help="BLAS threads; 1 makes runs bit-reproducible")
    common.add_argument("--quiet", action="store_true")

    p = argparse.ArgumentParser(prog="exprbm", description="Exponential-family RBM toolkit")
    sub = p.add_subparsers(dest="command", required=True)
    units = dict(choices=UNIT_NAMES)
    modes = dict(choices=["exact", "gaussian"], type=str)

    t = sub.add_parser("train", parents=[common], help="train with contrastive divergence")
    t.add_argument("--data", required=True)
    t.add_argument("--visible-unit", default="sigmoid", **units)
    t.add_argument("--hidden-unit", default="sigmoid", **units)
    t.add_argument("--hidden", type=int, default=1000)
    t.add_argument("--cd", type=int, default=1)
    t.add_argument("--lr", type=float, default=1e-3)
    t.add_argument("--momentum", type=float, default=0.9)
    t.add_argument("--batch", type=int, default=100)
    t.add_argument("--epochs", type=int, default=25)
    t.add_argument("--init-range", type=float, default=0.01)
    t.add_argument("--visible-mode", default="exact", **modes)
    t.add_argument("--hidden-mode", default="exact", **modes)
    t.add_argument("--positive-phase", default="sample", choices=[e.value for e in PositivePhase])
    t.add_argument("--preprocess", default="auto", choices=["auto", "binarize", "normalize", "none"])
    t.add_argument("--threshold", type=float, default=0.5)
    t.add_argument("--out", required=True)
    t.add_argument("--metrics")
    t.set_defaults(func=cmd_train)

    s = sub.add_parser("sample", parents=[common], help="generate samples with rates-FPCD")
    s.add_argument("--model", required=True)
    s.add_argument("--n", type=int, default=1000)
    s.add_argument("--fast-rate", type=float, default=0.001)
    s.add_argument("--fast-decay", type=float, default=0.0)
    s.add_argument("--steps", type=int, default=10)
    s.add_argument("--chains", type=int, default=100)
    s.add_argument("--data", help="training data: seeds the chains and the fast-weight rates")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sample)

    e = sub.add_parser("eval-isl", parents=[common], help="indirect sampling likelihood")
    e.add_argument("--samples", required=True)
    e.add_argument("--valid", required=True)
    e.add_argument("--test", required=True)
    e.add_argument("--model", help="also report reconstruction error, histogram and filter ranking")
    e.add_argument("--out")
    e.set_defaults(func=cmd_eval_isl)

    v = sub.add_parser("verify-unit", parents=[common], help="tabulate a conditional and its Gaussian surrogate")
    v.add_argument("--unit", required=True, **units)
    v.add_argument("--eta", type=_floats, required=True)
    v.add_argument("--points", type=int, default=401, help="rows per eta for continuous units")
    v.add_argument("--out", required=True)
    v.set_defaults(func=cmd_verify_unit)

    b = sub.add_parser("base-measure", parents=[common], help="unnormalized mass of a conditional versus eta")
    b.add_argument("--unit", required=True, **units)
    b.add_argument("--eta-min", type=float, default=-3.0)
    b.add_argument("--eta-max", type=float, default=3.0)
    b.add_argument("--points", type=int, default=25)
    b.add_argument("--out")
    b.set_defaults(func=cmd_base_measure)

    f = sub.add_parser("filters", parents=[common], help="write the highest-variance filters as PGM + CSV")
    f.add_argument("--model", required=True)
    f.add_argument("--top", type=int, default=16)
    f.add_argument("--shape", type=_shape)
    f.add_argument("--by", default="weights", choices=["weights", "activation"])
    f.add_argument("--data")
    f.add_argument("--out", required=True)
    f.set_defaults(func=cmd_filters)

    h = sub.add_parser("hist", parents=[common], help="histogram of hidden activities")
    h.add_argument("--model", required=True)
    h.add_argument("--data", required=True)
    h.add_argument("--bins", type=int, default=64)
    h.add_argument("--mode", default="sample", choices=["sample", "mean"])
    h.add_argument("--out")
    h.set_defaults(func=cmd_hist)

    g = sub.add_parser("bas-gen", parents=[common], help="generate a bars-and-stripes IDX file")
    g.add_argument("--size", type=int, default=4)
    g.add_argument("--n", type=int, default=500)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_bas_gen)

    i = sub.add_parser("info", parents=[common], help="print a model header")
    i.add_argument("--model", required=True)
    i.set_defaults(func=cmd_info)
    return p


def _thread_limit(n):
    if n is None:
        return nullcontext()
    from threadpoolctl import threadpool_limits
    return threadpool_limits(limits=n)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(message)s", stream=sys.stderr)
    for name in ("visible_mode", "hidden_mode"):
        if hasattr(args, name):
            setattr(args, name, SamplerMode.parse(getattr(args, name)))
    try:
        with _thread_limit(args.threads):
            args.func(args)
    except DivergenceDetected as exc:
        log.error("diverged: %s", exc)
        return EXIT_DIVERGED
    except (DataFormatError, OSError) as exc:
        log.error("data error: %s", exc)
        return EXIT_DATA
    except (DomainError, QuadratureFailure) as exc:
        log.error("numerical error: %s", exc)
        return EXIT_DATA
    except ValueError as exc:
        log.error("usage error: %s", exc)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
