"""Unnormalized conditional mass as a function of eta.

A unit whose mass does not depend on eta has a constant base measure; the
identity unit is the reference case.
"""
import argparse
from pathlib import Path

import numpy as np

from exprbm.fileio import write_csv
from exprbm.sampling import base_measure_integral


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--units", default="linear,softplus,arcsinh,sinh,exp")
    p.add_argument("--points", type=int, default=25)
    p.add_argument("--out", default="results/base_measure.csv")
    args = p.parse_args()
    etas = np.linspace(-3, 3, args.points)
    rows = []
    for name in args.units.split(","):
        vals = np.array([base_measure_integral(e, name) for e in etas])
        rows += [(name, float(e), float(v)) for e, v in zip(etas, vals)]
        print(f"{name:10s} min={vals.min():.6g} max={vals.max():.6g} ratio={vals.max() / vals.min():.6g}")
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_csv(args.out, ["unit", "eta", "integral"], rows)


if __name__ == "__main__":
    main()
