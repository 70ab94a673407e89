"""Hidden activity histograms of trained bars-and-stripes models."""
import argparse
from pathlib import Path

from exprbm.data import generate_bars_and_stripes
from exprbm.evaluation import activation_histogram
from exprbm.fileio import write_csv
from exprbm.rng import RngStream
from exprbm.training import TrainConfig, init_model, train


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--hidden-units", default="sigmoid,relu,requ,softplus")
    p.add_argument("--epochs", type=int, default=500)
    p.add_argument("--bins", type=int, default=40)
    p.add_argument("--out", default="results/histograms.csv")
    args = p.parse_args()
    X = generate_bars_and_stripes(4, 500, seed=1).X
    rows = []
    for hidden in args.hidden_units.split(","):
        cfg = TrainConfig(epochs=args.epochs, learning_rate=1e-3, momentum=0.9, batch_size=100,
                          hidden_mode=None if hidden == "sigmoid" else "gaussian")
        m = train(init_model(16, 16, "sigmoid", hidden, cfg), X, cfg).model
        h = activation_histogram(m, X, bins=args.bins, mode="sample", rng=RngStream(0, 5))
        rows += [(hidden, float(lo), float(hi), int(c))
                 for lo, hi, c in zip(h.edges[:-1], h.edges[1:], h.counts)]
        print(f"{hidden:9s} range [{h.edges[0]:.3g}, {h.edges[-1]:.3g}]")
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_csv(args.out, ["hidden_unit", "bin_lo", "bin_hi", "count"], rows)


if __name__ == "__main__":
    main()
