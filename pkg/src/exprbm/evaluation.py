"""Indirect sampling likelihood and the diagnostic summaries of a trained model."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .model import ExpRbmModel, hidden_input, sample_hidden, sample_visible
from .rng import RngStream

BETA_LO = 0.5 + 1e-6
BETA_HI = 1.0 - 1e-6
BETA_TOL = 1e-4
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _binary(X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X))
    if not np.all((X == 0) | (X == 1)):
        raise ValueError("ISL works on binary {0, 1} data")
    return X.astype(np.float64)


def to_binary(X) -> np.ndarray:
    """Map ±0.5 or [0, 1]-valued data onto {0, 1}."""
    X = np.asarray(X, dtype=float)
    if X.size and X.min() < 0:
        return (X > 0).astype(float)
    return (X >= 0.5).astype(float)


@dataclass
class IslDensity:
    """Mixture of product-Bernoulli kernels centered on binary samples.

    A kernel puts ``beta`` on agreeing and ``1 - beta`` on disagreeing bits.
    The mixture weight is ``1/N``, so the density sums to one.
    """

    samples: np.ndarray
    beta: float

    def __post_init__(self):
        self.samples = _binary(self.samples)
        # 0.5 is admitted: it is the uniform density, used as a reference point
        if not 0.5 <= self.beta < 1.0:
            raise ValueError("beta must lie in [0.5, 1)")

    @property
    def dim(self) -> int:
        return self.samples.shape[1]


def match_counts(samples, X) -> np.ndarray:
    """``M[v, n]`` = number of coordinates where ``X[v]`` equals ``samples[n]``."""
    S = _binary(samples)
    X = _binary(X)
    agree = X @ S.T + (1.0 - X) @ (1.0 - S).T
    return np.rint(agree).astype(np.int64)


def _match_counts_hist(samples, X) -> np.ndarray:
    """Per query row, how many samples agree with it on exactly m bits, m = 0..D."""
    M = match_counts(samples, X)
    D = np.atleast_2d(samples).shape[1]
    return np.stack([np.bincount(row, minlength=D + 1) for row in M]).astype(np.float64)


def _log_density_from_counts(counts, D, beta):
    """log p(x; beta) per row, for one beta or an array of betas.

    Written as ``D*log(1-beta) + log(sum_m c_m (beta/(1-beta))^m / N)`` so that
    beta = 0.5 and duplicated sample sets give bit-identical results.
    """
    beta = np.asarray(beta, dtype=float)[..., None, None]
    N = counts[0].sum()
    m = np.arange(D + 1)
    expo = m * np.log(beta / (1.0 - beta))
    expo = np.broadcast_to(expo, beta.shape[:-2] + counts.shape)
    shift = np.max(np.where(counts > 0, expo, -np.inf), axis=-1, keepdims=True)
    total = np.sum(counts * np.exp(expo - shift), axis=-1)
    out = D * np.log(1.0 - beta[..., 0, 0])[..., None] + shift[..., 0] + np.log(total / N)
    return out


def isl_log_density(density: IslDensity, x) -> float:
    """``log((1/N) sum_n beta^m_n (1 - beta)^(D - m_n))`` with ``m_n`` the
    number of coordinates where ``x`` agrees with sample ``n``."""
    c = _match_counts_hist(density.samples, np.atleast_2d(x))
    return float(_log_density_from_counts(c, density.dim, density.beta)[0])


def isl_log_densities(samples, X, beta) -> np.ndarray:
    S = _binary(samples)
    return _log_density_from_counts(_match_counts_hist(S, X), S.shape[1], beta)


def isl_score(samples, test_set, beta) -> float:
    """Mean ISL log-density of the test rows."""
    return float(np.mean(isl_log_densities(samples, test_set, beta)))


class _Objective:
    def __init__(self, samples, valid):
        S = _binary(samples)
        self.D = S.shape[1]
        self.counts = _match_counts_hist(S, valid)

    def __call__(self, beta):
        return np.sum(_log_density_from_counts(self.counts, self.D, beta), axis=-1)


def grid_search_beta(samples, validation_set, resolution=BETA_TOL):
    """Exhaustive search of the validation objective on a uniform grid."""
    obj = _Objective(samples, validation_set)
    grid = np.arange(BETA_LO, BETA_HI + 0.5 * resolution, resolution)
    grid = np.minimum(grid, BETA_HI)
    vals = obj(grid)
    return float(grid[int(np.argmax(vals))])


def _golden_section(fn, lo, hi, tol):
    c = hi - _GOLDEN * (hi - lo)
    d = lo + _GOLDEN * (hi - lo)
    fc, fd = fn(c), fn(d)
    while hi - lo > tol:
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - _GOLDEN * (hi - lo)
            fc = fn(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _GOLDEN * (hi - lo)
            fd = fn(d)
    cands = [(fn(lo), lo), (fc, c), (fd, d), (fn(hi), hi)]
    return max(cands)[1]


def is_unimodal(values) -> bool:
    """No interior local maximum other than the global one."""
    d = np.sign(np.diff(np.asarray(values)))
    d = d[d != 0]
    return not np.any((d[:-1] < 0) & (d[1:] > 0))


def optimize_beta(samples, validation_set, tol=BETA_TOL, scan_points=201) -> float:
    """Maximize the summed validation log-density over beta in (0.5, 1).

    A coarse scan checks the objective for a single peak; golden-section
    search refines it, and a grid search at ``tol`` takes over if the scan
    shows more than one peak.
    """
    obj = _Objective(samples, validation_set)
    scan = np.linspace(BETA_LO, BETA_HI, scan_points)
    if not is_unimodal(obj(scan)):
        return grid_search_beta(samples, validation_set, tol)
    return float(_golden_section(lambda b: float(obj(b)), BETA_LO, BETA_HI, tol))


@dataclass
class Histogram:
    edges: np.ndarray
    counts: np.ndarray
    underflow: int = 0
    overflow: int = 0

    @property
    def total(self) -> int:
        return int(self.counts.sum()) + self.underflow + self.overflow

    @property
    def log_counts(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.counts.astype(float))

    def pairs(self):
        return [(float(lo), int(c)) for lo, c in zip(self.edges[:-1], self.counts)]


def hidden_activities(model: ExpRbmModel, data, rng: RngStream | None = None, mode="sample"):
    X = np.asarray(getattr(data, "X", data), dtype=float)
    if mode == "mean":
        return model.hidden_spec.f(hidden_input(model, X))
    if mode != "sample":
        raise ValueError("mode must be 'sample' or 'mean'")
    return sample_hidden(model, X, rng if rng is not None else RngStream(0))


def activation_histogram(model: ExpRbmModel, data, bins=64, mode="sample",
                         rng: RngStream | None = None, value_range=None) -> Histogram:
    """Histogram of hidden activities pooled over units and examples.

    Bins span the empirical range unless ``value_range`` fixes them; values
    outside a fixed range land in the underflow/overflow counters.
    """
    a = np.asarray(hidden_activities(model, data, rng, mode)).reshape(-1)
    if value_range is None:
        counts, edges = np.histogram(a, bins=bins)
        return Histogram(edges, counts)
    lo, hi = value_range
    counts, edges = np.histogram(a, bins=bins, range=(lo, hi))
    return Histogram(edges, counts, int(np.count_nonzero(a < lo)), int(np.count_nonzero(a > hi)))


def filter_variance_ranking(model: ExpRbmModel, by="weights", data=None) -> np.ndarray:
    """Hidden indices sorted by decreasing variance, ties broken by index.

    ``by="weights"`` ranks incoming weight columns; ``by="activation"`` ranks
    the variance of each unit's mean activity over ``data``.
    """
    if by == "weights":
        var = model.W.var(axis=0)
    elif by == "activation":
        if data is None:
            raise ValueError("activation ranking needs data")
        var = hidden_activities(model, data, mode="mean").var(axis=0)
    else:
        raise ValueError("by must be 'weights' or 'activation'")
    return np.argsort(-var, kind="stable")


def reconstruction_error(model: ExpRbmModel, data, rng: RngStream) -> float:
    """Mean of ``|x - x'|^2 / I`` after one sampled up-down pass."""
    X = np.atleast_2d(np.asarray(getattr(data, "X", data), dtype=float))
    Xr = sample_visible(model, sample_hidden(model, X, rng), rng)
    return float(np.mean(np.sum((X - Xr) ** 2, axis=1)) / model.n_visible)


@dataclass
class EvalReport:
    isl_test: float
    beta_star: float
    recon_error: float | None = None
    activation_histogram: list | None = None
    filter_ranking: list | None = None
    extra: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def evaluate_samples(samples, valid, test) -> EvalReport:
    """Fit beta on the validation rows, then score the test rows."""
    S, V, T = to_binary(samples), to_binary(valid), to_binary(test)
    beta = optimize_beta(S, V)
    return EvalReport(isl_test=isl_score(S, T, beta), beta_star=beta)
