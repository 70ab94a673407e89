"""Drawing unit activations and measuring how good the Gaussian surrogate is.

Two samplers are offered per unit: the closed-form one where the conditional
is a named distribution (Bernoulli, Gaussian, Poisson), and the Laplace
surrogate ``N(f(eta), f'(eta))`` that works for any smooth monotone ``f``.
The quadrature helpers tabulate the unsurrogated conditional
``exp(-D(eta || y))`` so the two can be compared.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logsumexp

from .errors import DomainError, QuadratureFailure, UnsupportedExactSampler
from .rng import RngStream
from .units import VAR_MAX, VAR_MIN, ActivationSpec, ExactSampler, Support, get_unit

POISSON_KNUTH_MAX = 30.0
TAIL_MASS = 1e-12
DEFAULT_GRID = 2048
_MAX_DOUBLINGS = 8
_MAX_GRID = 1 << 22


class TruncationWarning(RuntimeWarning):
    """A Bernoulli-ensemble series was cut off before it reached the mean."""


def _out(x, scalar):
    return float(x) if scalar else x


def sample_gaussian_approx(eta, spec, rng: RngStream, var_min=VAR_MIN, var_max=VAR_MAX):
    """Draw ``y ~ N(f(eta), f'(eta))`` elementwise.

    Draws for discrete supports are left unrounded.  Nonnegative supports are
    clamped at zero.  Where the derivative is exactly zero the conditional
    has collapsed onto its mean and the mean is returned.
    """
    spec = get_unit(spec)
    scalar = np.ndim(eta) == 0
    eta = np.asarray(eta, dtype=float)
    z = rng.normal(eta.shape)
    mean = spec.f(eta)
    with np.errstate(divide="ignore", invalid="ignore"):
        raw = spec.f_prime(eta)
    sd = np.where(raw == 0, 0.0, np.sqrt(spec.variance(eta, var_min, var_max)))
    y = mean + sd * z
    if spec.support is Support.CONTINUOUS_NONNEG:
        y = np.maximum(y, 0.0)
    return _out(y, scalar)


def poisson_knuth(lam, rng: RngStream, knuth_max=POISSON_KNUTH_MAX):
    """Poisson draws: Knuth's product of uniforms up to ``knuth_max``,
    a rounded normal N(lam, lam) truncated at zero above it."""
    scalar = np.ndim(lam) == 0
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0) or not np.all(np.isfinite(lam)):
        raise DomainError("Poisson rate must be finite and nonnegative")
    out = np.zeros(lam.shape)
    small = lam <= knuth_max
    if np.any(small):
        limit = np.exp(-lam[small])
        k = np.zeros(limit.shape)
        p = np.ones(limit.shape)
        active = np.ones(limit.shape, dtype=bool)
        while np.any(active):
            p = p * np.where(active, rng.uniform(limit.shape), 1.0)
            active = p > limit
            k += active
        out[small] = k
    big = ~small
    if np.any(big):
        lb = lam[big]
        out[big] = np.maximum(np.rint(lb + np.sqrt(lb) * rng.normal(lb.shape)), 0.0)
    return _out(out, scalar)


def sample_exact(eta, spec, rng: RngStream):
    """Draw from the unit's closed-form conditional."""
    spec = get_unit(spec)
    scalar = np.ndim(eta) == 0
    eta = np.asarray(eta, dtype=float)
    kind = spec.exact_sampler
    if kind is ExactSampler.BERNOULLI:
        y = (rng.uniform(eta.shape) < expit(eta)).astype(float)
        if spec.support is Support.BINARY_PM:
            y -= 0.5
    elif kind is ExactSampler.GAUSSIAN:
        y = eta + rng.normal(eta.shape)
    elif kind is ExactSampler.POISSON:
        y = poisson_knuth(np.exp(eta), rng)
    else:
        raise UnsupportedExactSampler(f"{spec.name} has no exact sampler")
    return _out(y, scalar)


def gaussian_density(y, eta, spec, var_min=VAR_MIN, var_max=VAR_MAX):
    """Density of the Laplace surrogate at ``y``."""
    spec = get_unit(spec)
    m = spec.f(np.asarray(eta, dtype=float))
    v = spec.variance(eta, var_min, var_max)
    y = np.asarray(y, dtype=float)
    return np.exp(-0.5 * (y - m) ** 2 / v) / np.sqrt(2 * np.pi * v)


@dataclass
class ConditionalDensityTable:
    """A conditional ``p(y | eta)`` tabulated on a grid.

    ``normalizer_log`` is the log of the unnormalized mass, i.e. the numeric
    stand-in for the eta-dependent normalizer.  For discrete supports the
    entries are probabilities of the listed points; otherwise densities.
    """

    eta: float
    y_grid: np.ndarray
    log_density: np.ndarray
    normalizer_log: float
    discrete: bool = False

    @property
    def density(self) -> np.ndarray:
        return np.exp(self.log_density)

    def integrate(self, values) -> float:
        if self.discrete:
            return float(np.sum(values))
        return float(np.trapezoid(values, self.y_grid))

    def total_mass(self) -> float:
        return self.integrate(self.density)

    def mean(self) -> float:
        return self.integrate(self.y_grid * self.density)


def _log_kernel(eta, y, spec):
    # -D(eta || y) with overflowing tails mapped to zero mass.
    with np.errstate(over="ignore", invalid="ignore"):
        d = -eta * y + spec.F(eta) + spec.F_star(y)
    d = np.where(np.isnan(d) | (d == np.inf), np.inf, d)
    return -d


def _discrete_table(eta, spec):
    if spec.support.discrete_values is not None:
        ys = spec.support.discrete_values
        logk = _log_kernel(eta, ys, spec)
    else:
        lam = float(spec.f(eta))
        y_max = int(math.ceil(lam + 10.0 * math.sqrt(lam) + 10.0))
        for _ in range(_MAX_DOUBLINGS + 1):
            ys = np.arange(y_max + 1, dtype=float)
            logk = _log_kernel(eta, ys, spec)
            logz = logsumexp(logk)
            # tail beyond y_max is dominated by a geometric series with this ratio
            ratio = math.exp(min(logk[-1] - logk[-2], 0.0))
            tail = math.exp(logk[-1] - logz) * ratio / max(1.0 - ratio, 1e-300)
            if tail < TAIL_MASS:
                break
            y_max *= 2
        else:
            raise QuadratureFailure(f"{spec.name}: tail mass did not vanish")
    logz = float(logsumexp(logk))
    return ConditionalDensityTable(float(eta), ys, logk - logz, logz, discrete=True)


def _trapz_logz(grid, logk):
    peak = np.max(logk)
    return peak + math.log(np.trapezoid(np.exp(logk - peak), grid))


def normalized_conditional(eta, spec, grid_size=DEFAULT_GRID, rtol=1e-10) -> ConditionalDensityTable:
    """Tabulate ``exp(-D(eta || y) - g(eta))`` with ``g`` fixed by normalization.

    The grid is centered on ``f(eta)`` with half-width ``8*max(sqrt(f'(eta)), 1)``
    (the floor covers units whose derivative vanishes).  The range doubles
    until the density at every non-support edge is below ``TAIL_MASS`` of the
    peak, then the point count doubles until the trapezoid mass settles to
    ``rtol``.
    """
    spec = get_unit(spec)
    eta = float(eta)
    if not spec.support.continuous:
        return _discrete_table(eta, spec)
    if grid_size < 64:
        raise ValueError("grid_size must be at least 64")
    nonneg = spec.support is Support.CONTINUOUS_NONNEG
    center = float(spec.f(eta))
    half = 8.0 * max(math.sqrt(float(spec.variance(eta))), 1.0)
    log_tail = math.log(TAIL_MASS)
    for _ in range(_MAX_DOUBLINGS + 1):
        lo = max(center - half, 0.0) if nonneg else center - half
        hi = center + half
        grid = np.linspace(lo, hi, grid_size)
        logk = _log_kernel(eta, grid, spec)
        peak = np.max(logk)
        left_ok = (nonneg and lo == 0.0) or logk[0] - peak < log_tail
        right_ok = logk[-1] - peak < log_tail
        if left_ok and right_ok and np.isfinite(peak):
            break
        half *= 2.0
    else:
        raise QuadratureFailure(
            f"{spec.name}: mass not below {TAIL_MASS} at the grid edge for eta={eta}")

    n = grid_size
    logz = _trapz_logz(grid, logk)
    while n < _MAX_GRID:
        n2 = 2 * n - 1
        grid2 = np.linspace(lo, hi, n2)
        logk2 = _log_kernel(eta, grid2, spec)
        logz2 = _trapz_logz(grid2, logk2)
        grid, logk, n = grid2, logk2, n2
        settled = abs(math.expm1(logz2 - logz)) <= rtol
        logz = logz2
        if settled:
            break
    return ConditionalDensityTable(eta, grid, logk - logz, logz)


def base_measure_integral(eta, spec) -> float:
    """Quadrature value of the unnormalized mass ``∫ exp(-D(eta || y)) dy``."""
    spec = get_unit(spec)
    if not spec.support.continuous:
        raise DomainError(f"{spec.name}: base-measure integral needs a continuous support")
    return math.exp(normalized_conditional(eta, spec).normalizer_log)


def gaussian_total_variation(table: ConditionalDensityTable, spec) -> float:
    """Total variation between a tabulated conditional and its Laplace surrogate.

    Surrogate mass falling outside the grid counts fully toward the distance.
    """
    spec = get_unit(spec)
    q = gaussian_density(table.y_grid, table.eta, spec)
    inside = table.integrate(q)
    return 0.5 * (table.integrate(np.abs(table.density - q)) + max(1.0 - inside, 0.0))


def _series_levels(spec, alpha, n_max):
    levels = alpha * (np.arange(1, n_max + 1) - 0.5)
    if spec.antisymmetric:
        levels = np.concatenate([-levels[::-1], levels])
    return levels


def _series_probs(eta, spec, alpha, n_max):
    """Per-unit firing probabilities and the count offset for the ensemble."""
    spec = get_unit(spec)
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    levels = _series_levels(spec, alpha, n_max)
    with np.errstate(invalid="ignore", divide="ignore"):
        t = spec.thresholds(levels)
    probs = expit(eta - t)
    undefined = np.isnan(t)
    if np.any(undefined):
        # each side may run past the range of f only once its terms are negligible
        pos = levels > 0
        for side in (pos, ~pos):
            bad = undefined & side
            if not np.any(bad):
                continue
            ok = side & ~undefined
            if not np.any(ok):
                raise DomainError(f"{spec.name}: thresholds undefined for this alpha")
            # outermost defined term on this side
            edge = np.flatnonzero(ok)[-1] if side is pos else np.flatnonzero(ok)[0]
            term = probs[edge] if side is pos else 1.0 - probs[edge]
            if term >= TAIL_MASS:
                raise DomainError(
                    f"{spec.name}: threshold undefined at level {levels[bad][0]:g} "
                    "before the series terms decayed")
        probs = np.where(undefined, np.where(levels > 0, 0.0, 1.0), probs)

    mean = float(spec.f(eta))
    sd = math.sqrt(float(spec.variance(eta)))
    reach = alpha * n_max
    if reach < mean - 5 * sd or (spec.antisymmetric and -reach > mean + 5 * sd):
        warnings.warn(
            f"{spec.name}: alpha*n_max={reach:g} cannot reach the mean {mean:g}; "
            "truncation bias detected", TruncationWarning, stacklevel=3)
    offset = np.count_nonzero(levels < 0)
    return probs, offset


def bernoulli_series_mean(eta, spec, alpha, n_max) -> float:
    """Mean of the weighted Bernoulli ensemble, ``alpha * sum_n sigma(eta - t_n)``.

    Thresholds ``t_n`` sit at the midpoints ``alpha*(n - 1/2)`` of the mean
    axis.  Antisymmetric units use ±0.5 units on both sides of zero.
    """
    probs, offset = _series_probs(float(eta), spec, alpha, n_max)
    return float(alpha * (math.fsum(probs) - offset))


def _poisson_binomial_pmf(p):
    pmf = np.zeros(len(p) + 1)
    pmf[0] = 1.0
    for k, pk in enumerate(p, start=1):
        pmf[1:k + 1] = pmf[1:k + 1] * (1.0 - pk) + pmf[:k] * pk
        pmf[0] *= 1.0 - pk
    return pmf


def bernoulli_series_sample(eta, spec, alpha, n_max, rng: RngStream, size=None):
    """``alpha`` times the number of firing units in the ensemble (minus the
    negative-side offset for antisymmetric units).

    Units that are certainly on or off are counted without drawing.  For many
    draws the exact count distribution is built once and sampled by inversion.
    """
    probs, offset = _series_probs(float(eta), spec, alpha, n_max)
    always = int(np.count_nonzero(probs > 1.0 - 1e-16))
    live = probs[(probs >= 1e-16) & (probs <= 1.0 - 1e-16)]
    n = 1 if size is None else int(np.prod(size))
    if n * len(live) <= max(len(live), 1) ** 2:
        u = rng.uniform((n, len(live)))
        counts = np.count_nonzero(u < live, axis=1).astype(float)
    else:
        cdf = np.cumsum(_poisson_binomial_pmf(live))
        counts = np.searchsorted(cdf, rng.uniform(n) * cdf[-1], side="right").astype(float)
        counts = np.minimum(counts, len(live))
    values = alpha * (counts + always - offset)
    if size is None:
        return float(values[0])
    return values.reshape(size)
