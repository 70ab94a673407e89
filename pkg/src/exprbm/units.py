"""Catalog of stochastic unit types and their Bregman-divergence machinery.

A unit is fully described by its monotone activation ``f`` (the map from the
canonical parameter ``eta`` to the mean of the conditional).  From ``f`` we
carry its derivative, its antiderivative ``F``, the inverse ``f_inv`` and the
convex conjugate ``F_star`` (antiderivative of ``f_inv``).  The conditional of
a unit is ``p(y | eta) ∝ exp(-D(eta || y))`` with

    D(eta || y) = -eta * y + F(eta) + F_star(y).

All functions accept scalars or numpy arrays.  Out-of-domain arguments give
``nan`` from the raw functions; the public operations turn that into
:class:`~exprbm.errors.DomainError`.

Adding a unit means writing its five functions and one ``_register`` call at
the bottom of this file.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import expit, logit, spence, xlogy

from .errors import DomainError, SaturationError

# Clamp range for the Laplace variance f'(eta).
VAR_MIN = 1e-12
VAR_MAX = 1e6

_PI2_6 = math.pi ** 2 / 6.0


class Support(enum.Enum):
    CONTINUOUS_REAL = "ContinuousReal"
    CONTINUOUS_NONNEG = "ContinuousNonneg"
    BINARY01 = "Binary01"
    BINARY_PM = "BinaryPM"
    NONNEG_INTEGER = "NonnegInteger"

    @property
    def continuous(self) -> bool:
        return self in (Support.CONTINUOUS_REAL, Support.CONTINUOUS_NONNEG)

    @property
    def discrete_values(self):
        if self is Support.BINARY01:
            return np.array([0.0, 1.0])
        if self is Support.BINARY_PM:
            return np.array([-0.5, 0.5])
        return None


class ExactSampler(enum.Enum):
    BERNOULLI = "Bernoulli"
    GAUSSIAN = "Gaussian"
    POISSON = "Poisson"
    NONE = "None"


Fn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ActivationSpec:
    """One stochastic unit type.

    ``series_inverse`` gives the bias thresholds used by the Bernoulli-ensemble
    series; it defaults to ``f_inv``.  ``antisymmetric`` selects the two-sided
    (±0.5 Bernoulli) form of that series.
    """

    name: str
    support: Support
    f: Fn
    f_prime: Fn
    F: Fn
    F_star: Fn
    f_inv: Fn
    exact_sampler: ExactSampler
    antisymmetric: bool = False
    series_inverse: Fn | None = field(default=None, repr=False)
    # Variance column of the original unit table, kept for reference only.
    table_variance: str = field(default="", repr=False)

    def __repr__(self):
        return f"ActivationSpec({self.name!r})"

    def in_domain(self, y) -> np.ndarray:
        """Whether ``y`` lies in the closure of the convex hull of the support."""
        y = np.asarray(y, dtype=float)
        finite = np.isfinite(y)
        if self.support in (Support.CONTINUOUS_NONNEG, Support.NONNEG_INTEGER):
            return finite & (y >= 0)
        if self.support is Support.BINARY01:
            return finite & (y >= 0) & (y <= 1)
        if self.support is Support.BINARY_PM:
            return finite & (y >= -0.5) & (y <= 0.5)
        return finite

    def variance(self, eta, var_min: float = VAR_MIN, var_max: float = VAR_MAX):
        """Laplace variance f'(eta), clamped to ``[var_min, var_max]``."""
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            v = self.f_prime(np.asarray(eta, dtype=float))
        return np.clip(np.nan_to_num(v, nan=var_max, posinf=var_max), var_min, var_max)

    @property
    def thresholds(self) -> Fn:
        return self.series_inverse if self.series_inverse is not None else self.f_inv


def _a(x):
    return np.asarray(x, dtype=float)


def _nan_outside(mask, values):
    return np.where(mask, values, np.nan)


# -- sigmoid family ---------------------------------------------------------

def _softplus(eta):
    return np.logaddexp(0.0, _a(eta))


def _sigmoid_prime(eta):
    eta = _a(eta)
    return expit(eta) * expit(-eta)


def _neg_entropy(p):
    p = _a(p)
    ok = (p >= 0) & (p <= 1)
    q = np.where(ok, p, 0.5)
    return _nan_outside(ok, xlogy(q, q) + xlogy(1 - q, 1 - q))


def _logit_checked(p):
    p = _a(p)
    ok = (p >= 0) & (p <= 1)
    with np.errstate(divide="ignore"):
        return _nan_outside(ok, logit(np.where(ok, p, 0.5)))


# -- softplus ---------------------------------------------------------------

def _softplus_F(eta):
    # -Li2(-e^eta); the inversion formula keeps large eta finite.
    eta = _a(eta)
    neg = np.minimum(eta, 0.0)
    pos = np.maximum(eta, 0.0)
    low = -spence(1.0 + np.exp(neg))
    high = _PI2_6 + 0.5 * pos ** 2 + spence(1.0 + np.exp(-pos))
    return np.where(eta <= 0, low, high)


def _log_expm1(y):
    y = _a(y)
    with np.errstate(divide="ignore", invalid="ignore"):
        small = np.log(np.expm1(np.minimum(y, 30.0)))
        large = y + np.log(-np.expm1(-np.maximum(y, 30.0)))
    return np.where(y > 30.0, large, small)


def _softplus_inv(y):
    y = _a(y)
    ok = y >= 0
    return _nan_outside(ok, _log_expm1(np.where(ok, y, 1.0)))


def _softplus_F_star(y):
    # y*log(e^y - 1) + Li2(1 - e^y), with F*(0) = 0.
    y = _a(y)
    ok = y >= 0
    ys = np.where(ok & (y > 0), y, 1.0)
    L = _log_expm1(ys)
    near = ys <= math.log(2.0)
    li_near = spence(np.exp(np.minimum(ys, math.log(2.0))))
    with np.errstate(over="ignore"):
        inv = 1.0 / np.expm1(np.maximum(ys, math.log(2.0)))
    li_far = -_PI2_6 - 0.5 * L ** 2 - spence(1.0 + inv)
    out = ys * L + np.where(near, li_near, li_far)
    out = np.where(y == 0, 0.0, out)
    return _nan_outside(ok, out)


# -- piecewise power units --------------------------------------------------

def _relu_inv(y):
    y = _a(y)
    return _nan_outside(y >= 0, np.maximum(y, 0.0))


def _half_square_nonneg(y):
    y = _a(y)
    return _nan_outside(y >= 0, 0.5 * np.maximum(y, 0.0) ** 2)


def _requ_inv(y):
    y = _a(y)
    return _nan_outside(y >= 0, np.sqrt(np.maximum(y, 0.0)))


def _two_thirds_pow_nonneg(y):
    y = _a(y)
    return _nan_outside(y >= 0, (2.0 / 3.0) * np.maximum(y, 0.0) ** 1.5)


def _symsqu_prime(eta):
    with np.errstate(divide="ignore"):
        return 0.5 / np.sqrt(np.abs(_a(eta)))


# -- exponential units ------------------------------------------------------

def _exp_inv(y):
    y = _a(y)
    ok = y >= 0
    with np.errstate(divide="ignore"):
        return _nan_outside(ok, np.log(np.where(ok, y, 1.0)))


def _exp_F_star(y):
    y = _a(y)
    ok = y >= 0
    q = np.where(ok, y, 0.0)
    return _nan_outside(ok, xlogy(q, q) - q)


CATALOG: dict[str, ActivationSpec] = {}


def _register(spec: ActivationSpec) -> ActivationSpec:
    CATALOG[spec.name] = spec
    return spec


SIGMOID = _register(ActivationSpec(
    name="sigmoid",
    support=Support.BINARY01,
    f=lambda eta: expit(_a(eta)),
    f_prime=_sigmoid_prime,
    F=_softplus,
    F_star=_neg_entropy,
    f_inv=_logit_checked,
    exact_sampler=ExactSampler.BERNOULLI,
    table_variance="-",
))

NOISY_TANH = _register(ActivationSpec(
    name="noisy-tanh",
    support=Support.BINARY_PM,
    f=lambda eta: expit(_a(eta)) - 0.5,
    f_prime=_sigmoid_prime,
    F=lambda eta: _softplus(eta) - 0.5 * _a(eta),
    F_star=lambda y: _neg_entropy(_a(y) + 0.5),
    f_inv=lambda y: _logit_checked(_a(y) + 0.5),
    exact_sampler=ExactSampler.BERNOULLI,
    antisymmetric=True,
    table_variance="(f - 1/2)(f + 1/2)",
))

ARCSINH = _register(ActivationSpec(
    name="arcsinh",
    support=Support.CONTINUOUS_REAL,
    f=lambda eta: np.arcsinh(_a(eta)),
    f_prime=lambda eta: 1.0 / np.hypot(1.0, _a(eta)),
    F=lambda eta: _a(eta) * np.arcsinh(_a(eta)) - np.hypot(1.0, _a(eta)),
    F_star=lambda y: np.cosh(_a(y)),
    f_inv=lambda y: np.sinh(_a(y)),
    exact_sampler=ExactSampler.NONE,
    antisymmetric=True,
    table_variance="1/sqrt(1 + eta^2)",
))

SYMSQU = _register(ActivationSpec(
    name="symsqu",
    support=Support.CONTINUOUS_REAL,
    f=lambda eta: np.sign(_a(eta)) * np.sqrt(np.abs(_a(eta))),
    f_prime=_symsqu_prime,
    F=lambda eta: (2.0 / 3.0) * np.abs(_a(eta)) ** 1.5,
    F_star=lambda y: np.abs(_a(y)) ** 3 / 3.0,
    f_inv=lambda y: _a(y) * np.abs(_a(y)),
    exact_sampler=ExactSampler.NONE,
    antisymmetric=True,
    table_variance="sqrt(|eta|)/2",
))

LINEAR = _register(ActivationSpec(
    name="linear",
    support=Support.CONTINUOUS_REAL,
    f=lambda eta: _a(eta) + 0.0,
    f_prime=lambda eta: np.ones_like(_a(eta)),
    F=lambda eta: 0.5 * _a(eta) ** 2,
    F_star=lambda y: 0.5 * _a(y) ** 2,
    f_inv=lambda y: _a(y) + 0.0,
    exact_sampler=ExactSampler.GAUSSIAN,
    antisymmetric=True,
    table_variance="1",
))

SOFTPLUS = _register(ActivationSpec(
    name="softplus",
    support=Support.CONTINUOUS_NONNEG,
    f=_softplus,
    f_prime=lambda eta: expit(_a(eta)),
    F=_softplus_F,
    F_star=_softplus_F_star,
    f_inv=_softplus_inv,
    exact_sampler=ExactSampler.NONE,
    # logistic smoothing of the rectifier is softplus, so the ensemble's
    # thresholds come from the rectifier's inverse
    series_inverse=_relu_inv,
    table_variance="sigmoid(eta)",
))

RELU = _register(ActivationSpec(
    name="relu",
    support=Support.CONTINUOUS_NONNEG,
    f=lambda eta: np.maximum(_a(eta), 0.0),
    f_prime=lambda eta: np.where(_a(eta) > 0, 1.0, 0.0),
    F=lambda eta: 0.5 * np.maximum(_a(eta), 0.0) ** 2,
    F_star=_half_square_nonneg,
    f_inv=_relu_inv,
    exact_sampler=ExactSampler.NONE,
    table_variance="ident(eta > 0)",
))

REQU = _register(ActivationSpec(
    name="requ",
    support=Support.CONTINUOUS_NONNEG,
    f=lambda eta: np.maximum(_a(eta), 0.0) ** 2,
    f_prime=lambda eta: 2.0 * np.maximum(_a(eta), 0.0),
    F=lambda eta: np.maximum(_a(eta), 0.0) ** 3 / 3.0,
    F_star=_two_thirds_pow_nonneg,
    f_inv=_requ_inv,
    exact_sampler=ExactSampler.NONE,
    table_variance="ident(eta > 0) eta",
))

SYMQU = _register(ActivationSpec(
    name="symqu",
    support=Support.CONTINUOUS_REAL,
    f=lambda eta: _a(eta) * np.abs(_a(eta)),
    f_prime=lambda eta: 2.0 * np.abs(_a(eta)),
    F=lambda eta: np.abs(_a(eta)) ** 3 / 3.0,
    F_star=lambda y: (2.0 / 3.0) * np.abs(_a(y)) ** 1.5,
    f_inv=lambda y: np.sign(_a(y)) * np.sqrt(np.abs(_a(y))),
    exact_sampler=ExactSampler.NONE,
    antisymmetric=True,
    table_variance="|eta|",
))

EXP = _register(ActivationSpec(
    name="exp",
    support=Support.CONTINUOUS_NONNEG,
    f=lambda eta: np.exp(_a(eta)),
    f_prime=lambda eta: np.exp(_a(eta)),
    F=lambda eta: np.exp(_a(eta)),
    F_star=_exp_F_star,
    f_inv=_exp_inv,
    exact_sampler=ExactSampler.NONE,
    table_variance="e^eta",
))

SINH = _register(ActivationSpec(
    name="sinh",
    support=Support.CONTINUOUS_REAL,
    f=lambda eta: np.sinh(_a(eta)),
    f_prime=lambda eta: np.cosh(_a(eta)),
    F=lambda eta: np.cosh(_a(eta)),
    F_star=lambda y: _a(y) * np.arcsinh(_a(y)) - np.hypot(1.0, _a(y)),
    f_inv=lambda y: np.arcsinh(_a(y)),
    exact_sampler=ExactSampler.NONE,
    antisymmetric=True,
    table_variance="cosh(eta)",
))

POISSON = _register(ActivationSpec(
    name="poisson",
    support=Support.NONNEG_INTEGER,
    f=lambda eta: np.exp(_a(eta)),
    f_prime=lambda eta: np.exp(_a(eta)),
    F=lambda eta: np.exp(_a(eta)),
    # Stirling's form of log(y!)
    F_star=_exp_F_star,
    f_inv=_exp_inv,
    exact_sampler=ExactSampler.POISSON,
    table_variance="-",
))

UNIT_NAMES = tuple(CATALOG)


def get_unit(name: str | ActivationSpec) -> ActivationSpec:
    if isinstance(name, ActivationSpec):
        return name
    try:
        return CATALOG[name]
    except KeyError:
        raise ValueError(
            f"unknown unit {name!r}; expected one of {', '.join(UNIT_NAMES)}"
        ) from None


def _scalar_or_array(x):
    return float(x) if np.ndim(x) == 0 else x


def bregman_divergence(eta, y, spec: ActivationSpec | str):
    """``-eta*y + F(eta) + F_star(y)``, clipped at zero against round-off.

    Raises DomainError when ``y`` is outside the support closure and
    SaturationError when the value overflows.
    """
    spec = get_unit(spec)
    eta = _a(eta)
    y = _a(y)
    if not np.all(spec.in_domain(y)):
        raise DomainError(f"{spec.name}: y outside the support closure")
    with np.errstate(over="ignore", invalid="ignore"):
        Fs = spec.F_star(y)
        if np.any(np.isnan(Fs)):
            raise DomainError(f"{spec.name}: conjugate undefined at y")
        d = -eta * y + spec.F(eta) + Fs
    if not np.all(np.isfinite(d)):
        raise SaturationError(f"{spec.name}: divergence overflowed")
    return _scalar_or_array(np.maximum(d, 0.0))


def conditional_log_density_unnormalized(eta, y, spec: ActivationSpec | str):
    """Log of the conditional up to its (constant) base measure."""
    return _scalar_or_array(-_a(bregman_divergence(eta, y, spec)))


def matching_loss(eta, y_target, spec: ActivationSpec | str):
    """The Bregman matching loss of ``f``; its eta-gradient is ``f(eta) - y``."""
    return bregman_divergence(eta, y_target, spec)


def matching_loss_grad(eta, y_target, spec: ActivationSpec | str):
    spec = get_unit(spec)
    return _scalar_or_array(spec.f(_a(eta)) - _a(y_target))
