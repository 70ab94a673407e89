"""Exact quantities for small models whose units are all binary.

One layer is enumerated explicitly and the other is summed out in closed
form, so the cost is ``2**min(I, J)`` rows.  Binary units have a zero
conjugate at both support points, so energies here are exact.
"""
from __future__ import annotations

import itertools

import numpy as np
from scipy.special import logsumexp

from .errors import DomainError
from .model import ExpRbmModel, hidden_input, visible_input
from .units import ActivationSpec, Support

MAX_ENUMERATED = 22


def binary_states(n: int, spec: ActivationSpec) -> np.ndarray:
    """All ``2**n`` states of ``n`` binary units, one per row."""
    vals = spec.support.discrete_values
    if vals is None:
        raise DomainError(f"{spec.name} units are not binary")
    if n > MAX_ENUMERATED:
        raise ValueError(f"refusing to enumerate 2**{n} states")
    return np.array(list(itertools.product(vals, repeat=n)), dtype=float).reshape(-1, n)


def _log_sum_unit(spec: ActivationSpec, a):
    """log of ``sum_s exp(a * s)`` over the two support points of a binary unit."""
    if spec.support is Support.BINARY01:
        return np.logaddexp(0.0, a)
    if spec.support is Support.BINARY_PM:
        return np.logaddexp(0.5 * a, -0.5 * a)
    raise DomainError(f"{spec.name} units are not binary")


def _require_binary(model: ExpRbmModel):
    for spec in (model.visible_spec, model.hidden_spec):
        if spec.support.discrete_values is None:
            raise DomainError(f"exact enumeration needs binary units, got {spec.name}")


def log_marginal_visible(model: ExpRbmModel, X) -> np.ndarray:
    """``log sum_y exp(-E(x, y))`` for each row of ``X``."""
    _require_binary(model)
    X = np.asarray(X, dtype=float)
    return X @ model.b_visible + np.sum(_log_sum_unit(model.hidden_spec, hidden_input(model, X)), axis=-1)


def log_marginal_hidden(model: ExpRbmModel, Y) -> np.ndarray:
    _require_binary(model)
    Y = np.asarray(Y, dtype=float)
    return Y @ model.b_hidden + np.sum(_log_sum_unit(model.visible_spec, visible_input(model, Y)), axis=-1)


def log_partition(model: ExpRbmModel) -> float:
    _require_binary(model)
    if model.n_hidden <= model.n_visible:
        return float(logsumexp(log_marginal_hidden(model, binary_states(model.n_hidden, model.hidden_spec))))
    return float(logsumexp(log_marginal_visible(model, binary_states(model.n_visible, model.visible_spec))))


def log_likelihoods(model: ExpRbmModel, X) -> np.ndarray:
    """Exact ``log p(x)`` for each row of ``X``."""
    return log_marginal_visible(model, X) - log_partition(model)


def exact_log_likelihood(model: ExpRbmModel, X) -> float:
    """Mean exact log-likelihood of the rows of ``X``."""
    return float(np.mean(log_likelihoods(model, X)))


def model_statistics(model: ExpRbmModel):
    """Model expectations ``(E[x y^T], E[x], E[y])`` under the joint."""
    _require_binary(model)
    if model.n_hidden > model.n_visible:
        sxy, sx, sy = model_statistics(model.transposed())
        return sxy.T, sy, sx
    Y = binary_states(model.n_hidden, model.hidden_spec)
    logw = log_marginal_hidden(model, Y)
    p = np.exp(logw - logsumexp(logw))
    Ex_given_y = model.visible_spec.f(visible_input(model, Y))
    return Ex_given_y.T @ (p[:, None] * Y), p @ Ex_given_y, p @ Y


def exact_gradient(model: ExpRbmModel, X):
    """Gradient of the mean log-likelihood of ``X`` w.r.t. ``(W, b_v, b_h)``."""
    _require_binary(model)
    X = np.asarray(X, dtype=float)
    Ey = model.hidden_spec.f(hidden_input(model, X))
    n = X.shape[0]
    pos_w = X.T @ Ey / n
    sxy, sx, sy = model_statistics(model)
    return pos_w - sxy, X.mean(axis=0) - sx, Ey.mean(axis=0) - sy
