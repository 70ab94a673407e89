"""The Exp-RBM: parameters, energy and block Gibbs transitions.

Arrays follow the row convention: a single state is a vector, a batch is a
matrix with one state per row.  ``W`` is ``I x J`` (visible by hidden).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from .errors import DimensionMismatch, DomainError
from .rng import RngStream
from .sampling import sample_exact, sample_gaussian_approx
from .units import ActivationSpec, ExactSampler, get_unit


class SamplerMode(enum.IntEnum):
    GAUSSIAN_APPROX = 0
    EXACT_WHEN_AVAILABLE = 1

    @classmethod
    def parse(cls, value) -> "SamplerMode":
        if isinstance(value, cls):
            return value
        if isinstance(value, str):
            key = value.strip().lower().replace("-", "_")
            aliases = {"gaussian": cls.GAUSSIAN_APPROX, "gaussian_approx": cls.GAUSSIAN_APPROX,
                       "exact": cls.EXACT_WHEN_AVAILABLE,
                       "exact_when_available": cls.EXACT_WHEN_AVAILABLE}
            if key in aliases:
                return aliases[key]
            raise ValueError(f"unknown sampler mode {value!r}")
        return cls(int(value))


@dataclass
class ExpRbmModel:
    W: np.ndarray
    b_visible: np.ndarray
    b_hidden: np.ndarray
    visible_spec: ActivationSpec
    hidden_spec: ActivationSpec
    visible_mode: SamplerMode = SamplerMode.EXACT_WHEN_AVAILABLE
    hidden_mode: SamplerMode = SamplerMode.EXACT_WHEN_AVAILABLE

    def __post_init__(self):
        self.W = np.array(self.W, dtype=np.float64, ndmin=2)
        self.b_visible = np.array(self.b_visible, dtype=np.float64).reshape(-1)
        self.b_hidden = np.array(self.b_hidden, dtype=np.float64).reshape(-1)
        self.visible_spec = get_unit(self.visible_spec)
        self.hidden_spec = get_unit(self.hidden_spec)
        self.visible_mode = SamplerMode.parse(self.visible_mode)
        self.hidden_mode = SamplerMode.parse(self.hidden_mode)
        I, J = self.W.shape
        if self.b_visible.shape != (I,) or self.b_hidden.shape != (J,):
            raise DimensionMismatch(
                f"W is {I}x{J} but biases have lengths {self.b_visible.size}, {self.b_hidden.size}")
        if not (np.all(np.isfinite(self.W)) and np.all(np.isfinite(self.b_visible))
                and np.all(np.isfinite(self.b_hidden))):
            raise ValueError("model parameters must be finite")

    @classmethod
    def zeros(cls, n_visible, n_hidden, visible="sigmoid", hidden="sigmoid", **modes):
        return cls(np.zeros((n_visible, n_hidden)), np.zeros(n_visible), np.zeros(n_hidden),
                   get_unit(visible), get_unit(hidden), **modes)

    @classmethod
    def random(cls, n_visible, n_hidden, visible, hidden, rng: RngStream,
               init_range=0.01, **modes):
        """Weights uniform in ``[-init_range, init_range]``, biases zero."""
        W = rng.generator.uniform(-init_range, init_range, size=(n_visible, n_hidden))
        return cls(W, np.zeros(n_visible), np.zeros(n_hidden),
                   get_unit(visible), get_unit(hidden), **modes)

    @property
    def n_visible(self) -> int:
        return self.W.shape[0]

    @property
    def n_hidden(self) -> int:
        return self.W.shape[1]

    def copy(self) -> "ExpRbmModel":
        return replace(self, W=self.W.copy(), b_visible=self.b_visible.copy(),
                       b_hidden=self.b_hidden.copy())

    def transposed(self) -> "ExpRbmModel":
        """The same model with the roles of the two layers swapped."""
        return ExpRbmModel(self.W.T.copy(), self.b_hidden.copy(), self.b_visible.copy(),
                           self.hidden_spec, self.visible_spec,
                           self.hidden_mode, self.visible_mode)


def _check_dim(v, n, what):
    v = np.asarray(v, dtype=np.float64)
    if v.shape[-1:] != (n,):
        raise DimensionMismatch(f"{what} has trailing dimension {v.shape[-1:]}, expected {n}")
    return v


def hidden_input(model: ExpRbmModel, x) -> np.ndarray:
    """``eta = W^T x + b_hidden`` for a state or a batch of states."""
    x = _check_dim(x, model.n_visible, "visible state")
    return x @ model.W + model.b_hidden


def visible_input(model: ExpRbmModel, y) -> np.ndarray:
    """``nu = W y + b_visible``."""
    y = _check_dim(y, model.n_hidden, "hidden state")
    return y @ model.W.T + model.b_visible


def clamped_unit_weights(model: ExpRbmModel) -> np.ndarray:
    """Weights of the equivalent bias-free model with one extra always-on unit
    per layer: the last row carries ``b_hidden``, the last column ``b_visible``."""
    I, J = model.W.shape
    Wa = np.zeros((I + 1, J + 1))
    Wa[:I, :J] = model.W
    Wa[I, :J] = model.b_hidden
    Wa[:I, J] = model.b_visible
    return Wa


def _conjugate_sum(spec: ActivationSpec, v, what):
    if not np.all(spec.in_domain(v)):
        raise DomainError(f"{what} state outside the {spec.name} support")
    with np.errstate(over="ignore"):
        Fs = spec.F_star(v)
    if np.any(np.isnan(Fs)):
        raise DomainError(f"{spec.name}: conjugate undefined on the {what} state")
    return np.sum(Fs, axis=-1)


def energy(model: ExpRbmModel, x, y):
    """``-x^T W y - b_v^T x - b_h^T y + sum F*(x_i) + sum F*(y_j)``.

    Base-measure terms are dropped, so only energy differences are
    meaningful for units whose base measure is unknown.
    """
    x = _check_dim(x, model.n_visible, "visible state")
    y = _check_dim(y, model.n_hidden, "hidden state")
    inter = np.sum((x @ model.W) * y, axis=-1)
    e = (-inter - x @ model.b_visible - y @ model.b_hidden
         + _conjugate_sum(model.visible_spec, x, "visible")
         + _conjugate_sum(model.hidden_spec, y, "hidden"))
    return float(e) if np.ndim(e) == 0 else e


def unnormalized_log_joint(model: ExpRbmModel, x, y):
    e = energy(model, x, y)
    return -e


def _draw(spec: ActivationSpec, mode: SamplerMode, eta, rng: RngStream):
    if mode is SamplerMode.EXACT_WHEN_AVAILABLE and spec.exact_sampler is not ExactSampler.NONE:
        return sample_exact(eta, spec, rng)
    return sample_gaussian_approx(eta, spec, rng)


def sample_hidden(model: ExpRbmModel, x, rng: RngStream) -> np.ndarray:
    return _draw(model.hidden_spec, model.hidden_mode, hidden_input(model, x), rng)


def sample_visible(model: ExpRbmModel, y, rng: RngStream) -> np.ndarray:
    return _draw(model.visible_spec, model.visible_mode, visible_input(model, y), rng)


def mean_hidden(model: ExpRbmModel, x) -> np.ndarray:
    return model.hidden_spec.f(hidden_input(model, x))


def mean_visible(model: ExpRbmModel, y) -> np.ndarray:
    return model.visible_spec.f(visible_input(model, y))


def gibbs_chain(model: ExpRbmModel, x0, k: int, rng: RngStream, return_trajectory=False):
    """Run ``k`` block-Gibbs sweeps from ``x0``.

    Each sweep draws ``y ~ p(y | x)`` and then ``x ~ p(x | y)``.  Returns
    ``(x_k, y_k, trajectory)`` where ``trajectory`` lists ``x_1 .. x_k`` when
    requested and is ``None`` otherwise.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    x = _check_dim(x0, model.n_visible, "initial state")
    traj = [] if return_trajectory else None
    y = None
    for _ in range(k):
        y = sample_hidden(model, x, rng)
        x = sample_visible(model, y, rng)
        if traj is not None:
            traj.append(x)
    return x, y, traj
