"""Contrastive-divergence training, rates-FPCD sample generation and
matching-loss regression."""
from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .errors import DivergenceDetected, DomainError
from .model import (ExpRbmModel, SamplerMode, hidden_input, sample_hidden,
                    sample_visible)
from .rng import RngStream
from .units import bregman_divergence, get_unit

# stream ids derived from TrainConfig.seed
INIT_STREAM = 0
SHUFFLE_STREAM = 1
SAMPLING_STREAM = 2


class PositivePhase(enum.Enum):
    SAMPLE = "sample"
    MEAN = "mean"


class NoiseMode(enum.Enum):
    NONE = "none"
    SCALED_GAUSSIAN = "scaled-gaussian"


@dataclass
class TrainConfig:
    cd_steps: int = 1
    epochs: int = 25
    learning_rate: float = 1e-3
    momentum: float = 0.0
    batch_size: int = 100
    seed: int = 0
    weight_init_range: float = 0.01
    # None keeps whatever the model already carries
    visible_mode: SamplerMode | None = None
    hidden_mode: SamplerMode | None = None
    positive_phase: PositivePhase = PositivePhase.SAMPLE
    divergence_threshold: float = 1e8

    def __post_init__(self):
        if self.cd_steps < 1:
            raise ValueError("cd_steps must be >= 1")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if not self.learning_rate >= 0:
            raise ValueError("learning_rate must be nonnegative")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must lie in [0, 1)")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not self.weight_init_range > 0:
            raise ValueError("weight_init_range must be positive")
        if self.visible_mode is not None:
            self.visible_mode = SamplerMode.parse(self.visible_mode)
        if self.hidden_mode is not None:
            self.hidden_mode = SamplerMode.parse(self.hidden_mode)
        self.positive_phase = PositivePhase(self.positive_phase)


class CdGradient(NamedTuple):
    dW: np.ndarray
    db_visible: np.ndarray
    db_hidden: np.ndarray
    recon_error: float


@dataclass
class EpochMetrics:
    epoch: int
    recon_error: float
    wall_time_s: float


@dataclass
class TrainResult:
    model: ExpRbmModel
    history: list[EpochMetrics] = field(default_factory=list)


def init_model(n_visible, n_hidden, visible, hidden, config: TrainConfig) -> ExpRbmModel:
    modes = {}
    if config.visible_mode is not None:
        modes["visible_mode"] = config.visible_mode
    if config.hidden_mode is not None:
        modes["hidden_mode"] = config.hidden_mode
    return ExpRbmModel.random(n_visible, n_hidden, visible, hidden,
                              RngStream(config.seed, INIT_STREAM),
                              init_range=config.weight_init_range, **modes)


def cd_gradient(model: ExpRbmModel, batch, cd_steps: int, rng: RngStream,
                positive_phase=PositivePhase.SAMPLE) -> CdGradient:
    """CD-k estimate of the log-likelihood gradient, averaged over the batch.

    The chain starts from the positive-phase hidden sample and runs
    ``cd_steps`` visible/hidden alternations.  In ``MEAN`` mode the positive
    statistic uses ``f(eta)`` while the chain still starts from the sample.
    """
    x_pos = np.atleast_2d(np.asarray(batch, dtype=float))
    B = x_pos.shape[0]
    y_pos = sample_hidden(model, x_pos, rng)
    y_stat = y_pos
    if PositivePhase(positive_phase) is PositivePhase.MEAN:
        y_stat = model.hidden_spec.f(hidden_input(model, x_pos))
    y_neg = y_pos
    x_neg = x_pos
    for _ in range(cd_steps):
        x_neg = sample_visible(model, y_neg, rng)
        y_neg = sample_hidden(model, x_neg, rng)
    dW = (x_pos.T @ y_stat - x_neg.T @ y_neg) / B
    db_v = x_pos.mean(axis=0) - x_neg.mean(axis=0)
    db_h = y_stat.mean(axis=0) - y_neg.mean(axis=0)
    recon = float(np.mean(np.sum((x_pos - x_neg) ** 2, axis=1)) / model.n_visible)
    return CdGradient(dW, db_v, db_h, recon)


def _check_divergence(model, threshold, epoch):
    for name in ("W", "b_visible", "b_hidden"):
        p = getattr(model, name)
        if not np.all(np.isfinite(p)) or np.max(np.abs(p), initial=0.0) > threshold:
            raise DivergenceDetected(f"{name} diverged during epoch {epoch}")


def train(model: ExpRbmModel, data, config: TrainConfig,
          callback: Callable[[EpochMetrics, ExpRbmModel], None] | None = None) -> TrainResult:
    """Momentum SGD on CD-k gradients; the input model is left untouched.

    ``V <- momentum * V + lr * grad`` then ``theta <- theta + V`` (ascent on
    the log-likelihood).  Mini-batches come from a fresh shuffle each epoch.
    """
    X = np.asarray(getattr(data, "X", data), dtype=float)
    if X.ndim != 2 or X.shape[1] != model.n_visible:
        raise ValueError(f"data must be N x {model.n_visible}")
    m = model.copy()
    if config.visible_mode is not None:
        m.visible_mode = config.visible_mode
    if config.hidden_mode is not None:
        m.hidden_mode = config.hidden_mode
    shuffle = RngStream(config.seed, SHUFFLE_STREAM)
    rng = RngStream(config.seed, SAMPLING_STREAM)
    vW = np.zeros_like(m.W)
    vbv = np.zeros_like(m.b_visible)
    vbh = np.zeros_like(m.b_hidden)
    lr, mom = config.learning_rate, config.momentum
    n = X.shape[0]
    history = []
    start = time.perf_counter()
    for epoch in range(1, config.epochs + 1):
        order = shuffle.permutation(n)
        err_sum = 0.0
        for lo in range(0, n, config.batch_size):
            batch = X[order[lo:lo + config.batch_size]]
            # overflow surfaces as non-finite parameters, caught just below
            with np.errstate(over="ignore", invalid="ignore"):
                g = cd_gradient(m, batch, config.cd_steps, rng, config.positive_phase)
                vW = mom * vW + lr * g.dW
                vbv = mom * vbv + lr * g.db_visible
                vbh = mom * vbh + lr * g.db_hidden
                m.W = m.W + vW
                m.b_visible = m.b_visible + vbv
                m.b_hidden = m.b_hidden + vbh
            _check_divergence(m, config.divergence_threshold, epoch)
            err_sum += g.recon_error * batch.shape[0]
        metrics = EpochMetrics(epoch, err_sum / n, time.perf_counter() - start)
        history.append(metrics)
        if callback is not None:
            callback(metrics, m)
    return TrainResult(m, history)


@dataclass
class FpcdState:
    """Fast weights and persistent chains for rates-FPCD."""

    fast_W: np.ndarray
    fast_b_visible: np.ndarray
    fast_b_hidden: np.ndarray
    persistent_chains: np.ndarray
    fast_rate: float
    fast_decay: float

    @classmethod
    def start(cls, model: ExpRbmModel, chains, fast_rate, fast_decay):
        chains = np.atleast_2d(np.asarray(chains, dtype=float)).copy()
        if chains.shape[1] != model.n_visible:
            raise ValueError("chains must have one column per visible unit")
        if fast_rate < 0 or not 0.0 <= fast_decay <= 1.0:
            raise ValueError("need fast_rate >= 0 and fast_decay in [0, 1]")
        return cls(np.zeros_like(model.W), np.zeros_like(model.b_visible),
                   np.zeros_like(model.b_hidden), chains, fast_rate, fast_decay)


def _statistics(model: ExpRbmModel, X):
    Ey = model.hidden_spec.f(hidden_input(model, X))
    n = X.shape[0]
    return X.T @ Ey / n, X.mean(axis=0), Ey.mean(axis=0)


def rates_fpcd_generate(model: ExpRbmModel, n_samples: int, steps_per_sample: int,
                        fast_rate: float, fast_decay: float, rng: RngStream,
                        data=None, n_chains: int = 1, init=None,
                        state: FpcdState | None = None) -> np.ndarray:
    """Generate ``n_samples`` visible states with rates-FPCD.

    Persistent chains start at ``init`` if given, else at random rows of
    ``data``.  Every round each chain makes ``steps_per_sample`` Gibbs sweeps
    under ``W + fast_W`` and emits its visible state; then

        fast <- fast_decay * fast + fast_rate * (data_rates - chain_stats)

    where ``data_rates`` are the hidden-mean statistics of ``data`` under the
    base model (zero without data).  With ``fast_rate = 0`` this is plain
    persistent Gibbs sampling.  Passing ``state`` resumes and updates it.
    """
    if n_samples < 1 or steps_per_sample < 1:
        raise ValueError("n_samples and steps_per_sample must be >= 1")
    X = None if data is None else np.asarray(getattr(data, "X", data), dtype=float)
    if state is None:
        if init is None:
            if X is None:
                raise ValueError("rates_fpcd_generate needs init or data to seed the chains")
            init = X[rng.integers(0, X.shape[0], size=n_chains)]
        state = FpcdState.start(model, init, fast_rate, fast_decay)
    if X is not None:
        pos = _statistics(model, X)
    else:
        pos = (np.zeros_like(model.W), np.zeros_like(model.b_visible), np.zeros_like(model.b_hidden))

    out = np.empty((n_samples, model.n_visible))
    filled = 0
    eff = model.copy()
    while filled < n_samples:
        eff.W = model.W + state.fast_W
        eff.b_visible = model.b_visible + state.fast_b_visible
        eff.b_hidden = model.b_hidden + state.fast_b_hidden
        x = state.persistent_chains
        for _ in range(steps_per_sample):
            y = sample_hidden(eff, x, rng)
            x = sample_visible(eff, y, rng)
        state.persistent_chains = x
        take = min(x.shape[0], n_samples - filled)
        out[filled:filled + take] = x[:take]
        filled += take
        neg = _statistics(eff, x)
        d, r = state.fast_decay, state.fast_rate
        state.fast_W = d * state.fast_W + r * (pos[0] - neg[0])
        state.fast_b_visible = d * state.fast_b_visible + r * (pos[1] - neg[1])
        state.fast_b_hidden = d * state.fast_b_hidden + r * (pos[2] - neg[2])
    return out


def matching_loss_objective(w, inputs, targets, spec) -> float:
    """Mean Bregman matching loss of the neuron ``f(inputs @ w)``."""
    spec = get_unit(spec)
    return float(np.mean(bregman_divergence(np.asarray(inputs) @ w, targets, spec)))


def matching_loss_gradient(w, inputs, targets, spec) -> np.ndarray:
    spec = get_unit(spec)
    X = np.asarray(inputs, dtype=float)
    return X.T @ (spec.f(X @ w) - np.asarray(targets, dtype=float)) / X.shape[0]


def matching_loss_fit(inputs, targets, spec, lr: float, epochs: int,
                      noise_mode=NoiseMode.NONE, rng: RngStream | None = None,
                      w0=None) -> np.ndarray:
    """Fit one neuron by full-batch gradient descent on the matching loss.

    With ``SCALED_GAUSSIAN`` noise the prediction is perturbed by
    ``N(0, f'(eta))`` at every step before forming the gradient.
    """
    spec = get_unit(spec)
    X = np.asarray(inputs, dtype=float)
    y = np.asarray(targets, dtype=float)
    if not np.all(spec.in_domain(y)):
        raise DomainError(f"targets outside the {spec.name} support")
    noise_mode = NoiseMode(noise_mode)
    if noise_mode is NoiseMode.SCALED_GAUSSIAN and rng is None:
        rng = RngStream(0)
    w = np.zeros(X.shape[1]) if w0 is None else np.array(w0, dtype=float)
    n = X.shape[0]
    for _ in range(epochs):
        eta = X @ w
        pred = spec.f(eta)
        if noise_mode is NoiseMode.SCALED_GAUSSIAN:
            pred = pred + np.sqrt(spec.variance(eta)) * rng.normal(eta.shape)
        w = w - lr * (X.T @ (pred - y)) / n
    return w
