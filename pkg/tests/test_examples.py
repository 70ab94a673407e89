"""Small worked cases with known answers, one per behavior."""
import math
import struct

import numpy as np
import pytest
from scipy import stats

from exprbm.data import Dataset, generate_bars_and_stripes, parse_idx, preprocess
from exprbm.enumeration import binary_states, exact_gradient, log_likelihoods, model_statistics
from exprbm.errors import MalformedMagic, TruncatedPayload
from exprbm.evaluation import (IslDensity, activation_histogram, filter_variance_ranking,
                               isl_log_density, optimize_beta, reconstruction_error)
from exprbm.model import (ExpRbmModel, clamped_unit_weights, energy, hidden_input, mean_hidden,
                          sample_hidden, visible_input)
from exprbm.rng import RngStream
from exprbm.sampling import (base_measure_integral, bernoulli_series_mean, bernoulli_series_sample,
                             normalized_conditional, poisson_knuth, sample_exact,
                             sample_gaussian_approx)
from exprbm.training import TrainConfig, init_model, rates_fpcd_generate, train
from exprbm.units import (bregman_divergence, conditional_log_density_unnormalized, matching_loss,
                          matching_loss_grad)

# softplus base measure at eta = -2, 0, 2 from nested scipy quad, frozen
SOFTPLUS_BASE = {-2.0: 0.7640550619824258, 0.0: 1.573525047287167, 2.0: 2.3008686822392352}
# sum_{n=1}^{50} sigmoid(0.5 - n): direct summation
SERIES_ALPHA1 = math.fsum(1 / (1 + math.exp(n - 0.5)) for n in range(1, 51))


def test_divergence_cases():
    assert bregman_divergence(2.0, 0.0, "linear") == pytest.approx(2.0)
    assert bregman_divergence(0.7, 0.7, "linear") == 0.0
    assert bregman_divergence(0.0, 1.0, "sigmoid") == pytest.approx(math.log(2))


def test_log_density_cases():
    assert conditional_log_density_unnormalized(0.0, 0.0, "linear") == 0.0
    assert conditional_log_density_unnormalized(0.0, 1.0, "linear") == pytest.approx(-0.5)
    assert conditional_log_density_unnormalized(1.0, math.log1p(math.e), "softplus") == pytest.approx(0.0, abs=1e-12)


def test_matching_loss_cases():
    assert matching_loss(3.0, 1.0, "linear") == pytest.approx(2.0)
    assert matching_loss_grad(0.0, 0.5, "sigmoid") == 0.0
    assert matching_loss_grad(0.0, 2.0, "softplus") == pytest.approx(math.log(2) - 2)


def test_gaussian_approx_cases():
    rng = RngStream(10)
    assert sample_gaussian_approx(np.full(100_000, 1.5), "linear", rng).mean() == pytest.approx(1.5, abs=0.01)
    # N(log 2, 0.5) censored at 0, as nonnegative supports are clamped
    mu, sd = math.log(2), math.sqrt(0.5)
    a = mu / sd
    m1 = mu * stats.norm.cdf(a) + sd * stats.norm.pdf(a)
    m2 = (mu ** 2 + sd ** 2) * stats.norm.cdf(a) + mu * sd * stats.norm.pdf(a)
    y = sample_gaussian_approx(np.zeros(100_000), "softplus", rng)
    assert y.var() == pytest.approx(m2 - m1 ** 2, abs=0.01)
    assert np.all(y >= 0)
    assert np.all(sample_gaussian_approx(np.full(1000, -2.0), "relu", rng) == 0.0)


def test_exact_sampler_cases():
    rng = RngStream(11)
    assert sample_exact(np.zeros(100_000), "sigmoid", rng).mean() == pytest.approx(0.5, abs=0.005)
    k = sample_exact(np.zeros(100_000), "poisson", rng)
    assert k.mean() == pytest.approx(1.0, abs=0.02) and k.var() == pytest.approx(1.0, abs=0.02)
    assert poisson_knuth(np.full(100_000, 30.0), rng).mean() == pytest.approx(30.0, abs=0.2)


def test_conditional_table_cases():
    t = normalized_conditional(0.0, "linear")
    np.testing.assert_allclose(t.density, stats.norm.pdf(t.y_grid), atol=1e-6)
    np.testing.assert_allclose(normalized_conditional(0.0, "sigmoid").density, [0.5, 0.5])


def test_base_measure_cases():
    assert base_measure_integral(-3.0, "linear") == pytest.approx(math.sqrt(2 * math.pi), abs=1e-6)
    assert base_measure_integral(3.0, "linear") == pytest.approx(math.sqrt(2 * math.pi), abs=1e-6)
    vals = {e: base_measure_integral(e, "softplus") for e in SOFTPLUS_BASE}
    for e, v in vals.items():
        assert v == pytest.approx(SOFTPLUS_BASE[e], rel=1e-8)
    assert len({round(v, 6) for v in vals.values()}) == 3


def test_series_cases():
    v = bernoulli_series_mean(0.0, "softplus", 1.0, 50)
    assert v == pytest.approx(SERIES_ALPHA1, abs=1e-12)
    assert abs(v - math.log(2)) < 0.05
    assert bernoulli_series_mean(4.0, "softplus", 0.01, 10_000) == pytest.approx(math.log1p(math.e ** 4), abs=0.01)
    assert bernoulli_series_mean(-30.0, "softplus", 0.01, 10_000) == pytest.approx(0.0, abs=1e-6)
    assert np.all(bernoulli_series_sample(-30.0, "softplus", 0.01, 10_000, RngStream(0), size=100) == 0)


def test_model_input_cases():
    m = ExpRbmModel([[1.0], [2.0]], [0.0, 0.0], [0.5], "sigmoid", "sigmoid")
    np.testing.assert_allclose(hidden_input(m, [1.0, 1.0]), [3.5])
    z = ExpRbmModel.zeros(3, 2)
    assert not hidden_input(z, np.ones(3)).any()
    np.testing.assert_array_equal(visible_input(z, np.ones(2)), z.b_visible)
    np.testing.assert_allclose(mean_hidden(ExpRbmModel.zeros(2, 3, "sigmoid", "softplus"), np.ones(2)),
                               [math.log(2)] * 3)


def test_clamped_unit_encoding_matches_biases():
    g = np.random.default_rng(5)
    m = ExpRbmModel(g.normal(size=(3, 2)), g.normal(size=3), g.normal(size=2), "sigmoid", "sigmoid")
    Wa = clamped_unit_weights(m)
    x = (g.uniform(size=(6, 3)) < 0.5).astype(float)
    xa = np.hstack([x, np.ones((6, 1))])
    np.testing.assert_allclose((xa @ Wa)[:, :2], hidden_input(m, x), atol=1e-12)
    y = (g.uniform(size=(6, 2)) < 0.5).astype(float)
    ya = np.hstack([y, np.ones((6, 1))])
    bare = ExpRbmModel(Wa, np.zeros(4), np.zeros(3), "sigmoid", "sigmoid")
    e1 = energy(m, x, y)
    e2 = energy(bare, xa, ya)
    # identical up to the constant coupling of the two clamped units
    np.testing.assert_allclose(np.diff(e1), np.diff(e2), atol=1e-10)


def test_energy_cases():
    g = np.random.default_rng(3)
    m = ExpRbmModel(g.normal(size=(3, 2)), g.normal(size=3), g.normal(size=2), "sigmoid", "sigmoid")
    x, y = np.array([1.0, 0.0, 1.0]), np.array([0.0, 1.0])
    assert energy(m, x, y) == pytest.approx(-x @ m.W @ y - m.b_visible @ x - m.b_hidden @ y, abs=1e-12)
    assert energy(ExpRbmModel.zeros(2, 2, "linear", "linear"), np.zeros(2), np.zeros(2)) == 0.0
    lin = ExpRbmModel(g.normal(size=(2, 2)), np.zeros(2), np.zeros(2), "linear", "linear")
    x, y = g.normal(size=2), g.normal(size=2)
    assert energy(lin, x, y) == pytest.approx(-x @ lin.W @ y + 0.5 * x @ x + 0.5 * y @ y)


def test_zero_model_hidden_is_fair_coin():
    y = sample_hidden(ExpRbmModel.zeros(4, 6), np.ones((20_000, 4)), RngStream(0))
    assert y.mean() == pytest.approx(0.5, abs=0.01)


def test_exact_gradient_fixed_point():
    # data distribution set equal to the model's own marginal, in exact weights
    m = ExpRbmModel(np.array([[0.3, -0.2], [0.1, 0.4]]), [0.1, -0.1], [0.2, 0.0], "sigmoid", "sigmoid")
    X = binary_states(2, m.visible_spec)
    p = np.exp(log_likelihoods(m, X))
    Ey = m.hidden_spec.f(hidden_input(m, X))
    sxy, sx, sy = model_statistics(m)
    dW = X.T @ (p[:, None] * Ey) - sxy
    assert np.abs(dW).max() < 1e-10 and np.abs(p @ X - sx).max() < 1e-12
    assert exact_gradient(m, X)[0].shape == (2, 2)


def test_zero_learning_rate_leaves_model():
    X = generate_bars_and_stripes(3, 40, seed=0).X
    cfg = TrainConfig(epochs=3, learning_rate=0.0, batch_size=10)
    m0 = init_model(9, 3, "sigmoid", "sigmoid", cfg)
    m1 = train(m0, X, cfg).model
    assert np.array_equal(m0.W, m1.W) and np.array_equal(m0.b_hidden, m1.b_hidden)


def test_fpcd_on_zero_model_is_uniform():
    m = ExpRbmModel.zeros(6, 4)
    S = rates_fpcd_generate(m, 10_000, 1, 0.0, 0.0, RngStream(1), init=np.zeros((100, 6)))
    assert np.abs(S.mean(axis=0) - 0.5).max() < 0.01


def test_isl_cases():
    x = np.zeros(4)
    assert isl_log_density(IslDensity(np.zeros((1, 4)), 0.9), x) == pytest.approx(4 * math.log(0.9))
    assert isl_log_density(IslDensity(np.array([[0, 0, 0, 0], [1, 1, 1, 1.0]]), 0.9), x) == pytest.approx(
        math.log(0.5 * (0.9 ** 4 + 0.1 ** 4)))
    assert isl_log_density(IslDensity(np.eye(4), 0.5), x) == 4 * math.log(0.5)


def test_optimize_beta_extremes():
    V = generate_bars_and_stripes(4, 100, seed=4).X
    assert optimize_beta(V, V) > 1 - 1e-3
    U = (np.random.default_rng(0).uniform(size=(2000, 16)) < 0.5).astype(float)
    assert optimize_beta(U, V) < 0.6


def test_histogram_cases():
    h = activation_histogram(ExpRbmModel.zeros(3, 4), np.ones((5, 3)), bins=10, mode="mean",
                             value_range=(0.0, 1.0))
    assert h.counts[5] == 20 and h.counts.sum() == 20
    lin = ExpRbmModel.zeros(2, 10, "linear", "linear")
    hl = activation_histogram(lin, np.zeros((10_000, 2)), bins=20, rng=RngStream(3), value_range=(-4, 4))
    edges = hl.edges
    expected = np.diff(stats.norm.cdf(edges)) / (stats.norm.cdf(4) - stats.norm.cdf(-4)) * hl.counts.sum()
    assert stats.chisquare(hl.counts, expected).pvalue > 0.01


def test_training_fattens_activity_tail():
    X = generate_bars_and_stripes(4, 300, seed=1).X
    cfg = TrainConfig(epochs=300, learning_rate=0.01, momentum=0.9, batch_size=100, seed=0,
                      hidden_mode="gaussian")
    m0 = init_model(16, 8, "sigmoid", "relu", cfg)
    m1 = train(m0, X, cfg).model
    a0 = mean_hidden(m0, X).ravel()
    a1 = mean_hidden(m1, X).ravel()
    cut = np.quantile(a0, 0.9)
    assert np.mean(a1 > cut) > np.mean(a0 > cut)


def test_ranking_cases():
    W = np.zeros((5, 4))
    W[:, 2] = np.random.default_rng(0).normal(size=5) * 10
    m = ExpRbmModel(W, np.zeros(5), np.zeros(4), "sigmoid", "sigmoid")
    assert filter_variance_ranking(m)[0] == 2
    g = np.random.default_rng(1)
    W = g.normal(size=(6, 5))
    m = ExpRbmModel(W, np.zeros(6), np.zeros(5), "sigmoid", "sigmoid")
    ref = sorted(range(5), key=lambda j: -np.var(W[:, j]))
    assert list(filter_variance_ranking(m)) == ref


def test_reconstruction_cases():
    X = (np.random.default_rng(2).uniform(size=(4000, 5)) < 0.5).astype(float)
    # x' is a fair coin regardless of x, so each coordinate mismatches half the time
    assert reconstruction_error(ExpRbmModel.zeros(5, 3), X, RngStream(0)) == pytest.approx(0.5, abs=0.01)


def test_idx_cases():
    imgs = np.array([[[0, 255], [255, 0]], [[1, 2], [3, 4]], [[10, 20], [30, 40]], [[255, 255], [0, 0]]],
                    dtype=np.uint8)
    raw = bytes([0, 0, 8, 3]) + struct.pack(">III", 4, 2, 2) + imgs.tobytes()
    np.testing.assert_allclose(parse_idx(raw), imgs.reshape(4, 4) / 255.0)
    with pytest.raises(MalformedMagic):
        parse_idx(b"")
    with pytest.raises(TruncatedPayload):
        parse_idx(raw + b"\x00")


def test_preprocess_cases():
    assert np.all(preprocess(Dataset(np.full((5, 3), 0.7)), "binarize").X == 1)
    g = np.random.default_rng(0)
    out = preprocess(Dataset(g.normal(size=(100, 3))), "normalize", split=(0.9, 0.05, 0.05))
    assert out.X.std() == pytest.approx(1.0, abs=1e-9)
    sizes = {k: v.n for k, v in out.splits.items()}
    assert sizes == {"train": 90, "valid": 5, "test": 5}
    rows = np.vstack([s.X for s in out.splits.values()])
    assert len({tuple(r) for r in rows}) == 100
