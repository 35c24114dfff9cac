import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from batchbo.gpr import (
    FitConfig,
    GprModel,
    KernelParams,
    Normalizer,
    fit,
    kernel,
    kernel_matrix,
    log_marginal_likelihood,
    posterior,
)
from batchbo.objectives import ACKLEY, HARTMANN

# (1 + sqrt5 + 5/3) * exp(-sqrt5) evaluated directly, frozen
MATERN_AT_ONE = 0.52399410883182031


def _random_model(rng, n, d=6, gnv=None):
    params = KernelParams(rng.uniform(0.2, 2.0), rng.uniform(0.2, 1.5, size=d))
    x = rng.uniform(size=(n, d))
    y = rng.normal(size=n)
    return GprModel.build(x, y, params, gnv if gnv is not None else rng.uniform(1e-4, 1e-1))


def _dense(model, xq):
    """Textbook formulas with an explicit inverse."""
    K = kernel_matrix(model.x_train, model.x_train, model.params) + model.gnv * np.eye(model.n)
    Kinv = np.linalg.inv(K)
    ks = kernel_matrix(xq, model.x_train, model.params)
    yc = model.y_train - model.y_shift
    mean = ks @ Kinv @ yc + model.y_shift
    var = model.params.amplitude_sq - np.einsum("ij,jk,ik->i", ks, Kinv, ks)
    _, logdet = np.linalg.slogdet(K)
    lml = -0.5 * yc @ Kinv @ yc - 0.5 * logdet - 0.5 * model.n * math.log(2 * math.pi)
    return mean, var, lml


def test_kernel_at_zero_distance(rng):
    p = KernelParams(1.7, rng.uniform(0.1, 2, size=6))
    x = rng.uniform(size=6)
    assert kernel(x, x, p) == pytest.approx(1.7, rel=1e-15)


def test_kernel_unit_distance_regression():
    p = KernelParams(1.0, np.ones(6))
    x2 = np.zeros(6)
    x2[3] = 1.0
    assert kernel(np.zeros(6), x2, p) == pytest.approx(MATERN_AT_ONE, abs=1e-13)
    assert MATERN_AT_ONE == pytest.approx((1 + math.sqrt(5) + 5 / 3) * math.exp(-math.sqrt(5)), abs=1e-13)


def test_kernel_decreasing_in_distance():
    p = KernelParams(1.0, np.ones(1))
    vals = [kernel([0.0], [r], p) for r in np.linspace(1e-3, 10, 500)]
    assert np.all(np.diff(vals) < 0)


def test_invalid_params_rejected():
    with pytest.raises(ValueError):
        KernelParams(-1.0, np.ones(6))
    with pytest.raises(ValueError):
        KernelParams(1.0, np.array([1.0, 0.0]))


@pytest.mark.parametrize("n", range(1, 9))
def test_factorized_matches_dense(n):
    rng = np.random.default_rng(n)
    model = _random_model(rng, n)
    xq = rng.uniform(size=(7, 6))
    mean, var = model.predict(xq)
    d_mean, d_var, d_lml = _dense(model, xq)
    assert np.allclose(mean, d_mean, atol=1e-8)
    assert np.allclose(var, np.maximum(d_var, 0), atol=1e-8)
    assert model.lml == pytest.approx(d_lml, abs=1e-8)
    assert log_marginal_likelihood(model)[0] == pytest.approx(d_lml, abs=1e-8)
    K = kernel_matrix(model.x_train, model.x_train, model.params) + model.gnv * np.eye(n)
    assert np.linalg.norm(model.chol @ model.chol.T - K) <= 1e-8 * np.linalg.norm(K)


def test_lml_single_point():
    model = GprModel.build(np.zeros((1, 6)), [0.0], KernelParams(0.5, np.ones(6)), 0.5, y_shift=0.0)
    assert model.lml == pytest.approx(-0.5 * math.log(2 * math.pi), abs=1e-14)


def test_lml_gradient_matches_finite_differences():
    rng = np.random.default_rng(3)
    model = _random_model(rng, 10, gnv=1e-2)
    _, grad = log_marginal_likelihood(model)
    theta = np.concatenate([[math.log(model.params.amplitude_sq)], np.log(model.params.lengthscales),
                            [math.log(model.gnv)]])
    h = 1e-5

    def lml_at(t):
        p = KernelParams(math.exp(t[0]), np.exp(t[1:-1]))
        return GprModel.build(model.x_train, model.y_train, p, math.exp(t[-1]), y_shift=model.y_shift).lml

    fd = np.array([(lml_at(theta + h * e) - lml_at(theta - h * e)) / (2 * h) for e in np.eye(len(theta))])
    assert np.max(np.abs(grad - fd) / np.maximum(np.abs(fd), 1e-3)) < 1e-4


def test_prior_without_data():
    model = GprModel.build(np.zeros((0, 6)), np.zeros(0), KernelParams(0.8, np.ones(6)), 1e-6, y_shift=0.0)
    mean, var = posterior(model, np.full(6, 0.3))
    assert mean == 0.0 and var == pytest.approx(0.8)


def test_one_point_closed_form(rng):
    p = KernelParams(1.3, rng.uniform(0.2, 1.0, size=6))
    x0, y0, gnv = rng.uniform(size=6), 0.7, 0.05
    model = GprModel.build(x0[None, :], [y0], p, gnv, y_shift=0.0)
    for x in rng.uniform(size=(5, 6)):
        k = kernel(x, x0, p)
        mean, var = posterior(model, x)
        assert mean == pytest.approx(k * y0 / (1.3 + gnv), abs=1e-12)
        assert var == pytest.approx(1.3 - k * k / (1.3 + gnv), abs=1e-12)


def test_far_field_variance(rng):
    p = KernelParams(0.6, np.full(6, 0.01))
    model = GprModel.build(rng.uniform(0, 0.1, size=(5, 6)), rng.normal(size=5), p, 1e-6)
    _, var = posterior(model, np.full(6, 0.9))
    assert abs(var - 0.6) < 1e-6


def test_variance_nonnegative_at_training_points(rng):
    model = _random_model(rng, 30, gnv=1e-12)
    _, var = model.predict(model.x_train)
    assert np.all(var >= 0)


@settings(max_examples=20, deadline=None)
@given(st.permutations(list(range(12))))
def test_permutation_invariance(perm):
    rng = np.random.default_rng(5)
    model = _random_model(rng, 12)
    perm = np.array(perm)
    other = GprModel.build(model.x_train[perm], model.y_train[perm], model.params, model.gnv, y_shift=model.y_shift)
    xq = rng.uniform(size=(6, 6))
    for a, b in zip(model.predict(xq), other.predict(xq)):
        assert np.allclose(a, b, atol=1e-8)


def test_constant_targets_interpolated(rng):
    x = rng.uniform(size=(15, 6))
    y = np.full(15, 0.37) + rng.normal(scale=1e-6, size=15)
    model = fit(x, y, FitConfig(), rng)
    assert np.all(np.abs(model.predict_mean(x) - 0.37) < 1e-3)


def test_near_noiseless_fit_interpolates():
    rng = np.random.default_rng(8)
    x = rng.uniform(size=(40, 6))
    y = np.sin(3 * x[:, 0]) + x[:, 1] ** 2
    model = fit(x, y, FitConfig(), rng)
    assert np.max(np.abs(model.predict_mean(x) - y)) < max(10 * math.sqrt(model.gnv), 1e-5)


def test_fit_improves_on_its_starting_points(rng):
    x = rng.uniform(size=(25, 6))
    y = np.cos(4 * x[:, 2]) * x[:, 0]
    warm = (KernelParams(0.5, np.full(6, 0.7)), 1e-3)
    model = fit(x, y, FitConfig(), rng, warm_start=warm)
    assert model.lml >= GprModel.build(x, y, *warm, y_shift=0.0).lml
    default = GprModel.build(x, y, KernelParams(max(np.var(y), 1e-2), np.full(6, 0.3)), 1e-6, y_shift=0.0)
    assert model.lml >= default.lml - 1e-9


def test_fit_rejects_bad_input():
    with pytest.raises(ValueError):
        fit(np.zeros((1, 6)), np.zeros(1))
    with pytest.raises(ValueError):
        fit(np.full((3, 6), np.nan), np.zeros(3))


def test_mean_prior_option_shifts_far_field(rng):
    x = rng.uniform(0, 0.2, size=(10, 6))
    y = 0.5 + 0.1 * rng.normal(size=10)
    model = fit(x, y, FitConfig(prior_mean="mean", lengthscale_bounds=(1e-3, 0.05)), rng)
    assert model.y_shift == pytest.approx(np.mean(y))
    assert model.predict_mean(np.full((1, 6), 0.95))[0] == pytest.approx(np.mean(y), abs=1e-6)


def _gp_draw(rng, n, d, ls=0.3, gnv=1e-4):
    x = rng.uniform(size=(n, d))
    true = KernelParams(1.0, np.full(d, ls))
    K = kernel_matrix(x, x, true) + gnv * np.eye(n)
    return x, np.linalg.cholesky(K) @ rng.normal(size=n), true


def test_lengthscale_recovery():
    """GP draws give back their lengthscale within a factor of two (2D, n=60)."""
    hits = 0
    for trial in range(20):
        rng = np.random.default_rng(100 + trial)
        x, y, _ = _gp_draw(rng, 60, 2)
        ls = fit(x, y, FitConfig(), rng).params.lengthscales
        hits += bool(np.all((ls > 0.15) & (ls < 0.6)))
    assert hits >= 16


def test_fit_beats_generating_parameters_in_6d():
    # 60 points cannot pin down six ARD lengthscales of 0.3, but the
    # optimizer must still find at least the likelihood of the truth
    for trial in range(10):
        rng = np.random.default_rng(200 + trial)
        x, y, true = _gp_draw(rng, 60, 6)
        model = fit(x, y, FitConfig(), rng)
        assert model.lml >= GprModel.build(x, y, true, 1e-4, y_shift=0.0).lml - 1e-6


@pytest.mark.parametrize("gt", [ACKLEY, HARTMANN])
def test_normalizer_round_trip(gt, rng):
    nz = Normalizer.for_ground_truth(gt)
    x = rng.uniform(gt.domain.lower, gt.domain.upper, size=(20, 6))
    y = rng.uniform(*gt.y_range, size=20)
    assert np.allclose(nz.x_from_unit(nz.x_to_unit(x)), x, atol=1e-12)
    assert np.allclose(nz.y_from_unit(nz.y_to_unit(y)), y, atol=1e-12)
    assert nz.y_to_unit(gt.y_range[0]) == pytest.approx(0.0)
    assert nz.y_to_unit(gt.y_range[1]) == pytest.approx(1.0)
