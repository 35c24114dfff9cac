import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize

from batchbo.objectives import (
    ACKLEY,
    HARTMANN,
    DomainError,
    NoiseMode,
    NoiseSpec,
    add_noise,
    eval_ackley,
    eval_hartmann,
    get_ground_truth,
    gt_projection_grid,
    noise_sigma,
)

# direct evaluation at the upper corner, frozen
ACKLEY_CORNER = -21.570311151282485

coords = st.floats(-32.768, 32.768, allow_nan=False)


def test_ackley_origin_is_exactly_zero():
    assert eval_ackley(np.zeros(6)) == 0.0


@given(st.lists(coords, min_size=6, max_size=6))
def test_ackley_is_even(x):
    x = np.array(x)
    assert eval_ackley(x) == pytest.approx(eval_ackley(-x), abs=1e-12)


def test_ackley_corner_regression():
    assert eval_ackley(np.full(6, 32.768)) == pytest.approx(ACKLEY_CORNER, abs=1e-12)


def test_ackley_bounded_above_by_zero(rng):
    x = rng.uniform(-32.768, 32.768, size=(100_000, 6))
    y = eval_ackley(x)
    assert np.all(y <= 0.0)
    assert np.all(y >= ACKLEY.y_range[0])


def test_hartmann_global_maximum():
    assert eval_hartmann(HARTMANN.x_max) == pytest.approx(3.32237, abs=1e-4)
    assert abs(eval_hartmann(HARTMANN.x_max) - HARTMANN.y_max) < 1e-5


def test_hartmann_range(rng):
    y = eval_hartmann(rng.uniform(size=(100_000, 6)))
    assert np.all(y > 0.0)
    assert np.all(y < 3.32237 + 1e-6)


def test_out_of_domain_rejected():
    with pytest.raises(DomainError):
        eval_ackley(np.full(6, 40.0))
    with pytest.raises(DomainError):
        eval_hartmann(np.full(6, -0.1))


def _multistart_maxima(gt, n_starts, rng):
    lo, hi = gt.domain.lower, gt.domain.upper
    found = []
    for x0 in rng.uniform(lo, hi, size=(n_starts, gt.dim)):
        res = minimize(lambda x: -gt(np.clip(x, lo, hi)), x0, method="L-BFGS-B",
                       bounds=list(zip(lo, hi)), options={"ftol": 1e-15, "gtol": 1e-10})
        found.append((-res.fun, np.clip(res.x, lo, hi)))
    return found


@pytest.fixture(scope="module")
def hartmann_maxima():
    return _multistart_maxima(HARTMANN, 1000, np.random.default_rng(7))


def test_multistart_never_beats_hartmann_max(hartmann_maxima):
    assert max(v for v, _ in hartmann_maxima) <= HARTMANN.y_max + 1e-4


def test_hartmann_second_maximum_matches_oracle(hartmann_maxima):
    # distinct local maxima: cluster by location
    peaks = []
    for v, x in sorted(hartmann_maxima, key=lambda t: -t[0]):
        if all(np.linalg.norm(x - p) > 1e-2 for _, p in peaks):
            peaks.append((v, x))
    (_, x1), (v2, x2) = peaks[0], peaks[1]
    assert np.linalg.norm(x1 - HARTMANN.x_max) < 1e-3
    assert v2 == pytest.approx(HARTMANN.y_max2, abs=1e-6)
    assert np.linalg.norm(x2 - HARTMANN.x_max2) < 1e-3


def test_multistart_never_beats_ackley_max(rng):
    found = _multistart_maxima(ACKLEY, 1000, rng)
    assert max(v for v, _ in found) <= ACKLEY.y_max + 1e-4


def test_noise_sigma_modes():
    assert noise_sigma(NoiseSpec(NoiseMode.NONE, 0.3), ACKLEY) == 0.0
    assert noise_sigma(NoiseSpec("gtmax", 0.05), HARTMANN) == pytest.approx(0.05 * 3.32237)
    sigma = noise_sigma(NoiseSpec("kernel", 0.10, 0.192), ACKLEY)
    assert sigma / ACKLEY.y_width == pytest.approx(0.0192)


def test_noise_level_must_be_nonnegative():
    with pytest.raises(ValueError):
        NoiseSpec("gtmax", -0.1)


def test_zero_noise_is_identity(rng):
    assert add_noise(-3.2, 0.0, rng) == -3.2


def test_noise_moments(rng):
    draws = add_noise(np.zeros(100_000), 0.1, rng)
    assert abs(draws.mean()) < 0.002
    assert abs(draws.std(ddof=1) - 0.1) < 0.003


def test_noise_replayable():
    a = add_noise(np.zeros(10), 0.5, np.random.default_rng(3))
    b = add_noise(np.zeros(10), 0.5, np.random.default_rng(3))
    assert np.array_equal(a, b)


def test_get_ground_truth_by_name():
    assert get_ground_truth("ackley") is ACKLEY
    assert get_ground_truth("hartmann") is HARTMANN


@pytest.fixture(scope="module")
def ackley_grid():
    return gt_projection_grid(ACKLEY, (0, 1), 11, rng=np.random.default_rng(0))


def test_projection_origin_cell(ackley_grid):
    a, b, values = ackley_grid
    i, j = np.argmin(np.abs(a)), np.argmin(np.abs(b))
    assert abs(a[i]) < 1e-12 and abs(b[j]) < 1e-12
    assert values[i, j] == pytest.approx(0.0, abs=1e-6)


def test_projection_cell_matches_dense_slice_search():
    a, b, values = gt_projection_grid(ACKLEY, (0, 1), 2, rng=np.random.default_rng(1),
                                      axes=(np.array([0.0, 10.0]), np.array([0.0, 10.0])))
    # dense oracle over the other four dimensions, coarse grid then local polish
    axis = np.linspace(-32.768, 32.768, 33)
    rest = np.array(list(itertools.product(axis, repeat=4)))
    full = np.column_stack([np.full(len(rest), 10.0), np.full(len(rest), 10.0), rest])
    start = rest[np.argmax(eval_ackley(full))]
    res = minimize(lambda z: -eval_ackley(np.concatenate([[10.0, 10.0], np.clip(z, -32.768, 32.768)])),
                   start, method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-12})
    oracle = max(-res.fun, eval_ackley(np.array([10.0, 10.0, 0, 0, 0, 0])))
    assert values[1, 1] == pytest.approx(oracle, abs=1e-3)


@settings(max_examples=5, deadline=None)
@given(st.tuples(st.integers(0, 5), st.integers(0, 5)).filter(lambda p: p[0] != p[1]))
def test_hartmann_projection_bounded(pair):
    _, _, values = gt_projection_grid(HARTMANN, pair, 3, rng=np.random.default_rng(0), n_random=500)
    assert np.all(values <= 3.32237 + 1e-6)
