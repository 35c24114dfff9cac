"""Analytic ground-truth objectives, their domains and optima, and noise injection.

Both shipped objectives are posed as *maximization* problems: Ackley is
sign-flipped so its needle at the origin is the global maximum, and
Hartmann-6 is used in its un-negated form with maximum 3.32237.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np


class DomainError(ValueError):
    """Raised when an objective is evaluated outside of its domain."""


@dataclass(frozen=True)
class Domain:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        if lower.shape != upper.shape or lower.ndim != 1:
            raise ValueError("lower and upper must be 1D arrays of equal length")
        if not np.all(lower < upper):
            raise ValueError("domain requires lower < upper in every dimension")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def cube(cls, low: float, high: float, dim: int) -> "Domain":
        return cls(np.full(dim, low), np.full(dim, high))

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, x, atol: float = 0.0) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.all((x >= self.lower - atol) & (x <= self.upper + atol), axis=-1)

    def clip(self, x) -> np.ndarray:
        return np.clip(x, self.lower, self.upper)


class ObjectiveId(str, enum.Enum):
    ACKLEY = "ackley"
    HARTMANN = "hartmann"


class NoiseMode(str, enum.Enum):
    GT_MAX = "gtmax"
    KERNEL_AMPLITUDE = "kernel"
    NONE = "none"


ACKLEY_DOMAIN = Domain.cube(-32.768, 32.768, 6)
HARTMANN_DOMAIN = Domain.cube(0.0, 1.0, 6)

_HARTMANN_ALPHA = np.array([1.0, 1.2, 3.0, 3.2])
_HARTMANN_A = np.array(
    [
        [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
        [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
        [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
        [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
    ]
)
_HARTMANN_P = 1e-4 * np.array(
    [
        [1312, 1696, 5569, 124, 8283, 5886],
        [2329, 4135, 8307, 3736, 1004, 9991],
        [2348, 1451, 3522, 2883, 3047, 6650],
        [4047, 8828, 8732, 5743, 1091, 381],
    ]
)


def _check_domain(x: np.ndarray, domain: Domain, name: str) -> None:
    # tiny slack absorbs round-off from de-normalization
    if x.shape[-1] != domain.dim:
        raise DomainError(f"{name} expects {domain.dim}-dimensional input, got {x.shape[-1]}")
    if not np.all(domain.contains(x, atol=1e-9)):
        raise DomainError(f"{name} evaluated outside its domain")


def eval_ackley(x) -> np.ndarray | float:
    """Sign-flipped 6D Ackley function; maximum 0 at the origin.

    Accepts a single point of shape ``(6,)`` or a batch ``(n, 6)``.
    """
    x = np.asarray(x, dtype=float)
    _check_domain(x, ACKLEY_DOMAIN, "ackley")
    d = x.shape[-1]
    radial = np.sqrt(np.sum(x * x, axis=-1) / d)
    ripple = np.sum(np.cos(2.0 * np.pi * x), axis=-1) / d
    out = 20.0 * (np.exp(-0.2 * radial) - 1.0) + np.exp(ripple) - np.e
    return float(out) if out.ndim == 0 else out


def eval_hartmann(x) -> np.ndarray | float:
    """6D Hartmann function on the unit cube, maximum 3.32237."""
    x = np.asarray(x, dtype=float)
    _check_domain(x, HARTMANN_DOMAIN, "hartmann")
    diff = x[..., None, :] - _HARTMANN_P
    inner = np.sum(_HARTMANN_A * diff * diff, axis=-1)
    out = np.exp(-inner) @ _HARTMANN_ALPHA
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class GroundTruth:
    """An analytic objective together with its domain and known optima.

    ``noise_scale`` is the magnitude used by the percentage-of-maximum noise
    mode: the un-negated Ackley height (22.3) and the Hartmann maximum.
    ``reference_amplitude`` is the default noiseless kernel amplitude in
    normalized output units.
    """

    id: ObjectiveId
    fn: Callable[[np.ndarray], np.ndarray]
    domain: Domain
    x_max: np.ndarray
    y_max: float
    y_range: Tuple[float, float]
    noise_scale: float
    reference_amplitude: float
    x_max2: Optional[np.ndarray] = None
    y_max2: Optional[float] = None

    def __call__(self, x):
        return self.fn(x)

    @property
    def dim(self) -> int:
        return self.domain.dim

    @property
    def y_width(self) -> float:
        return self.y_range[1] - self.y_range[0]


ACKLEY = GroundTruth(
    id=ObjectiveId.ACKLEY,
    fn=eval_ackley,
    domain=ACKLEY_DOMAIN,
    x_max=np.zeros(6),
    y_max=0.0,
    # minimum sits at every coordinate = +-32.5004
    y_range=(-22.3204, 0.0),
    noise_scale=22.3,
    reference_amplitude=0.192,
)

HARTMANN = GroundTruth(
    id=ObjectiveId.HARTMANN,
    fn=eval_hartmann,
    domain=HARTMANN_DOMAIN,
    x_max=np.array([0.20169, 0.150011, 0.476874, 0.275332, 0.311652, 0.6573]),
    y_max=3.32237,
    y_range=(0.0, 3.32237),
    noise_scale=3.32237,
    reference_amplitude=0.184,
    # located by multi-start local ascent (see tests/test_objectives.py)
    x_max2=np.array([0.404653, 0.882443, 0.846103, 0.573988, 0.138921, 0.038494]),
    y_max2=3.2031620,
)

GROUND_TRUTHS = {ObjectiveId.ACKLEY: ACKLEY, ObjectiveId.HARTMANN: HARTMANN}


def get_ground_truth(name) -> GroundTruth:
    return GROUND_TRUTHS[ObjectiveId(name)]


@dataclass(frozen=True)
class NoiseSpec:
    mode: NoiseMode = NoiseMode.NONE
    level: float = 0.0
    reference_amplitude: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "mode", NoiseMode(self.mode))
        if self.level < 0:
            raise ValueError("noise level must be non-negative")


def noise_sigma(spec: NoiseSpec, gt: GroundTruth) -> float:
    """Standard deviation of the additive noise, in objective units."""
    if spec.mode is NoiseMode.NONE:
        return 0.0
    if spec.mode is NoiseMode.GT_MAX:
        return spec.level * gt.noise_scale
    amp = gt.reference_amplitude if spec.reference_amplitude is None else spec.reference_amplitude
    # amplitude is a normalized quantity; convert to objective units
    return spec.level * amp * gt.y_width


def add_noise(y_true, sigma: float, rng: np.random.Generator):
    """Return ``y_true`` plus zero-mean Gaussian noise of std ``sigma``."""
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if sigma == 0:
        return y_true
    y = np.asarray(y_true, dtype=float)
    out = y + rng.normal(0.0, sigma, size=y.shape)
    return float(out) if out.ndim == 0 else out


def gt_projection_grid(
    gt: GroundTruth,
    pair: Tuple[int, int],
    resolution: int,
    rng: Optional[np.random.Generator] = None,
    n_random: int = 2000,
    n_refine: int = 5,
    axes: Optional[Tuple[np.ndarray, np.ndarray]] = None,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Slice-maximum projection of ``gt`` onto a pair of input dimensions.

    For every cell of a ``resolution x resolution`` grid over ``pair`` the
    remaining dimensions are maximized by random search followed by a
    compass-search refinement of the best ``n_refine`` samples.

    Returns ``(axis_a, axis_b, values)`` with ``values[i, j]`` the maximum
    at ``(axis_a[i], axis_b[j])``.
    """
    from batchbo._search import compass_search

    a, b = pair
    if a == b:
        raise ValueError("projection pair must name two distinct dimensions")
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    rng = np.random.default_rng(0) if rng is None else rng
    dom = gt.domain
    if axes is None:
        axis_a = np.linspace(dom.lower[a], dom.upper[a], resolution)
        axis_b = np.linspace(dom.lower[b], dom.upper[b], resolution)
    else:
        axis_a, axis_b = (np.asarray(v, dtype=float) for v in axes)
    rest = [i for i in range(gt.dim) if i not in (a, b)]
    lo, hi = dom.lower[rest], dom.upper[rest]

    cells = np.array([(va, vb) for va in axis_a for vb in axis_b])
    n_cells = len(cells)

    def full(cell_idx: np.ndarray, z: np.ndarray) -> np.ndarray:
        x = np.empty((len(z), gt.dim))
        x[:, a] = cells[cell_idx, 0]
        x[:, b] = cells[cell_idx, 1]
        x[:, rest] = z
        return x

    # the domain centre is always a candidate so symmetric optima are seen
    samples = lo + (hi - lo) * rng.random((n_random, len(rest)))
    samples[0] = 0.5 * (lo + hi)
    best_z = np.empty((n_cells, n_refine, len(rest)))
    for c in range(n_cells):
        vals = gt(full(np.full(n_random, c), samples))
        top = np.argsort(-vals, kind="stable")[:n_refine]
        best_z[c] = samples[top]

    starts = best_z.reshape(-1, len(rest))
    owner = np.repeat(np.arange(n_cells), n_refine)

    def score(z: np.ndarray, idx: np.ndarray) -> np.ndarray:
        return gt(full(owner[idx], z))

    z_opt, f_opt = compass_search(score, starts, lo, hi, n_evals=400, step=0.1)
    values = f_opt.reshape(n_cells, n_refine).max(axis=1)
    return axis_a, axis_b, values.reshape(len(axis_a), len(axis_b))
