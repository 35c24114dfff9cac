"""Gaussian-process regression with an ARD Matern-5/2 kernel.

Everything here works in normalized coordinates: inputs live in the unit
hypercube and outputs are scaled by the ground-truth range. The prior
mean is a constant shift (zero by default, optionally the data mean,
see :class:`FitConfig`); it is stored on the model and added back by
:meth:`GprModel.predict`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cho_solve, cholesky, solve_triangular
from scipy.optimize import minimize

SQRT5 = np.sqrt(5.0)
LOG_2PI = np.log(2.0 * np.pi)


class FitError(RuntimeError):
    """The training covariance could not be factorized."""


@dataclass(frozen=True)
class KernelParams:
    amplitude_sq: float
    lengthscales: np.ndarray

    def __post_init__(self):
        ls = np.atleast_1d(np.asarray(self.lengthscales, dtype=float))
        object.__setattr__(self, "lengthscales", ls)
        object.__setattr__(self, "amplitude_sq", float(self.amplitude_sq))
        if not (np.isfinite(self.amplitude_sq) and self.amplitude_sq > 0):
            raise ValueError("amplitude_sq must be positive and finite")
        if not np.all(np.isfinite(ls) & (ls > 0)):
            raise ValueError("lengthscales must be positive and finite")

    @property
    def dim(self) -> int:
        return self.lengthscales.size


@dataclass(frozen=True)
class FitConfig:
    n_restarts: int = 5
    lengthscale_bounds: Tuple[float, float] = (1e-3, 10.0)
    amplitude_bounds: Tuple[float, float] = (1e-6, 10.0)
    gnv_bounds: Tuple[float, float] = (1e-12, 1.0)
    gnv_init: float = 1e-6
    lengthscale_init: float = 0.3
    maxiter: int = 200
    jitter_start: float = 1e-12
    jitter_max: float = 1e-6
    # diagnostic only: pin the noise variance instead of tuning it
    fixed_gnv: Optional[float] = None
    # "zero": prior mean at 0 on range-normalized outputs; "mean": at the data mean
    prior_mean: str = "zero"

    def shift_for(self, y: np.ndarray) -> float:
        if self.prior_mean == "mean":
            return float(np.mean(y)) if len(y) else 0.0
        if self.prior_mean == "zero":
            return 0.0
        raise ValueError(f"unknown prior_mean {self.prior_mean!r}")


@dataclass(frozen=True)
class Normalizer:
    x_lower: np.ndarray
    x_upper: np.ndarray
    y_low: float
    y_high: float

    @classmethod
    def for_ground_truth(cls, gt) -> "Normalizer":
        return cls(gt.domain.lower, gt.domain.upper, gt.y_range[0], gt.y_range[1])

    @property
    def x_width(self) -> np.ndarray:
        return np.asarray(self.x_upper) - np.asarray(self.x_lower)

    @property
    def y_width(self) -> float:
        return self.y_high - self.y_low

    def x_to_unit(self, x):
        return (np.asarray(x, dtype=float) - self.x_lower) / self.x_width

    def x_from_unit(self, u):
        return np.asarray(u, dtype=float) * self.x_width + self.x_lower

    def y_to_unit(self, y):
        return (np.asarray(y, dtype=float) - self.y_low) / self.y_width

    def y_from_unit(self, v):
        return np.asarray(v, dtype=float) * self.y_width + self.y_low


def _matern52_from_r2(r2: np.ndarray, amplitude_sq: float) -> np.ndarray:
    r = np.sqrt(np.maximum(r2, 0.0))
    return amplitude_sq * (1.0 + SQRT5 * r + (5.0 / 3.0) * r2) * np.exp(-SQRT5 * r)


def scaled_sqdist(x1: np.ndarray, x2: np.ndarray, lengthscales: np.ndarray) -> np.ndarray:
    a = np.atleast_2d(x1) / lengthscales
    b = np.atleast_2d(x2) / lengthscales
    r2 = np.sum(a * a, axis=1)[:, None] + np.sum(b * b, axis=1)[None, :] - 2.0 * a @ b.T
    return np.maximum(r2, 0.0)


def kernel_matrix(x1, x2, params: KernelParams) -> np.ndarray:
    return _matern52_from_r2(scaled_sqdist(x1, x2, params.lengthscales), params.amplitude_sq)


def kernel(x1, x2, params: KernelParams) -> float:
    """ARD Matern-5/2 covariance between two single points."""
    d = (np.asarray(x1, dtype=float) - np.asarray(x2, dtype=float)) / params.lengthscales
    return float(_matern52_from_r2(np.dot(d, d), params.amplitude_sq))


def _factorize(K: np.ndarray, jitter_start: float, jitter_max: float) -> Tuple[np.ndarray, float]:
    """Lower Cholesky factor of ``K``, escalating diagonal jitter on failure."""
    n = K.shape[0]
    if n == 0:
        return np.zeros((0, 0)), 0.0
    try:
        return cholesky(K, lower=True, check_finite=False), 0.0
    except LinAlgError:
        pass
    jitter = jitter_start
    while jitter <= jitter_max * (1 + 1e-9):
        try:
            return cholesky(K + jitter * np.eye(n), lower=True, check_finite=False), jitter
        except LinAlgError:
            jitter *= 10.0
    raise FitError(f"covariance not positive definite after jitter {jitter_max:g}")


@dataclass(frozen=True, eq=False)
class GprModel:
    """A trained GP surrogate; immutable once built."""

    params: KernelParams
    gnv: float
    x_train: np.ndarray
    y_train: np.ndarray
    y_shift: float
    chol: np.ndarray
    alpha: np.ndarray
    jitter: float = 0.0
    lml: float = field(default=float("nan"))

    @property
    def n(self) -> int:
        return len(self.y_train)

    @classmethod
    def build(
        cls,
        x,
        y,
        params: KernelParams,
        gnv: float,
        y_shift: Optional[float] = None,
        jitter_start: float = 1e-12,
        jitter_max: float = 1e-6,
    ) -> "GprModel":
        """Factorize the training covariance for fixed hyperparameters."""
        x = np.asarray(x, dtype=float).reshape(-1, params.dim)
        y = np.asarray(y, dtype=float).reshape(-1)
        if y_shift is None:
            y_shift = float(np.mean(y)) if len(y) else 0.0
        K = kernel_matrix(x, x, params) + gnv * np.eye(len(y))
        chol, jitter = _factorize(K, jitter_start, jitter_max)
        yc = y - y_shift
        alpha = cho_solve((chol, True), yc, check_finite=False) if len(y) else np.zeros(0)
        lml = -0.5 * yc @ alpha - np.sum(np.log(np.diag(chol))) - 0.5 * len(y) * LOG_2PI
        return cls(params, float(gnv), x, y, float(y_shift), chol, alpha, jitter, float(lml))

    def predict(self, x) -> Tuple[np.ndarray, np.ndarray]:
        """Latent posterior mean and variance at the rows of ``x``."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.n == 0:
            return np.full(len(x), self.y_shift), np.full(len(x), self.params.amplitude_sq)
        ks = kernel_matrix(x, self.x_train, self.params)
        mean = ks @ self.alpha + self.y_shift
        v = solve_triangular(self.chol, ks.T, lower=True, check_finite=False)
        var = self.params.amplitude_sq - np.sum(v * v, axis=0)
        return mean, np.maximum(var, 0.0)

    def predict_mean(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.n == 0:
            return np.full(len(x), self.y_shift)
        return kernel_matrix(x, self.x_train, self.params) @ self.alpha + self.y_shift

    def condition_on(self, x_new, y_new) -> "GprModel":
        """Same hyperparameters and shift, with extra observations appended."""
        x_new = np.atleast_2d(np.asarray(x_new, dtype=float))
        y_new = np.atleast_1d(np.asarray(y_new, dtype=float))
        return GprModel.build(
            np.vstack([self.x_train, x_new]),
            np.concatenate([self.y_train, y_new]),
            self.params,
            self.gnv,
            y_shift=self.y_shift,
        )

    def hyperparameters(self) -> dict:
        return {
            "amplitude_sq": self.params.amplitude_sq,
            "lengthscales": self.params.lengthscales.copy(),
            "gnv": self.gnv,
        }


def posterior(model: GprModel, x) -> Tuple[float, float]:
    """Posterior mean and latent variance at a single point."""
    mean, var = model.predict(np.asarray(x, dtype=float)[None, :])
    return float(mean[0]), float(var[0])


def _pack(params: KernelParams, gnv: float) -> np.ndarray:
    return np.concatenate([[np.log(params.amplitude_sq)], np.log(params.lengthscales), [np.log(gnv)]])


def _unpack(theta: np.ndarray) -> Tuple[KernelParams, float]:
    return KernelParams(np.exp(theta[0]), np.exp(theta[1:-1])), float(np.exp(theta[-1]))


class _Objective:
    """LML and its gradient in log-hyperparameter space for fixed data."""

    def __init__(self, x: np.ndarray, y: np.ndarray, jitter_start: float, jitter_max: float):
        self.y = y
        self.n, self.d = x.shape
        diff = x[:, None, :] - x[None, :, :]
        self.sqdiff = np.ascontiguousarray(np.moveaxis(diff * diff, -1, 0))
        self.eye = np.eye(self.n)
        self.jitter_start = jitter_start
        self.jitter_max = jitter_max

    def __call__(self, theta: np.ndarray, with_grad: bool = True):
        amp = np.exp(theta[0])
        inv_l2 = np.exp(-2.0 * theta[1:-1])
        gnv = np.exp(theta[-1])
        r2 = np.tensordot(inv_l2, self.sqdiff, axes=1)
        r = np.sqrt(r2)
        e = np.exp(-SQRT5 * r)
        K0 = amp * (1.0 + SQRT5 * r + (5.0 / 3.0) * r2) * e
        K = K0 + gnv * self.eye
        chol, _ = _factorize(K, self.jitter_start, self.jitter_max)
        alpha = cho_solve((chol, True), self.y, check_finite=False)
        value = -0.5 * self.y @ alpha - np.sum(np.log(np.diag(chol))) - 0.5 * self.n * LOG_2PI
        if not with_grad:
            return value
        Kinv = cho_solve((chol, True), self.eye, check_finite=False)
        W = np.outer(alpha, alpha) - Kinv
        grad = np.empty(self.d + 2)
        grad[0] = 0.5 * np.sum(W * K0)
        G = (5.0 / 3.0) * amp * (1.0 + SQRT5 * r) * e * W
        grad[1:-1] = 0.5 * inv_l2 * np.tensordot(self.sqdiff, G, axes=([1, 2], [0, 1]))
        grad[-1] = 0.5 * gnv * np.trace(W)
        return value, grad


def log_marginal_likelihood(model: GprModel) -> Tuple[float, np.ndarray]:
    """Gaussian log marginal likelihood of the model's (shifted) targets.

    The gradient is with respect to ``(log amplitude_sq, log lengthscales...,
    log gnv)``.
    """
    obj = _Objective(model.x_train, model.y_train - model.y_shift, 1e-12, 1e-6)
    value, grad = obj(_pack(model.params, model.gnv))
    return float(value), grad


def fit(
    x,
    y,
    config: FitConfig = FitConfig(),
    rng: Optional[np.random.Generator] = None,
    warm_start: Optional[Tuple[KernelParams, float]] = None,
) -> GprModel:
    """Fit hyperparameters by multi-start L-BFGS-B on the log marginal likelihood.

    One restart begins at ``warm_start`` (or a fixed default), the rest at
    log-uniform draws inside the bounds. The best restart is kept.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    if x.ndim != 2 or len(x) != len(y):
        raise ValueError("x must be (n, d) and y (n,)")
    if len(y) < 2:
        raise ValueError("fit needs at least two observations")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("training data must be finite")
    rng = np.random.default_rng(0) if rng is None else rng
    n, d = x.shape
    shift = config.shift_for(y)
    obj = _Objective(x, y - shift, config.jitter_start, config.jitter_max)

    log_bounds = (
        [np.log(config.amplitude_bounds)]
        + [np.log(config.lengthscale_bounds)] * d
        + [np.log(config.gnv_bounds)]
    )
    if config.fixed_gnv is not None:
        log_bounds[-1] = (np.log(config.fixed_gnv),) * 2
    log_bounds = np.array(log_bounds, dtype=float)

    if warm_start is not None:
        first = _pack(*warm_start)
    else:
        amp0 = np.clip(np.var(y), *config.amplitude_bounds)
        first = _pack(KernelParams(max(amp0, 1e-2), np.full(d, config.lengthscale_init)), config.gnv_init)
    starts = [first]
    for _ in range(config.n_restarts - 1):
        starts.append(rng.uniform(log_bounds[:, 0], log_bounds[:, 1]))
    starts = [np.clip(s, log_bounds[:, 0], log_bounds[:, 1]) for s in starts]

    def neg(theta):
        try:
            v, g = obj(theta)
        except FitError:
            return 1e25, np.zeros_like(theta)
        if not np.isfinite(v):
            return 1e25, np.zeros_like(theta)
        return -v, -g

    best_theta, best_val = None, -np.inf
    for s in starts:
        try:
            v0 = obj(s, with_grad=False)
        except FitError:
            v0 = -np.inf
        if v0 > best_val:
            best_theta, best_val = s, v0
        res = minimize(
            neg, s, jac=True, method="L-BFGS-B", bounds=log_bounds,
            options={"maxiter": config.maxiter},
        )
        if np.all(np.isfinite(res.x)) and -res.fun > best_val and res.fun < 1e24:
            best_theta, best_val = res.x, -res.fun
    if best_theta is None:
        raise FitError("every restart failed to factorize the covariance")
    params, gnv = _unpack(best_theta)
    return GprModel.build(x, y, params, gnv, y_shift=shift,
                          jitter_start=config.jitter_start, jitter_max=config.jitter_max)
