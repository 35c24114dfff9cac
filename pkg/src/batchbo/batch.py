"""Serial batch selection: local penalization, kriging believer, constant liar."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import List

import numpy as np
from scipy.stats import norm

from batchbo.acquisition import (
    AcquisitionKind,
    AcquisitionSpec,
    SearchBudget,
    incumbent,
    maximize,
)
from batchbo.gpr import GprModel
from batchbo.objectives import Domain
from batchbo.sampling import candidates

LIPSCHITZ_FLOOR = 1e-6


class BatchMethod(str, enum.Enum):
    LP = "lp"
    KB = "kb"
    CL = "cl"


class ClLie(str, enum.Enum):
    MIN = "min"
    MAX = "max"
    MEAN = "mean"


@dataclass(frozen=True)
class BatchPolicy:
    method: BatchMethod = BatchMethod.LP
    q: int = 4
    cl_lie: ClLie = ClLie.MIN

    def __post_init__(self):
        object.__setattr__(self, "method", BatchMethod(self.method))
        object.__setattr__(self, "cl_lie", ClLie(self.cl_lie))
        if self.q < 1:
            raise ValueError("batch size must be at least 1")


def lp_penalizer(x, x_picked, model: GprModel, L: float, M: float) -> np.ndarray:
    """Soft exclusion ball around ``x_picked``: ~0 nearby, ~1 far away.

    Accepts a single point or an ``(n, d)`` array for ``x``.
    """
    if L <= 0:
        raise ValueError("Lipschitz constant must be positive")
    x = np.asarray(x, dtype=float)
    mean, var = model.predict(np.asarray(x_picked, dtype=float)[None, :])
    return _penalty(x, np.asarray(x_picked, dtype=float), mean[0], np.sqrt(var[0]), L, M)


def _penalty(x, center, mu, sigma, L, M):
    dist = np.linalg.norm(np.atleast_2d(x) - center, axis=-1)
    z = (L * dist - M + mu) / (np.sqrt(2.0) * max(sigma, 1e-12))
    out = norm.cdf(z)
    return out if np.ndim(x) > 1 else float(out[0])


def estimate_lipschitz(
    model: GprModel,
    domain: Domain,
    rng: np.random.Generator,
    n_points: int = 500,
    h: float = 1e-4,
    include_training: bool = True,
) -> float:
    """Largest finite-difference gradient norm of the posterior mean.

    The pool is ``n_points`` uniform draws plus, by default, the training
    inputs, which is where steep features of the mean actually sit.
    """
    pts = candidates(n_points, domain, rng).points
    if include_training and model.n:
        pts = np.vstack([pts, domain.clip(model.x_train)])
    n_points = len(pts)
    d = domain.dim
    steps = h * np.eye(d)
    plus = (pts[:, None, :] + steps).reshape(-1, d)
    minus = (pts[:, None, :] - steps).reshape(-1, d)
    grad = (model.predict_mean(plus) - model.predict_mean(minus)).reshape(n_points, d) / (2 * h)
    return max(float(np.max(np.linalg.norm(grad, axis=1))), LIPSCHITZ_FLOOR)


def _lie_value(model: GprModel, lie: ClLie) -> float:
    y = model.y_train
    if lie is ClLie.MIN:
        return float(np.min(y))
    if lie is ClLie.MAX:
        return float(np.max(y))
    return float(np.mean(y))


def pick_batch(
    model: GprModel,
    spec: AcquisitionSpec,
    policy: BatchPolicy,
    domain: Domain,
    rng: np.random.Generator,
    budget: SearchBudget = SearchBudget(),
) -> np.ndarray:
    """Choose ``policy.q`` points one at a time.

    The first pick is the plain acquisition maximizer. The EI utility is
    fixed at the real-data incumbent for the whole batch; fantasy
    observations used by KB/CL only change the posterior, never the
    kernel hyperparameters.
    """
    u = None
    if spec.kind is AcquisitionKind.EI:
        u = incumbent(model, model.x_train).mu_star
    picks: List[np.ndarray] = [maximize(model, spec, domain, rng, u=u, budget=budget)]
    if policy.q == 1:
        return np.array(picks)

    if policy.method is BatchMethod.LP:
        L = estimate_lipschitz(model, domain, rng)
        M = float(np.max(model.y_train))
        centers, mus, sigmas = [], [], []

        def penalizer(x):
            out = np.ones(len(x))
            for c, mu, s in zip(centers, mus, sigmas):
                out *= _penalty(x, c, mu, s, L, M)
            return out

        for _ in range(policy.q - 1):
            mean, var = model.predict(picks[-1][None, :])
            centers.append(picks[-1])
            mus.append(mean[0])
            sigmas.append(np.sqrt(var[0]))
            picks.append(maximize(model, spec, domain, rng, penalizer=penalizer, u=u, budget=budget))
        return np.array(picks)

    fantasy = model
    for _ in range(policy.q - 1):
        if policy.method is BatchMethod.KB:
            y_fake = float(fantasy.predict_mean(picks[-1][None, :])[0])
        else:
            y_fake = _lie_value(model, policy.cl_lie)
        fantasy = fantasy.condition_on(picks[-1], y_fake)
        assert fantasy.params is model.params and fantasy.gnv == model.gnv
        picks.append(maximize(fantasy, spec, domain, rng, u=u, budget=budget))
    return np.array(picks)
