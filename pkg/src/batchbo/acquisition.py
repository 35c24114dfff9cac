"""Incumbent selection, EI/UCB acquisition and acquisition maximization."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.stats import norm

from batchbo._search import compass_search
from batchbo.gpr import GprModel
from batchbo.objectives import Domain
from batchbo.sampling import candidates

SIGMA_FLOOR = 1e-12

Penalizer = Callable[[np.ndarray], np.ndarray]


class AcquisitionKind(str, enum.Enum):
    EI = "ei"
    UCB = "ucb"


@dataclass(frozen=True)
class AcquisitionSpec:
    kind: AcquisitionKind = AcquisitionKind.UCB
    xi: float = 0.0
    beta: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", AcquisitionKind(self.kind))
        if self.xi < 0 or self.beta < 0:
            raise ValueError("exploration hyperparameters must be non-negative")

    def evaluate(self, model: GprModel, x: np.ndarray, u: float) -> np.ndarray:
        mean, var = model.predict(x)
        std = np.sqrt(var)
        if self.kind is AcquisitionKind.EI:
            return expected_improvement(mean, std, u, self.xi)
        return mean + self.beta * std


@dataclass(frozen=True)
class SearchBudget:
    n_candidates: int = 4096
    n_refine: int = 10
    refine_evals: int = 200
    refine_step: float = 0.05
    include_training: bool = True


@dataclass(frozen=True)
class Incumbent:
    x_star: np.ndarray
    mu_star: float
    index: int


def incumbent(model: GprModel, x_sampled) -> Incumbent:
    """Sampled point with the largest posterior mean (lowest index on ties)."""
    x_sampled = np.atleast_2d(np.asarray(x_sampled, dtype=float))
    if len(x_sampled) == 0:
        raise ValueError("incumbent needs at least one sampled point")
    mean = model.predict_mean(x_sampled)
    idx = int(np.argmax(mean))
    return Incumbent(x_sampled[idx].copy(), float(mean[idx]), idx)


def expected_improvement(mean, std, u: float, xi: float) -> np.ndarray:
    mean = np.asarray(mean, dtype=float)
    std = np.asarray(std, dtype=float)
    gain = mean - u - xi
    out = np.maximum(gain, 0.0)
    ok = std >= SIGMA_FLOOR
    z = gain[ok] / std[ok]
    out[ok] = gain[ok] * norm.cdf(z) + std[ok] * norm.pdf(z)
    # the closed form can dip a hair below zero for very negative z
    return np.maximum(out, 0.0)


def ei(x, model: GprModel, u: float, xi: float) -> float:
    mean, var = model.predict(np.asarray(x, dtype=float)[None, :])
    return float(expected_improvement(mean, np.sqrt(var), u, xi)[0])


def ucb(x, model: GprModel, beta: float) -> float:
    """Upper confidence bound with a linear (not square-rooted) beta."""
    mean, var = model.predict(np.asarray(x, dtype=float)[None, :])
    return float(mean[0] + beta * np.sqrt(var[0]))


def maximize(
    model: GprModel,
    spec: AcquisitionSpec,
    domain: Domain,
    rng: np.random.Generator,
    penalizer: Optional[Penalizer] = None,
    u: Optional[float] = None,
    budget: SearchBudget = SearchBudget(),
) -> np.ndarray:
    """Best acquisition point from a random pool plus compass-search refinement.

    With a ``penalizer`` the acquisition is shifted by its minimum over the
    pool (so it is non-negative there) and multiplied by the penalty.
    ``u`` defaults to the incumbent utility of the model's training data.
    """
    if u is None and spec.kind is AcquisitionKind.EI:
        u = incumbent(model, model.x_train).mu_star if model.n else model.y_shift
    pool = candidates(budget.n_candidates, domain, rng).points
    if budget.include_training and model.n:
        # sampled inputs anchor the search near regions the model already resolves
        pool = np.vstack([pool, domain.clip(model.x_train)])
    raw = spec.evaluate(model, pool, u)

    if penalizer is None:
        def score(x, _idx=None):
            return spec.evaluate(model, x, u)
        pool_score = raw
    else:
        shift = float(np.min(raw))

        def score(x, _idx=None):
            return np.maximum(spec.evaluate(model, x, u) - shift, 0.0) * penalizer(x)
        pool_score = (raw - shift) * penalizer(pool)

    order = np.argsort(-pool_score, kind="stable")[: budget.n_refine]
    x_ref, f_ref = compass_search(
        score, pool[order], domain.lower, domain.upper,
        n_evals=budget.refine_evals, step=budget.refine_step,
    )
    best = int(np.argmax(f_ref))
    return domain.clip(x_ref[best])
