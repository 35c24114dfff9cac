"""Initial designs and candidate pools."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from batchbo.objectives import Domain


class Design(str, enum.Enum):
    LHS = "lhs"
    UNIFORM = "uniform"
    SOBOL = "sobol"


@dataclass(frozen=True)
class SampleBatch:
    points: np.ndarray
    design: Design

    def __len__(self) -> int:
        return len(self.points)


def lhs(n: int, domain: Domain, rng: np.random.Generator) -> SampleBatch:
    """Plain Latin hypercube: one point per stratum in every dimension.

    Each dimension uses an independent random permutation of the ``n``
    strata with uniform jitter inside the stratum.
    """
    if n <= 0:
        raise ValueError("lhs requires n >= 1")
    d = domain.dim
    perms = np.stack([rng.permutation(n) for _ in range(d)], axis=1)
    u = (perms + rng.random((n, d))) / n
    return SampleBatch(domain.lower + u * domain.width, Design.LHS)


def candidates(n: int, domain: Domain, rng: np.random.Generator) -> SampleBatch:
    """Uniform random candidate pool for acquisition maximization."""
    if n <= 0:
        raise ValueError("candidates requires n >= 1")
    u = rng.random((n, domain.dim))
    return SampleBatch(domain.lower + u * domain.width, Design.UNIFORM)


def seed_for(seed_base: int, k: int) -> int:
    """Seed of the ``k``-th seeding (``k`` counts from 1)."""
    return seed_base + k
