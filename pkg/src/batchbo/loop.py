"""One batch-BO run: LHS init, evaluate, fit, pick a batch, repeat."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from batchbo.acquisition import AcquisitionSpec, SearchBudget, incumbent
from batchbo.batch import BatchPolicy, pick_batch
from batchbo.gpr import FitConfig, FitError, GprModel, KernelParams, Normalizer, fit
from batchbo.objectives import (
    Domain,
    GroundTruth,
    NoiseSpec,
    ObjectiveId,
    add_noise,
    get_ground_truth,
    noise_sigma,
)
from batchbo.sampling import lhs

log = logging.getLogger(__name__)

# named per-run random streams; indices are part of the replay contract
STREAMS = {"init": 0, "noise": 1, "acquisition": 2, "fit": 3}


def make_streams(seed: int) -> dict:
    return {
        name: np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(idx,)))
        for name, idx in STREAMS.items()
    }


@dataclass(frozen=True)
class RunConfig:
    gt: ObjectiveId = ObjectiveId.ACKLEY
    noise: NoiseSpec = NoiseSpec()
    acquisition: AcquisitionSpec = AcquisitionSpec()
    policy: BatchPolicy = BatchPolicy()
    n_init: int = 24
    n_iter: int = 50
    seed: int = 0
    fit: FitConfig = FitConfig()
    budget: SearchBudget = SearchBudget()

    def __post_init__(self):
        object.__setattr__(self, "gt", ObjectiveId(self.gt))
        if self.n_init < 2:
            raise ValueError("n_init must be at least 2")
        if self.n_iter < 0:
            raise ValueError("n_iter must be non-negative")

    @property
    def ground_truth(self) -> GroundTruth:
        return get_ground_truth(self.gt)


@dataclass
class IterationRecord:
    iter: int
    batch_x: np.ndarray
    batch_y: np.ndarray
    incumbent_x: np.ndarray
    incumbent_index: int
    mu_star: float
    max_y: float
    ir_x: float
    ir_y: float
    lengthscales: np.ndarray
    amplitude_sq: float
    gnv: float


@dataclass
class RunHistory:
    """Everything needed to replay a run and recompute its metrics.

    ``x``/``y`` hold all observations in original units (noisy ``y``),
    ``y_true`` the noiseless ground truth at the same points.
    """

    config: RunConfig
    x: np.ndarray
    y: np.ndarray
    y_true: np.ndarray
    init_hyper: dict
    records: List[IterationRecord] = field(default_factory=list)
    error: Optional[str] = None

    @property
    def gt(self) -> GroundTruth:
        return self.config.ground_truth

    @property
    def normalizer(self) -> Normalizer:
        return Normalizer.for_ground_truth(self.gt)

    def n_train_at(self, i: int) -> int:
        return self.config.n_init + self.config.policy.q * i

    def hyper_at(self, i: int) -> dict:
        if i == 0:
            return self.init_hyper
        r = self.records[i - 1]
        return {"amplitude_sq": r.amplitude_sq, "lengthscales": r.lengthscales, "gnv": r.gnv}

    def model_at(self, i: int) -> GprModel:
        """Rebuild the surrogate of iteration ``i`` (0 = initial design only)."""
        nz = self.normalizer
        n = self.n_train_at(i)
        h = self.hyper_at(i)
        v = nz.y_to_unit(self.y[:n])
        return GprModel.build(
            nz.x_to_unit(self.x[:n]),
            v,
            KernelParams(h["amplitude_sq"], h["lengthscales"]),
            h["gnv"],
            y_shift=self.config.fit.shift_for(v),
            jitter_start=self.config.fit.jitter_start,
            jitter_max=self.config.fit.jitter_max,
        )

    def final_model(self) -> GprModel:
        return self.model_at(len(self.records))

    def final_model_digest(self) -> dict:
        h = self.hyper_at(len(self.records))
        return {
            "amplitude_sq": float(h["amplitude_sq"]),
            "lengthscales": [float(v) for v in h["lengthscales"]],
            "gnv": float(h["gnv"]),
            "n_train": int(len(self.y)),
        }


def _hyper(model: GprModel) -> dict:
    return {
        "amplitude_sq": model.params.amplitude_sq,
        "lengthscales": model.params.lengthscales.copy(),
        "gnv": model.gnv,
    }


def run_bo(config: RunConfig) -> RunHistory:
    """Execute one batch-BO run; deterministic for a fixed config."""
    gt = config.ground_truth
    nz = Normalizer.for_ground_truth(gt)
    rngs = make_streams(config.seed)
    sigma = noise_sigma(config.noise, gt)
    unit = Domain.cube(0.0, 1.0, gt.dim)
    x_max_unit = nz.x_to_unit(gt.x_max)
    y_max_unit = float(nz.y_to_unit(gt.y_max))

    x = lhs(config.n_init, gt.domain, rngs["init"]).points
    y_true = np.asarray(gt(x), dtype=float)
    y = np.asarray(add_noise(y_true, sigma, rngs["noise"]), dtype=float)

    try:
        model = fit(nz.x_to_unit(x), nz.y_to_unit(y), config.fit, rngs["fit"])
    except FitError as exc:
        return RunHistory(config, x, y, y_true, {}, error=f"initial fit: {exc}")
    history = RunHistory(config, x, y, y_true, _hyper(model))

    for i in range(1, config.n_iter + 1):
        batch_u = pick_batch(model, config.acquisition, config.policy, unit,
                             rngs["acquisition"], budget=config.budget)
        batch_x = gt.domain.clip(nz.x_from_unit(batch_u))
        batch_true = np.asarray(gt(batch_x), dtype=float)
        batch_y = np.asarray(add_noise(batch_true, sigma, rngs["noise"]), dtype=float)
        history.x = x = np.vstack([x, batch_x])
        history.y = y = np.concatenate([y, batch_y])
        history.y_true = y_true = np.concatenate([y_true, batch_true])

        u_all = nz.x_to_unit(x)
        try:
            model = fit(u_all, nz.y_to_unit(y), config.fit, rngs["fit"],
                        warm_start=(model.params, model.gnv))
        except FitError as exc:
            history.error = f"iteration {i}: {exc}"
            log.warning("run seed=%d aborted: %s", config.seed, history.error)
            break
        inc = incumbent(model, u_all)
        history.records.append(
            IterationRecord(
                iter=i,
                batch_x=batch_x,
                batch_y=batch_y,
                incumbent_x=x[inc.index].copy(),
                incumbent_index=inc.index,
                mu_star=float(nz.y_from_unit(inc.mu_star)),
                max_y=float(np.max(y)),
                ir_x=float(np.linalg.norm(inc.x_star - x_max_unit)),
                ir_y=float(abs(inc.mu_star - y_max_unit)),
                lengthscales=model.params.lengthscales.copy(),
                amplitude_sq=model.params.amplitude_sq,
                gnv=model.gnv,
            )
        )
    return history


def incumbent_trace(history: RunHistory) -> List[Tuple[int, float, float, float]]:
    """Learning-curve rows ``(iter, |X* - X_max|, mu_D(X*), Max(y))`` in original units."""
    x_max = history.gt.x_max
    return [
        (r.iter, float(np.linalg.norm(r.incumbent_x - x_max)), r.mu_star, r.max_y)
        for r in history.records
    ]
