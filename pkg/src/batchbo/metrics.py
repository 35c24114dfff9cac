"""Regret metrics, cross-seed aggregation and comparison statistics.

All X-metrics are Euclidean distances after mapping each input dimension
to [0, 1]; y-metrics are divided by the width of the ground-truth range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import norm

from batchbo.gpr import GprModel, Normalizer
from batchbo.objectives import GroundTruth


class UnsupportedMetricError(ValueError):
    """The metric needs information the ground truth does not provide."""


def _ir_x_at(x_star, gt: GroundTruth) -> float:
    return float(np.linalg.norm((np.asarray(x_star) - gt.x_max) / gt.domain.width))


def _ir_y_at(mu_star: float, gt: GroundTruth) -> float:
    return float(abs(mu_star - gt.y_max) / gt.y_width)


def ir_x(history, gt: Optional[GroundTruth] = None) -> float:
    """Normalized distance of the final incumbent to the true optimum."""
    gt = gt or history.gt
    return _ir_x_at(history.records[-1].incumbent_x, gt)


def ir_y(history, gt: Optional[GroundTruth] = None) -> float:
    """Normalized gap between the final utility and the true maximum."""
    gt = gt or history.gt
    return _ir_y_at(history.records[-1].mu_star, gt)


def cr_x(history, gt: Optional[GroundTruth] = None) -> float:
    gt = gt or history.gt
    return float(sum(_ir_x_at(r.incumbent_x, gt) for r in history.records))


def cr_y(history, gt: Optional[GroundTruth] = None) -> float:
    gt = gt or history.gt
    return float(sum(_ir_y_at(r.mu_star, gt) for r in history.records))


def percentile_seeds(values: Sequence[float], seed_ids: Optional[Sequence[int]] = None,
                     percentiles=(25, 50, 75)) -> Dict[int, int]:
    """Rank seeds worst-first by final regret and pick nearest-rank percentiles.

    Returns positions into ``values``. Ties are broken by ``seed_ids``
    (ascending), which default to the positions themselves. With 99 seeds
    the ``p``-th percentile is exactly the ``p``-th element of the ranking.
    """
    values = np.asarray(values, dtype=float)
    n = len(values)
    if n < 3:
        raise ValueError("percentile ranking needs at least three seeds")
    ids = np.arange(n) if seed_ids is None else np.asarray(seed_ids)
    order = np.lexsort((ids, -values))
    out = {}
    for p in percentiles:
        pos = int(math.floor(p * (n + 1) / 100 + 0.5))
        pos = min(max(pos, 1), n)
        out[p] = int(order[pos - 1])
    return out


def parity_rmse(model: GprModel, x, y_true, normalizer: Normalizer) -> Tuple[float, float]:
    """RMSE of posterior means against noiseless values: ``(raw, normalized)``."""
    mean = model.predict_mean(normalizer.x_to_unit(x))
    err = normalizer.y_from_unit(mean) - np.asarray(y_true, dtype=float)
    raw = float(np.sqrt(np.mean(err * err)))
    return raw, raw / normalizer.y_width


def basin_fraction(incumbents: Sequence[np.ndarray], gt: GroundTruth) -> float:
    """Share of final incumbents closer to the global than to the second maximum.

    ``incumbents`` may also be a sequence of run histories.
    """
    if gt.x_max2 is None:
        raise UnsupportedMetricError(f"{gt.id.value} has no second maximum")
    pts = [h.records[-1].incumbent_x if hasattr(h, "records") else h for h in incumbents]
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    d1 = np.linalg.norm(pts - gt.x_max, axis=1)
    d2 = np.linalg.norm(pts - gt.x_max2, axis=1)
    return float(np.mean(d1 < d2))


def mann_whitney_u(a, b) -> Tuple[float, float]:
    """U statistic of sample ``a`` and its two-sided normal-approximation p-value.

    Ties count one half; the variance carries the usual tie correction and
    no continuity correction is applied.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n, m = len(a), len(b)
    if n == 0 or m == 0:
        raise ValueError("both samples must be non-empty")
    pooled = np.concatenate([a, b])
    order = np.argsort(pooled, kind="mergesort")
    ranks = np.empty(n + m)
    sorted_vals = pooled[order]
    i = 0
    tie_term = 0.0
    while i < n + m:
        j = i
        while j + 1 < n + m and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        t = j - i + 1
        tie_term += t ** 3 - t
        i = j + 1
    u = float(np.sum(ranks[:n]) - n * (n + 1) / 2.0)
    N = n + m
    var = n * m / 12.0 * ((N + 1) - tie_term / (N * (N - 1))) if N > 1 else 0.0
    if var <= 0:
        return u, 1.0
    z = (u - n * m / 2.0) / math.sqrt(var)
    return u, float(min(1.0, 2.0 * norm.sf(abs(z))))


@dataclass
class BenchmarkSummary:
    n_seeds: int
    mean_ir_x: float
    mean_cr_x: float
    mean_ir_y: float
    mean_cr_y: float
    per_seed_ir_x: np.ndarray
    per_seed_ir_y: np.ndarray
    percentile_seeds: Dict[int, int]
    mean_rmse: float
    mean_rmse_raw: float
    mean_sqrt_gnv: float
    basin_fraction: Optional[float]

    def as_row(self) -> dict:
        row = {
            "n_seeds": self.n_seeds,
            "mean_ir_x": self.mean_ir_x,
            "mean_cr_x": self.mean_cr_x,
            "mean_ir_y": self.mean_ir_y,
            "mean_cr_y": self.mean_cr_y,
            "median_ir_x": float(np.median(self.per_seed_ir_x)),
            "mean_rmse": self.mean_rmse,
            "mean_rmse_raw": self.mean_rmse_raw,
            "mean_sqrt_gnv": self.mean_sqrt_gnv,
            "basin_fraction": self.basin_fraction if self.basin_fraction is not None else "",
        }
        for p, idx in self.percentile_seeds.items():
            row[f"p{p}_seed"] = idx
        return row


def summarize(histories: Sequence, seed_ids: Optional[Sequence[int]] = None) -> BenchmarkSummary:
    """Aggregate complete run histories of a single configuration."""
    if not histories:
        raise ValueError("no histories to summarize")
    gt = histories[0].gt
    irx = np.array([ir_x(h, gt) for h in histories])
    iry = np.array([ir_y(h, gt) for h in histories])
    crx = np.array([cr_x(h, gt) for h in histories])
    cry = np.array([cr_y(h, gt) for h in histories])
    rmse = []
    for h in histories:
        rmse.append(parity_rmse(h.final_model(), h.x, h.y_true, h.normalizer))
    rmse = np.array(rmse)
    sqrt_gnv = np.array([math.sqrt(h.records[-1].gnv) for h in histories])
    if seed_ids is None:
        seed_ids = [h.config.seed for h in histories]
    pct = percentile_seeds(irx, seed_ids) if len(histories) >= 3 else {}
    basin = basin_fraction(histories, gt) if gt.x_max2 is not None else None
    return BenchmarkSummary(
        n_seeds=len(histories),
        mean_ir_x=float(irx.mean()),
        mean_cr_x=float(crx.mean()),
        mean_ir_y=float(iry.mean()),
        mean_cr_y=float(cry.mean()),
        per_seed_ir_x=irx,
        per_seed_ir_y=iry,
        percentile_seeds=pct,
        mean_rmse=float(rmse[:, 1].mean()),
        mean_rmse_raw=float(rmse[:, 0].mean()),
        mean_sqrt_gnv=float(sqrt_gnv.mean()),
        basin_fraction=basin,
    )
