"""Vectorized bounded compass search used for local refinement."""

from __future__ import annotations

from typing import Callable, Tuple

import numpy as np


def compass_search(
    f: Callable[[np.ndarray, np.ndarray], np.ndarray],
    starts: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    n_evals: int = 200,
    step: float = 0.05,
) -> Tuple[np.ndarray, np.ndarray]:
    """Maximize ``f`` from several starts at once by coordinate pattern search.

    ``f(z, idx)`` scores points ``z`` (shape ``(k, d)``) that belong to the
    starts ``idx``. Each round probes ``+-step`` along every coordinate,
    moves to the best improving neighbour, and halves the step otherwise.
    ``step`` is a fraction of the box width. Roughly ``n_evals`` function
    evaluations are spent per start.
    """
    x = np.array(starts, dtype=float, copy=True)
    m, d = x.shape
    width = upper - lower
    idx = np.arange(m)
    fx = np.asarray(f(x, idx), dtype=float)
    steps = np.full(m, float(step))
    eye = np.eye(d)
    directions = np.concatenate([eye, -eye])
    n_rounds = max(1, (n_evals - 1) // (2 * d))
    owner = np.repeat(idx, 2 * d)
    for _ in range(n_rounds):
        offsets = steps[:, None, None] * directions[None, :, :] * width
        trial = np.clip(x[:, None, :] + offsets, lower, upper)
        ft = np.asarray(f(trial.reshape(-1, d), owner), dtype=float).reshape(m, 2 * d)
        best = np.argmax(ft, axis=1)
        fbest = ft[idx, best]
        better = fbest > fx
        x[better] = trial[idx[better], best[better]]
        fx[better] = fbest[better]
        steps[~better] *= 0.5
    return x, fx
