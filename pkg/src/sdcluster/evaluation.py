"""Rand Index and experiment aggregation.

ARI throughout this package means the *Average* Rand Index over
repetitions, not the Adjusted Rand Index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ExperimentResult:
    dataset: str
    algorithm: str
    rate: float
    repetition: int
    seed: int
    rand_index: float
    wall_time_ms: float = 0.0
    query_count: int = 0


def rand_index(pred, truth) -> float:
    """Fraction of point pairs on which two labelings agree.

    A pair agrees when it is co-clustered in both labelings or separated in
    both. Computed from the contingency table in O(n + g^2) for g distinct
    groups.
    """
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape or pred.ndim != 1:
        raise ValueError("pred and truth must be equal-length 1-D label vectors")
    n = pred.shape[0]
    if n < 2:
        raise ValueError("need at least two points")
    _, pi = np.unique(pred, return_inverse=True)
    _, ti = np.unique(truth, return_inverse=True)
    table = np.zeros((pi.max() + 1, ti.max() + 1), dtype=np.int64)
    np.add.at(table, (pi, ti), 1)

    def pairs(x):
        return (x * (x - 1) // 2).sum()

    total = n * (n - 1) // 2
    same_both = pairs(table)
    same_pred = pairs(table.sum(axis=1))
    same_truth = pairs(table.sum(axis=0))
    agree = same_both + (total - same_pred - same_truth + same_both)
    return float(agree) / float(total)


def aggregate_ari(results: list[ExperimentResult]):
    """Group by (dataset, algorithm, rate): mean RI, sample std, and rep count.

    Returns rows sorted by key as (dataset, algorithm, rate, ari, std, reps).
    """
    if not results:
        raise ValueError("no results to aggregate")
    groups: dict[tuple, list[float]] = {}
    for r in results:
        groups.setdefault((r.dataset, r.algorithm, r.rate), []).append(r.rand_index)
    rows = []
    for key in sorted(groups):
        vals = np.array(groups[key])
        std = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
        rows.append((*key, float(vals.mean()), std, int(vals.size)))
    return rows
