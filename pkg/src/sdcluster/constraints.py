"""Pairwise must-link / cannot-link constraints and the simulated oracle."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ConstraintMatrix:
    """Symmetric n x n matrix over {-1, 0, +1} with a zero diagonal."""

    Q: np.ndarray

    def __post_init__(self):
        Q = np.asarray(self.Q, dtype=np.float64)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise ValueError("Q must be square")
        if not np.array_equal(Q, Q.T):
            raise ValueError("Q must be exactly symmetric")
        if np.any(np.diag(Q) != 0):
            raise ValueError("Q must have a zero diagonal")
        if not np.all((Q == 0.0) | (np.abs(Q) == 1.0)):
            raise ValueError("Q entries must lie in {-1, 0, +1}")
        Q.setflags(write=False)
        object.__setattr__(self, "Q", Q)

    @property
    def n(self) -> int:
        return self.Q.shape[0]

    @property
    def known_count(self) -> int:
        iu = np.triu_indices(self.n, 1)
        return int(np.count_nonzero(self.Q[iu]))

    def with_entry(self, i: int, j: int, value: int) -> "ConstraintMatrix":
        """Copy with the symmetric pair (i, j) filled in."""
        Q = self.Q.copy()
        Q[i, j] = Q[j, i] = value
        return ConstraintMatrix(Q)


@dataclass
class OracleSim:
    """Simulated expert answering pairwise queries from ground-truth labels."""

    labels: np.ndarray
    queries_answered: int = 0

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)


def constraint_budget(n: int, rate: float) -> int:
    """ceil(rate * n(n-1)/2): number of pairs revealed at a constraint rate."""
    if not 0 < rate <= 1:
        raise ValueError(f"rate must be in (0, 1], got {rate}")
    return math.ceil(rate * (n * (n - 1) // 2))


def sample_constraints(labels: np.ndarray, rate: float, seed: int) -> ConstraintMatrix:
    """Uniformly sample distinct unordered pairs and fill them from the labels."""
    labels = np.asarray(labels, dtype=np.int64)
    n = labels.shape[0]
    budget = constraint_budget(n, rate)
    iu, ju = np.triu_indices(n, 1)
    rng = np.random.default_rng(seed)
    chosen = rng.choice(iu.shape[0], size=budget, replace=False)
    Q = np.zeros((n, n))
    ii, jj = iu[chosen], ju[chosen]
    vals = np.where(labels[ii] == labels[jj], 1.0, -1.0)
    Q[ii, jj] = vals
    Q[jj, ii] = vals
    return ConstraintMatrix(Q)


def oracle_answer(oracle: OracleSim, i: int, j: int) -> int:
    """+1 iff points i and j share a ground-truth label, -1 otherwise."""
    if i == j:
        raise ValueError("self-pairs are never queried")
    n = oracle.labels.shape[0]
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"pair ({i}, {j}) out of range for n={n}")
    oracle.queries_answered += 1
    return 1 if oracle.labels[i] == oracle.labels[j] else -1


def full_constraints(labels: np.ndarray) -> ConstraintMatrix:
    """The fully observed ground-truth constraint matrix (rate 1.0)."""
    labels = np.asarray(labels, dtype=np.int64)
    Q = np.where(labels[:, None] == labels[None, :], 1.0, -1.0)
    np.fill_diagonal(Q, 0.0)
    return ConstraintMatrix(Q)


def save_triples(cm: ConstraintMatrix, path) -> None:
    """Serialize as (i, j, +/-1) CSV triples over the upper triangle."""
    iu, ju = np.triu_indices(cm.n, 1)
    mask = cm.Q[iu, ju] != 0
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["i", "j", "value"])
        for i, j in zip(iu[mask], ju[mask]):
            writer.writerow([int(i), int(j), int(cm.Q[i, j])])


def load_triples(path, n: int) -> ConstraintMatrix:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)  # header
        Q = np.zeros((n, n))
        for i, j, v in reader:
            Q[int(i), int(j)] = Q[int(j), int(i)] = float(v)
    return ConstraintMatrix(Q)
