"""Shared numerical kernels: eigensolvers, k-means, row normalization."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg


class SingularPencilError(Exception):
    """The matrix pencil (A, B) is singular or numerically unreducible."""


@dataclass(frozen=True)
class EigenPairs:
    """Eigenvalues sorted ascending with matching eigenvector columns."""

    values: np.ndarray
    vectors: np.ndarray


@dataclass(frozen=True)
class ClusterAssignment:
    labels: np.ndarray
    inertia: float
    indicator_vectors: np.ndarray | None = None


def _check_symmetric(M: np.ndarray, name: str = "matrix") -> np.ndarray:
    M = np.asarray(M, dtype=np.float64)
    scale = max(1.0, np.max(np.abs(M)))
    if np.max(np.abs(M - M.T)) > 1e-10 * scale:
        raise ValueError(f"{name} is not symmetric within tolerance")
    return (M + M.T) / 2.0


def sym_eigs(M: np.ndarray, count: int, which: str = "smallest") -> EigenPairs:
    """`count` eigenpairs at one end of a symmetric matrix spectrum, ascending."""
    M = _check_symmetric(M)
    n = M.shape[0]
    if count > n:
        raise ValueError(f"requested {count} eigenpairs from a {n}x{n} matrix")
    if which not in ("smallest", "largest"):
        raise ValueError("which must be 'smallest' or 'largest'")
    if which == "smallest":
        idx = (0, count - 1)
    else:
        idx = (n - count, n - 1)
    values, vectors = scipy.linalg.eigh(M, subset_by_index=idx)
    return EigenPairs(values=values, vectors=vectors)


def generalized_eigs(A: np.ndarray, B: np.ndarray) -> EigenPairs:
    """All finite real eigenpairs of the symmetric pencil A v = lam B v.

    B may be indefinite or singular. Near-zero B-eigenvalues (below
    1e-10 ||B||) are deflated and eliminated through the A-block Schur
    complement; the reduced problem is solved as a standard (generally
    nonsymmetric) eigenproblem. Complex and infinite eigenvalues are
    excluded, and every returned pair satisfies
    ||A v - lam B v|| <= 1e-7 (||A|| + |lam| ||B||).
    """
    A = _check_symmetric(A, "A")
    B = _check_symmetric(B, "B")
    if B.shape != A.shape:
        raise ValueError("A and B must have matching shapes")
    lam_b, R = scipy.linalg.eigh(B)
    return pencil_eigs_from_b(A, lam_b, R)


def pencil_eigs_from_b(A: np.ndarray, lam_b: np.ndarray, R: np.ndarray) -> EigenPairs:
    """generalized_eigs core, reusing a precomputed eigendecomposition of B."""
    n = A.shape[0]
    norm_a = float(np.linalg.norm(A))
    norm_b = float(np.linalg.norm(lam_b))

    keep = np.abs(lam_b) > 1e-10 * max(norm_b, 1e-300)
    R1, l1 = R[:, keep], lam_b[keep]
    R0 = R[:, ~keep]

    if R0.shape[1] > 0:
        # Eliminate the deflated block: requires the A-restriction to it
        # to be invertible, else the pencil is (numerically) singular.
        A00 = R0.T @ A @ R0
        a00_scale = max(norm_a, 1e-300)
        svals = scipy.linalg.svdvals(A00) if A00.size else np.array([0.0])
        if A00.size and svals[-1] < 1e-12 * a00_scale:
            raise SingularPencilError("pencil is singular: deflated A-block not invertible")
        A10 = R0.T @ A @ R1
        correction = A10.T @ np.linalg.solve(A00, A10)
    else:
        correction = 0.0

    if R1.shape[1] == 0:
        return EigenPairs(values=np.empty(0), vectors=np.empty((n, 0)))

    S1 = R1 * (np.abs(l1) ** -0.5)
    J = np.sign(l1)
    K = S1.T @ A @ S1
    if R0.shape[1] > 0:
        scaled = np.abs(l1) ** -0.5
        K = K - (correction * np.outer(scaled, scaled))
    K = (K + K.T) / 2.0
    theta, Z = np.linalg.eig(J[:, None] * K)

    real = np.abs(theta.imag) <= 1e-9 * (1.0 + np.abs(theta.real))
    theta = theta.real[real]
    Z = Z.real[:, real]
    V = S1 @ Z
    if R0.shape[1] > 0:
        W0 = -np.linalg.solve(A00, A10 @ (Z * (np.abs(l1) ** -0.5)[:, None]))
        V = V + R0 @ W0

    norms = np.linalg.norm(V, axis=0)
    ok = norms > 1e-12
    V, theta = V[:, ok] / norms[ok], theta[ok]
    BV = (R * lam_b) @ (R.T @ V)
    resid = np.linalg.norm(A @ V - BV * theta, axis=0)
    ok = resid <= 1e-7 * (norm_a + np.abs(theta) * norm_b + 1e-300)
    V, theta = V[:, ok], theta[ok]

    order = np.argsort(theta, kind="stable")
    return EigenPairs(values=theta[order], vectors=V[:, order])


def row_normalize(V: np.ndarray) -> np.ndarray:
    """Scale each row to unit Euclidean norm; zero rows stay zero (with a warning)."""
    V = np.asarray(V, dtype=np.float64)
    norms = np.linalg.norm(V, axis=1)
    zero = norms == 0.0
    if np.any(zero):
        warnings.warn(f"row_normalize: {int(zero.sum())} zero row(s) left unnormalized")
    safe = np.where(zero, 1.0, norms)
    return V / safe[:, None]


def _kmeans_pp_init(rows: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = rows.shape[0]
    centers = np.empty((k, rows.shape[1]))
    centers[0] = rows[rng.integers(n)]
    d2 = np.sum((rows - centers[0]) ** 2, axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total <= 0:
            centers[c] = rows[rng.integers(n)]
            continue
        centers[c] = rows[rng.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, np.sum((rows - centers[c]) ** 2, axis=1))
    return centers


def _lloyd(rows: np.ndarray, centers: np.ndarray, max_iter: int,
           tol: float) -> tuple[np.ndarray, float]:
    k = centers.shape[0]
    prev_inertia = np.inf
    labels = np.zeros(rows.shape[0], dtype=np.int64)
    for _ in range(max_iter):
        d2 = ((rows[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        labels = np.argmin(d2, axis=1)
        own = d2[np.arange(rows.shape[0]), labels].copy()
        for c in range(k):
            members = labels == c
            if not np.any(members):
                # reseed empty cluster at the point farthest from its center
                far = int(np.argmax(own))
                centers[c] = rows[far]
                labels[far] = c
                own[far] = -np.inf
                members = labels == c
            centers[c] = rows[members].mean(axis=0)
        d2 = ((rows[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        labels = np.argmin(d2, axis=1)
        inertia = float(d2[np.arange(rows.shape[0]), labels].sum())
        if prev_inertia - inertia <= tol:
            break
        prev_inertia = inertia
    return labels, inertia


def kmeans(rows: np.ndarray, k: int, restarts: int = 10, max_iter: int = 100,
           seed: int = 0, tol: float = 1e-9) -> ClusterAssignment:
    """Best-of-restarts Lloyd iterations from k-means++ seeding.

    Deterministic given the seed: restart r uses generator seed + r, and ties
    in inertia keep the lowest restart index.
    """
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim == 1:
        rows = rows[:, None]
    n = rows.shape[0]
    if n < k:
        raise ValueError(f"cannot form {k} clusters from {n} points")
    best_labels, best_inertia = None, np.inf
    for r in range(restarts):
        rng = np.random.default_rng(seed + r)
        centers = _kmeans_pp_init(rows, k, rng)
        labels, inertia = _lloyd(rows, centers.copy(), max_iter, tol)
        if len(np.unique(labels)) < k:
            continue
        if inertia < best_inertia - 1e-15:
            best_labels, best_inertia = labels, inertia
    if best_labels is None:
        raise RuntimeError("k-means failed to produce k nonempty clusters")
    return ClusterAssignment(labels=best_labels, inertia=best_inertia,
                             indicator_vectors=rows)
