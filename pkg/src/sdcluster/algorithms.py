"""The clustering procedures: plain, semidefinite, constrained, active, self-taught."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .constraints import ConstraintMatrix, OracleSim, oracle_answer
from .evaluation import rand_index
from .graph import AffinityGraph, normalize_sym, normalized_laplacian
from .sdp import FeasibleMatrix
from .spectral import (
    ClusterAssignment,
    generalized_eigs,
    kmeans,
    pencil_eigs_from_b,
    row_normalize,
    sym_eigs,
)


class InfeasibleCutError(Exception):
    """An active-loop refit found no feasible eigenvector."""


class FPCDivergenceError(Exception):
    """Fixed-point iterate norm blew up; parameters are echoed in the message."""


@dataclass(frozen=True)
class InfeasibleCut:
    """Signal that the constraint bound admits no feasible cut (u* = 0)."""

    reason: str
    u: np.ndarray


@dataclass(frozen=True)
class ConstrainedCutParams:
    vol: float
    K: int
    beta: float | None = None  # None: 0.5 * lambda_{K-1}(Qbar) * vol


@dataclass(frozen=True)
class ActiveParams:
    budget: int
    alpha: float | None = None  # None: 0.5 * lambda_max(Q), refreshed per refit
    batch: int = 1


@dataclass(frozen=True)
class FPCParams:
    mu: float = 1e-2
    beta_fpc: float = 2.0
    eta: float = 0.5
    tau: float = 1.9
    inner_tol: float = 1e-4
    inner_cap: int = 200


@dataclass(frozen=True)
class ActiveResult:
    labels: np.ndarray
    u: np.ndarray
    ri_trace: list[float]
    queries: list[tuple[int, int]]
    constraints: ConstraintMatrix


@dataclass(frozen=True)
class SelfTaughtResult:
    q: np.ndarray
    v: np.ndarray
    assignment: ClusterAssignment
    outer_iterations: int


def spectral_clustering(graph: AffinityGraph, k: int, seed: int = 0) -> ClusterAssignment:
    """k smallest eigenvectors of the normalized Laplacian, row-normalized, k-means."""
    lap = normalized_laplacian(graph)
    pairs = sym_eigs(lap, min(k + 1, graph.n), which="smallest")
    if k >= 2 and graph.n > k and pairs.values[1] < 1e-10:
        warnings.warn("graph appears disconnected; spectral cut may be ambiguous")
    rows = row_normalize(pairs.vectors[:, :k])
    return kmeans(rows, k, seed=seed)


def sdsc(ytilde: FeasibleMatrix, degrees: np.ndarray, k: int, seed: int = 0) -> ClusterAssignment:
    """Cluster on the k largest eigenvectors of the optimal feasible matrix."""
    pairs = sym_eigs(ytilde.Ytilde, k, which="largest")
    spread = pairs.values[-1] - pairs.values[0]
    if spread < 1e-12 * max(1.0, abs(pairs.values[-1])):
        warnings.warn("degenerate feasible-matrix spectrum; assignment is arbitrary")
    rows = row_normalize(pairs.vectors)
    return kmeans(rows, k, seed=seed)


def constrained_cut(M: np.ndarray, degrees: np.ndarray, q: ConstraintMatrix,
                    params: ConstrainedCutParams, seed: int = 0,
                    spectrum: str = "verbatim") -> ClusterAssignment | InfeasibleCut:
    """Constraint-lower-bounded cut through the generalized eigenvalue system.

    Serves both the Laplacian-based and feasible-matrix-based variants: M is
    the (already normalized) matrix whose cut is minimized. Returns the
    infeasibility signal u* = 0 when the bound beta admits no feasible
    eigenvector. With spectrum="similarity" the K-1 feasible vectors are
    chosen by maximal instead of minimal trace.
    """
    n = M.shape[0]
    K, vol = params.K, params.vol
    if K < 2:
        raise ValueError("constrained cut needs K >= 2")
    qbar = normalize_sym(q.Q, degrees)
    eigs_desc = np.sort(scipy.linalg.eigvalsh(qbar))[::-1]
    lam_k1 = eigs_desc[K - 2]
    beta = params.beta if params.beta is not None else 0.5 * lam_k1 * vol
    if beta >= lam_k1 * vol:
        return InfeasibleCut(reason=f"beta={beta:.6g} >= lambda_(K-1)*vol={lam_k1 * vol:.6g}",
                             u=np.zeros(n))

    pencil = generalized_eigs(M, qbar - (beta / vol) * np.eye(n))
    pos = pencil.values > 1e-10 * max(1.0, np.max(np.abs(pencil.values), initial=0.0))
    V = pencil.vectors[:, pos]
    if V.shape[1] < K - 1:
        return InfeasibleCut(reason=f"only {V.shape[1]} feasible eigenvectors, need {K - 1}",
                             u=np.zeros(n))
    V = V * np.sqrt(vol)  # columns arrive unit-norm
    costs = np.einsum("ij,ij->j", V, M @ V)
    order = np.argsort(costs, kind="stable")
    if spectrum == "similarity":
        order = order[::-1]
    V_star = V[:, order[:K - 1]]
    rows = row_normalize(V_star) / np.sqrt(degrees)[:, None]
    assignment = kmeans(rows, K, seed=seed)
    return ClusterAssignment(labels=assignment.labels, inertia=assignment.inertia,
                             indicator_vectors=V_star)


def fcsc(graph: AffinityGraph, q: ConstraintMatrix, k: int, beta: float | None = None,
         seed: int = 0) -> ClusterAssignment | InfeasibleCut:
    """Flexible constrained cut on the normalized Laplacian."""
    params = ConstrainedCutParams(vol=graph.vol, K=k, beta=beta)
    return constrained_cut(normalized_laplacian(graph), graph.degrees, q, params, seed=seed)


def csdsc(graph: AffinityGraph, ytilde: FeasibleMatrix, q: ConstraintMatrix, k: int,
          beta: float | None = None, seed: int = 0,
          spectrum: str = "verbatim") -> ClusterAssignment | InfeasibleCut:
    """Constrained cut with the degree-normalized feasible matrix in place of the Laplacian."""
    M = normalize_sym(ytilde.Ytilde, graph.degrees)
    params = ConstrainedCutParams(vol=graph.vol, K=k, beta=beta)
    return constrained_cut(M, graph.degrees, q, params, seed=seed, spectrum=spectrum)


def query_strategy(u: np.ndarray, q_t: ConstraintMatrix) -> tuple[int, int]:
    """Unqueried pair with maximal expected squared estimation error.

    The pairwise estimate is u_i u_j; the unknown answer distribution comes
    from the rank-one approximation of the current constraint matrix. Ties
    break lexicographically.
    """
    n = q_t.n
    Q = q_t.Q
    lam, vec = scipy.linalg.eigh(Q)
    top = int(np.argmax(np.abs(lam)))
    ubar = vec[:, top]
    qbar = np.outer(ubar, ubar)
    prob_ml = (1.0 + np.clip(qbar, -1.0, 1.0)) / 2.0
    P = np.outer(u, u)
    expected = (P - 1.0) ** 2 * prob_ml + (P + 1.0) ** 2 * (1.0 - prob_ml)

    open_mask = np.triu(Q == 0.0, k=1)
    if not open_mask.any():
        raise ValueError("no unqueried pairs remain")
    expected = np.where(open_mask, expected, -np.inf)
    flat = int(np.argmax(expected))  # row-major argmax = lexicographic tie-break
    return flat // n, flat % n


def solve_active_cut(M: np.ndarray, degrees: np.ndarray, q: ConstraintMatrix,
                     alpha: float | None = None) -> np.ndarray | InfeasibleCut:
    """Relaxed two-way indicator minimizing u^T M u under the constraint bound.

    With no constraints the unconstrained smallest-eigenvector cut is used;
    otherwise the feasible (positive) eigenvectors of the pencil
    (M, Q - alpha I) are rescaled to u^T D u = vol and the cheapest returned.
    """
    degrees = np.asarray(degrees, dtype=np.float64)
    vol = float(degrees.sum())
    n = M.shape[0]
    if not np.any(q.Q):
        u = sym_eigs(M, 1, which="smallest").vectors[:, 0]
        return _canonical_sign(u * np.sqrt(vol / ((u * u) @ degrees)))
    lam_q, vec_q = scipy.linalg.eigh(q.Q)
    lam_max = float(lam_q[-1])
    if alpha is None:
        alpha = 0.5 * lam_max
    elif alpha >= lam_max:
        raise ValueError(f"alpha={alpha:.6g} must be below lambda_max(Q)={lam_max:.6g}")
    # the pencil right side Q - alpha I shares Q's eigenvectors
    pencil = pencil_eigs_from_b(M, lam_q - alpha, vec_q)
    pos = pencil.values > 1e-10 * max(1.0, np.max(np.abs(pencil.values), initial=0.0))
    if not np.any(pos):
        return InfeasibleCut(reason="no positive pencil eigenvalue", u=np.zeros(n))
    V = pencil.vectors[:, pos]
    scale = np.sqrt(vol / np.einsum("ij,ij->j", V, degrees[:, None] * V))
    U = V * scale
    costs = np.einsum("ij,ij->j", U, M @ U)
    return _canonical_sign(U[:, int(np.argmin(costs))])


def _canonical_sign(u: np.ndarray) -> np.ndarray:
    pivot = int(np.argmax(np.abs(u)))
    return -u if u[pivot] < 0 else u


def active_loop(M: np.ndarray, degrees: np.ndarray, oracle: OracleSim,
                params: ActiveParams, truth_for_eval: np.ndarray | None = None) -> ActiveResult:
    """Query-and-refit loop: solve, pick the most informative pair, ask, repeat.

    Stops at budget exhaustion, or as soon as the Rand index against
    `truth_for_eval` hits 1.0 when a reference labeling is supplied.
    """
    n = M.shape[0]
    q = ConstraintMatrix(np.zeros((n, n)))
    queries: list[tuple[int, int]] = []
    ri_trace: list[float] = []

    def refit(current):
        u = solve_active_cut(M, degrees, current, alpha=params.alpha)
        if isinstance(u, InfeasibleCut):
            raise InfeasibleCutError(u.reason)
        return u

    u = refit(q)
    labels = (u > 0).astype(np.int64)
    if truth_for_eval is not None:
        ri_trace.append(rand_index(labels, truth_for_eval))

    while len(queries) < params.budget:
        if ri_trace and ri_trace[-1] == 1.0:
            break
        for _ in range(min(params.batch, params.budget - len(queries))):
            i, j = query_strategy(u, q)
            q = q.with_entry(i, j, oracle_answer(oracle, i, j))
            queries.append((i, j))
        u = refit(q)
        labels = (u > 0).astype(np.int64)
        if truth_for_eval is not None:
            ri_trace.append(rand_index(labels, truth_for_eval))

    return ActiveResult(labels=labels, u=u, ri_trace=ri_trace, queries=queries,
                        constraints=q)


def active_loop_ovr(M: np.ndarray, degrees: np.ndarray, truth_labels: np.ndarray,
                    k: int, params: ActiveParams, seed: int = 0) -> ActiveResult:
    """One-vs-rest extension of the two-way active loop for k > 2.

    Extrapolation beyond the two-way relaxation: each class runs a binary
    loop against a binarized oracle on an equal share of the budget, and the
    stacked indicators are clustered with k-means.
    """
    truth_labels = np.asarray(truth_labels, dtype=np.int64)
    share = params.budget // k
    columns, queries = [], []
    merged = ConstraintMatrix(np.zeros((M.shape[0], M.shape[0])))
    for c in range(k):
        binary = (truth_labels == c).astype(np.int64)
        sub = active_loop(M, degrees, OracleSim(binary),
                          ActiveParams(budget=share, alpha=params.alpha,
                                       batch=params.batch),
                          truth_for_eval=binary)
        columns.append(sub.u)
        queries.extend(sub.queries)
    rows = row_normalize(np.column_stack(columns))
    assignment = kmeans(rows, k, seed=seed)
    ri_trace = [rand_index(assignment.labels, truth_labels)]
    return ActiveResult(labels=assignment.labels, u=np.column_stack(columns)[:, 0],
                        ri_trace=ri_trace, queries=queries, constraints=merged)


def svt_shrink(M: np.ndarray, threshold: float) -> np.ndarray:
    """Soft-threshold the singular values of a symmetric matrix by `threshold`.

    For symmetric input the SVD shrinkage equals shrinking |eigenvalue| while
    keeping signs; only surviving components are rebuilt.
    """
    lam, vec = np.linalg.eigh(M)
    shrunk = np.sign(lam) * np.maximum(np.abs(lam) - threshold, 0.0)
    alive = shrunk != 0.0
    if not alive.any():
        return np.zeros_like(M)
    vs = vec[:, alive]
    return (vs * shrunk[alive]) @ vs.T


def fpc_mu_schedule(mu: float, eta: float) -> list[float]:
    """Continuation weights from eta^-10 * mu down to mu."""
    sched = [eta ** -10 * mu]
    while sched[-1] > mu:
        sched.append(max(mu, sched[-1] * eta))
    return sched


def fpc_complete(observed: ConstraintMatrix, v_cut: np.ndarray | None,
                 params: FPCParams, mask: np.ndarray | None = None) -> np.ndarray:
    """Complete a partially observed constraint matrix by fixed-point continuation.

    Iterates a gradient step on the observed-entry misfit (coupled to the cut
    Gram matrix G = V V^T with weight beta) followed by singular-value
    shrinkage, over a geometric continuation of the shrinkage weight.
    """
    q_star = observed.Q
    n = q_star.shape[0]
    if mask is None:
        mask = q_star != 0.0
    else:
        mask = np.asarray(mask, dtype=bool)
        if not np.array_equal(mask, mask.T):
            raise ValueError("observation mask must be symmetric")
    if v_cut is None:
        G = np.zeros((n, n))
    else:
        G = v_cut @ v_cut.T
    tau, beta = params.tau, params.beta_fpc
    blowup = 1e6 * max(1.0, np.linalg.norm(q_star[mask]))

    obs_i, obs_j = np.nonzero(mask)
    obs_vals = q_star[obs_i, obs_j]
    drift = tau * beta * G  # constant part of the gradient step

    Q = np.zeros((n, n))
    for mu_p in fpc_mu_schedule(params.mu, params.eta):
        for _ in range(params.inner_cap):
            Y = Q + drift
            Y[obs_i, obs_j] -= tau * (Q[obs_i, obs_j] - obs_vals)
            Q_next = svt_shrink((Y + Y.T) / 2.0, tau * mu_p)
            change = np.linalg.norm(Q_next - Q) / max(1.0, np.linalg.norm(Q))
            Q = Q_next
            if np.linalg.norm(Q) > blowup:
                raise FPCDivergenceError(
                    f"iterate norm exceeded bound (mu={params.mu}, beta={beta}, "
                    f"tau={tau}, eta={params.eta})")
            if change <= params.inner_tol:
                break
    return (Q + Q.T) / 2.0


def self_taught(M: np.ndarray, observed: ConstraintMatrix, k: int,
                params: FPCParams, alpha_st: float = 1.0, seed: int = 0,
                spectrum: str = "verbatim") -> SelfTaughtResult:
    """Alternate constraint completion with cut refinement until the subspace settles.

    spectrum="verbatim" tracks the k smallest eigenvectors of the coupled
    matrix alpha*M - beta*Q; "similarity" tracks the k largest (for
    similarity-like M).
    """
    which = "smallest" if spectrum == "verbatim" else "largest"
    V = sym_eigs(M, k, which=which).vectors
    Q = np.zeros_like(M)
    outer = 0
    for outer in range(1, 51):
        Q = fpc_complete(observed, V, params)
        coupled = alpha_st * M - params.beta_fpc * Q
        V_next = sym_eigs(coupled, k, which=which).vectors
        svals = scipy.linalg.svdvals(V.T @ V_next)
        angle = float(np.arccos(np.clip(svals.min(), -1.0, 1.0)))
        V = V_next
        if angle <= 1e-3:
            break
    assignment = kmeans(row_normalize(V), k, seed=seed)
    return SelfTaughtResult(q=Q, v=V, assignment=assignment, outer_iterations=outer)
