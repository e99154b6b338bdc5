"""Projected semidefinite relaxation of balanced k-way minimum cut.

The lifted variable is Y ~ y y^T for y = [1; vec(X)] (column-major vec, so
cluster indicator blocks are contiguous). The relaxation keeps three groups
of constraints: the corner Y_00 = 1, the idempotence rows diag(Y) = first
row, and one PSD-form balance constraint tr(M_bal Y) = 0. Since M_bal is a
Gram matrix, every feasible Y lives on null(M_bal); the solver works in that
projected subspace, where a strictly feasible point exists, and runs a
primal-dual path-following interior point method with Mehrotra correction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.linalg import cho_solve, cholesky, solve_triangular
from scipy.linalg.lapack import dpstrf


class SDPError(Exception):
    pass


@dataclass(frozen=True)
class EquipartitionSDP:
    """Lifted problem data: objective C, balance matrix M_bal, sizes."""

    n: int
    k: int
    C: np.ndarray
    M_bal: np.ndarray

    @property
    def dim(self) -> int:
        return self.n * self.k + 1

    @property
    def m(self) -> float:
        return self.n / self.k

    @property
    def constraint_count(self) -> int:
        # corner + nk idempotence rows + balance
        return 2 + self.n * self.k

    def constraint_residuals(self, Y: np.ndarray) -> np.ndarray:
        """Signed residuals of all equality constraints at Y."""
        d = self.dim
        corner = Y[0, 0] - 1.0
        diag_rows = np.diag(Y)[1:] - 0.5 * (Y[0, 1:] + Y[1:, 0])
        balance = float(np.vdot(self.M_bal, Y))
        return np.concatenate([[corner], diag_rows, [balance]])


@dataclass(frozen=True)
class SDPSolution:
    Y: np.ndarray
    objective_value: float
    duality_gap: float
    feas_residual: float
    iterations: int
    converged: bool


@dataclass(frozen=True)
class FeasibleMatrix:
    """Sum of the k diagonal n x n blocks of Y[1:, 1:]."""

    Ytilde: np.ndarray


def build_equipartition_sdp(L: np.ndarray, n: int, k: int) -> EquipartitionSDP:
    """Assemble the lifted cost and balance matrices from a graph Laplacian."""
    L = np.asarray(L, dtype=np.float64)
    if L.shape != (n, n):
        raise SDPError(f"Laplacian shape {L.shape} inconsistent with n={n}")
    if k < 2:
        raise SDPError("k must be at least 2")
    if n < k:
        raise SDPError("need n >= k")
    d = n * k + 1
    C = np.zeros((d, d))
    C[1:, 1:] = np.kron(np.eye(k), L)

    # P stacks row sums (X e_k) over column sums (X^T e_n); q matches them
    # to the all-ones / m-scaled targets. M_bal = [-q, P]^T [-q, P].
    P = np.zeros((n + k, n * k))
    for b in range(k):
        P[:n, b * n:(b + 1) * n] = np.eye(n)
        P[n + b, b * n:(b + 1) * n] = 1.0
    q = np.concatenate([np.ones(n), (n / k) * np.ones(k)])
    B = np.concatenate([-q[:, None], P], axis=1)
    M_bal = B.T @ B
    return EquipartitionSDP(n=n, k=k, C=C, M_bal=(M_bal + M_bal.T) / 2.0)


def _helmert_basis(n: int) -> np.ndarray:
    """n x (n-1) orthonormal basis of the subspace orthogonal to ones."""
    return scipy.linalg.helmert(n, full=False).T


def _null_basis(n: int, k: int) -> np.ndarray:
    """Orthonormal basis of null(M_bal): span{[1; vec(X_unif)]} + zero-margin lifts."""
    d = n * k + 1
    r = (n - 1) * (k - 1) + 1
    U = np.zeros((d, r))
    s = np.sqrt(1.0 + n / k**2)
    U[0, 0] = 1.0 / s
    U[1:, 0] = (1.0 / k) / s
    U[1:, 1:] = np.kron(_helmert_basis(k), _helmert_basis(n))
    return U


def _extract(W: np.ndarray) -> np.ndarray:
    """Apply every diag/corner constraint functional to a full-space matrix."""
    corner = W[0, 0]
    rest = np.diag(W)[1:] - 0.5 * (W[0, 1:] + W[1:, 0])
    return np.concatenate([[corner], rest])


def _schur(G: np.ndarray, F: np.ndarray) -> np.ndarray:
    """H_ij = tr(A_i G A_j F) for the corner/diag constraint family.

    Closed form in the entries of the (symmetric) full-space lifts G and F;
    every constraint touches at most three matrix entries.
    """
    Gs, Fs = G[1:, 1:], F[1:, 1:]
    g0, f0 = G[0, 1:], F[0, 1:]
    G00, F00 = G[0, 0], F[0, 0]
    H = np.empty((G.shape[0], G.shape[0]))
    main = (Gs * Fs
            - 0.5 * (g0[:, None] + g0[None, :]) * Fs
            - 0.5 * (f0[:, None] + f0[None, :]) * Gs
            + 0.25 * (np.outer(g0, f0) + np.outer(f0, g0))
            + 0.25 * (F00 * Gs + G00 * Fs))
    H[1:, 1:] = main
    border = g0 * f0 - 0.5 * (G00 * f0 + F00 * g0)
    H[0, 1:] = border
    H[1:, 0] = border
    H[0, 0] = G00 * F00
    return H


def _adjoint(lam_full: np.ndarray, U: np.ndarray) -> np.ndarray:
    """Reduced-space A*(lambda) for the corner/diag constraint family."""
    d = U.shape[0]
    dvec = lam_full.copy()
    w = np.zeros(d)
    w[1:] = -0.5 * lam_full[1:]
    S_hat = (U.T * dvec) @ U
    u0 = U[0]
    uw = U.T @ w
    S_hat += np.outer(u0, uw) + np.outer(uw, u0)
    return (S_hat + S_hat.T) / 2.0


def _max_step(X: np.ndarray, dX: np.ndarray) -> float:
    """Largest step t keeping X + t dX positive semidefinite."""
    try:
        Lx = cholesky(X, lower=True)
    except scipy.linalg.LinAlgError:
        jitter = 1e-14 * max(np.trace(X) / X.shape[0], 1e-30)
        Lx = cholesky(X + jitter * np.eye(X.shape[0]), lower=True)
    T = solve_triangular(Lx, dX, lower=True)
    T = solve_triangular(Lx, T.T, lower=True).T
    lam_min = scipy.linalg.eigvalsh((T + T.T) / 2.0)[0]
    if lam_min >= -1e-300:
        return np.inf
    return -1.0 / lam_min


def _solve_schur(H: np.ndarray, rhs_list, iteration: int):
    """Cholesky solve with escalating ridge; raises if H stays singular."""
    scale = max(np.trace(H) / H.shape[0], 1e-300)
    for ridge in (0.0, 1e-13, 1e-11, 1e-9, 1e-7):
        try:
            c = cholesky(H + ridge * scale * np.eye(H.shape[0]), lower=True)
        except scipy.linalg.LinAlgError:
            continue
        return [cho_solve((c, True), rhs) for rhs in rhs_list]
    raise SDPError(f"numerically singular Newton system at iteration {iteration}")


def solve_sdp(problem: EquipartitionSDP, tol: float = 1e-6,
              max_iter: int = 100) -> SDPSolution:
    """Interior-point solve of the projected relaxation.

    Returns the lifted matrix Y in the original (nk+1)-dimensional space with
    relative duality gap and feasibility residuals at or below `tol` when
    converged; otherwise the best iterate with `converged=False`.
    """
    if tol <= 0:
        raise SDPError("tol must be positive")
    n, k, d = problem.n, problem.k, problem.dim
    U = _null_basis(n, k)
    r = U.shape[1]
    bal_leak = np.linalg.norm(problem.M_bal @ U)
    if bal_leak > 1e-8 * max(1.0, np.linalg.norm(problem.M_bal)):
        raise SDPError("balance matrix inconsistent with the analytic null basis")

    C_hat = U.T @ problem.C @ U
    C_hat = (C_hat + C_hat.T) / 2.0

    # Projection can make the corner/diag constraints linearly dependent;
    # keep a maximal independent subset chosen by pivoted Cholesky of their
    # Gram matrix (the dropped ones are implied, the full system being
    # consistent by construction).
    Pi = U @ U.T
    gram = _schur(Pi, Pi)
    gram = (gram + gram.T) / 2.0
    _, piv, rank, _ = dpstrf(gram, tol=1e-10 * max(gram.diagonal().max(), 1e-300),
                             lower=1)
    kept = np.sort(piv[:rank] - 1)
    b = np.zeros(d)
    b[0] = 1.0
    b_kept = b[kept]

    def lift(W):
        return U @ W @ U.T

    Y = np.eye(r) * max(10.0, float(n + 1) / np.sqrt(r))
    Z = np.eye(r) * max(10.0, float(np.linalg.norm(C_hat)))
    lam = np.zeros(kept.shape[0])
    norm_b = np.linalg.norm(b_kept)
    norm_c = np.linalg.norm(C_hat)

    converged = False
    stalls = 0
    it = 0
    for it in range(1, max_iter + 1):
        Lz = cholesky(Z, lower=True)
        Zinv = cho_solve((Lz, True), np.eye(r))
        Zinv = (Zinv + Zinv.T) / 2.0

        G = lift(Y)
        F = lift(Zinv)

        lam_full = np.zeros(d)
        lam_full[kept] = lam
        S_lam = _adjoint(lam_full, U)
        R_d = C_hat - S_lam - Z
        r_p = b_kept - _extract(G)[kept]

        gap = float(np.vdot(Y, Z))
        mu = gap / r
        pobj = float(np.vdot(C_hat, Y))
        dobj = float(b_kept @ lam)
        rel_gap = gap / (1.0 + abs(pobj) + abs(dobj))
        pinf = np.linalg.norm(r_p) / (1.0 + norm_b)
        dinf = np.linalg.norm(R_d) / (1.0 + norm_c)
        if max(rel_gap, pinf, dinf) <= tol:
            converged = True
            break

        H = _schur(G, F)[np.ix_(kept, kept)]
        H = (H + H.T) / 2.0

        # predictor (affine scaling direction)
        rhs_aff = b_kept + _extract(lift(Y @ R_d @ Zinv))[kept]
        (dlam_aff,) = _solve_schur(H, [rhs_aff], it)
        dZ_aff = R_d - _adjoint(_embed(dlam_aff, kept, d), U)
        dY_aff = -Y - Y @ dZ_aff @ Zinv
        dY_aff = (dY_aff + dY_aff.T) / 2.0

        ap_aff = min(1.0, _max_step(Y, dY_aff))
        ad_aff = min(1.0, _max_step(Z, dZ_aff))
        mu_aff = float(np.vdot(Y + ap_aff * dY_aff, Z + ad_aff * dZ_aff)) / r
        sigma = min(1.0, max(0.0, mu_aff / mu) ** 3)

        # corrector with Mehrotra second-order term
        W2 = (dY_aff @ dZ_aff + Y @ R_d) @ Zinv
        rhs = b_kept - sigma * mu * _extract(F)[kept] + _extract(lift(W2))[kept]
        (dlam,) = _solve_schur(H, [rhs], it)
        dZ = R_d - _adjoint(_embed(dlam, kept, d), U)
        dY = sigma * mu * Zinv - Y - (dY_aff @ dZ_aff + Y @ dZ) @ Zinv
        dY = (dY + dY.T) / 2.0

        ap = min(1.0, 0.98 * _max_step(Y, dY))
        ad = min(1.0, 0.98 * _max_step(Z, dZ))
        if min(ap, ad) < 1e-10:
            stalls += 1
            if stalls >= 3:
                break
        else:
            stalls = 0
        Y = Y + ap * dY
        Z = Z + ad * dZ
        lam = lam + ad * dlam

    Y_full = lift(Y)
    Y_full = (Y_full + Y_full.T) / 2.0
    res = problem.constraint_residuals(Y_full)
    feas = max(np.max(np.abs(res[:-1])), abs(res[-1]) / (n + k))
    pobj = float(np.vdot(problem.C, Y_full))
    dobj = float(b_kept @ lam)
    gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
    return SDPSolution(Y=Y_full, objective_value=pobj, duality_gap=gap,
                       feas_residual=float(feas), iterations=it,
                       converged=converged)


def _embed(values: np.ndarray, kept: np.ndarray, d: int) -> np.ndarray:
    full = np.zeros(d)
    full[kept] = values
    return full


def extract_feasible(sol: SDPSolution, n: int, k: int) -> FeasibleMatrix:
    """Sum the k diagonal n x n blocks of Y[1:, 1:]."""
    d = sol.Y.shape[0]
    if d != n * k + 1:
        raise SDPError(f"solution dim {d} inconsistent with (n={n}, k={k})")
    Ytilde = np.zeros((n, n))
    for blk in range(k):
        lo = 1 + blk * n
        Ytilde += sol.Y[lo:lo + n, lo:lo + n]
    return FeasibleMatrix(Ytilde=(Ytilde + Ytilde.T) / 2.0)
