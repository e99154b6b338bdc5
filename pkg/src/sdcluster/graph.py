"""Affinity matrix, degree matrix, Laplacian, and graph volume."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist, squareform


class GraphError(Exception):
    pass


@dataclass(frozen=True)
class AffinityGraph:
    """Similarity graph with W, degrees, L = D - W, and total volume."""

    W: np.ndarray
    degrees: np.ndarray
    L: np.ndarray
    vol: float
    sigma: float | None = None

    def __post_init__(self):
        for arr in (self.W, self.degrees, self.L):
            arr.setflags(write=False)

    @property
    def n(self) -> int:
        return self.W.shape[0]

    @property
    def D(self) -> np.ndarray:
        return np.diag(self.degrees)


def median_sigma(points: np.ndarray) -> float:
    """Median of all pairwise Euclidean distances."""
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None]
    if points.shape[0] < 2:
        raise GraphError("need at least two points")
    med = float(np.median(pdist(points)))
    if med <= 0.0:
        raise GraphError("all points identical: degenerate data, no usable bandwidth")
    return med


def build_affinity(points: np.ndarray, sigma: float) -> np.ndarray:
    """RBF affinity W_ij = exp(-||v_i - v_j||^2 / (2 sigma^2)); diagonal 1."""
    if sigma <= 0:
        raise GraphError("sigma must be positive")
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None]
    sq = squareform(pdist(points, "sqeuclidean"))
    W = np.exp(-sq / (2.0 * sigma * sigma))
    return (W + W.T) / 2.0


def build_graph(W: np.ndarray, sigma: float | None = None) -> AffinityGraph:
    """Degrees, Laplacian L = D - W, and volume for a symmetric nonnegative W."""
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise GraphError("W must be square")
    asym = np.max(np.abs(W - W.T)) if W.size else 0.0
    if asym > 1e-12 * max(1.0, np.max(np.abs(W))):
        raise GraphError(f"W asymmetric beyond tolerance: {asym:.3e}")
    if np.min(W) < 0:
        raise GraphError("W must be nonnegative")
    W = (W + W.T) / 2.0
    degrees = W.sum(axis=1)
    L = np.diag(degrees) - W
    return AffinityGraph(W=W, degrees=degrees, L=L, vol=float(degrees.sum()),
                         sigma=sigma)


def graph_from_points(points: np.ndarray, sigma: float | None = None) -> AffinityGraph:
    """Convenience pipeline: median bandwidth unless given, then RBF graph."""
    if sigma is None:
        sigma = median_sigma(points)
    return build_graph(build_affinity(points, sigma), sigma=sigma)


def normalize_sym(M: np.ndarray, degrees: np.ndarray) -> np.ndarray:
    """Symmetric degree normalization D^{-1/2} M D^{-1/2}."""
    degrees = np.asarray(degrees, dtype=np.float64)
    if np.any(degrees <= 0):
        raise GraphError("all degrees must be positive for normalization")
    inv_sqrt = 1.0 / np.sqrt(degrees)
    return M * np.outer(inv_sqrt, inv_sqrt)


def normalized_laplacian(graph: AffinityGraph) -> np.ndarray:
    """Symmetric normalized Laplacian I - D^{-1/2} W D^{-1/2}."""
    return np.eye(graph.n) - normalize_sym(graph.W, graph.degrees)
