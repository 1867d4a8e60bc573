"""Reference reductions to 2-D: PCA, Laplacian-kernel PCA and Isomap.

All three are deterministic. Output columns are sign-normalized so that the
largest-magnitude entry of each column is positive.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, dijkstra

from .embedding import Embedding
from .errors import DegenerateKernelError, DisconnectedGraphError, InvalidKError, RankDeficientError
from .tsne import pairwise_distances

log = logging.getLogger(__name__)

DENSE_EIG_WARN_N = 3000
# eigenvalues below this (times N) count as zero for unit-diagonal kernels
KERNEL_EIG_TOL = 1e-9


def _fix_signs(Y, *companions):
    """Flip columns so the largest-magnitude entry of each column of Y is positive."""
    idx = np.argmax(np.abs(Y), axis=0)
    signs = np.sign(Y[idx, np.arange(Y.shape[1])])
    signs[signs == 0] = 1.0
    return (Y * signs,) + tuple(c * signs for c in companions)


def _top_eigenpairs(M, k=2):
    n = M.shape[0]
    if n > DENSE_EIG_WARN_N:
        log.warning("dense eigendecomposition of a %d x %d matrix; this is O(N^3)", n, n)
    evals, evecs = np.linalg.eigh(M)
    order = np.argsort(evals)[::-1][:k]
    return evals[order], evecs[:, order]


@dataclass(frozen=True, eq=False)
class PcaModel:
    projection: np.ndarray  # F x 2, orthonormal columns
    singular_values: np.ndarray
    mean: np.ndarray

    def transform(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.mean) @ self.projection


def pca_fit_transform(X):
    """Centre ``X`` and project it on its two leading right singular vectors.

    Returns ``(PcaModel, Y)``. Rank-1 data is accepted (the second column is
    then numerically zero); data with every row identical raises
    :class:`RankDeficientError`.
    """
    X = np.asarray(X, dtype=np.float64)
    n, F = X.shape
    if n < 3:
        raise ValueError("PCA needs at least 3 observations")
    if F < 2:
        raise RankDeficientError("need at least 2 features for a 2-D projection")
    mean = X.mean(axis=0)
    Xc = X - mean
    _, s, Vt = np.linalg.svd(Xc, full_matrices=False)
    if s[0] <= np.finfo(float).eps * max(n, F) * max(1.0, np.abs(X).max()):
        raise RankDeficientError("all observations coincide; nothing to project")
    Q = Vt[:2].T
    Y, Q = _fix_signs(Xc @ Q, Q)
    return PcaModel(projection=Q, singular_values=s[:2].copy(), mean=mean), Y


def laplacian_kernel(X, gamma: float, metric: str = "euclidean") -> np.ndarray:
    """``K_ij = exp(-gamma * |x_i - x_j|)``."""
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    return np.exp(-gamma * pairwise_distances(X, metric))


def _double_center(M):
    row = M.mean(axis=1, keepdims=True)
    col = M.mean(axis=0, keepdims=True)
    return M - row - col + M.mean()


def _first_occurrence(X):
    _, first, inverse = np.unique(X, axis=0, return_index=True, return_inverse=True)
    return first[inverse.reshape(-1)]


def kernel_pca_fit_transform(X, gamma: float = 0.1, metric: str = "euclidean") -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    Kc = _double_center(laplacian_kernel(X, gamma, metric))
    evals, evecs = _top_eigenpairs(Kc)
    if np.any(evals <= KERNEL_EIG_TOL * n):
        raise DegenerateKernelError(f"leading centred-kernel eigenvalues {evals} are not positive")
    Y = Kc @ (evecs / np.sqrt(evals))
    Y = Y[_first_occurrence(X)]  # duplicates share coordinates exactly
    return _fix_signs(Y)[0]


@dataclass(frozen=True, eq=False)
class GeodesicGraph:
    adjacency: csr_matrix
    distances: np.ndarray


def knn_graph(X, k: int) -> csr_matrix:
    """Symmetric k-NN graph: edge (i, j) if either is among the other's k nearest."""
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if not 1 <= k < n:
        raise InvalidKError(f"k_neighbors must be in [1, N-1] = [1, {n - 1}], got {k}")
    D = pairwise_distances(X, "euclidean")
    order = np.argsort(D + np.diag(np.full(n, np.inf)), axis=1, kind="stable")[:, :k]
    E = np.zeros((n, n), dtype=bool)
    E[np.repeat(np.arange(n), k), order.reshape(-1)] = True
    E |= E.T
    r, c = np.nonzero(E)
    # built from explicit entries so zero-length edges between duplicate points survive
    return csr_matrix((D[r, c], (r, c)), shape=(n, n))


def shortest_paths(adjacency) -> np.ndarray:
    """All-pairs shortest path lengths (Dijkstra from every source); inf if unreachable."""
    return dijkstra(csr_matrix(adjacency), directed=False)


def geodesic_graph(X, k: int) -> GeodesicGraph:
    A = knn_graph(X, k)
    n_comp, labels = connected_components(A, directed=False)
    if n_comp > 1:
        sizes = np.bincount(labels).tolist()
        raise DisconnectedGraphError(
            f"k-NN graph with k={k} has {n_comp} components (sizes {sizes}); raise k", sizes)
    return GeodesicGraph(adjacency=A, distances=shortest_paths(A))


def classical_mds(D) -> np.ndarray:
    """2-D classical scaling of a distance matrix."""
    D = np.asarray(D, dtype=np.float64)
    B = -0.5 * _double_center(D * D)
    evals, evecs = _top_eigenpairs(B)
    if evals[0] <= 0:
        raise DegenerateKernelError("distance matrix has no positive spectral component")
    return _fix_signs(evecs * np.sqrt(np.maximum(evals, 0.0)))[0]


def isomap_fit_transform(X, k_neighbors: int = 15) -> np.ndarray:
    return classical_mds(geodesic_graph(X, k_neighbors).distances)


def embed_baseline(X, technique: str, **params) -> Embedding:
    """Run one baseline and wrap the result as an :class:`Embedding`."""
    if technique == "pca":
        model, Y = pca_fit_transform(X)
        params = {"singular_values": model.singular_values.tolist()}
    elif technique == "kpca":
        params = {"gamma": params.get("gamma", 0.1), "metric": params.get("metric", "euclidean")}
        Y = kernel_pca_fit_transform(X, **params)
    elif technique == "isomap":
        params = {"k_neighbors": params.get("k_neighbors", 15)}
        Y = isomap_fit_transform(X, **params)
    else:
        raise ValueError(f"unknown baseline technique {technique!r}")
    return Embedding(y=Y, technique=technique, params=params)
