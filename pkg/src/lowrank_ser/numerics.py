"""Dense numerical kernels shared by the dimensionality-reduction methods.

Everything here works on plain ``numpy`` arrays. Matrices are float64 and
assumed finite; callers validate at the boundary (see :mod:`lowrank_ser.dataio`).
"""
from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, dijkstra

from .errors import DisconnectedGraph, EigenFailure

MAX_SWEEPS = 100
OFF_TOL = 1e-11
SYM_TOL = 1e-10


@dataclass(frozen=True)
class SymmetricEigen:
    """Eigenpairs of a symmetric matrix.

    ``values`` are sorted in descending order and ``vectors[:, i]`` belongs to
    ``values[i]``. Each vector has its largest-magnitude component positive.
    """

    values: np.ndarray
    vectors: np.ndarray
    sweeps: int = 0


@dataclass(frozen=True)
class NeighborGraph:
    """Symmetrised k-nearest-neighbour graph stored as adjacency lists."""

    n: int
    k: int
    indices: tuple
    weights: tuple

    def to_dense(self, binary=False):
        W = np.zeros((self.n, self.n))
        for i, (nb, w) in enumerate(zip(self.indices, self.weights)):
            W[i, nb] = 1.0 if binary else w
        return W

    def to_csr(self):
        rows = np.repeat(np.arange(self.n), [len(nb) for nb in self.indices])
        cols = np.concatenate(self.indices) if self.n else np.empty(0, int)
        vals = np.concatenate(self.weights) if self.n else np.empty(0)
        return csr_matrix((vals, (rows, cols)), shape=(self.n, self.n))

    def degree(self):
        return np.array([len(nb) for nb in self.indices])


def pairwise_distances(X, metric="euclidean"):
    """Full ``n x n`` distance matrix between the rows of ``X``.

    ``metric`` is ``"euclidean"`` or ``"cosine"`` (``1 - cos`` similarity).
    Under the cosine metric a zero row is at distance 0 from other zero rows
    and 1 from everything else.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be 2-D")
    if metric == "euclidean":
        sq = np.einsum("ij,ij->i", X, X)
        D2 = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
        np.maximum(D2, 0.0, out=D2)
        D = np.sqrt(D2)
        # the Gram shortcut loses digits for near-duplicate rows; refine those
        close = D < 1e-6 * np.sqrt(np.maximum(sq[:, None], sq[None, :]) + 1e-300)
        if close.any():
            ii, jj = np.nonzero(close)
            D[ii, jj] = np.linalg.norm(X[ii] - X[jj], axis=1)
    elif metric == "cosine":
        norms = np.linalg.norm(X, axis=1)
        zero = norms == 0.0
        U = X / np.where(zero, 1.0, norms)[:, None]
        D = 1.0 - U @ U.T
        D[zero, :] = 1.0
        D[:, zero] = 1.0
        D[np.ix_(zero, zero)] = 0.0
        np.clip(D, 0.0, 2.0, out=D)
    else:
        raise ValueError(f"unknown metric {metric!r}")
    D = 0.5 * (D + D.T)
    np.fill_diagonal(D, 0.0)
    return D


@numba.njit(cache=True)
def _jacobi_sweeps(A, Vt, tol, max_sweeps):
    n = A.shape[0]
    for sweep in range(max_sweeps + 1):
        off = 0.0
        for p in range(n):
            for q in range(p + 1, n):
                off += A[p, q] * A[p, q]
        if np.sqrt(2.0 * off) <= tol:
            return sweep
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                app = A[p, p]
                aqq = A[q, q]
                g = 100.0 * abs(apq)
                if sweep > 3 and abs(app) + g == abs(app) and abs(aqq) + g == abs(aqq):
                    A[p, q] = 0.0
                    A[q, p] = 0.0
                    continue
                theta = (aqq - app) / (2.0 * apq)
                t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp = A[p, k]
                    akq = A[q, k]
                    A[p, k] = c * akp - s * akq
                    A[q, k] = s * akp + c * akq
                for k in range(n):
                    A[k, p] = A[p, k]
                    A[k, q] = A[q, k]
                A[p, p] = app - t * apq
                A[q, q] = aqq + t * apq
                A[p, q] = 0.0
                A[q, p] = 0.0
                for k in range(n):
                    vp = Vt[p, k]
                    vq = Vt[q, k]
                    Vt[p, k] = c * vp - s * vq
                    Vt[q, k] = s * vp + c * vq
    return -1


def eigh(A):
    """Full eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Rotations sweep the strict upper triangle row by row until the
    off-diagonal Frobenius norm drops below ``1e-11 * ||A||_F``. Raises
    :class:`EigenFailure` if that takes more than 100 sweeps, and
    ``ValueError`` if ``A`` is not symmetric to within ``1e-10``
    (relative to its largest entry).
    """
    A = np.array(A, dtype=float, copy=True)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("eigh expects a square matrix")
    n = A.shape[0]
    scale = np.abs(A).max() if A.size else 0.0
    asym = np.abs(A - A.T).max() if A.size else 0.0
    if asym > SYM_TOL * max(scale, 1.0):
        raise ValueError(f"matrix is not symmetric (max |A - A^T| = {asym:.3g})")
    A = 0.5 * (A + A.T)
    Vt = np.eye(n)
    norm = np.linalg.norm(A)
    sweeps = _jacobi_sweeps(A, Vt, OFF_TOL * norm, MAX_SWEEPS) if n > 1 else 0
    if sweeps < 0:
        raise EigenFailure(f"Jacobi eigensolver did not converge in {MAX_SWEEPS} sweeps (n={n})")
    values = np.diag(A).copy()
    order = np.argsort(-values, kind="stable")
    values = values[order]
    V = Vt[order].T.copy()
    if n:
        idx = np.argmax(np.abs(V), axis=0)
        signs = np.sign(V[idx, np.arange(n)])
        signs[signs == 0] = 1.0
        V *= signs
    return SymmetricEigen(values=values, vectors=V, sweeps=sweeps)


def knn_graph(D, k):
    """Union-symmetrised k-nearest-neighbour graph from a distance matrix.

    Ties in distance go to the smaller index. Edge weights are the
    corresponding entries of ``D``.
    """
    D = np.asarray(D, dtype=float)
    n = D.shape[0]
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must lie in [1, {n - 1}], got {k}")
    nbrs = knn_indices(D, k)
    adj = [dict() for _ in range(n)]
    for i in range(n):
        for j in nbrs[i]:
            j = int(j)
            w = D[min(i, j), max(i, j)]
            adj[i][j] = w
            adj[j][i] = w
    indices = tuple(np.array(sorted(a), dtype=int) for a in adj)
    weights = tuple(np.array([adj[i][j] for j in indices[i]], dtype=float) for i in range(n))
    return NeighborGraph(n=n, k=k, indices=indices, weights=weights)


def knn_indices(D, k, exclude_self=True):
    """Row-wise indices of the ``k`` smallest entries, ties to smaller index.

    With ``exclude_self`` the diagonal is skipped (square ``D`` only).
    """
    D = np.array(D, dtype=float, copy=True)
    if exclude_self:
        np.fill_diagonal(D, np.inf)
    # stable argsort keeps equal distances in index order
    return np.argsort(D, axis=1, kind="stable")[:, :k]


def shortest_paths(G):
    """All-pairs shortest path lengths over a :class:`NeighborGraph`.

    Runs Dijkstra from every node. A graph with more than one component
    raises :class:`DisconnectedGraph` listing the component sizes.
    """
    W = G.to_csr()
    ncomp, labels = connected_components(W, directed=False)
    if ncomp > 1:
        sizes = sorted(np.bincount(labels).tolist(), reverse=True)
        raise DisconnectedGraph(sizes)
    # explicit zero-weight edges would vanish from the sparse structure
    W.data = np.where(W.data == 0.0, 1e-300, W.data)
    P = dijkstra(W, directed=False)
    P = 0.5 * (P + P.T)
    np.fill_diagonal(P, 0.0)
    return P


def double_center(D2):
    """Gram matrix ``-1/2 J D2 J`` with ``J`` the centring projector."""
    D2 = np.asarray(D2, dtype=float)
    row = D2.mean(axis=1)
    col = D2.mean(axis=0)
    B = -0.5 * (D2 - row[:, None] - col[None, :] + D2.mean())
    B = 0.5 * (B + B.T)
    # scrub the residual row sums left by rounding
    B -= B.mean(axis=1)[:, None]
    B -= B.mean(axis=0)[None, :]
    return 0.5 * (B + B.T)


def isotonic_regression(y, w=None):
    """Weighted least-squares non-decreasing fit (pool adjacent violators)."""
    y = np.asarray(y, dtype=float)
    w = np.ones_like(y) if w is None else np.asarray(w, dtype=float)
    if w.shape != y.shape:
        raise ValueError("y and w must have the same length")
    if np.any(w <= 0):
        raise ValueError("weights must be positive")
    means, weights, counts = [], [], []
    for yi, wi in zip(y.tolist(), w.tolist()):
        m, ws, c = yi, wi, 1
        while means and means[-1] > m:
            pm, pw, pc = means.pop(), weights.pop(), counts.pop()
            tot = pw + ws
            m = (pm * pw + m * ws) / tot
            ws = tot
            c += pc
        means.append(m)
        weights.append(ws)
        counts.append(c)
    return np.repeat(np.array(means), counts)
