"""Eigendecomposition-based dimensionality reduction.

PCA, classical MDS, ISOMAP, LLE, modified LLE and Laplacian eigenmaps.
Each ``*_fit`` accepts a :class:`~lowrank_ser.dataio.FeatureTable` or a plain
``(n, m)`` array and returns an :class:`Embedding`. Coordinates are only
defined up to sign/rotation; the eigensolver's sign convention makes them
reproducible.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import connected_components

from .errors import DegenerateData, DisconnectedGraph
from .numerics import (double_center, eigh, knn_graph, knn_indices,
                       pairwise_distances, shortest_paths)

DEFAULT_NEIGHBORS = 10


@dataclass
class Embedding:
    Y: np.ndarray
    method: str
    L: int
    eigenvalues: np.ndarray | None = None
    info: dict = field(default_factory=dict)


@dataclass
class LinearProjection:
    """``Y = (X - mean) @ T.T``; rows of ``T`` are orthonormal."""

    T: np.ndarray
    mean: np.ndarray
    variances: np.ndarray

    def transform(self, X):
        return (as_matrix(X) - self.mean) @ self.T.T

    def inverse_transform(self, Y):
        return np.asarray(Y) @ self.T + self.mean


def as_matrix(X):
    return np.asarray(getattr(X, "X", X), dtype=float)


def _check_L(L, upper, what):
    if not 1 <= L <= upper:
        raise ValueError(f"L must lie in [1, {upper}] ({what}), got {L}")


def pca_fit(X, L):
    """Project onto the top-``L`` eigenvectors of the sample covariance (divisor n-1)."""
    X = as_matrix(X)
    n, m = X.shape
    _check_L(L, min(n - 1, m), "min(n-1, m)")
    mean = X.mean(axis=0)
    Xc = X - mean
    if not np.any(Xc):
        raise DegenerateData("all rows are identical; PCA has no variance to explain")
    if m <= n:
        eig = eigh(Xc.T @ Xc / (n - 1))
        T = eig.vectors[:, :L].T
        var = eig.values[:L]
    else:
        # n x n Gram route when features outnumber samples
        eig = eigh(Xc @ Xc.T / (n - 1))
        var = eig.values[:L]
        T = np.zeros((L, m))
        for i in range(L):
            if var[i] > 1e-12 * eig.values[0]:
                t = Xc.T @ eig.vectors[:, i]
                T[i] = t / np.linalg.norm(t)
        T = _complete_orthonormal(T)
    var = np.maximum(var, 0.0)
    proj = LinearProjection(T=T, mean=mean, variances=var)
    Y = Xc @ T.T
    return proj, Embedding(Y=Y, method="pca", L=L, eigenvalues=var)


def _complete_orthonormal(T):
    """Fill all-zero rows of ``T`` with unit vectors orthogonal to the others."""
    L, m = T.shape
    basis = [t for t in T if np.any(t)]
    out = []
    candidates = iter(np.eye(m))
    for t in T:
        if np.any(t):
            out.append(t)
            continue
        for e in candidates:
            v = e - sum(np.dot(e, b) * b for b in basis)
            nv = np.linalg.norm(v)
            if nv > 1e-8:
                v /= nv
                basis.append(v)
                out.append(v)
                break
    return np.array(out)


def cmds_fit(D, L):
    """Classical (Torgerson) MDS of a distance matrix.

    Negative eigenvalues of the double-centred Gram matrix are clamped to 0,
    so non-euclidean axes get zero coordinates.
    """
    D = np.asarray(D, dtype=float)
    n = D.shape[0]
    _check_L(L, n - 1, "n-1")
    eig = eigh(double_center(D * D))
    lam = np.maximum(eig.values[:L], 0.0)
    Y = eig.vectors[:, :L] * np.sqrt(lam)
    return Embedding(Y=Y, method="cmds", L=L, eigenvalues=eig.values[:L])


def isomap_fit(X, L, k=DEFAULT_NEIGHBORS, metric="euclidean"):
    """Classical MDS on k-NN graph geodesic distances."""
    D = pairwise_distances(as_matrix(X), metric)
    G = knn_graph(D, k)
    try:
        P = shortest_paths(G)
    except DisconnectedGraph as exc:
        raise DisconnectedGraph(exc.component_sizes,
                                hint=f"increase the neighbour count (k={k})") from None
    emb = cmds_fit(P, L)
    emb.method = "isomap"
    return emb


def lle_regularizer(G, k, m):
    tr = np.trace(G)
    return (1e-3 * tr / k) if k > m else 1e-12 * tr


def lle_weights(X, k, neighbors=None):
    """Barycentric reconstruction weights of each row from its ``k`` neighbours.

    Returns ``(neighbors, W)`` where ``W[i]`` are the weights on
    ``X[neighbors[i]]``; every row of ``W`` sums to one.
    """
    X = as_matrix(X)
    n, m = X.shape
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must lie in [1, {n - 1}], got {k}")
    if neighbors is None:
        neighbors = knn_indices(pairwise_distances(X), k)
    W = np.empty((n, k))
    for i in range(n):
        W[i] = barycentric_weights(X[i], X[neighbors[i]], m)
    return neighbors, W


def barycentric_weights(x, Z, m=None):
    """Regularised weights ``w`` (summing to 1) with ``x ~ w @ Z``."""
    k = Z.shape[0]
    m = Z.shape[1] if m is None else m
    C = Z - x
    G = C @ C.T
    r = lle_regularizer(G, k, m)
    if r <= 0.0:
        return np.full(k, 1.0 / k)
    w = np.linalg.solve(G + r * np.eye(k), np.ones(k))
    return w / w.sum()


def _bottom_embedding(M, L, method, skip=1):
    eig = eigh(M)
    # ascending order, drop the constant vector(s)
    vals = eig.values[::-1]
    vecs = eig.vectors[:, ::-1]
    return Embedding(Y=vecs[:, skip:skip + L].copy(), method=method, L=L,
                     eigenvalues=vals[skip:skip + L].copy())


def lle_fit(X, L, k=DEFAULT_NEIGHBORS):
    """Locally linear embedding.

    Embedding coordinates are eigenvectors 2..L+1 (ascending eigenvalue) of
    ``(I - W)^T (I - W)``.
    """
    X = as_matrix(X)
    n = X.shape[0]
    _check_L(L, n - 2, "n-2")
    if L > k:
        warnings.warn(f"LLE with L={L} > k={k} neighbours is usually ill-posed",
                      RuntimeWarning, stacklevel=2)
    nbrs, w = lle_weights(X, k)
    W = np.zeros((n, n))
    np.put_along_axis(W, nbrs, w, axis=1)
    IW = np.eye(n) - W
    emb = _bottom_embedding(IW.T @ IW, L, "lle")
    emb.info["weights"] = W
    return emb


def mlle_weights(X, L, k, neighbors=None):
    """Per-point multiple weight matrices of modified LLE.

    Returns ``(neighbors, blocks)`` where ``blocks[i]`` is a ``k x s_i``
    matrix whose columns each sum to one.
    """
    X = as_matrix(X)
    n, m = X.shape
    if k < L + 1:
        raise ValueError(f"modified LLE needs k >= L + 1 (k={k}, L={L})")
    if k > n - 1:
        raise ValueError(f"k must be at most n-1={n - 1}, got {k}")
    if neighbors is None:
        neighbors = knn_indices(pairwise_distances(X), k)

    evals = np.empty((n, k))
    V = np.empty((n, k, k))
    for i in range(n):
        C = X[neighbors[i]] - X[i]
        e = eigh(C @ C.T)
        evals[i] = np.maximum(e.values, 0.0)
        V[i] = e.vectors

    reg = 1e-3 * evals.sum(axis=1)
    reg[reg == 0.0] = 1.0
    w_reg = np.empty((n, k))
    for i in range(n):
        tmp = V[i].T @ np.ones(k) / (evals[i] + reg[i])
        w = V[i] @ tmp
        w_reg[i] = w / w.sum()

    top = evals[:, :L].sum(axis=1)
    rho = np.divide(evals[:, L:].sum(axis=1), top, out=np.zeros(n), where=top > 0)
    eta = np.median(rho)

    blocks = []
    for i in range(n):
        lam = evals[i]
        s = 1
        for size in range(1, k - L + 1):
            head = lam[:k - size].sum()
            tail = lam[k - size:].sum()
            ratio = tail / head if head > 0 else (0.0 if tail == 0 else np.inf)
            if ratio > eta:
                break
            s = size
        Vi = V[i][:, k - s:]
        v1 = Vi.T @ np.ones(k)
        alpha = np.linalg.norm(v1) / np.sqrt(s)
        h = alpha * np.ones(s) - v1
        nh = np.linalg.norm(h)
        h = h / nh if nh > 1e-12 else np.zeros(s)
        Wi = Vi - 2.0 * np.outer(Vi @ h, h) + (1.0 - alpha) * w_reg[i][:, None]
        blocks.append(Wi)
    return neighbors, blocks


def mlle_fit(X, L, k=DEFAULT_NEIGHBORS):
    """Modified LLE (multiple local weight vectors per neighbourhood)."""
    X = as_matrix(X)
    n = X.shape[0]
    _check_L(L, n - 2, "n-2")
    nbrs, blocks = mlle_weights(X, L, k)
    M = np.zeros((n, n))
    for i, Wi in enumerate(blocks):
        Wh = np.zeros((n, Wi.shape[1]))
        Wh[nbrs[i]] = Wi
        Wh[i] -= 1.0
        M += Wh @ Wh.T
    emb = _bottom_embedding(0.5 * (M + M.T), L, "mlle")
    emb.info["M"] = M
    return emb


def spectral_embed_fit(X, L, k=DEFAULT_NEIGHBORS, metric="euclidean"):
    """Laplacian eigenmaps on the binary k-NN graph (normalised Laplacian)."""
    X = as_matrix(X)
    n = X.shape[0]
    _check_L(L, n - 1, "n-1")
    G = knn_graph(pairwise_distances(X, metric), k)
    W = G.to_dense(binary=True)
    ncomp, labels = connected_components(W, directed=False)
    if ncomp > 1:
        raise DisconnectedGraph(sorted(np.bincount(labels).tolist(), reverse=True),
                                hint=f"increase the neighbour count (k={k})")
    deg = W.sum(axis=1)
    dis = 1.0 / np.sqrt(deg)
    Lsym = np.eye(n) - dis[:, None] * W * dis[None, :]
    emb = _bottom_embedding(0.5 * (Lsym + Lsym.T), L, "spectral")
    emb.Y = emb.Y * dis[:, None]
    emb.info["degree"] = deg
    return emb
