"""Classifiers: k-nearest neighbours, softmax regression and one-vs-rest SVM (SMO)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dr_spectral import as_matrix
from .errors import NotConverged, SingleClass
from .numerics import knn_indices


def _labels(y):
    return np.asarray(getattr(y, "labels", y), dtype=object)


def _check_width(X, m):
    if X.ndim != 2 or X.shape[1] != m:
        raise ValueError(f"feature width {X.shape[-1]} does not match model width {m}")


# ---------------------------------------------------------------- kNN

@dataclass(frozen=True)
class KnnConfig:
    k: int = 1
    metric: str = "euclidean"


def cross_distances(A, B, metric="euclidean"):
    """Distances between rows of ``A`` (queries) and rows of ``B``."""
    A, B = as_matrix(A), as_matrix(B)
    if metric == "euclidean":
        d2 = (np.einsum("ij,ij->i", A, A)[:, None] + np.einsum("ij,ij->i", B, B)[None, :]
              - 2.0 * A @ B.T)
        return np.sqrt(np.maximum(d2, 0.0))
    if metric == "cosine":
        na, nb = np.linalg.norm(A, axis=1), np.linalg.norm(B, axis=1)
        Ua = A / np.where(na == 0, 1.0, na)[:, None]
        Ub = B / np.where(nb == 0, 1.0, nb)[:, None]
        D = 1.0 - Ua @ Ub.T
        D[na == 0, :] = 1.0
        D[:, nb == 0] = 1.0
        D[np.ix_(na == 0, nb == 0)] = 0.0
        return np.clip(D, 0.0, 2.0)
    raise ValueError(f"unknown metric {metric!r}")


def knn_vote(dist_row, nbrs, labels):
    """Majority label among ``nbrs``; ties by inverse-distance mass, then name."""
    tally = {}
    for j in nbrs:
        c = labels[j]
        cnt, mass = tally.get(c, (0, 0.0))
        tally[c] = (cnt + 1, mass + 1.0 / (dist_row[j] + 1e-12))
    return min(tally, key=lambda c: (-tally[c][0], -tally[c][1], c))


def knn_predict_distances(D, train_labels, k):
    """kNN prediction from a precomputed ``(n_test, n_train)`` distance matrix."""
    labels = _labels(train_labels)
    n_train = D.shape[1]
    if not 1 <= k <= n_train:
        raise ValueError(f"k must lie in [1, {n_train}], got {k}")
    nbrs = knn_indices(D, k, exclude_self=False)
    return np.array([knn_vote(D[i], nbrs[i], labels) for i in range(len(D))], dtype=object)


def knn_classify(train, test, cfg, train_labels=None):
    """Label each test row by vote among its ``cfg.k`` nearest training rows.

    Distance ties prefer the smaller training index.
    """
    Xtr, Xte = as_matrix(train), as_matrix(test)
    if len(Xtr) == 0:
        raise ValueError("training set is empty")
    _check_width(Xte, Xtr.shape[1])
    labels = _labels(train if train_labels is None else train_labels)
    return knn_predict_distances(cross_distances(Xte, Xtr, cfg.metric), labels, cfg.k)


def knn_predict_grid(D, train_labels, ks):
    """Predictions for several ``k`` sharing one neighbour ordering."""
    labels = _labels(train_labels)
    kmax = max(ks)
    nbrs = knn_indices(D, kmax, exclude_self=False)
    return {k: np.array([knn_vote(D[i], nbrs[i, :k], labels) for i in range(len(D))],
                        dtype=object) for k in ks}


# ---------------------------------------------------------------- softmax regression

@dataclass
class SoftmaxModel:
    W: np.ndarray
    b: np.ndarray
    C: float
    classes: list
    iterations: int = 0
    grad_norm: float = 0.0


def _softmax(Z):
    Z = Z - Z.max(axis=1, keepdims=True)
    E = np.exp(Z)
    return E / E.sum(axis=1, keepdims=True)


def softmax_objective(W, b, X, Y, C):
    """Mean cross-entropy plus ``||W||^2 / (2C)``, with its gradients."""
    n = len(X)
    Z = X @ W.T + b
    Zs = Z - Z.max(axis=1, keepdims=True)
    logp = Zs - np.log(np.exp(Zs).sum(axis=1, keepdims=True))
    f = -np.sum(Y * logp) / n + np.sum(W * W) / (2.0 * C)
    G = (np.exp(logp) - Y) / n
    gW = G.T @ X + W / C
    gb = G.sum(axis=0)
    return f, gW, gb


def softmax_train(train, C, seed=0, labels=None, max_iter=5000, gtol=1e-6):
    """Full-batch gradient descent with Armijo backtracking from ``W = 0``.

    ``seed`` has no effect (the start point is fixed); it is accepted for
    symmetry with the other trainers.
    """
    X = as_matrix(train)
    y = _labels(train if labels is None else labels)
    classes = sorted(set(y.tolist()))
    if len(classes) < 2:
        raise SingleClass(f"softmax regression needs >= 2 classes, got {classes}")
    Y = (y[:, None] == np.array(classes, dtype=object)[None, :]).astype(float)
    W = np.zeros((len(classes), X.shape[1]))
    b = np.zeros(len(classes))
    f, gW, gb = softmax_objective(W, b, X, Y, C)
    step = 1.0
    it = 0
    gnorm = np.sqrt(np.sum(gW ** 2) + np.sum(gb ** 2))
    while it < max_iter and gnorm >= gtol:
        it += 1
        g2 = gnorm ** 2
        while True:
            Wn, bn = W - step * gW, b - step * gb
            fn, gWn, gbn = softmax_objective(Wn, bn, X, Y, C)
            if fn <= f - 0.5 * step * g2 or step < 1e-20:
                break
            step *= 0.5
        if fn > f:
            break
        W, b, f, gW, gb = Wn, bn, fn, gWn, gbn
        gnorm = np.sqrt(np.sum(gW ** 2) + np.sum(gb ** 2))
        step *= 2.0
    return SoftmaxModel(W=W, b=b, C=C, classes=classes, iterations=it, grad_norm=float(gnorm))


def softmax_predict(model, X):
    """Return ``(labels, probabilities)``; columns of the latter follow ``model.classes``."""
    X = as_matrix(X)
    _check_width(X, model.W.shape[1])
    P = _softmax(X @ model.W.T + model.b)
    labels = np.array(model.classes, dtype=object)[np.argmax(P, axis=1)]
    return labels, P


# ---------------------------------------------------------------- SVM

@dataclass
class BinarySvm:
    coef: np.ndarray      # alpha_i * y_i for the support vectors
    support: np.ndarray   # indices into the training rows
    intercept: float
    alpha: np.ndarray     # full dual vector
    y: np.ndarray
    iterations: int


@dataclass
class SvmModel:
    classes: list
    machines: list
    X: np.ndarray
    kernel: str
    gamma: float
    C: float

    def support_vectors(self, c):
        m = self.machines[self.classes.index(c)]
        return self.X[m.support]


def kernel_matrix(A, B, kernel, gamma):
    if kernel == "linear":
        return A @ B.T
    if kernel == "rbf":
        d2 = (np.einsum("ij,ij->i", A, A)[:, None] + np.einsum("ij,ij->i", B, B)[None, :]
              - 2.0 * A @ B.T)
        return np.exp(-gamma * np.maximum(d2, 0.0))
    raise ValueError(f"unknown kernel {kernel!r}")


def default_gamma(X):
    v = X.var()
    return 1.0 / (X.shape[1] * v) if v > 0 else 1.0


def smo_solve(K, y, C, tol=1e-3, max_iter=None):
    """Binary soft-margin SVM dual by SMO with maximal-violating-pair selection.

    ``y`` holds +-1. Stops when the KKT gap ``max(-y g)_up - min(-y g)_low``
    drops below ``tol``; raises :class:`NotConverged` otherwise.
    """
    n = len(y)
    max_iter = max_iter or max(10000, 100 * n)
    alpha = np.zeros(n)
    grad = -np.ones(n)  # gradient of 0.5 a'Qa - 1'a
    Kd = np.diag(K)
    for it in range(max_iter):
        yg = -y * grad
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        if not up.any() or not low.any():
            break
        i = int(np.flatnonzero(up)[np.argmax(yg[up])])
        j = int(np.flatnonzero(low)[np.argmin(yg[low])])
        if yg[i] - yg[j] < tol:
            break
        eta = Kd[i] + Kd[j] - 2.0 * K[i, j]
        eta = max(eta, 1e-12)
        # move along y_i e_i - y_j e_j
        t = (yg[i] - yg[j]) / eta
        ti = C - alpha[i] if y[i] > 0 else alpha[i]
        tj = alpha[j] if y[j] > 0 else C - alpha[j]
        t = min(t, ti, tj)
        di, dj = y[i] * t, -y[j] * t
        alpha[i] += di
        alpha[j] += dj
        alpha[i] = min(max(alpha[i], 0.0), C)
        alpha[j] = min(max(alpha[j], 0.0), C)
        grad += y * (K[:, i] * y[i] * di + K[:, j] * y[j] * dj)
    else:
        raise NotConverged(f"SMO did not reach KKT tolerance {tol} in {max_iter} iterations")
    yg = -y * grad
    free = (alpha > 1e-12) & (alpha < C - 1e-12)
    if free.any():
        b = float(np.mean(yg[free]))
    else:
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        hi = yg[up].max() if up.any() else yg.max()
        lo = yg[low].min() if low.any() else yg.min()
        b = 0.5 * (hi + lo)
    return alpha, b, it


def svm_train(train, kernel="linear", C=1.0, gamma=None, labels=None, tol=1e-3):
    """One-vs-rest SVM; each binary problem is solved by :func:`smo_solve`."""
    X = as_matrix(train)
    y = _labels(train if labels is None else labels)
    classes = sorted(set(y.tolist()))
    if len(classes) < 2:
        raise SingleClass(f"SVM needs >= 2 classes, got {classes}")
    if kernel == "rbf" and gamma is None:
        gamma = default_gamma(X)
    K = kernel_matrix(X, X, kernel, gamma)
    # two classes need one machine; the second is its mirror image
    targets = classes if len(classes) > 2 else classes[1:]
    machines = []
    for c in targets:
        yb = np.where(y == c, 1.0, -1.0)
        alpha, b, it = smo_solve(K, yb, C, tol)
        sv = np.flatnonzero(alpha > 0)
        machines.append(BinarySvm(coef=alpha[sv] * yb[sv], support=sv, intercept=b,
                                  alpha=alpha, y=yb, iterations=it))
    return SvmModel(classes=classes, machines=machines, X=X, kernel=kernel,
                    gamma=gamma, C=C)


def svm_decision(model, X):
    X = as_matrix(X)
    _check_width(X, model.X.shape[1])
    cols = []
    for m in model.machines:
        K = kernel_matrix(X, model.X[m.support], model.kernel, model.gamma)
        cols.append(K @ m.coef + m.intercept)
    F = np.column_stack(cols)
    if len(model.classes) == 2:
        F = np.column_stack([-F[:, 0], F[:, 0]])
    return F


def svm_predict(model, X):
    """Return ``(labels, decision values)``; ties go to the smaller class name."""
    F = svm_decision(model, X)
    # argmax returns the first maximum and classes are sorted
    labels = np.array(model.classes, dtype=object)[np.argmax(F, axis=1)]
    return labels, F
