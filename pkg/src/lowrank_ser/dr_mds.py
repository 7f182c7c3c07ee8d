"""Stress-based MDS: SMACOF, coordinate pattern search and non-metric MDS.

All three work on a dissimilarity matrix ``D`` and minimise the raw stress
``sum_{i<j} (d_ij(Y) - D_ij)^2`` (unit weights). Non-metric MDS replaces
``D`` by isotonic disparities at each step and reports Kruskal stress-1.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dr_spectral import Embedding, cmds_fit
from .errors import DegenerateData, RankDegenerate
from .numerics import isotonic_regression, pairwise_distances


@dataclass
class MdsConfig:
    L: int = 2
    max_iter: int = 300
    rel_tol: float = 1e-6
    init: object = "cmds"  # "cmds", "random" or an (n, L) array
    seed: int | None = None
    initial_step: float | None = None  # pattern search only

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.rel_tol <= 0:
            raise ValueError("rel_tol must be positive")
        if isinstance(self.init, str) and self.init not in ("cmds", "random"):
            raise ValueError(f"unknown init {self.init!r}")
        if isinstance(self.init, str) and self.init == "random" and self.seed is None:
            raise ValueError("random init requires an explicit seed")


def raw_stress(Y, D):
    iu = np.triu_indices(len(D), 1)
    d = pairwise_distances(Y)[iu]
    return float(np.sum((d - D[iu]) ** 2))


def _check_D(D, min_n=2):
    D = np.asarray(D, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ValueError("dissimilarities must form a square matrix")
    if D.shape[0] < min_n:
        raise ValueError(f"need at least {min_n} points")
    if not np.any(D):
        raise DegenerateData("all dissimilarities are zero")
    return 0.5 * (D + D.T)


def _initial(D, cfg):
    n = D.shape[0]
    if isinstance(cfg.init, str):
        if cfg.init == "cmds":
            Y = cmds_fit(D, min(cfg.L, n - 1)).Y
            if Y.shape[1] < cfg.L:
                Y = np.hstack([Y, np.zeros((n, cfg.L - Y.shape[1]))])
        else:
            rng = np.random.default_rng(cfg.seed)
            Y = rng.standard_normal((n, cfg.L)) * D[np.triu_indices(n, 1)].mean()
    else:
        Y = np.array(cfg.init, dtype=float)
        if Y.shape != (n, cfg.L):
            raise ValueError(f"init array must have shape {(n, cfg.L)}")
    return Y - Y.mean(axis=0)


def guttman_transform(Y, D):
    """One SMACOF majorisation step ``Y <- B(Y) Y / n`` (unit weights)."""
    n = len(Y)
    d = pairwise_distances(Y)
    ratio = np.divide(D, d, out=np.zeros_like(D), where=d > 0)
    B = -ratio
    np.fill_diagonal(B, 0.0)
    np.fill_diagonal(B, -B.sum(axis=1))
    Yn = B @ Y / n
    return Yn - Yn.mean(axis=0)


def smacof_fit(D, cfg=None):
    """Metric MDS by stress majorisation.

    Returns ``(embedding, trace)`` where ``trace[0]`` is the stress of the
    initial configuration. An iterate that would raise the stress (possible
    only through rounding at convergence) is discarded and iteration stops,
    so the trace is non-increasing.
    """
    cfg = cfg or MdsConfig()
    D = _check_D(D)
    Y = _initial(D, cfg)
    trace = [raw_stress(Y, D)]
    it = 0
    while it < cfg.max_iter and trace[-1] > 0.0:
        it += 1
        Yn = guttman_transform(Y, D)
        s = raw_stress(Yn, D)
        if s > trace[-1]:
            break
        prev = trace[-1]
        Y = Yn
        trace.append(s)
        if (prev - s) / prev < cfg.rel_tol:
            break
    return Embedding(Y=Y, method="smacof", L=cfg.L, info={"iterations": it}), np.array(trace)


def pattern_search_mds_fit(D, cfg=None):
    """Derivative-free metric MDS by coordinate pattern search.

    Points are visited in index order; each tries ``+-step`` along every
    axis and keeps the best strictly improving move. A pass without
    improvement halves the step. Stops once the step falls below
    ``rel_tol * initial_step`` or after ``max_iter`` passes.
    """
    cfg = cfg or MdsConfig()
    D = _check_D(D)
    n, L = D.shape[0], cfg.L
    Y = _initial(D, cfg)
    step0 = cfg.initial_step or 0.1 * D[np.triu_indices(n, 1)].mean()
    step = step0
    moves = np.vstack([np.eye(L), -np.eye(L)])
    trace = [raw_stress(Y, D)]
    passes = 0
    while passes < cfg.max_iter and step >= cfg.rel_tol * step0 and trace[-1] > 0.0:
        passes += 1
        Yp = Y.copy()
        improved = False
        for i in range(n):
            others = np.arange(n) != i
            Zo, Do = Y[others], D[i, others]
            cur = np.sum((np.linalg.norm(Zo - Y[i], axis=1) - Do) ** 2)
            cand = Y[i] + step * moves
            dist = np.linalg.norm(cand[:, None, :] - Zo[None, :, :], axis=2)
            vals = np.sum((dist - Do) ** 2, axis=1)
            best = int(np.argmin(vals))
            if vals[best] < cur:
                Y[i] = cand[best]
                improved = True
        if improved:
            Y -= Y.mean(axis=0)
            s = raw_stress(Y, D)
            if s <= trace[-1]:
                trace.append(s)
            else:
                Y = Yp
                improved = False
        if not improved:
            step *= 0.5
    info = {"iterations": passes, "final_step": step}
    return Embedding(Y=Y, method="psmds", L=L, info=info), np.array(trace)


def disparities(dist, delta):
    """Isotonic disparities of configuration distances against the rank order of ``delta``.

    Inputs are condensed (upper-triangle) vectors. Tied dissimilarities share
    one disparity. The result is rescaled so its sum of squares matches that
    of ``dist``.
    """
    order = np.argsort(delta, kind="stable")
    ds, dl = dist[order], delta[order]
    starts = np.r_[0, np.nonzero(np.diff(dl))[0] + 1]
    counts = np.diff(np.r_[starts, len(dl)])
    means = np.add.reduceat(ds, starts) / counts
    fitted = np.repeat(isotonic_regression(means, counts.astype(float)), counts)
    out = np.empty_like(dist)
    out[order] = fitted
    ss = np.sum(out ** 2)
    if ss > 0:
        out *= np.sqrt(np.sum(dist ** 2) / ss)
    return out


def stress1(dist, dhat):
    den = np.sum(dist ** 2)
    return float(np.sqrt(np.sum((dist - dhat) ** 2) / den)) if den > 0 else 0.0


def nonmetric_mds_fit(D, cfg=None):
    """Kruskal non-metric MDS.

    Alternates isotonic disparity fitting with one Guttman step toward the
    disparities. The trace holds stress-1 per iteration.
    """
    cfg = cfg or MdsConfig()
    D = _check_D(D, min_n=3)
    n = D.shape[0]
    iu = np.triu_indices(n, 1)
    delta = D[iu]
    if np.all(delta == delta[0]):
        raise RankDegenerate("all dissimilarities are equal; rank order carries no information")
    Y = _initial(D, cfg)
    trace = []
    it = 0
    while True:
        dist = pairwise_distances(Y)[iu]
        dhat = disparities(dist, delta)
        trace.append(stress1(dist, dhat))
        if trace[-1] == 0.0 or it >= cfg.max_iter:
            break
        if len(trace) > 1 and abs(trace[-2] - trace[-1]) <= cfg.rel_tol * trace[-2]:
            break
        it += 1
        Dh = np.zeros((n, n))
        Dh[iu] = dhat
        Y = guttman_transform(Y, Dh + Dh.T)
    info = {"iterations": it, "disparities": dhat, "stress1": trace[-1]}
    return Embedding(Y=Y, method="nonmetric", L=cfg.L, info=info), np.array(trace)
