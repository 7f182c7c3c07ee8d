"""Name-based dispatch over every dimensionality-reduction method."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autoencoder as ae
from .dr_mds import MdsConfig, nonmetric_mds_fit, pattern_search_mds_fit, smacof_fit
from .dr_spectral import (DEFAULT_NEIGHBORS, as_matrix, cmds_fit, isomap_fit, lle_fit,
                          mlle_fit, pca_fit, spectral_embed_fit)
from .numerics import pairwise_distances

METHODS = ("pca", "cmds", "smacof", "psmds", "nonmetric", "isomap", "lle", "mlle",
           "spectral", "autoencoder")
# methods that learn an explicit map and can embed unseen rows directly
PARAMETRIC = ("pca", "autoencoder")


@dataclass
class ReducerParams:
    L: int = 2
    k: int = DEFAULT_NEIGHBORS
    metric: str = "euclidean"
    seed: int = 42
    max_iter: int = 300
    rel_tol: float = 1e-6
    mds_init: str = "cmds"
    ae_epochs: int = 200
    ae_lr: float = 1e-3
    ae_batch: int = 32
    ae_activation: str = "relu"
    extra: dict = field(default_factory=dict)


def reduce(X, method, params=None):
    """Embed the rows of ``X`` with ``method``; returns an :class:`Embedding`.

    For parametric methods ``info["transform"]`` maps new rows into the
    same space.
    """
    p = params or ReducerParams()
    X = as_matrix(X)
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    mds = MdsConfig(L=p.L, max_iter=p.max_iter, rel_tol=p.rel_tol, init=p.mds_init,
                    seed=p.seed)
    if method == "pca":
        proj, emb = pca_fit(X, p.L)
        emb.info["transform"] = proj.transform
    elif method == "cmds":
        emb = cmds_fit(pairwise_distances(X, p.metric), p.L)
    elif method == "smacof":
        emb, trace = smacof_fit(pairwise_distances(X, p.metric), mds)
        emb.info["stress"] = trace
    elif method == "psmds":
        emb, trace = pattern_search_mds_fit(pairwise_distances(X, p.metric), mds)
        emb.info["stress"] = trace
    elif method == "nonmetric":
        emb, trace = nonmetric_mds_fit(pairwise_distances(X, p.metric), mds)
        emb.info["stress"] = trace
    elif method == "isomap":
        emb = isomap_fit(X, p.L, p.k, p.metric)
    elif method == "lle":
        emb = lle_fit(X, p.L, p.k)
    elif method == "mlle":
        emb = mlle_fit(X, p.L, p.k)
    elif method == "spectral":
        emb = spectral_embed_fit(X, p.L, p.k, p.metric)
    else:
        cfg = ae.TrainConfig(learning_rate=p.ae_lr, batch_size=p.ae_batch,
                             epochs=p.ae_epochs, seed=p.seed)
        emb = ae.autoencoder_fit(X, p.L, cfg, activation=p.ae_activation)
        params_, spec = emb.info["params"], emb.info["spec"]
        emb.info["transform"] = lambda Z: ae.encode(params_, spec, Z).Y
    emb.method = method
    return emb


def column_names(L):
    return [f"dim{j}" for j in range(L)]


def embedding_table(table, emb):
    """Attach embedding coordinates to ``table``'s utterance metadata."""
    return table.with_features(np.asarray(emb.Y), column_names(emb.Y.shape[1]))
