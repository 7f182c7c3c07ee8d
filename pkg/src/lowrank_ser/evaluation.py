"""Speaker-independent evaluation harness.

One fold: z-normalise with training statistics, reduce dimensionality,
choose the classifier hyper-parameter by inner cross-validation on the
training rows, then score the held-out speaker or session.
"""
from __future__ import annotations

import json
from fractions import Fraction
from dataclasses import dataclass, field

import numpy as np

from . import classify
from .dataio import FeatureTable
from .dr_spectral import barycentric_weights
from .errors import LowRankError
from .numerics import knn_indices
from .reducers import PARAMETRIC, ReducerParams, reduce

KNN_GRID = tuple(range(1, 31))
C_GRID = (0.01, 0.03, 0.1, 0.3, 1.0, 3.0, 10.0)
CLASSIFIERS = ("knn", "softmax", "svm_linear", "svm_rbf")
SCHEMES = ("lospo", "loso")
MODES = ("transductive", "oos_barycentric")


@dataclass(frozen=True)
class NormStats:
    mu: np.ndarray
    sigma: np.ndarray


@dataclass
class FoldPlan:
    scheme: str
    folds: list          # (train_idx, test_idx) pairs
    groups: list         # held-out speaker/session per fold


@dataclass
class ConfusionMatrix:
    counts: np.ndarray
    class_names: list

    @property
    def total(self):
        return int(self.counts.sum())


@dataclass
class PipelineSpec:
    dr_method: str = "pca"   # or "none" to classify the normalised features
    L: int = 10
    k: int = 10
    seed: int = 42
    metric: str = "euclidean"
    classifier: str = "knn"
    grid: tuple | None = None
    embedding_mode: str = "transductive"
    inner_folds: int = 3
    reducer: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.classifier not in CLASSIFIERS:
            raise ValueError(f"unknown classifier {self.classifier!r}")
        if self.embedding_mode not in MODES:
            raise ValueError(f"unknown embedding mode {self.embedding_mode!r}")
        if self.grid is None:
            self.grid = KNN_GRID if self.classifier == "knn" else C_GRID
        self.grid = tuple(sorted(self.grid))
        if not self.grid:
            raise ValueError("hyper-parameter grid is empty")

    def reducer_params(self):
        return ReducerParams(L=self.L, k=self.k, metric=self.metric, seed=self.seed,
                             **self.reducer)


class FoldError(LowRankError):
    def __init__(self, fold, exc):
        self.fold = fold
        self.cause = exc
        super().__init__(f"fold {fold}: {type(exc).__name__}: {exc}")


def _mat(t):
    return np.asarray(getattr(t, "X", t), dtype=float)


def zscore_fit_apply(train, test):
    """Standardise both sets with the training mean and (population) std.

    Columns with zero training spread use ``sigma = 1``.
    """
    Xtr, Xte = _mat(train), _mat(test)
    if Xtr.shape[1] != Xte.shape[1]:
        raise ValueError("train and test widths differ")
    mu = Xtr.mean(axis=0)
    sigma = Xtr.std(axis=0)
    safe = np.where(sigma > 0, sigma, 1.0)
    Ztr, Zte = (Xtr - mu) / safe, (Xte - mu) / safe
    if isinstance(train, FeatureTable):
        Ztr = train.with_features(Ztr, list(train.column_names))
    if isinstance(test, FeatureTable):
        Zte = test.with_features(Zte, list(test.column_names))
    return Ztr, Zte, NormStats(mu=mu, sigma=sigma)


def make_folds(rows, scheme):
    """One fold per distinct speaker (``lospo``) or session (``loso``), in sorted key order."""
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; use lospo or loso")
    keys = [r.speaker_id if scheme == "lospo" else r.session_id for r in rows]
    groups = sorted(set(keys))
    what = "speakers" if scheme == "lospo" else "sessions"
    if len(groups) < 2:
        raise ValueError(f"{scheme} needs at least 2 distinct {what}, found {len(groups)}")
    keys = np.array(keys, dtype=object)
    folds = [(np.flatnonzero(keys != g), np.flatnonzero(keys == g)) for g in groups]
    return FoldPlan(scheme=scheme, folds=folds, groups=groups)


def confusion_and_accuracies(truth, pred, class_names=None):
    """Confusion matrix (rows = truth), weighted and unweighted accuracy.

    Classes without truth samples do not enter the unweighted mean.
    """
    truth = np.asarray(truth, dtype=object)
    pred = np.asarray(pred, dtype=object)
    if truth.shape != pred.shape:
        raise ValueError(f"length mismatch: {len(truth)} truths, {len(pred)} predictions")
    names = list(class_names) if class_names is not None else sorted(set(truth) | set(pred))
    pos = {c: i for i, c in enumerate(names)}
    counts = np.zeros((len(names), len(names)), dtype=int)
    for t, p in zip(truth, pred):
        counts[pos[t], pos[p]] += 1
    cm = ConfusionMatrix(counts, names)
    return cm, *accuracies(counts)


def accuracies(counts):
    """``(WA, UA)`` evaluated in exact rational arithmetic, rounded once."""
    counts = np.asarray(counts, dtype=np.int64)
    total = int(counts.sum())
    wa = float(Fraction(int(np.trace(counts)), total)) if total else 0.0
    recalls = [Fraction(int(counts[c, c]), int(s))
               for c, s in enumerate(counts.sum(axis=1)) if s > 0]
    ua = float(sum(recalls) / len(recalls)) if recalls else 0.0
    return wa, ua


def inner_split(rows, n_folds):
    """Inner CV folds over training rows; grouped by speaker when there are enough."""
    speakers = [r.speaker_id for r in rows]
    uniq = sorted(set(speakers))
    n = len(rows)
    if len(uniq) >= 2:
        k = min(n_folds, len(uniq))
        slot = {s: i % k for i, s in enumerate(uniq)}
        assign = np.array([slot[s] for s in speakers])
    else:
        # single speaker: stratified round robin within each class
        labels = np.array([r.label for r in rows], dtype=object)
        assign = np.empty(n, dtype=int)
        k = n_folds
        for c in sorted(set(labels.tolist())):
            idx = np.flatnonzero(labels == c)
            assign[idx] = np.arange(len(idx)) % k
    return [(np.flatnonzero(assign != f), np.flatnonzero(assign == f))
            for f in range(k) if np.any(assign == f) and np.any(assign != f)]


def _fit_predict(clf, param, Xtr, ytr, Xte, metric="euclidean", seed=0):
    if clf == "knn":
        return classify.knn_classify(Xtr, Xte, classify.KnnConfig(int(param), metric), ytr)
    if len(set(ytr.tolist())) < 2:
        # a single-class training split can only predict that class
        return np.array([ytr[0]] * len(Xte), dtype=object)
    if clf == "softmax":
        return classify.softmax_predict(classify.softmax_train(Xtr, param, seed, ytr), Xte)[0]
    kernel = "linear" if clf == "svm_linear" else "rbf"
    return classify.svm_predict(classify.svm_train(Xtr, kernel, param, labels=ytr), Xte)[0]


def grid_search(train, spec, inner_folds=None, rows=None, labels=None):
    """Grid value with the best mean inner-CV unweighted accuracy (ties -> smaller).

    ``train`` is a :class:`FeatureTable` (or an array with ``rows`` given).
    """
    if not spec.grid:
        raise ValueError("hyper-parameter grid is empty")
    rows = train.rows if rows is None else rows
    X = _mat(train)
    y = np.array([r.label for r in rows], dtype=object) if labels is None else np.asarray(labels, dtype=object)
    if len(spec.grid) == 1:
        return spec.grid[0]
    folds = inner_split(rows, inner_folds or spec.inner_folds)
    if not folds:
        return spec.grid[0]
    names = sorted(set(y.tolist()))
    scores = {g: [] for g in spec.grid}
    for tr, te in folds:
        if spec.classifier == "knn":
            usable = [g for g in spec.grid if g <= len(tr)]
            D = classify.cross_distances(X[te], X[tr], spec.metric)
            preds = classify.knn_predict_grid(D, y[tr], usable) if usable else {}
            for g in spec.grid:
                if g in preds:
                    scores[g].append(confusion_and_accuracies(y[te], preds[g], names)[2])
                else:
                    scores[g].append(-np.inf)
        else:
            for g in spec.grid:
                p = _fit_predict(spec.classifier, g, X[tr], y[tr], X[te], spec.metric, spec.seed)
                scores[g].append(confusion_and_accuracies(y[te], p, names)[2])
    means = {g: float(np.mean(v)) for g, v in scores.items()}
    best = max(means.values())
    return min(g for g in spec.grid if means[g] == best)


@dataclass
class FoldResult:
    fold: int
    group: str
    stats: NormStats
    train_embedding: np.ndarray
    test_embedding: np.ndarray
    param: float
    truth: np.ndarray
    pred: np.ndarray


def embed_fold(Ztr, Zte, spec):
    """Reduce normalised train/test matrices according to ``spec.embedding_mode``."""
    if spec.dr_method == "none":
        return Ztr, Zte
    params = spec.reducer_params()
    if spec.embedding_mode == "transductive":
        Y = reduce(np.vstack([Ztr, Zte]), spec.dr_method, params).Y
        return Y[:len(Ztr)], Y[len(Ztr):]
    emb = reduce(Ztr, spec.dr_method, params)
    Ytr = emb.Y
    if spec.dr_method in PARAMETRIC:
        return Ytr, np.asarray(emb.info["transform"](Zte))
    return Ytr, barycentric_embed(Ztr, Ytr, Zte, spec.k)


def barycentric_embed(Xtr, Ytr, Xte, k):
    """Place each new row at the reconstruction-weighted mean of its training neighbours' codes."""
    k = min(k, len(Xtr))
    D = classify.cross_distances(Xte, Xtr)
    nbrs = knn_indices(D, k, exclude_self=False)
    out = np.empty((len(Xte), Ytr.shape[1]))
    for i in range(len(Xte)):
        w = barycentric_weights(Xte[i], Xtr[nbrs[i]])
        out[i] = w @ Ytr[nbrs[i]]
    return out


def run_fold(data, train_idx, test_idx, spec, fold=0, group=""):
    train, test = data.subset(train_idx), data.subset(test_idx)
    Ztr, Zte, stats = zscore_fit_apply(train.X, test.X)
    Ytr, Yte = embed_fold(Ztr, Zte, spec)
    ytr = train.labels
    param = grid_search(Ytr, spec, rows=train.rows, labels=ytr)
    pred = _fit_predict(spec.classifier, param, Ytr, ytr, Yte, spec.metric, spec.seed)
    return FoldResult(fold=fold, group=group, stats=stats, train_embedding=Ytr,
                      test_embedding=Yte, param=param, truth=test.labels, pred=pred)


def cross_validate(data, plan, spec, keep_folds=False):
    """Run every fold of ``plan`` and assemble the JSON-ready report.

    Aggregate WA/UA come from the confusion matrix pooled over folds.
    """
    if plan.folds:
        covered = np.sort(np.concatenate([te for _, te in plan.folds]))
        if len(covered) != data.n or np.any(covered != np.arange(data.n)):
            raise ValueError("fold plan test sets do not partition the data rows")
    names = sorted(set(data.labels.tolist()))
    per_fold, results = [], []
    total = np.zeros((len(names), len(names)), dtype=int)
    for f, ((tr, te), g) in enumerate(zip(plan.folds, plan.groups)):
        try:
            res = run_fold(data, tr, te, spec, fold=f, group=g)
        except (LowRankError, ValueError, ArithmeticError) as exc:
            raise FoldError(f, exc) from exc
        cm, wa, ua = confusion_and_accuracies(res.truth, res.pred, names)
        total += cm.counts
        per_fold.append({"fold": f, "held_out": g, "k_or_C": _num(res.param),
                         "n_test": int(len(te)), "WA": wa, "UA": ua})
        if keep_folds:
            results.append(res)
    wa, ua = accuracies(total)
    report = {
        "scheme": plan.scheme.upper() if plan.scheme != "lospo" else "LOSpO",
        "method": spec.dr_method,
        "classifier": spec.classifier,
        "L": spec.L if spec.dr_method != "none" else data.m,
        "mode": spec.embedding_mode,
        "per_fold": per_fold,
        "aggregate": {"WA": wa, "UA": ua},
        "confusion": total.tolist(),
        "class_names": names,
    }
    if keep_folds:
        return report, results
    return report


def _num(v):
    v = float(v)
    return int(v) if v.is_integer() else v


def report_json(report):
    return json.dumps(report, indent=2) + "\n"
