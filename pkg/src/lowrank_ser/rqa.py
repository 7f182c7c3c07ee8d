"""Recurrence quantification features computed from raw speech.

A clip is cut into short frames. Each frame is embedded by time delays,
thresholded into a recurrence plot, and summarised by eight RQA measures.
The per-frame measures are then aggregated over frames by a fixed list of
functionals.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .numerics import pairwise_distances

MEASURES = ("RR", "DET", "L_mean", "L_max", "ENTR", "LAM", "TT", "V_max")
FUNCTIONALS = ("mean", "std", "min", "max", "median", "iqr", "skewproxy")


@dataclass(frozen=True)
class RqaConfig:
    """Framing, embedding and threshold settings.

    ``epsilon_rule`` is one of ``("fixed", eps)``, ``("fraction_of_max", rho)``
    or ``("target_rr", r)``. ``delay_tau`` is a sample count or ``"auto"``.
    """

    frame_len: float = 0.025
    hop: float = 0.010
    delay_tau: object = "auto"
    d_embed: int = 3
    epsilon_rule: tuple = ("fraction_of_max", 0.15)
    l_min: int = 2
    v_min: int = 2
    functionals: tuple = FUNCTIONALS

    def __post_init__(self):
        if not self.frame_len > self.hop > 0:
            raise ValueError("need frame_len > hop > 0")
        if self.d_embed < 1:
            raise ValueError("d_embed must be >= 1")
        if self.delay_tau != "auto" and int(self.delay_tau) < 1:
            raise ValueError("delay_tau must be a positive sample count or 'auto'")
        kind, value = self.epsilon_rule
        if kind == "fixed":
            if value < 0:
                raise ValueError("fixed epsilon must be >= 0")
        elif kind in ("fraction_of_max", "target_rr"):
            if not 0 < value < 1:
                raise ValueError(f"{kind} parameter must lie in (0, 1)")
        else:
            raise ValueError(f"unknown epsilon rule {kind!r}")
        if self.l_min < 1 or self.v_min < 1:
            raise ValueError("minimum line lengths must be >= 1")
        unknown = set(self.functionals) - set(FUNCTIONALS)
        if unknown:
            raise ValueError(f"unknown functionals {sorted(unknown)}")


@dataclass(frozen=True)
class PhaseTrajectory:
    points: np.ndarray
    tau: int
    d_embed: int


@dataclass(frozen=True)
class RecurrencePlot:
    R: np.ndarray
    epsilon: float


@dataclass(frozen=True)
class RqaMeasures:
    RR: float
    DET: float
    L_mean: float
    L_max: float
    ENTR: float
    LAM: float
    TT: float
    V_max: float

    def as_array(self):
        return np.array([getattr(self, name) for name in MEASURES], dtype=float)


def time_delay_embed(frame, tau, d_embed):
    """Delay vectors ``(x_i, x_{i+tau}, ..., x_{i+(d-1)tau})``."""
    x = np.asarray(frame, dtype=float)
    span = (d_embed - 1) * tau
    if tau < 1 or d_embed < 1:
        raise ValueError("tau and d_embed must be >= 1")
    if len(x) <= span + 1:
        raise ValueError(f"frame of {len(x)} samples is too short for tau={tau}, d={d_embed}")
    nv = len(x) - span
    pts = np.stack([x[j * tau: j * tau + nv] for j in range(d_embed)], axis=1)
    return PhaseTrajectory(points=pts, tau=int(tau), d_embed=int(d_embed))


def auto_delay(frame, d_embed):
    """First zero crossing of the autocorrelation, capped at ``len(frame) // d_embed``."""
    x = np.asarray(frame, dtype=float)
    x = x - x.mean()
    cap = max(1, len(x) // d_embed)
    if not np.any(x):
        return 1
    ac = np.correlate(x, x, mode="full")[len(x) - 1:]
    below = np.nonzero(ac[1:] <= 0.0)[0]
    tau = int(below[0]) + 1 if below.size else cap
    return int(min(max(tau, 1), cap))


def resolve_epsilon(dist, rule):
    kind, value = rule
    if kind == "fixed":
        return float(value)
    n = len(dist)
    off = dist[~np.eye(n, dtype=bool)]
    if kind == "fraction_of_max":
        return float(value * off.max()) if off.size else 0.0
    return float(np.quantile(off, value)) if off.size else 0.0


def recurrence_plot(traj, cfg=None):
    """Binary plot with ``R[i, j] = 1`` iff ``||p_i - p_j|| <= epsilon``."""
    cfg = cfg or RqaConfig()
    pts = traj.points if isinstance(traj, PhaseTrajectory) else np.asarray(traj, dtype=float)
    if len(pts) < 2:
        raise ValueError("recurrence plot needs at least two phase points")
    dist = pairwise_distances(pts)
    eps = resolve_epsilon(dist, cfg.epsilon_rule)
    R = (dist <= eps).astype(np.uint8)
    np.fill_diagonal(R, 1)
    return RecurrencePlot(R=R, epsilon=eps)


@lru_cache(maxsize=8)
def _diagonal_index(n):
    # upper-triangle diagonals (offset >= 1), each followed by a zero separator
    rows, cols = [], []
    for k in range(1, n):
        i = np.arange(n - k)
        rows.append(np.r_[i, -1])
        cols.append(np.r_[i + k, -1])
    if not rows:
        return np.empty(0, int), np.empty(0, int)
    return np.concatenate(rows), np.concatenate(cols)


def _run_lengths(seq):
    """Lengths of maximal runs of ones in a 0/1 vector."""
    padded = np.r_[0, seq.astype(np.int8), 0]
    edges = np.diff(padded)
    return np.nonzero(edges == -1)[0] - np.nonzero(edges == 1)[0]


def diagonal_lines(R):
    n = len(R)
    r, c = _diagonal_index(n)
    if r.size == 0:
        return np.empty(0, int)
    seq = np.where(r >= 0, R[r, c], 0)
    return _run_lengths(seq)


def vertical_lines(R):
    V = np.array(R, dtype=np.int8, copy=True)
    np.fill_diagonal(V, 0)
    # column-major flattening with one zero row appended as separator
    seq = np.vstack([V, np.zeros((1, V.shape[1]), np.int8)]).T.ravel()
    return _run_lengths(seq)


def _line_stats(lengths, lmin):
    total = lengths.sum()
    long = lengths[lengths >= lmin]
    ratio = long.sum() / total if total > 0 else 0.0
    if long.size == 0:
        return ratio, 0.0, 0.0, 0.0
    _, counts = np.unique(long, return_counts=True)
    p = counts / counts.sum()
    entropy = float(-np.sum(p * np.log(p)))
    return float(ratio), float(long.mean()), float(long.max()), entropy


def rqa_measures(plot, cfg=None):
    """Recurrence rate, diagonal-line and vertical-line statistics.

    The main diagonal is excluded everywhere. Quantities with no qualifying
    lines fall back to 0.
    """
    cfg = cfg or RqaConfig()
    R = plot.R if isinstance(plot, RecurrencePlot) else np.asarray(plot)
    n = len(R)
    off_total = int(R.sum() - np.trace(R))
    rr = off_total / (n * n - n) if n > 1 else 0.0
    det, lmean, lmax, entr = _line_stats(diagonal_lines(R), cfg.l_min)
    lam, tt, vmax, _ = _line_stats(vertical_lines(R), cfg.v_min)
    return RqaMeasures(RR=float(rr), DET=det, L_mean=lmean, L_max=lmax, ENTR=entr,
                       LAM=lam, TT=tt, V_max=vmax)


def apply_functional(name, values):
    v = np.asarray(values, dtype=float)
    if name == "mean":
        return float(v.mean())
    if name == "std":
        return float(v.std())
    if name == "min":
        return float(v.min())
    if name == "max":
        return float(v.max())
    if name == "median":
        return float(np.median(v))
    if name == "iqr":
        q1, q3 = np.percentile(v, [25, 75])
        return float(q3 - q1)
    if name == "skewproxy":
        sd = v.std()
        return float((v.mean() - np.median(v)) / sd) if sd > 0 else 0.0
    raise ValueError(f"unknown functional {name!r}")


def feature_names(cfg=None):
    cfg = cfg or RqaConfig()
    return [f"rqa_{m}_{f}" for m in MEASURES for f in cfg.functionals]


def frame_signal(samples, sample_rate, cfg):
    flen = int(round(cfg.frame_len * sample_rate))
    hop = max(1, int(round(cfg.hop * sample_rate)))
    if len(samples) < flen:
        raise ValueError(f"clip of {len(samples)} samples is shorter than one "
                         f"{flen}-sample frame")
    starts = range(0, len(samples) - flen + 1, hop)
    return [samples[s:s + flen] for s in starts]


def frame_measures(frame, cfg):
    tau = auto_delay(frame, cfg.d_embed) if cfg.delay_tau == "auto" else int(cfg.delay_tau)
    traj = time_delay_embed(frame, tau, cfg.d_embed)
    return rqa_measures(recurrence_plot(traj, cfg), cfg).as_array()


def extract_rqa_features(clip, cfg=None):
    """Aggregate per-frame RQA measures into one feature vector.

    Returns ``(vector, names)``; names read ``rqa_<measure>_<functional>``
    and are ordered measure-major.
    """
    cfg = cfg or RqaConfig()
    frames = frame_signal(np.asarray(clip.samples, dtype=float), clip.sample_rate, cfg)
    per_frame = np.array([frame_measures(f, cfg) for f in frames])
    vec = np.array([apply_functional(fn, per_frame[:, j])
                    for j in range(len(MEASURES)) for fn in cfg.functionals])
    return vec, feature_names(cfg)
