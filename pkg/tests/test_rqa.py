import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lowrank_ser.dataio import AudioClip
from lowrank_ser.rqa import (FUNCTIONALS, MEASURES, RecurrencePlot, RqaConfig, apply_functional,
                             auto_delay, diagonal_lines, extract_rqa_features, feature_names,
                             recurrence_plot, rqa_measures, time_delay_embed, vertical_lines)


def oracle_plot(points, eps):
    n = len(points)
    R = np.zeros((n, n), dtype=np.uint8)
    for i in range(n):
        for j in range(n):
            R[i, j] = 1 if math.dist(points[i], points[j]) <= eps else 0
    return R


def scan_lines(R):
    """Every maximal diagonal run (upper triangle) and vertical run (main diagonal blanked)."""
    n = len(R)
    diag, vert = [], []
    for k in range(1, n):
        run = 0
        for i in range(n - k):
            if R[i][i + k]:
                run += 1
            else:
                if run:
                    diag.append(run)
                run = 0
        if run:
            diag.append(run)
    for j in range(n):
        run = 0
        for i in range(n):
            if R[i][j] and i != j:
                run += 1
            else:
                if run:
                    vert.append(run)
                run = 0
        if run:
            vert.append(run)
    return diag, vert


def oracle_measures(R, lmin=2, vmin=2):
    R = np.asarray(R).astype(int).tolist()
    n = len(R)
    diag, vert = scan_lines(R)
    off = sum(R[i][j] for i in range(n) for j in range(n) if i != j)

    def stats(lines, lo):
        keep = [x for x in lines if x >= lo]
        ratio = sum(keep) / sum(lines) if sum(lines) else 0.0
        if not keep:
            return ratio, 0.0, 0.0, 0.0
        probs = [keep.count(v) / len(keep) for v in sorted(set(keep))]
        return ratio, sum(keep) / len(keep), max(keep), -sum(p * math.log(p) for p in probs)

    det, lmean, lmax, entr = stats(diag, lmin)
    lam, tt, vmax, _ = stats(vert, vmin)
    return dict(RR=off / (n * n - n), DET=det, L_mean=lmean, L_max=lmax, ENTR=entr,
                LAM=lam, TT=tt, V_max=vmax)


def hand_plot():
    R = np.eye(6, dtype=np.uint8)
    for i, j in [(0, 2), (1, 3), (2, 4), (0, 5), (1, 5)]:
        R[i, j] = R[j, i] = 1
    return R


# embedding

def test_embed_counts():
    x = np.arange(20.0)
    t = time_delay_embed(x, 2, 3)
    assert t.points.shape == (16, 3)
    assert t.points[1].tolist() == [1.0, 3.0, 5.0]


def test_embed_d1_is_identity():
    x = np.random.default_rng(0).standard_normal(30)
    assert np.array_equal(time_delay_embed(x, 5, 1).points[:, 0], x)


def test_embed_too_short():
    with pytest.raises(ValueError):
        time_delay_embed(np.zeros(5), 2, 3)


def test_sine_quarter_period_lies_on_circle():
    period = 40
    x = np.sin(2 * np.pi * np.arange(400) / period)
    r = np.linalg.norm(time_delay_embed(x, period // 4, 2).points, axis=1)
    assert r.std() < 0.01 * r.mean()


def test_auto_delay():
    x = np.sin(2 * np.pi * np.arange(400) / 40)
    assert auto_delay(x, 3) in (10, 11)
    assert auto_delay(np.ones(50), 3) == 1
    # a slowly varying ramp never crosses zero within the cap
    assert auto_delay(np.r_[np.zeros(10), np.ones(50)], 3) <= 60 // 3


# recurrence plots

def test_large_epsilon_all_ones(rng):
    t = time_delay_embed(rng.standard_normal(50), 1, 2)
    R = recurrence_plot(t, RqaConfig(epsilon_rule=("fixed", 100.0))).R
    assert np.all(R == 1)


def test_tiny_epsilon_identity(rng):
    t = time_delay_embed(rng.standard_normal(50), 1, 2)
    R = recurrence_plot(t, RqaConfig(epsilon_rule=("fixed", 1e-9))).R
    assert np.array_equal(R, np.eye(len(R), dtype=R.dtype))


@pytest.mark.parametrize("rule", [("fixed", 0.8), ("fraction_of_max", 0.3), ("target_rr", 0.1)])
def test_plot_matches_double_loop_oracle(rule):
    pts = np.random.default_rng(3).standard_normal((40, 3))
    plot = recurrence_plot(pts, RqaConfig(epsilon_rule=rule))
    assert np.array_equal(plot.R, oracle_plot(pts.tolist(), plot.epsilon))
    if rule[0] == "fraction_of_max":
        far = max(math.dist(a, b) for a in pts for b in pts)
        assert plot.epsilon == pytest.approx(0.3 * far, rel=1e-12)


def test_target_rr_hits_rate():
    pts = np.random.default_rng(4).standard_normal((60, 2))
    m = rqa_measures(recurrence_plot(pts, RqaConfig(epsilon_rule=("target_rr", 0.2))))
    assert abs(m.RR - 0.2) < 0.01


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6), st.floats(0.01, 3.0), st.floats(0.01, 3.0))
def test_rr_monotone_in_epsilon_and_plot_symmetric(seed, e1, e2):
    pts = np.random.default_rng(seed).standard_normal((25, 2))
    lo, hi = sorted((e1, e2))
    pa = recurrence_plot(pts, RqaConfig(epsilon_rule=("fixed", lo)))
    pb = recurrence_plot(pts, RqaConfig(epsilon_rule=("fixed", hi)))
    for p in (pa, pb):
        assert np.array_equal(p.R, p.R.T) and np.all(np.diag(p.R) == 1)
    assert rqa_measures(pa).RR <= rqa_measures(pb).RR


# measures

@pytest.mark.parametrize("n", [5, 12, 40])
def test_all_ones_plot(n):
    m = rqa_measures(RecurrencePlot(np.ones((n, n), np.uint8), 1.0))
    assert m.RR == 1.0
    assert m.L_max == n - 1
    # the corner diagonal is a lone length-1 line
    assert m.DET == pytest.approx(1 - 2 / (n * (n - 1)), abs=1e-15)


def test_identity_plot():
    m = rqa_measures(RecurrencePlot(np.eye(8, dtype=np.uint8), 0.0))
    assert m.RR == 0.0 and m.DET == 0.0 and m.LAM == 0.0 and m.L_max == 0.0


def test_hand_built_plot_exact():
    R = hand_plot()
    m = rqa_measures(RecurrencePlot(R, 0.0))
    assert sorted(diagonal_lines(R).tolist()) == [1, 1, 3]
    assert sorted(vertical_lines(R).tolist()) == [1] * 8 + [2]
    expected = dict(RR=1 / 3, DET=3 / 5, L_mean=3.0, L_max=3.0, ENTR=0.0,
                    LAM=2 / 10, TT=2.0, V_max=2.0)
    assert oracle_measures(R) == pytest.approx(expected, abs=1e-15)
    for name in MEASURES:
        assert getattr(m, name) == oracle_measures(R)[name], name


@pytest.mark.parametrize("seed", range(8))
def test_random_plots_match_line_enumeration(seed):
    r = np.random.default_rng(seed)
    n = int(r.integers(2, 30))
    A = (r.random((n, n)) < r.uniform(0.1, 0.7)).astype(np.uint8)
    R = np.triu(A, 1)
    R = R + R.T + np.eye(n, dtype=np.uint8)
    lmin, vmin = int(r.integers(1, 4)), int(r.integers(1, 4))
    cfg = RqaConfig(l_min=lmin, v_min=vmin)
    m = rqa_measures(RecurrencePlot(R, 0.0), cfg)
    ref = oracle_measures(R, lmin, vmin)
    for name in MEASURES:
        assert getattr(m, name) == pytest.approx(ref[name], abs=1e-12), name


# functionals and extraction

def test_functionals():
    v = [1.0, 2.0, 3.0, 10.0]
    assert apply_functional("mean", v) == 4.0
    assert apply_functional("median", v) == 2.5
    assert apply_functional("iqr", v) == pytest.approx(np.percentile(v, 75) - np.percentile(v, 25))
    assert apply_functional("skewproxy", v) == pytest.approx(1.5 / np.std(v))
    assert apply_functional("skewproxy", [2.0, 2.0]) == 0.0


def test_feature_count_and_names():
    names = feature_names()
    assert len(names) == len(MEASURES) * len(FUNCTIONALS) == 56
    assert names[0] == "rqa_RR_mean" and names[-1] == "rqa_V_max_skewproxy"


def _clip(kind, seconds=0.3, sr=8000, seed=0):
    t = np.arange(int(seconds * sr)) / sr
    if kind == "sine":
        return AudioClip(0.5 * np.sin(2 * np.pi * 220 * t), sr)
    if kind == "noise":
        return AudioClip(np.random.default_rng(seed).uniform(-0.5, 0.5, len(t)), sr)
    return AudioClip(np.full(len(t), 0.25), sr)


def test_constant_clip_is_finite():
    vec, names = extract_rqa_features(_clip("const"))
    assert len(vec) == 56 and np.all(np.isfinite(vec))


def test_sine_more_deterministic_than_noise():
    sine, names = extract_rqa_features(_clip("sine"))
    noise, _ = extract_rqa_features(_clip("noise"))
    i = names.index("rqa_DET_mean")
    assert sine[i] > noise[i]
    assert np.all(np.isfinite(sine)) and np.all(np.isfinite(noise))


def test_extraction_deterministic():
    a, _ = extract_rqa_features(_clip("noise", seed=5))
    b, _ = extract_rqa_features(_clip("noise", seed=5))
    assert np.array_equal(a, b)


def test_short_clip_rejected():
    with pytest.raises(ValueError):
        extract_rqa_features(AudioClip(np.zeros(50), 8000))


@pytest.mark.parametrize("kwargs", [dict(frame_len=0.01, hop=0.02), dict(d_embed=0),
                                    dict(epsilon_rule=("fraction_of_max", 1.5)),
                                    dict(epsilon_rule=("bogus", 0.1)), dict(functionals=("kurt",))])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        RqaConfig(**kwargs)
