import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lowrank_ser.errors import DisconnectedGraph
from lowrank_ser.numerics import (NeighborGraph, double_center, eigh, isotonic_regression,
                                  knn_graph, pairwise_distances, shortest_paths)

finite = st.floats(-100, 100, allow_nan=False, allow_infinity=False)


def floyd_warshall(W):
    n = len(W)
    d = np.where(W > 0, W, np.inf)
    np.fill_diagonal(d, 0.0)
    for m in range(n):
        for i in range(n):
            for j in range(n):
                if d[i, m] + d[m, j] < d[i, j]:
                    d[i, j] = d[i, m] + d[m, j]
    return d


def graph_from_dense(W):
    idx = tuple(np.flatnonzero(row) for row in W)
    return NeighborGraph(n=len(W), k=1, indices=idx,
                         weights=tuple(W[i, nb] for i, nb in enumerate(idx)))


# pairwise_distances

def test_duplicate_rows_have_zero_distance(rng):
    x = rng.standard_normal(7) * 1e3
    D = pairwise_distances(np.vstack([x, rng.standard_normal(7), x]))
    assert D[0, 2] == 0.0 and D[2, 0] == 0.0


def test_three_four_five():
    D = pairwise_distances(np.array([[0.0, 0.0], [3.0, 4.0]]))
    assert D[0, 1] == pytest.approx(5.0, abs=1e-12)


def test_cosine_orthogonal_and_zero_rows():
    D = pairwise_distances(np.array([[1.0, 0], [0, 1.0], [0, 0], [0, 0], [2.0, 0]]), "cosine")
    assert D[0, 1] == pytest.approx(1.0)
    assert D[2, 3] == 0.0
    assert D[2, 0] == 1.0 and D[2, 1] == 1.0
    assert D[0, 4] == pytest.approx(0.0, abs=1e-12)


def test_distance_matrix_contract(rng):
    D = pairwise_distances(rng.standard_normal((30, 5)))
    assert np.all(np.diag(D) == 0)
    assert np.allclose(D, D.T, atol=1e-12, rtol=0)
    assert np.all(D >= 0)


def test_matches_direct_norms(rng):
    X = rng.standard_normal((25, 6)) + 10
    ref = np.array([[np.sqrt(np.sum((a - b) ** 2)) for b in X] for a in X])
    assert np.allclose(pairwise_distances(X), ref, atol=1e-10)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (3, 4), elements=finite))
def test_triangle_inequality(P):
    D = pairwise_distances(P)
    for i, j, l in itertools.permutations(range(3)):
        assert D[i, j] <= D[i, l] + D[l, j] + 1e-10


# eigh

def test_eigh_identity():
    e = eigh(np.eye(3))
    assert np.allclose(e.values, 1.0)


def test_eigh_two_by_two_closed_form():
    e = eigh(np.array([[2.0, 1.0], [1.0, 2.0]]))
    assert np.allclose(e.values, [3.0, 1.0], atol=1e-12)
    v1 = np.array([1.0, 1.0]) / np.sqrt(2)
    v2 = np.array([1.0, -1.0]) / np.sqrt(2)
    assert abs(abs(e.vectors[:, 0] @ v1) - 1) < 1e-12
    assert abs(abs(e.vectors[:, 1] @ v2) - 1) < 1e-12


@pytest.mark.parametrize("n", [1, 2, 5, 12, 40])
def test_eigh_reconstruction_and_orthonormality(n):
    r = np.random.default_rng(n)
    A = r.standard_normal((n, n))
    A = A + A.T
    e = eigh(A)
    V, lam = e.vectors, e.values
    assert np.linalg.norm(V @ np.diag(lam) @ V.T - A) < 1e-8
    assert np.allclose(V.T @ V, np.eye(n), atol=1e-10)
    assert abs(lam.sum() - np.trace(A)) < 1e-8
    assert np.all(np.diff(lam) <= 0)
    scale = np.abs(A).max()
    assert np.all(np.linalg.norm(A @ V - V * lam, axis=0) <= 1e-8 * max(scale, 1) * n)


def test_eigh_sign_convention_and_determinism(rng):
    A = rng.standard_normal((9, 9))
    A = A @ A.T
    e1, e2 = eigh(A), eigh(A.copy())
    assert np.array_equal(e1.vectors, e2.vectors)
    big = e1.vectors[np.argmax(np.abs(e1.vectors), axis=0), np.arange(9)]
    assert np.all(big > 0)


def test_eigh_rejects_asymmetric():
    with pytest.raises(ValueError):
        eigh(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_eigh_matches_characteristic_roots_3x3():
    A = np.array([[4.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 2.0]])
    # roots of det(A - xI) via its polynomial coefficients
    roots = np.sort(np.roots(np.poly(A)).real)[::-1]
    assert np.allclose(eigh(A).values, roots, atol=1e-10)


# knn_graph

@pytest.mark.parametrize("xs", [[0.0, 1.0, 2.0], [0.0, 1.0, 2.5]])
def test_collinear_middle_gets_two_edges(xs):
    G = knn_graph(pairwise_distances(np.array(xs)[:, None]), 1)
    assert list(G.indices[1]) == [0, 2]
    assert list(G.indices[0]) == [1] and list(G.indices[2]) == [1]


def test_full_k_is_complete(rng):
    G = knn_graph(pairwise_distances(rng.standard_normal((6, 2))), 5)
    assert all(len(nb) == 5 for nb in G.indices)


def test_knn_matches_full_sort_oracle(rng):
    X = rng.standard_normal((20, 3))
    D = pairwise_distances(X)
    G = knn_graph(D, 4)
    A = G.to_dense(binary=True)
    for i in range(20):
        order = sorted((D[i, j], j) for j in range(20) if j != i)
        top = {j for _, j in order[:4]}
        assert top <= set(np.flatnonzero(A[i]))
    # symmetric, no self loops, weights from D
    W = G.to_dense()
    assert np.array_equal(W, W.T)
    assert np.all(np.diag(A) == 0)
    assert np.allclose(W[A > 0], D[A > 0])


def test_knn_ties_go_to_smaller_index():
    D = np.array([[0, 1, 1, 1], [1, 0, 2, 2], [1, 2, 0, 2], [1, 2, 2, 0.0]])
    G = knn_graph(D, 1)
    assert list(G.indices[3]) == [0]
    assert list(G.indices[0]) == [1, 2, 3]


@pytest.mark.parametrize("k", [0, 4])
def test_knn_k_out_of_range(k):
    with pytest.raises(ValueError):
        knn_graph(np.zeros((4, 4)), k)


# shortest_paths

def test_path_graph():
    W = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0.0]])
    assert shortest_paths(graph_from_dense(W))[0, 2] == 2.0


def test_two_components_raise():
    W = np.zeros((5, 5))
    W[0, 1] = W[1, 0] = 1
    W[2, 3] = W[3, 2] = W[3, 4] = W[4, 3] = 1
    with pytest.raises(DisconnectedGraph) as exc:
        shortest_paths(graph_from_dense(W))
    assert exc.value.component_sizes == [3, 2]


def test_matches_floyd_warshall(rng):
    n = 15
    W = np.zeros((n, n))
    for i in range(1, n):  # random spanning tree keeps it connected
        j = rng.integers(i)
        W[i, j] = W[j, i] = rng.uniform(0.1, 3)
    for _ in range(20):
        i, j = rng.choice(n, 2, replace=False)
        W[i, j] = W[j, i] = rng.uniform(0.1, 3)
    P = shortest_paths(graph_from_dense(W))
    assert np.allclose(P, floyd_warshall(W), atol=1e-12, rtol=0)
    for i, j, l in itertools.product(range(n), repeat=3):
        assert P[i, j] <= P[i, l] + P[l, j] + 1e-10


# double_center

def test_double_center_zero():
    assert np.array_equal(double_center(np.zeros((4, 4))), np.zeros((4, 4)))


def test_double_center_two_points():
    B = double_center(np.array([[0.0, 4.0], [4.0, 0.0]]))
    assert np.allclose(B, [[1, -1], [-1, 1]], atol=1e-14)


def test_double_center_collinear_rank_one():
    x = np.array([0.0, 1.0, 3.0, 4.5, 7.0])
    B = double_center((x[:, None] - x[None, :]) ** 2)
    lam = eigh(B).values
    assert abs(lam[1]) < 1e-9 * lam[0]


def test_double_center_row_sums(rng):
    D = pairwise_distances(rng.standard_normal((20, 4)) * 50)
    B = double_center(D ** 2)
    assert np.max(np.abs(B.sum(axis=0))) < 1e-10
    assert np.max(np.abs(B.sum(axis=1))) < 1e-10
    assert np.array_equal(B, B.T)


# isotonic regression

def brute_force_isotonic(y, w):
    """Best non-decreasing block-means fit over every contiguous partition."""
    n = len(y)
    best, best_cost = None, np.inf
    for cuts in itertools.product([0, 1], repeat=n - 1):
        bounds = [0] + [i + 1 for i, c in enumerate(cuts) if c] + [n]
        vals = []
        for a, b in zip(bounds[:-1], bounds[1:]):
            vals.append(np.dot(w[a:b], y[a:b]) / w[a:b].sum())
        if any(u > v + 1e-15 for u, v in zip(vals, vals[1:])):
            continue
        fit = np.concatenate([[v] * (b - a) for v, a, b in zip(vals, bounds[:-1], bounds[1:])])
        cost = np.dot(w, (fit - y) ** 2)
        if cost < best_cost:
            best, best_cost = fit, cost
    return best


def test_isotonic_sorted_unchanged():
    y = np.array([1.0, 2.0, 2.0, 5.0])
    assert np.array_equal(isotonic_regression(y), y)


def test_isotonic_pair():
    assert np.allclose(isotonic_regression([3.0, 1.0]), [2.0, 2.0])


@pytest.mark.parametrize("seed", range(10))
def test_isotonic_matches_block_partition_oracle(seed):
    r = np.random.default_rng(seed)
    y = r.standard_normal(8)
    w = r.uniform(0.5, 2.0, 8) if seed % 2 else np.ones(8)
    assert np.allclose(isotonic_regression(y, w), brute_force_isotonic(y, w), atol=1e-8)


def test_isotonic_rejects_bad_weights():
    with pytest.raises(ValueError):
        isotonic_regression([1.0, 2.0], [1.0, 0.0])
    with pytest.raises(ValueError):
        isotonic_regression([1.0, 2.0], [1.0])


@settings(max_examples=100, deadline=None)
@given(st.lists(finite, min_size=1, max_size=30))
def test_isotonic_properties(y):
    y = np.array(y)
    out = isotonic_regression(y)
    assert np.all(np.diff(out) >= -1e-9)
    # every run of equal fitted values is the mean of its inputs
    start = 0
    for i in range(1, len(y) + 1):
        if i == len(y) or out[i] != out[start]:
            assert out[start] == pytest.approx(y[start:i].mean(), abs=1e-8)
            start = i
