"""Lattice LPP: sampling, path weights, last-passage DP and geodesics."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geoforest.errors import ConfigError
from geoforest.lattice import (
    Point,
    geodesic,
    last_passage,
    last_passage_field,
    path_weight,
    sample_weights,
)

from oracles import brute_last_passage


def test_sampling_deterministic_and_positive():
    g1 = sample_weights(1, 1, seed=7)
    g2 = sample_weights(1, 1, seed=7)
    assert g1.weights[0, 0] == g2.weights[0, 0] > 0


def test_sampling_bitwise_identical_grids():
    a = sample_weights(13, 9, seed=123)
    b = sample_weights(13, 9, seed=123)
    assert np.array_equal(a.weights, b.weights)


def test_different_seeds_differ():
    a = sample_weights(4, 4, seed=1)
    b = sample_weights(4, 4, seed=2)
    assert np.any(a.weights != b.weights)


def test_pooled_mean_near_one():
    g = sample_weights(40, 25, seed=11)  # 1000 draws
    n = g.weights.size
    assert abs(g.weights.mean() - 1.0) < 3.0 / np.sqrt(n)  # Exp(1) sd = 1


def test_grid_immutable():
    g = sample_weights(3, 3, seed=0)
    with pytest.raises(ValueError):
        g.weights[0, 0] = 5.0


def test_bad_dims_rejected():
    with pytest.raises(ConfigError):
        sample_weights(0, 3, seed=1)
    with pytest.raises(ConfigError):
        sample_weights(3, -1, seed=1)


def test_path_weight_single_and_pair():
    g = sample_weights(3, 3, seed=5)
    assert path_weight(g, [(1, 1)]) == g.weight((1, 1))
    want = g.weight((1, 1)) + g.weight((2, 1))
    assert abs(path_weight(g, [(1, 1), (2, 1)]) - want) < 1e-15


def test_path_weight_manual_sum_oracle():
    g = sample_weights(8, 8, seed=3)
    rng = np.random.default_rng(0)
    for _ in range(20):
        p = [(0, 0)]
        while p[-1] != (7, 7):
            i, j = p[-1]
            if i == 7:
                p.append((i, j + 1))
            elif j == 7 or rng.random() < 0.5:
                p.append((i + 1, j))
            else:
                p.append((i, j + 1))
        assert len(p) == 15  # L1 distance + 1 vertices
        manual = sum(g.weights[i, j] for i, j in p)
        assert abs(path_weight(g, p) - manual) < 1e-12


def test_path_weight_rejects_bad_paths():
    g = sample_weights(3, 3, seed=5)
    with pytest.raises(ConfigError):
        path_weight(g, [(0, 0), (1, 1)])  # diagonal step
    with pytest.raises(ConfigError):
        path_weight(g, [(2, 2), (3, 2)])  # leaves grid
    with pytest.raises(ConfigError):
        path_weight(g, [])


def test_last_passage_trivial_cases():
    g = sample_weights(2, 2, seed=9)
    w = g.weights
    assert last_passage(g, (0, 0), (0, 0)) == w[0, 0]
    want = w[0, 0] + max(w[1, 0], w[0, 1]) + w[1, 1]
    assert abs(last_passage(g, (0, 0), (1, 1)) - want) < 1e-12


def test_last_passage_order_violation():
    g = sample_weights(3, 3, seed=9)
    with pytest.raises(ConfigError):
        last_passage(g, (2, 0), (0, 2))


def test_last_passage_matches_brute_force():
    for seed in range(10):
        g = sample_weights(7, 7, seed=seed)
        want, _ = brute_last_passage(g.weights)
        got = last_passage(g, (0, 0), (6, 6))
        assert abs(got - want) <= 1e-12


@settings(max_examples=25, deadline=None)
@given(
    dx=st.integers(min_value=1, max_value=6),
    dy=st.integers(min_value=1, max_value=6),
    seed=st.integers(min_value=0, max_value=10_000),
)
def test_recursion_identity(dx, dy, seed):
    g = sample_weights(dx + 1, dy + 1, seed=seed)
    f = last_passage_field(g, (0, 0), (dx, dy))
    w = g.weights
    for i in range(1, dx + 1):
        for j in range(1, dy + 1):
            assert abs(f[i, j] - (w[i, j] + max(f[i - 1, j], f[i, j - 1]))) < 1e-9


def test_geodesic_trivial_and_2x2():
    g = sample_weights(2, 2, seed=4)
    assert geodesic(g, (1, 1), (1, 1)) == [Point(1, 1)]
    path = geodesic(g, (0, 0), (1, 1))
    mid = (1, 0) if g.weights[1, 0] > g.weights[0, 1] else (0, 1)
    assert [tuple(p) for p in path] == [(0, 0), mid, (1, 1)]


def test_geodesic_matches_brute_force_argmax():
    for seed in range(10):
        g = sample_weights(7, 7, seed=seed)
        want_v, want_path = brute_last_passage(g.weights)
        path = geodesic(g, (0, 0), (6, 6))
        assert [tuple(p) for p in path] == want_path
        assert abs(path_weight(g, path) - want_v) < 1e-12


@settings(max_examples=20, deadline=None)
@given(
    dx=st.integers(min_value=0, max_value=7),
    dy=st.integers(min_value=0, max_value=7),
    seed=st.integers(min_value=0, max_value=10_000),
)
def test_geodesic_weight_equals_last_passage(dx, dy, seed):
    g = sample_weights(dx + 1, dy + 1, seed=seed)
    path = geodesic(g, (0, 0), (dx, dy))
    assert abs(path_weight(g, path) - last_passage(g, (0, 0), (dx, dy))) < 1e-12
