"""Substrate families: corners, slopes, serialization, weighted windows."""

import numpy as np
import pytest

from geoforest.errors import ConfigError
from geoforest.substrate import (
    Substrate,
    gen_bernoulli,
    gen_finite_rooted,
    gen_flat_diagonal,
    gen_periodic,
    gen_weighted_exponential,
)


def corners_by_step_scan(sub: Substrate) -> list[int]:
    """Independent corner detection straight from the step sequence."""
    steps = sub.steps()
    out = []
    for k in range(len(steps) - 1):
        into, outof = steps[k], steps[k + 1]
        if tuple(into) == (0, -1) and tuple(outof) == (1, 0):
            out.append(sub.z_lo + k + 1)
    return out


def test_degenerate_bernoulli_single_corner():
    sub = gen_bernoulli(1.0, 0.0, 40, seed=0)
    assert sub.n_corners == 1
    assert tuple(sub.corner_position(0)) == (0, 0)
    # right side all right-steps, left side all up-steps
    assert tuple(sub.position(40)) == (40, 0)
    assert tuple(sub.position(-40)) == (0, 40)


def test_bernoulli_lambdas():
    sub = gen_bernoulli(2 / 3, 1 / 3, 10, seed=1)
    assert abs(sub.lambda_minus - 2.0) < 1e-15
    assert abs(sub.lambda_plus - 0.5) < 1e-15
    # rarefaction interval nonempty
    assert sub.lambda_plus**2 < sub.lambda_minus**2


def test_bernoulli_forced_local_pattern():
    for seed in range(5):
        sub = gen_bernoulli(0.6, 0.4, 8, seed=seed)
        assert tuple(sub.position(-1)) == (0, 1)
        assert tuple(sub.position(1)) == (1, 0)
        assert 0 in sub.corners_z.tolist()


def test_bernoulli_step_frequency():
    n = 10_000
    sub = gen_bernoulli(2 / 3, 1 / 3, n, seed=3)
    steps = sub.steps()
    right_side = steps[-sub.z_lo :]  # edges z = 1..n
    downs = (right_side[:, 1] == -1).sum()
    p, sd = 1 / 3, np.sqrt((1 / 3) * (2 / 3) / (n - 1))
    assert abs(downs / (n - 1) - p) < 3 * sd + 1 / n  # edge 1 is forced


def test_bernoulli_edge_slopes():
    n = 10_000
    sub = gen_bernoulli(2 / 3, 1 / 3, n, seed=4)
    right = sub.position(n)
    left = sub.position(-n)
    assert abs(-right.x2 / right.x1 - sub.lambda_plus) < 0.05 * sub.lambda_plus
    assert abs(-left.x2 / left.x1 - sub.lambda_minus) < 0.05 * sub.lambda_minus


def test_corner_rule_matches_step_scan():
    for seed in range(6):
        sub = gen_bernoulli(0.7, 0.25, 60, seed=seed)
        assert sub.corners_z.tolist() == corners_by_step_scan(sub)
        assert np.all(np.diff(sub.corners_z) > 0)
    for sub in (gen_periodic(3, 2, 5), gen_finite_rooted(4), gen_flat_diagonal(5)):
        assert sub.corners_z.tolist() == corners_by_step_scan(sub)


def test_periodic_lambdas_and_spacing():
    sub = gen_periodic(2, 2, 6)
    assert sub.lambda_plus == 0.5 and sub.lambda_minus == 2.0
    zs = sub.corners_z
    plus = zs[zs >= 0]
    assert np.all(np.diff(plus) == 3)  # k_plus + 1 steps apart
    # (k+=1, k-=2) is valid because max >= 2
    gen_periodic(1, 2, 4)
    with pytest.raises(ConfigError):
        gen_periodic(1, 1, 4)


def test_finite_rooted_three_corners():
    for m in (1, 2, 5, 9):
        sub = gen_finite_rooted(m)
        assert sub.n_corners == 3
        pos = [tuple(sub.corner_position(int(o))) for o in sub.corner_ordinals()]
        assert pos == [(-1, 1), (0, 0), (m, -1)]
    with pytest.raises(ConfigError):
        gen_finite_rooted(0)


def test_flat_diagonal_corners():
    w = 7
    sub = gen_flat_diagonal(w)
    assert sub.n_corners == 2 * w + 1
    assert tuple(sub.corner_position(0)) == (0, 0)
    assert tuple(sub.corner_position(5)) == (5, -5)
    assert tuple(sub.corner_position(-3)) == (-3, 3)


def test_step_string_round_trip():
    for sub in (
        gen_bernoulli(0.6, 0.3, 25, seed=9),
        gen_periodic(2, 3, 4),
        gen_finite_rooted(3),
        gen_flat_diagonal(4),
    ):
        s = sub.step_string()
        assert set(s) <= set("RDUL")
        back = Substrate.from_step_string(s)
        assert np.array_equal(back.positions, sub.positions)
        assert back.step_string() == s


def test_step_string_rejects_garbage():
    with pytest.raises(ConfigError):
        Substrate.from_step_string("RRUX")
    with pytest.raises(ConfigError):
        Substrate.from_step_string("RRUU")  # U after R
    with pytest.raises(ConfigError):
        Substrate.from_step_string("")


def test_growth_region_profile():
    sub = gen_finite_rooted(2)
    assert sub.in_growth_region((1, 1))
    assert sub.in_growth_region((0, 2))  # above the left corner (-1, 1)
    assert not sub.in_growth_region((1, 0))  # on the substrate itself
    assert not sub.in_growth_region((0, 1))


def test_weighted_exponential_basics():
    w = gen_weighted_exponential(0.5, 0.25, 50, seed=2)
    assert w.value(0) == 0.0
    assert abs(w.mu_minus - 2.0) < 1e-15
    assert abs(w.mu_plus - 4.0 / 3.0) < 1e-12
    assert np.all(np.diff(w.nu) >= 0)
    assert w.value(-1) <= 0.0 <= w.value(1)


def test_weighted_lln_drift():
    k = 10_000
    w = gen_weighted_exponential(0.5, 0.25, k, seed=8)
    mu = w.mu_plus
    # nu(k)/k is a mean of k iid Exp(1-p+) terms with sd mu per term
    assert abs(w.value(k) / k - mu) < 3 * mu / np.sqrt(k)


def test_weighted_rejects_bad_params():
    with pytest.raises(ConfigError):
        gen_weighted_exponential(0.25, 0.5, 10, seed=0)
    with pytest.raises(ConfigError):
        gen_weighted_exponential(1.0, 0.5, 10, seed=0)
