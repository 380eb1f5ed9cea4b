from __future__ import annotations

import math

import numpy as np
import pytest

from dynaperc import analytic
from dynaperc.dyn_env import EnvConfig, Environment
from dynaperc.graphs import sample_gw_tree
from dynaperc.walker import replica_seeds, run_walk


@pytest.mark.parametrize("p", [0.6, 0.75, 0.9])
def test_binary_survival_closed_form(p):
    assert analytic.survival_probability(2, p) == pytest.approx((2 * p - 1) / p**2, abs=1e-10)


def test_survival_edge_cases():
    assert analytic.survival_probability(3, 1.0) == 1.0
    assert analytic.survival_probability(3, 1 / 3) == 0.0
    assert analytic.survival_probability(4, 0.1) == 0.0
    with pytest.raises(ValueError):
        analytic.survival_probability(1, 0.5)


@pytest.mark.parametrize("b", [2, 3, 4, 6])
def test_fixed_point_residual_and_monotonicity(b):
    ps = np.linspace(1 / b + 1e-6, 1, 200)
    th = [analytic.survival_probability(b, p) for p in ps]
    for p, t in zip(ps, th):
        assert abs((1 - p * t) ** b - (1 - t)) < 1e-10
    assert all(y >= x for x, y in zip(th, th[1:]))


@pytest.mark.parametrize("b", [2, 3, 4])
def test_near_critical_survival(b):
    p = 1 / b + 1e-4
    th = analytic.survival_probability(b, p)
    assert th / analytic.near_critical_theta(b, p) == pytest.approx(1, rel=0.02)
    assert (p - 1 / b) / ((b - 1) * p**2 * th / 2) == pytest.approx(1, rel=0.02)


def test_root_cluster_density():
    assert analytic.root_cluster_density(3, 0.75) == pytest.approx(26 / 27, abs=1e-10)
    assert analytic.root_cluster_density(3, 0.4) == 0.0
    p = 0.5 + 1e-4
    ratio = analytic.root_cluster_density(3, p) / (3 * p * analytic.survival_probability(2, p))
    assert ratio == pytest.approx(1, rel=0.01)


@pytest.mark.parametrize("b", [2, 3, 4])
def test_gw_speed_at_one(b):
    assert analytic.gw_speed(b, 1.0) == pytest.approx((b - 1) / (b + 1), abs=1e-15)


@pytest.mark.parametrize("d", [3, 4, 5])
def test_srw_speed_matches_gw_speed(d):
    assert analytic.srw_tree_speed(d) == pytest.approx(analytic.gw_speed(d - 1, 1.0))


def test_srw_speed_values():
    assert analytic.srw_tree_speed(3) == pytest.approx(1 / 3)
    assert analytic.srw_tree_speed(4) == 0.5


def test_gw_speed_binary_closed_form():
    # for b = 2 the sum collapses to (2p-1)^2 / (3 (2p^2 - 2p + 1))
    for p in np.linspace(0.51, 1.0, 30):
        assert analytic.gw_speed(2, p) == pytest.approx((2 * p - 1) ** 2 / (3 * (2 * p * p - 2 * p + 1)), rel=1e-9)


def test_gw_speed_subcritical_flag():
    assert analytic.gw_speed(2, 0.4, return_flag=True) == (0.0, False)
    v, ok = analytic.gw_speed(2, 0.8, return_flag=True)
    assert ok and v > 0


@pytest.mark.parametrize("b", [2, 3, 4])
def test_gw_speed_near_critical_ratio(b):
    p = 1 / b + 1e-3
    th = analytic.survival_probability(b, p)
    assert analytic.gw_speed(b, p) / th**2 == pytest.approx(analytic.near_critical_speed_ratio(b), rel=0.05)


@pytest.mark.parametrize("b", [2, 3, 5])
def test_gw_speed_range(b):
    for p in np.linspace(1 / b + 1e-3, 1, 50):
        assert 0 <= analytic.gw_speed(b, p) <= (b - 1) / (b + 1) + 1e-15


def test_gw_speed_monte_carlo():
    # simple random walk (mu large, p = 1 environment) on GW trees conditioned to reach depth 60
    b, p, steps = 2, 0.75, 10_000
    rng = np.random.default_rng(8)
    speeds = []
    while len(speeds) < 40:
        tree, survived = sample_gw_tree(b, p, 60, rng)
        if not survived:
            continue
        es, wr = replica_seeds(int(rng.integers(2**31)), 0)
        traj = run_walk(tree, Environment(EnvConfig(1.0, 1.0, seed=es)), float(steps), None, wr, record=False)
        # count time in units of actual steps taken from non-leaf positions: use attempts
        speeds.append(tree.depth_of(traj.final) / traj.attempts)
    assert np.mean(speeds) == pytest.approx(analytic.gw_speed(b, p), rel=0.10)


def test_paper_bounds_tree_value():
    d, p = 3, 0.75
    th = analytic.survival_probability(2, p)
    bs = analytic.paper_bounds(d, p, 0.1, analytic.srw_tree_speed(d))
    assert bs.tree_lower == pytest.approx(p**3 * (p * th) ** 9 / (48 * math.e**2 * 27 * math.log(3)), rel=1e-14)
    assert bs.tree_lower > 0
    assert bs.general_lower_large_mu == 0.0 and bs.general_lower_small_mu > 0
    assert bs.critical_envelope == pytest.approx(math.sqrt(0.1 * math.log(10)))


def test_paper_bounds_regimes():
    big = analytic.paper_bounds(3, 0.7, 5.0, 1 / 3)
    assert big.general_lower_small_mu == 0.0
    assert big.general_lower == big.general_lower_large_mu > 0
    assert big.critical_envelope is None
    assert big.lower <= 1


def test_beta_and_large_mu_constant():
    assert analytic.beta_constant(1.0) == pytest.approx(0.5 * (1 - math.exp(-0.5)))
    from scipy.integrate import quad
    assert analytic.LARGE_MU_C == pytest.approx(quad(lambda t: 1 - math.exp(-t / 2), 0, 1)[0], rel=1e-12)


@pytest.mark.parametrize("mu,target", [(1.0, math.e), (0.5, math.e**2)])
def test_birth_death_return_time(mu, target):
    s = analytic.birth_death_stats(mu, 1.1e4 * target, 3)
    assert s.n_cycles >= 10_000
    assert s.mean_return_time == pytest.approx(target, rel=0.05)
    assert s.exact_return_time == pytest.approx(target)


def test_birth_death_occupancy():
    s = analytic.birth_death_stats(2.0, 2e4, 4)
    assert s.occupancy_mean == pytest.approx(0.5, rel=0.05)
    for k, v in s.occupancy.items():
        if s.exact_occupancy[k] > 0.01:
            assert v == pytest.approx(s.exact_occupancy[k], abs=0.02)


def test_birth_death_short_horizon_warns():
    with pytest.warns(RuntimeWarning):
        s = analytic.birth_death_stats(0.5, 10.0, 1)
    assert s.short_horizon
    with pytest.raises(ValueError):
        analytic.birth_death_stats(0.0, 10.0, 1)


def test_poisson_pmf():
    pmf = analytic.poisson_pmf(1.5, 30)
    assert sum(pmf.values()) == pytest.approx(1, abs=1e-12)
    assert pmf[2] == pytest.approx(math.exp(-1.5) * 1.5**2 / 2)
