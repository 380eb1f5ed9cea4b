from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from scipy.linalg import expm

from dynaperc import evolving_set as es
from dynaperc.graphs import FiniteGraph, complete_graph, cycle_graph, tree_ball

K2, C4, K4 = complete_graph(2), cycle_graph(4), complete_graph(4)
A = (1 - math.exp(-2)) / 2


def k2_open():
    return es.step_kernel(K2, es.PiecewiseEnvironment.constant([(0, 1)]))


def dense_kernel(g: FiniteGraph, env: es.PiecewiseEnvironment) -> np.ndarray:
    """Independent oracle: product of scipy matrix exponentials."""
    d = g.max_degree
    K = np.eye(g.n)
    for tau, open_edges in env.pieces():
        L = np.zeros((g.n, g.n))
        for u, v in open_edges:
            L[u, v] = L[v, u] = 1 / d
        L -= np.diag(L.sum(axis=1))
        K = K @ expm(tau * L)
    return K


def test_k2_closed_form():
    k = k2_open()
    assert k.matrix[0, 1] == pytest.approx(A, abs=1e-12)
    assert k.matrix[0, 0] == pytest.approx((1 + math.exp(-2)) / 2, abs=1e-12)


def test_closed_environment_is_identity():
    k = es.step_kernel(C4, es.PiecewiseEnvironment.constant([]))
    assert np.array_equal(k.matrix, np.eye(4))


@pytest.mark.parametrize("g", [K2, C4, K4, tree_ball(3, 2)[0]], ids=lambda g: g.name)
def test_kernel_matches_matrix_exponential(g):
    rng = np.random.default_rng(1)
    for _ in range(20):
        env = es.random_piecewise_environment(g, rng)
        k = es.step_kernel(g, env).matrix
        assert np.abs(k - dense_kernel(g, env)).max() < 1e-12
        assert np.abs(k.sum(axis=1) - 1).max() < 1e-12
        assert np.abs(k.sum(axis=0) - 1).max() < 1e-10
        assert k.diagonal().min() >= math.exp(-1)


def test_all_open_cycle_is_symmetric():
    k = es.step_kernel(C4, es.PiecewiseEnvironment.constant(C4.edges())).matrix
    assert np.abs(k - k.T).max() < 1e-10


def test_environment_validation():
    with pytest.raises(ValueError):
        es.PiecewiseEnvironment((0.0, 0.5), (frozenset(),))
    with pytest.raises(ValueError):
        es.PiecewiseEnvironment((0.0, 0.6, 0.4, 1.0), (frozenset(),) * 3)
    with pytest.raises(ValueError):
        es.step_kernel(C4, es.PiecewiseEnvironment.constant([(0, 2)]))


def test_k2_evolving_set_law():
    law = es.evolving_set_law(k2_open(), {0})
    assert law.prob(set()) == pytest.approx(A, abs=1e-12)
    assert law.prob({0}) == pytest.approx(math.exp(-2), abs=1e-12)
    assert law.prob({0, 1}) == pytest.approx(A, abs=1e-12)
    assert law.total == pytest.approx(1, abs=1e-12)


def test_level_sets_nested_and_martingale():
    rng = np.random.default_rng(2)
    for g in (C4, K4):
        for _ in range(30):
            k = es.step_kernel(g, es.random_piecewise_environment(g, rng))
            for S in es.proper_subsets(g.n):
                law = es.evolving_set_law(k, S)
                sets = [s for s, _ in law.outcomes]
                assert all(a <= b for a, b in zip(sets, sets[1:]))
                assert abs(law.total - 1) < 1e-12
                assert abs(law.mean(len) - len(S)) < 1e-12


def test_full_set_is_absorbing_for_doubly_stochastic():
    k = es.step_kernel(K4, es.PiecewiseEnvironment.constant(K4.edges()))
    law = es.evolving_set_law(k, range(4))
    assert law.prob(range(4)) > 1 - 1e-12


def test_empty_set_rejected():
    with pytest.raises(ValueError):
        es.evolving_set_law(k2_open(), set())
    with pytest.raises(ValueError):
        es.doob_step(k2_open(), set(), 0)


def test_doob_law_k2():
    law = es.doob_law(k2_open(), {0})
    assert law.prob({0, 1}) == pytest.approx(2 * A, abs=1e-12)
    assert law.prob({0}) == pytest.approx(math.exp(-2), abs=1e-12)
    assert law.total == pytest.approx(1, abs=1e-12)
    assert all(s for s, _ in law.outcomes)


def test_doob_step_frequencies():
    k = k2_open()
    rng = np.random.default_rng(3)
    n = 20_000
    hits = sum(len(es.doob_step(k, {0}, rng)) == 2 for _ in range(n))
    assert abs(hits / n - 2 * A) <= 3 * math.sqrt(2 * A * (1 - 2 * A) / n)


def test_df_step_marginals():
    # with the walker uniform on S, the set marginal is the Doob law
    rng = np.random.default_rng(4)
    k = es.step_kernel(C4, es.random_piecewise_environment(C4, rng))
    S = (0, 1)
    n = 40_000
    ys = np.zeros(4)
    sets: dict = {}
    for _ in range(n):
        s = es.df_step(k, es.DFState(S[rng.integers(2)], S), rng)
        assert s.walker in s.set
        ys[s.walker] += 1
        sets[s.set] = sets.get(s.set, 0) + 1
    row = (k.row(0) + k.row(1)) / 2
    assert np.all(np.abs(ys / n - row) <= 3 * np.sqrt(row * (1 - row) / n) + 1e-12)
    for B, pr in es.doob_law(k, S).outcomes:
        f = sets.get(B, 0) / n
        assert abs(f - pr) <= 3 * math.sqrt(pr * (1 - pr) / n) + 1e-12


def test_df_state_validation():
    with pytest.raises(ValueError):
        es.DFState(3, {0, 1})


def test_df_paths_agree_with_single_steps():
    rng = np.random.default_rng(5)
    k = es.step_kernel(C4, es.random_piecewise_environment(C4, rng))
    xs, masks = es.df_paths([k], 0, 40_000, rng)
    law = es.doob_law(k, {0})
    for B, pr in law.outcomes:
        m = sum(1 << i for i in B)
        f = float(np.mean(masks[:, 1] == m))
        assert abs(f - pr) <= 3 * math.sqrt(pr * (1 - pr) / xs.shape[0]) + 1e-12
    assert all(masks[i, 1] >> xs[i, 1] & 1 for i in range(xs.shape[0]))


def test_phi_values():
    assert es.phi(k2_open(), {0}) == pytest.approx(A, abs=1e-12)
    assert es.phi(es.step_kernel(C4, es.PiecewiseEnvironment.constant([])), {0, 1}) == 0.0
    with pytest.raises(ValueError):
        es.phi(k2_open(), {0, 1})
    with pytest.raises(ValueError):
        es.phi(k2_open(), set())


def test_supermartingale_examples():
    lhs, rhs, ok = es.check_supermartingale(k2_open(), {0})
    assert lhs == pytest.approx(2 * A / math.sqrt(2) + math.exp(-2), abs=1e-12)
    assert rhs == pytest.approx(math.exp(-(A**2) / 6), abs=1e-12)
    assert ok
    ident = es.step_kernel(C4, es.PiecewiseEnvironment.constant([]))
    lhs, rhs, ok = es.check_supermartingale(ident, {0, 2})
    assert lhs == pytest.approx(rhs, abs=1e-15) and ok


@pytest.mark.parametrize("g", [K2, C4, K4], ids=lambda g: g.name)
def test_supermartingale_sweep(g):
    rows = es.check_rows(g, 100, 6)
    assert rows and all(r["pass"] and r["phi_pass"] for r in rows)
    assert set(rows[0]) >= {"graph", "env_seed", "S", "lhs", "rhs", "pass"}


def test_boundary_integral():
    full = es.PiecewiseEnvironment.constant(C4.edges())
    assert es.boundary_integral(full, {0}) == 2
    assert es.boundary_integral(es.PiecewiseEnvironment.constant([]), {0}) == 0
    quarter = es.PiecewiseEnvironment((0.0, 0.25, 1.0), (frozenset([(0, 1)]), frozenset()))
    assert es.boundary_integral(quarter, {0}) == pytest.approx(0.25)


def test_conditional_uniformity_given_set_history():
    from dynaperc.acceptance import df_key_uniformity
    z = df_key_uniformity(seed=9, n_paths=30_000, steps=4)
    assert z["max_z"] <= 3


def test_supermartingale_along_doob_paths():
    rng = np.random.default_rng(7)
    kernels = [es.step_kernel(C4, es.random_piecewise_environment(C4, rng)) for _ in range(6)]
    means = es.supermartingale_path_means(C4, kernels, 0, 20_000, rng)
    assert means[0] == (1.0, 0.0)
    for (m1, s1), (m2, s2) in zip(means, means[1:]):
        assert m2 <= m1 + 2 * math.hypot(s1, s2)


def test_proper_subsets():
    subs = es.proper_subsets(3)
    assert len(subs) == 6
    assert frozenset() not in subs and frozenset(range(3)) not in subs
    assert set(subs) == {frozenset(c) for r in (1, 2) for c in itertools.combinations(range(3), r)}


def test_growth_statistic_on_tree_ball():
    g = tree_ball(3, 3)[0]
    rows = es.growth_statistic(g, 10, 3000, 8)
    assert rows[0]["frequency"] == 1.0 and rows[0]["mean_size"] == 1.0
    assert all(0 <= r["frequency"] <= 1 for r in rows)
    assert rows[-1]["mean_size"] > 5
    with pytest.raises(ValueError):
        es.growth_statistic(tree_ball(3, 5)[0], 2, 10, 0)
