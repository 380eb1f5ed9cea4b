from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dynaperc import analytic
from dynaperc.graphs import (
    ROOT, UNREACHABLE, EdgeRef, FiniteGraph, RegularTree, bfs_distances, cheeger_brute, complete_graph,
    connected_subsets, cycle_graph, degree, dist, neighbors, sample_gw_tree, tree_ball, vref,
)

T3 = RegularTree(3)


def test_root_neighbors_of_t3():
    nbs = neighbors(T3, ROOT)
    assert [str(u) for u, _ in nbs] == ["0", "1", "2"]
    assert all(e == EdgeRef(u) for u, e in nbs)


def test_vertex_neighbors_parent_then_children():
    nbs = neighbors(T3, vref("0"))
    assert [u for u, _ in nbs] == [ROOT, vref("00"), vref("01")]
    assert nbs[0][1] == EdgeRef(vref("0"))


def test_cycle_neighbors():
    g = cycle_graph(4)
    assert sorted(u for u, _ in neighbors(g, 0)) == [1, 3]
    assert {e for _, e in neighbors(g, 0)} == {(0, 1), (0, 3)}


def test_unknown_finite_vertex():
    with pytest.raises(KeyError):
        neighbors(cycle_graph(4), 7)


@pytest.mark.parametrize("u,v,expected", [("", "01", 2), ("0", "1", 2), ("010", "011", 2), ("01", "01", 0)])
def test_tree_distance(u, v, expected):
    assert dist(T3, vref(u), vref(v)) == expected


def test_disconnected_pair_is_unreachable():
    g = FiniteGraph.from_edges(4, [(0, 1), (2, 3)])
    assert dist(g, 0, 3) == UNREACHABLE
    assert dist(g, 0, 1) == 1


@pytest.mark.parametrize("d,r", [(d, r) for d in (3, 4, 5) for r in range(7) if (d - 1) ** r <= 4096])
def test_ball_sizes(d, r):
    g, verts = tree_ball(d, r)
    assert g.n == len(verts) == RegularTree(d).ball_size(r)
    assert max(len(v.word) for v in verts) == r


def test_regular_degree():
    for v in [ROOT, vref("0"), vref("0101")]:
        assert degree(T3, v) == 3
    with pytest.raises(ValueError):
        RegularTree(2)


def test_code_roundtrip():
    for w in ["", "0", "21", "0101", "2111"]:
        v = vref(w)
        T3.check(v)
        assert T3.vertex(T3.code(v)) == v
    with pytest.raises(ValueError):
        T3.check(vref("02"))


words = st.tuples(st.integers(0, 2)).flatmap(
    lambda first: st.lists(st.integers(0, 1), max_size=6).map(lambda rest: vref(first + tuple(rest))))
vertices = st.one_of(st.just(ROOT), words)


@settings(max_examples=200, deadline=None)
@given(vertices, vertices, vertices)
def test_tree_distance_is_a_metric(a, b, c):
    assert dist(T3, a, b) == dist(T3, b, a)
    assert (dist(T3, a, b) == 0) == (a == b)
    assert dist(T3, a, c) <= dist(T3, a, b) + dist(T3, b, c)


@settings(max_examples=100, deadline=None)
@given(vertices, vertices)
def test_adjacent_iff_distance_one(a, b):
    adjacent = any(u == b for u, _ in neighbors(T3, a))
    assert adjacent == (dist(T3, a, b) == 1)


def test_finite_ball_metric_matches_tree_metric():
    g, verts = tree_ball(3, 3)
    for i, j in itertools.combinations(range(0, g.n, 3), 2):
        assert dist(g, i, j) == dist(T3, verts[i], verts[j])
    rng = np.random.default_rng(0)
    for _ in range(200):
        a, b, c = rng.integers(0, g.n, 3)
        assert dist(g, a, c) <= dist(g, a, b) + dist(g, b, c)


def test_finite_graph_validation(tmp_path):
    with pytest.raises(ValueError):
        FiniteGraph(((1,), ()))
    with pytest.raises(ValueError):
        FiniteGraph(((0,),))
    g = cycle_graph(5)
    path = tmp_path / "c5.adj"
    g.to_file(path)
    assert path.read_text().splitlines()[0] == "1 4"
    h = FiniteGraph.from_file(path)
    assert h.adjacency == g.adjacency


def test_connected_subsets_counts():
    subs = list(connected_subsets(cycle_graph(4), 2))
    assert len(subs) == 8 and len(set(subs)) == 8
    # every connected subset of K4 is a subset
    assert len(set(connected_subsets(complete_graph(4), 4))) == 15


def test_cheeger_examples():
    g, _ = tree_ball(3, 4)
    assert cheeger_brute(g, 8) == Fraction(10, 24)
    assert cheeger_brute(g, 1) == 1
    assert cheeger_brute(cycle_graph(4), 2) == Fraction(2, 4)
    with pytest.raises(ValueError):
        cheeger_brute(g, 0)


def test_cheeger_subtree_formula():
    g, _ = tree_ball(3, 3)
    for n in range(1, 6):
        assert cheeger_brute(g, n) == Fraction(n + 2, 3 * n)


def test_gw_extremes():
    tree, survived = sample_gw_tree(2, 1.0, 6, 0)
    assert survived
    assert tree.offspring_counts() == [2] * (2**6 - 1)
    tree, survived = sample_gw_tree(2, 0.0, 3, 0)
    assert not survived and tree.children(tree.root) == []


def test_gw_offspring_in_range_and_order_independent():
    tree, _ = sample_gw_tree(3, 0.5, 8, 11)
    counts = tree.offspring_counts(5)
    assert all(0 <= c <= 3 for c in counts)
    again, _ = sample_gw_tree(3, 0.5, 8, 11)
    # querying deep vertices first does not change the realization
    for v in [1 * 3**4 + 5, 40, 7]:
        again.children(v)
    assert again.offspring_counts(5) == counts


def test_gw_survival_frequency():
    rng = np.random.default_rng(5)
    n = 20_000
    hits = sum(sample_gw_tree(2, 0.75, 20, rng)[1] for _ in range(n))
    theta = analytic.survival_probability(2, 0.75)
    # depth-20 survival slightly exceeds eventual survival; allow that bias on top of 3 sigma
    assert abs(hits / n - theta) <= 3 * np.sqrt(theta * (1 - theta) / n) + 1e-3


def test_bfs_distances_on_cycle():
    assert bfs_distances(cycle_graph(6), 0) == {0: 0, 1: 1, 5: 1, 2: 2, 4: 2, 3: 3}
