"""Combinatorial layer: construction, incidence matrices, Laman recognition
(exhaustive and pebble-game paths against brute force), Henneberg operations,
anchor augmentation."""

import numpy as np
import pytest

import bearingnet as bn
from bearingnet.errors import InputError

import nets
from oracles import brute_force_laman


def test_build_graph_triangle():
    g = bn.build_graph(3, [(0, 1), (1, 2), (0, 2)])
    assert g.m == 3
    assert g.edges == ((0, 1), (0, 2), (1, 2))


def test_build_graph_collapses_duplicates():
    g = bn.build_graph(2, [(0, 1), (1, 0)])
    assert g.m == 1
    assert g.edges == ((0, 1),)


def test_build_graph_errors():
    with pytest.raises(InputError):
        bn.build_graph(2, [(0, 0)])
    with pytest.raises(InputError):
        bn.build_graph(2, [(0, 2)])
    with pytest.raises(InputError):
        bn.build_graph(0, [])


def test_incidence_single_edge():
    H = bn.incidence_matrix(bn.orient(bn.build_graph(2, [(0, 1)])))
    assert np.array_equal(H, [[-1.0, 1.0]])


def test_incidence_triangle():
    H = bn.incidence_matrix(bn.orient(nets.triangle()))
    assert np.array_equal(H, [[-1, 1, 0], [-1, 0, 1], [0, -1, 1]])


def test_incidence_row_sums_and_rank():
    for seed in range(5):
        g = bn.random_henneberg_graph(int(np.random.default_rng(seed).integers(3, 12)), seed=seed)
        H = bn.incidence_matrix(bn.orient(g))
        assert np.allclose(H @ np.ones(g.n), 0.0)
        # Henneberg graphs are connected, so rank is n - 1.
        assert np.linalg.matrix_rank(H) == g.n - 1


def test_is_laman_examples():
    assert bn.is_laman(nets.triangle()).laman
    check = bn.is_laman(nets.four_cycle())
    assert not check.laman and check.reason == "edge-count"
    check = bn.is_laman(nets.k4())
    assert not check.laman and check.violation == (0, 1, 2, 3)
    # 4-cycle plus one diagonal: frozen from the brute-force oracle.
    assert brute_force_laman(4, nets.four_cycle_diag().edges)
    assert bn.is_laman(nets.four_cycle_diag()).laman


def test_is_laman_requires_two_vertices():
    with pytest.raises(InputError):
        bn.is_laman(bn.build_graph(1, []))


def _random_graph(rng) -> bn.Graph:
    n = int(rng.integers(3, 9))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    rng.shuffle(pairs)
    m = int(rng.integers(1, len(pairs) + 1))
    return bn.build_graph(n, pairs[:m])


def test_is_laman_matches_brute_force():
    rng = np.random.default_rng(7)
    for _ in range(80):
        g = _random_graph(rng)
        expected = brute_force_laman(g.n, g.edges)
        assert bn.is_laman(g).laman == expected
        # Force the pebble-game path on the same graphs.
        assert bn.is_laman(g, exhaustive_limit=0).laman == expected


def test_pebble_game_certificate_is_violating():
    rng = np.random.default_rng(11)
    found = 0
    for _ in range(200):
        g = _random_graph(rng)
        check = bn.is_laman(g, exhaustive_limit=0)
        if check.violation is not None and check.reason == "subset":
            s = set(check.violation)
            spanned = sum(1 for i, j in g.edges if i in s and j in s)
            assert spanned > 2 * len(s) - 3
            found += 1
    assert found > 0


def test_henneberg_vertex_addition():
    edge = bn.build_graph(2, [(0, 1)])
    tri = bn.henneberg_vertex_addition(edge, 0, 1)
    assert tri.edges == nets.triangle().edges
    g = bn.henneberg_vertex_addition(nets.triangle(), 0, 2)
    assert (g.n, g.m) == (4, 5)
    assert bn.is_laman(g).laman
    with pytest.raises(InputError):
        bn.henneberg_vertex_addition(nets.triangle(), 0, 0)
    with pytest.raises(InputError):
        bn.henneberg_vertex_addition(nets.triangle(), 0, 5)


def test_henneberg_edge_splitting():
    g = bn.henneberg_edge_splitting(nets.triangle(), 0, 1, 2)
    assert (g.n, g.m) == (4, 5)
    assert not g.has_edge(0, 1)
    assert g.has_edge(0, 3) and g.has_edge(1, 3) and g.has_edge(2, 3)
    with pytest.raises(InputError):
        bn.henneberg_edge_splitting(nets.four_cycle(), 0, 2, 1)  # not an edge
    with pytest.raises(InputError):
        bn.henneberg_edge_splitting(nets.triangle(), 0, 1, 1)


def test_random_henneberg_sequences_stay_laman():
    for seed in range(10):
        for n in (2, 3, 5, 8, 12):
            g = bn.random_henneberg_graph(n, seed=seed)
            assert g.m == 2 * n - 3
            assert brute_force_laman(g.n, g.edges)


def test_henneberg_ops_preserve_laman_randomized():
    rng = np.random.default_rng(3)
    g = bn.build_graph(2, [(0, 1)])
    for _ in range(10):
        if g.n >= 3 and rng.integers(2):
            i, j = g.edges[rng.integers(g.m)]
            k = int(rng.choice([v for v in range(g.n) if v not in (i, j)]))
            g = bn.henneberg_edge_splitting(g, i, j, k)
        else:
            i, j = rng.choice(g.n, size=2, replace=False)
            g = bn.henneberg_vertex_addition(g, int(i), int(j))
        assert bn.is_laman(g).laman


def test_augment_anchors():
    g = bn.build_graph(3, [(0, 1), (1, 2)])
    same = bn.augment_anchors(g, (0, 1))
    assert same.edges == g.edges
    full = bn.augment_anchors(g, (0, 1, 2))
    assert full.m == 3
    with pytest.raises(InputError):
        bn.augment_anchors(g, (0,))
