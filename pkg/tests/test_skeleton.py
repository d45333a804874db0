"""Nets, skeleta, subset skeleta: density, spanning, and weight bounds."""

import numpy as np
import pytest

from orbitbench import groups, skeleton
from orbitbench.errors import DomainError
from orbitbench.rng import make_rng
from orbitbench.unionfind import UnionFind


def test_separated_net_zero_separation_keeps_everything():
    z2 = groups.make_group("z2")
    pts = groups.box_set(z2, (0, 0), (4, 4))
    net = skeleton.separated_net(pts, 0)
    assert len(net) == 16


def test_separated_net_interval_scan():
    z1 = groups.make_group("z1")
    pts = groups.box_set(z1, (0,), (10,))
    assert skeleton.separated_net(pts, 2).to_json() == [[0], [3], [6], [9]]


def test_separated_net_singleton():
    z2 = groups.make_group("z2")
    pts = groups.FiniteSet.from_elements(z2, [(7, -3)])
    assert skeleton.separated_net(pts, 5).to_json() == [[7, -3]]


def test_separated_net_contains_identity_first():
    z2 = groups.make_group("z2")
    pts = groups.FiniteSet.from_elements(
        z2, [(-1, -1), (0, 0), (1, 1), (2, 2)])
    net = skeleton.separated_net(pts, 2)
    assert (0, 0) in net


@pytest.mark.parametrize("seed", range(10))
def test_net_separation_and_density(seed):
    # maximality of the greedy net forces s-density in the input
    z2 = groups.make_group("z2")
    rng = make_rng(seed, stream=110)
    pts = groups.FiniteSet.from_elements(
        z2, map(tuple, rng.integers(-12, 12, size=(60, 2))))
    for s in (1, 2, 4, 6, 8):
        net = skeleton.separated_net(pts, s)
        rows = net.rows
        if len(rows) > 1:
            dm = skeleton.pairwise_distances(z2, rows, rows)
            np.fill_diagonal(dm, s + 1)
            assert dm.min() > s
        assert skeleton.is_r_dense(net, pts, s)


def test_build_skeleton_interval():
    z1 = groups.make_group("z1")
    sk = skeleton.build_skeleton(groups.box_set(z1, (0,), (9,)), 2)
    assert sk.vertices.to_json() == [[0], [5]]
    assert sk.edges == [(0, 1)]
    assert sk.weight() == 5


def test_build_skeleton_singleton():
    z2 = groups.make_group("z2")
    sk = skeleton.build_skeleton(groups.ball(z2, 0), 3)
    assert len(sk.vertices) == 1 and sk.edges == [] and sk.weight() == 0


def test_build_skeleton_rejects_disconnected():
    z2 = groups.make_group("z2")
    F = groups.FiniteSet.from_elements(z2, [(0, 0), (9, 9)])
    with pytest.raises(DomainError):
        skeleton.build_skeleton(F, 1)


@pytest.mark.parametrize("side,r", [(16, 2), (16, 4), (32, 2), (32, 8)])
def test_build_skeleton_contract(side, r):
    z2 = groups.make_group("z2")
    F = groups.box_set(z2, (0, 0), (side, side))
    sk = skeleton.build_skeleton(F, r)
    assert len(sk.edges) == len(sk.vertices) - 1
    assert skeleton.is_r_dense(sk.vertices, F, 2 * r)
    uf = UnionFind(len(sk.vertices))
    for i, j in sk.edges:
        uf.union(i, j)
    assert uf.n_classes() == 1


def test_weight_scaling_law():
    # O(|F|/r): the scale-invariant ratio varies by at most 4 across radii
    z2 = groups.make_group("z2")
    ratios = []
    for side in (32, 64):
        F = groups.box_set(z2, (0, 0), (side, side))
        for r in (2, 4, 8):
            sk = skeleton.build_skeleton(F, r)
            ratios.append(sk.weight() * r / len(F))
    assert max(ratios) / min(ratios) <= 4.0


def test_mst_beats_random_spanning_trees():
    z2 = groups.make_group("z2")
    F = groups.box_set(z2, (0, 0), (12, 12))
    r = 2
    sk = skeleton.build_skeleton(F, r)
    rows = sk.vertices.rows
    n = len(rows)
    dm = skeleton.pairwise_distances(z2, rows, rows)
    prox = [(i, j) for i in range(n) for j in range(i + 1, n)
            if dm[i, j] <= 5 * r]
    rng = make_rng(7, stream=111)
    for _ in range(100):
        # random spanning tree of the proximity graph: shuffled Kruskal
        order = rng.permutation(len(prox))
        uf = UnionFind(n)
        wt = 0
        picked = 0
        for idx in order:
            i, j = prox[idx]
            if uf.find(i) != uf.find(j):
                uf.union(i, j)
                wt += int(dm[i, j])
                picked += 1
        assert picked == n - 1
        assert sk.weight() <= wt


def test_skeleton_weight_single_edge():
    z2 = groups.make_group("z2")
    verts = groups.FiniteSet.from_elements(z2, [(0, 0), (3, 4)])
    sk = skeleton.SkeletonGraph(verts, [(0, 1)], z2)
    assert sk.weight() == 7


def test_subset_skeleton_bound_and_density():
    z2 = groups.make_group("z2")
    F = groups.box_set(z2, (0, 0), (16, 16))
    parent = skeleton.build_skeleton(F, 2)   # a 4-skeleton of F
    r = 4
    even = groups.FiniteSet(z2, F.rows[np.all(F.rows % 2 == 0, axis=1)])
    sub = skeleton.subset_skeleton(parent, even, r)
    assert sub.weight() <= 2 * parent.weight() + 2 * r * len(parent.vertices)
    assert skeleton.is_r_dense(sub.vertices, even, 2 * r)
    assert len(np.unique(sub.vertices.index_of_rows(even.rows))) >= 1


def test_subset_skeleton_full_and_singleton():
    z2 = groups.make_group("z2")
    F = groups.box_set(z2, (0, 0), (12, 12))
    parent = skeleton.build_skeleton(F, 2)
    full = skeleton.subset_skeleton(parent, F, 4)
    assert full.weight() <= 2 * parent.weight() + 2 * 4 * len(parent.vertices)
    single = skeleton.subset_skeleton(
        parent, groups.FiniteSet.from_elements(z2, [(5, 5)]), 4)
    assert len(single.vertices) == 1
    assert single.weight() == 0


def test_subset_skeleton_rejects_empty_and_sparse_parent():
    z2 = groups.make_group("z2")
    F = groups.box_set(z2, (0, 0), (12, 12))
    parent = skeleton.build_skeleton(F, 2)
    with pytest.raises(DomainError):
        skeleton.subset_skeleton(parent, groups.FiniteSet.from_elements(z2, []), 4)
    far = groups.FiniteSet.from_elements(z2, [(40, 40)])
    with pytest.raises(DomainError):
        skeleton.subset_skeleton(parent, far, 4)


def test_is_r_dense_scan():
    z1 = groups.make_group("z1")
    X = groups.box_set(z1, (0,), (10,))
    assert skeleton.is_r_dense(X, X, 0)
    v0 = groups.FiniteSet.from_elements(z1, [(0,)])
    assert not skeleton.is_r_dense(v0, X, 5)
    v09 = groups.FiniteSet.from_elements(z1, [(0,), (9,)])
    assert skeleton.is_r_dense(v09, X, 5)


def test_heisenberg_skeleton():
    heis = groups.make_group("heis")
    F = groups.connected_folner(heis, 1.0, 1)
    sk = skeleton.build_skeleton(F, 1)
    assert len(sk.edges) == len(sk.vertices) - 1
    assert skeleton.is_r_dense(sk.vertices, F, 2)


def test_skeleton_json():
    z1 = groups.make_group("z1")
    sk = skeleton.build_skeleton(groups.box_set(z1, (0,), (9,)), 2)
    js = sk.to_json()
    assert js["weight"] == 5 and js["edges"] == [[0, 1]]
