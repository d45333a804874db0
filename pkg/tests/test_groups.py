"""Word metrics, balls, Folner sets: contracts and oracle comparisons."""

import numpy as np
import pytest
from fractions import Fraction

from orbitbench import groups
from orbitbench.errors import DomainError
from orbitbench.rng import make_rng

GROUP_IDS = ["z1", "z2", "z3", "heis"]


def bfs_ball_oracle(group, r):
    """Plain BFS from the identity over the Cayley graph; independent of
    the ball/word_length implementations."""
    seen = {group.identity: 0}
    frontier = [group.identity]
    for dist in range(1, r + 1):
        nxt = []
        for x in frontier:
            for s in group.generators:
                y = group.mul(s, x)
                if y not in seen:
                    seen[y] = dist
                    nxt.append(y)
        frontier = nxt
    return seen


@pytest.mark.parametrize("gid", GROUP_IDS)
def test_ball_matches_bfs_oracle(gid):
    group = groups.make_group(gid)
    oracle = bfs_ball_oracle(group, 4)
    for r in range(5):
        expected = sorted(g for g, dist in oracle.items() if dist <= r)
        got = [tuple(map(int, row)) for row in groups.ball(group, r).rows]
        assert got == expected


@pytest.mark.parametrize("gid", GROUP_IDS)
def test_word_length_matches_bfs_oracle(gid):
    group = groups.make_group(gid)
    oracle = bfs_ball_oracle(group, 4)
    for g, dist in oracle.items():
        assert group.word_length(g) == dist


def test_word_length_zd_examples():
    z2 = groups.make_group("z2")
    assert groups.word_length(z2, (0, 0)) == 0
    assert groups.word_length(z2, (3, -4)) == 7


def test_word_length_heisenberg_center():
    heis = groups.make_group("heis")
    oracle = bfs_ball_oracle(heis, 4)
    assert oracle[(0, 0, 1)] == 4  # frozen from the BFS oracle
    assert groups.word_length(heis, (0, 0, 1)) == 4
    assert groups.word_length(heis, (0, 0, -1)) == 4


@pytest.mark.parametrize("gid", GROUP_IDS)
def test_triangle_inequality_and_inverse_symmetry(gid):
    group = groups.make_group(gid)
    rng = make_rng(101, stream=100)
    elems = list(groups.ball(group, 4))
    for _ in range(200):
        g = elems[int(rng.integers(len(elems)))]
        h = elems[int(rng.integers(len(elems)))]
        assert group.word_length(group.mul(g, h)) <= \
            group.word_length(g) + group.word_length(h)
        assert group.word_length(g) == group.word_length(group.inv(g))
    assert group.word_length(group.identity) == 0


def test_ball_sizes():
    assert groups.ball(groups.make_group("z2"), 0).to_json() == [[0, 0]]
    assert len(groups.ball(groups.make_group("z2"), 2)) == 13
    assert len(groups.ball(groups.make_group("z3"), 1)) == 7


def test_ball_canonical_order_is_lexicographic():
    b = groups.ball(groups.make_group("z2"), 2)
    rows = [tuple(r) for r in b.rows]
    assert rows == sorted(rows)


def test_folner_defect_box_against_enumeration():
    z2 = groups.make_group("z2")
    F = groups.box_set(z2, (0, 0), (8, 8))
    # independent enumeration of B(1) . F
    pts = set(map(tuple, F.rows))
    grown = {(p[0] + h[0], p[1] + h[1])
             for p in pts for h in groups.ball(z2, 1)}
    oracle = Fraction(len(grown) - len(pts), len(pts))
    assert oracle == Fraction(32, 64)
    assert groups.folner_defect(z2, F, 1) == oracle


def test_dilated_box_formula_vs_enumeration():
    z2 = groups.make_group("z2")
    pts = {(x, y) for x in range(5) for y in range(7)}
    for r in (1, 2, 3):
        grown = {(p[0] + h[0], p[1] + h[1])
                 for p in pts for h in groups.ball(z2, r)}
        assert groups.dilated_box_size((5, 7), r) == len(grown)
    z3 = groups.make_group("z3")
    pts3 = {(x, y, z) for x in range(3) for y in range(4) for z in range(2)}
    grown3 = {z3.mul(h, p) for p in pts3 for h in groups.ball(z3, 1)}
    assert groups.dilated_box_size((3, 4, 2), 1) == len(grown3)


def test_folner_defect_z1_interval():
    z1 = groups.make_group("z1")
    for n in (4, 10, 64):
        F = groups.box_set(z1, (0,), (n,))
        assert groups.folner_defect(z1, F, 1) == Fraction(2, n)


def test_folner_defect_ball_at_r_zero():
    z2 = groups.make_group("z2")
    for r in (1, 2, 3):
        B = groups.ball(z2, r)
        assert groups.folner_defect(z2, B, 0) == 0


def test_folner_defect_monotone_in_box_side():
    z2 = groups.make_group("z2")
    prev = None
    for n in (4, 8, 16, 32):
        d = groups.folner_defect(z2, groups.box_set(z2, (0, 0), (n, n)), 1)
        if prev is not None:
            assert d <= prev
        prev = d


def test_folner_defect_empty_set_rejected():
    z2 = groups.make_group("z2")
    with pytest.raises(DomainError):
        groups.folner_defect(z2, groups.FiniteSet.from_elements(z2, []), 1)


def test_folner_defect_heisenberg_matches_enumeration():
    heis = groups.make_group("heis")
    F = groups.connected_folner(heis, 1.0, 1)
    defect = groups.folner_defect(heis, F, 1)
    pts = set(map(tuple, F.rows))
    grown = {heis.mul(h, p) for p in pts for h in groups.ball(heis, 1)}
    assert defect == Fraction(len(grown) - len(pts), len(pts))


def test_is_r_connected_examples():
    z2 = groups.make_group("z2")
    pair = groups.FiniteSet.from_elements(z2, [(0, 0), (5, 0)])
    assert not groups.is_r_connected(z2, pair, 1)
    assert groups.is_r_connected(z2, pair, 5)
    box = groups.box_set(z2, (0, 0), (4, 4))
    # scramble so the box fast path does not apply
    subset = groups.FiniteSet(z2, box.rows[:-1])
    assert groups.is_r_connected(z2, subset, 1)
    assert groups.is_r_connected(z2, groups.FiniteSet.from_elements(z2, []), 1)
    assert groups.is_r_connected(
        z2, groups.FiniteSet.from_elements(z2, [(2, 2)]), 1)


def test_connected_folner_z1():
    z1 = groups.make_group("z1")
    F = groups.connected_folner(z1, 0.5, 1)
    assert F.to_json() == [[0], [1], [2], [3]]


def test_connected_folner_z2_minimal_box():
    z2 = groups.make_group("z2")
    F = groups.connected_folner(z2, 0.25, 1)
    assert len(F) == 256  # 16 x 16: first box with l1 defect 4/n <= 0.25
    assert groups.folner_defect(z2, F, 1) <= Fraction(1, 4)


@pytest.mark.parametrize("gid,eps,r", [
    ("z1", 0.5, 1), ("z2", 0.25, 1), ("z2", 0.7, 2), ("heis", 1.0, 1),
])
def test_connected_folner_contract(gid, eps, r):
    group = groups.make_group(gid)
    F = groups.connected_folner(group, eps, r)
    assert groups.folner_defect(group, F, r) <= Fraction(eps)
    assert groups.is_r_connected(group, F, 1)


def test_connected_folner_weak_target_allows_tiny_set():
    z2 = groups.make_group("z2")
    eps = float(len(groups.ball(z2, 1)))  # defect can never exceed |B(r)|
    F = groups.connected_folner(z2, eps, 1)
    assert len(F) >= 1
    assert groups.folner_defect(z2, F, 1) <= Fraction(eps)


def test_growth_floor_values():
    z2 = groups.make_group("z2")
    assert groups.growth_floor(z2, 8) == pytest.approx(145 / 64)
    z1 = groups.make_group("z1")
    assert groups.growth_floor(z1, 8) < 1.0
    z3 = groups.make_group("z3")
    assert groups.growth_floor(z3, 1) == 7.0


@pytest.mark.parametrize("gid", ["z2", "heis"])
def test_growth_floor_quadratic_groups(gid):
    group = groups.make_group(gid)
    assert groups.growth_floor(group, 16) >= 1.0


def test_finite_set_roundtrip_and_contains():
    z2 = groups.make_group("z2")
    F = groups.FiniteSet.from_elements(z2, [(1, 2), (0, 0), (1, 2)])
    assert len(F) == 2
    assert (1, 2) in F
    assert (2, 1) not in F
    assert F.to_json() == [[0, 0], [1, 2]]


def test_capacity_guards():
    from orbitbench.errors import CapacityError
    z2 = groups.make_group("z2")
    with pytest.raises(CapacityError):
        groups.ball(z2, 10_000)
    with pytest.raises(CapacityError):
        groups.connected_folner(z2, 1e-9, 1, max_side=64)


def test_higher_rank_lattice_smoke():
    z4 = groups.make_group("z4")
    assert len(groups.ball(z4, 3)) == groups.ball_size_zd(4, 3)
    F = groups.box_set(z4, (0,) * 4, (3,) * 4)
    assert groups.folner_defect(z4, F, 1) == Fraction(8, 3)
    assert groups.is_r_connected(z4, F, 1)


def test_heisenberg_group_law():
    heis = groups.make_group("heis")
    a, b = (1, 2, 3), (4, 5, 6)
    assert heis.mul(a, b) == (5, 7, 3 + 6 + 1 * 5)
    assert heis.mul(a, heis.inv(a)) == (0, 0, 0)
    assert heis.mul(heis.inv(a), a) == (0, 0, 0)
    rows = np.array([b], dtype=np.int64)
    assert tuple(heis.left_mul_rows(a, rows)[0]) == heis.mul(a, b)
