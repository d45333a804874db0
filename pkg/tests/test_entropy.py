"""Shannon/partial/block entropy, the entropy--length inequality, bounds."""

import math

import numpy as np
import pytest

from orbitbench import cocycles as cc
from orbitbench import entropy as en
from orbitbench import graphing as gr
from orbitbench import groups
from orbitbench import sampling as sp
from orbitbench.errors import DegenerateInputError, DomainError
from orbitbench.rng import make_rng


def bernoulli(d=1, p=0.5):
    return sp.SymbolicSystem(d, 2, sp.ProductLaw([p, 1 - p]))


def test_shannon_values():
    assert en.shannon([1.0]) == 0.0
    assert en.shannon([0.5, 0.5]) == pytest.approx(math.log(2))
    expect = 0.25 * math.log(4) + 0.75 * math.log(4 / 3)
    assert en.shannon([0.25, 0.75]) == pytest.approx(expect)
    with pytest.raises(DomainError):
        en.shannon([0.5, 0.6])


def test_shannon_concavity_on_random_pairs():
    rng = make_rng(3, stream=200)
    for _ in range(100):
        k = int(rng.integers(2, 6))
        p = rng.random(k); p /= p.sum()
        q = rng.random(k); q /= q.sum()
        lam = float(rng.random())
        mix = lam * p + (1 - lam) * q
        assert en.shannon(mix) >= lam * en.shannon(p) + \
            (1 - lam) * en.shannon(q) - 1e-12


def test_block_entropy_bernoulli():
    s = sp.sample_window(bernoulli(1), 1_000_000, 4, seed=31)
    est = en.block_entropy(s, range(1, 11))
    assert abs(est.value - math.log(2)) <= 0.05 * math.log(2)


def test_block_entropy_constant_configuration():
    system = sp.SymbolicSystem(1, 2, sp.ProductLaw([1.0, 0.0]))
    s = sp.sample_window(system, 100_000, 4, seed=1)
    assert en.block_entropy(s, [1, 2, 3]).value == 0.0


def test_block_entropy_markov_rate():
    system = sp.SymbolicSystem(
        1, 2, sp.MarkovLaw([[0.7, 0.3], [0.3, 0.7]], [0.5, 0.5]))
    s = sp.sample_window(system, 1_000_000, 4, seed=32)
    est = en.block_entropy(s, range(1, 11))
    rate = -(0.3 * math.log(0.3) + 0.7 * math.log(0.7))
    assert abs(est.value - rate) <= 0.05 * rate


def test_block_entropy_z2_normalized():
    s = sp.sample_window(bernoulli(2), 512, 2, seed=33)
    est = en.block_entropy(s, [1, 2, 3])
    assert est.method.startswith("normalized")
    assert abs(est.value - math.log(2)) <= 0.05 * math.log(2)


def test_sublattice_doubling_entropy_z1():
    s = sp.sample_window(bernoulli(1), 500_000, 4, seed=44)
    rec = sp.sublattice_system(s, np.array([[2]]))
    est = en.block_entropy(rec, [1, 2, 3])
    assert abs(est.value - 2 * math.log(2)) <= 0.05 * 2 * math.log(2)


def test_induced_on_full_space_has_identical_entropy():
    # full-space induction relabels the source symbols one-for-one (the
    # final visit has no successor, so the coded window is one shorter)
    s = sp.sample_window(bernoulli(1), 100_000, 4, seed=45)
    coding = sp.induced_system(s, sp.Cylinder({}))
    assert np.array_equal(coding.code_ids, s.core_view()[:-1])
    a = en.block_entropy(s, [1, 2, 3])
    b = en.block_entropy(coding.to_sample(), [1, 2, 3])
    assert abs(b.value - a.value) < 1e-6


def test_block_entropy_alphabet4_accuracy():
    system = sp.SymbolicSystem(1, 4, sp.ProductLaw([0.4, 0.3, 0.2, 0.1]))
    s = sp.sample_window(system, 1_000_000, 4, seed=34)
    est = en.block_entropy(s, range(1, 8))
    expect = en.shannon([0.4, 0.3, 0.2, 0.1])
    assert abs(est.value - expect) <= 0.05 * expect


def test_block_entropy_excludes_unreliable_sides():
    s = sp.sample_window(bernoulli(1), 2000, 2, seed=35)
    est = en.block_entropy(s, [1, 2, 30])
    assert 30 in est.excluded_sides
    with pytest.raises(DegenerateInputError):
        en.block_entropy(s, [25, 30])


def test_partial_entropy_star_identity():
    s = sp.sample_window(bernoulli(1), 500_000, 4, seed=36)
    U = sp.Cylinder({})

    def symbol_at_origin(sample, pos):
        return sample.values_at(pos)

    value = en.partial_entropy(s, U, symbol_at_origin)
    assert abs(value - math.log(2)) < 0.01


def test_partial_entropy_empty_event_is_zero():
    system = sp.SymbolicSystem(1, 2, sp.ProductLaw([1.0, 0.0]))
    s = sp.sample_window(system, 10_000, 4, seed=1)
    assert en.partial_entropy(s, sp.Cylinder({(0,): 1}), lambda sm, p: p[:, 0]) == 0.0


def test_partial_entropy_constant_label_gives_event_entropy():
    s = sp.sample_window(bernoulli(1), 500_000, 4, seed=37)
    U = sp.Cylinder({(0,): 0})
    mu = sp.empirical_measure(s, U)
    value = en.partial_entropy(s, U, lambda sm, p: np.zeros(len(p), dtype=int))
    assert value == pytest.approx(en.binary_entropy(mu))


def test_furman_constant_explicit_point():
    # series check: k is minimal with 2 sum e^{-kn-1} <= eps
    for k_try in range(1, 10):
        series = 2 * sum(math.exp(-k_try * n - 1) for n in range(1, 4000))
        if series <= 0.01:
            break
    assert en.furman_k(0.01) == k_try == 5
    C = en.furman_constant(2 * math.log(3), 0.01)
    assert C == pytest.approx(2 * (2 * math.log(3) + 5) + 2 * math.log(2))
    assert C == pytest.approx(15.7807, abs=1e-3)


def test_furman_k_one_for_large_eps():
    threshold = 2 * math.exp(-2) / (1 - math.exp(-1))
    assert en.furman_k(threshold + 1e-9) == 1
    assert en.furman_k(2.0) == 1


def test_furman_constant_monotone_in_eps():
    c = 2 * math.log(3)
    grid = [1.0, 0.1, 0.01, 0.001]
    values = [en.furman_constant(c, e) for e in grid]
    assert all(a < b for a, b in zip(values, values[1:]))


def test_furman_bound_trivial_and_single():
    z2 = groups.make_group("z2")
    res = en.furman_bound_check({}, z2, 0.01, c=2 * math.log(3))
    assert res["ok"] and res["lhs"] == 0.0
    res2 = en.furman_bound_check({(1, 0): 0.5}, z2, 0.01, c=2 * math.log(3))
    assert res2["ok"]
    assert res2["lhs"] == pytest.approx(math.log(2))


def test_furman_bound_randomized_suite():
    z2 = groups.make_group("z2")
    rng = make_rng(4, stream=201)
    elems = [g for g in groups.ball(z2, 10) if g != (0, 0)]
    for _ in range(200):
        size = 1 + int(rng.integers(30))
        idx = rng.choice(len(elems), size=size, replace=False)
        p_map = {elems[int(i)]: float(q)
                 for i, q in zip(idx, rng.random(size))}
        assert en.furman_bound_check(p_map, z2, 0.01, c=2 * math.log(3))["ok"]


def test_furman_bound_rejects_identity_mass():
    z2 = groups.make_group("z2")
    with pytest.raises(DomainError):
        en.furman_bound_check({(0, 0): 0.5}, z2, 0.01, c=2.0)


def test_small_set_entropy_conventions():
    s = sp.sample_window(bernoulli(1), 200_000, 8, seed=38)
    ident = cc.ConstantLinearCocycle(np.eye(1, dtype=int))
    never = sp.Cylinder({(0,): 0, (1,): 0, (2,): 0, (3,): 0, (4,): 0,
                         (5,): 0, (6,): 0, (7,): 1, (-1,): 0, (-2,): 0})
    if sp.empirical_measure(s, never) == 0.0:
        assert en.small_set_entropy(ident, (1,), never, s) == 0.0
    # constant values on U: the conditional term vanishes
    U = sp.Cylinder({(0,): 0})
    mu = sp.empirical_measure(s, U)
    val = en.small_set_entropy(ident, (3,), U, s)
    assert val == pytest.approx(en.binary_entropy(mu))


def test_small_set_entropy_decreases_on_nested_events():
    s = sp.sample_window(bernoulli(1), 500_000, 8, seed=39)
    ident = cc.ConstantLinearCocycle(np.eye(1, dtype=int))
    nested = [sp.Cylinder({(0,): 0}),
              sp.Cylinder({(0,): 0, (1,): 0}),
              sp.Cylinder({(0,): 0, (1,): 0, (2,): 0})]
    table = en.small_set_entropy_table(ident, (1,), nested, s)
    mus = [row[0] for row in table]
    values = [row[1] for row in table]
    assert mus[0] > mus[1] > mus[2]
    assert values[0] > values[1] > values[2]


def uniform5():
    return sp.SymbolicSystem(2, 5, sp.ProductLaw([0.2] * 5))


def test_graphing_entropy_bound_empty():
    s = sp.sample_window(uniform5(), 64, 2, seed=40)
    g = gr.Graphing(s, {})
    alpha = cc.ConstantLinearCocycle(np.eye(2, dtype=int))
    res = en.graphing_entropy_bound(g, alpha, s, 0.05, 2 * math.log(3))
    assert res["sum_bound"] == 0.0
    assert res["cost_bound"] == pytest.approx(0.05)
    assert res["estimate"] == 0.0


def test_graphing_entropy_bound_generator_supported_constant():
    s = sp.sample_window(uniform5(), 64, 2, seed=41)
    cols = np.arange(10, 50)
    coords = np.stack([np.full(40, 20), cols], axis=1)
    support = {(0, 1): coords, (0, -1): coords + np.array([0, 1])}
    g = gr.graphing_from_position_sets(s, support)
    alpha = cc.ConstantLinearCocycle(np.eye(2, dtype=int))
    res = en.graphing_entropy_bound(g, alpha, s, 0.05, 2 * math.log(3))
    mu = 40 / s.core_size
    assert res["sum_bound"] == pytest.approx(2 * en.binary_entropy(mu))
    assert res["estimate"] is not None
    assert res["estimate"] <= res["sum_bound"] + 0.02


def test_graphing_entropy_bound_scales_with_budget():
    s = sp.sample_window(uniform5(), 256, 8, seed=42)
    U = sp.Cylinder({(0, 0): 0})
    bounds = []
    costs = []
    for eps in (0.4, 0.2):
        g, rep = gr.multiscale_graphing(s, U, eps)
        alpha = cc.CoboundaryCocycle(
            np.eye(2, dtype=int),
            sp.LocalIntMap([(0, 0)], {(0,): (2, 0)}, 2, 5))
        res = en.graphing_entropy_bound(g, alpha, s, eps, 2 * math.log(3))
        bounds.append(res["sum_bound"])
        costs.append(res["cost"])
        if res["estimate"] is not None:
            assert res["estimate"] <= res["sum_bound"] + 0.02
    assert costs[1] <= costs[0]
    assert bounds[1] <= bounds[0]
    assert 1.0 <= bounds[0] / bounds[1] <= 4.0


def test_entropy_estimate_json():
    s = sp.sample_window(bernoulli(1), 10_000, 2, seed=43)
    js = en.block_entropy(s, [1, 2]).to_json()
    assert set(js) >= {"value", "method", "per_side", "stderr_proxy"}
