"""Experiment harness: every construction as a seeded, reproducible command.

    orbitbench <command> --config cfg.txt [--seed N] [--out report.json]
                                          [--csv curves.csv]

Commands: abramov, theorem-a, derandomize, geometry, skeleton, furman,
graphing.  Each prints one line per check and exits 0 iff all checks pass.
Config files are `key = value` text; defaults live in the per-command
schemas below and are echoed into the JSON report.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import entropy as en
from . import graphing as gr
from . import sampling as sp
from . import skeleton as sk
from . import soe
from .cocycles import (CoboundaryCocycle, RestrictedCocycle,
                       boundedness_constant, check_cocycle_identity,
                       cohomology_violations, extend_by_return_map,
                       kakutani_check)
from .errors import WorkbenchError
from .groups import ball, connected_folner, folner_defect, growth_floor, \
    is_r_connected, make_group, box_set
from .reports import Report, read_config_file, resolve_config, write_csv
from .rng import make_rng
from .sampling import Cylinder, LocalIntMap, PositionSetEvent


def _bernoulli_system(d: int, p0: float) -> sp.SymbolicSystem:
    return sp.SymbolicSystem(d, 2, sp.ProductLaw([p0, 1.0 - p0]))


def _markov_system(flip: float) -> sp.SymbolicSystem:
    P = [[1.0 - flip, flip], [flip, 1.0 - flip]]
    return sp.SymbolicSystem(1, 2, sp.MarkovLaw(P, [0.5, 0.5]))


def _standard_twist(norm: int, alphabet: int, d: int) -> LocalIntMap:
    """f(x) = (norm * [x_0 = 0], 0, ...): a local map with max |f| = norm."""
    table = {(0,): tuple([norm] + [0] * (d - 1))}
    return LocalIntMap([(0,) * d], table, out_dim=d, alphabet_size=alphabet)


# -- abramov ---------------------------------------------------------------------

ABRAMOV_SCHEMA = {
    "law": ("str", "bernoulli"),
    "p": ("float", 0.5),
    "flip": ("float", 0.3),
    "n": ("int", 1_000_000),
    "pad": ("int", 64),
    "u_symbol": ("int", 0),
    "seed": ("int", 7),
    "sides": ("ints", list(range(1, 11))),
    "tol_entropy": ("float", 0.05),
    "tol_kac": ("float", 0.02),
}


def cmd_abramov(cfg: dict) -> Report:
    report = Report("abramov", cfg)
    system = _bernoulli_system(1, cfg["p"]) if cfg["law"] == "bernoulli" \
        else _markov_system(cfg["flip"])
    sample = sp.sample_window(system, cfg["n"], cfg["pad"], cfg["seed"])
    U = Cylinder({(0,): cfg["u_symbol"]})
    mu = U.analytic_prob(system)
    construction = soe.induced_soe(system, U)

    est = en.block_entropy(sample, cfg["sides"])
    if cfg["law"] == "bernoulli":
        h_exact = en.shannon([cfg["p"], 1 - cfg["p"]])
    else:
        h_exact = en.shannon([cfg["flip"], 1 - cfg["flip"]])
    report.check_rel("source_entropy", est.value, h_exact, cfg["tol_entropy"])

    coding = sp.induced_system(sample, U)
    report.check_rel("kac_mean_return", coding.mean_return_time, 1.0 / mu,
                     cfg["tol_kac"])
    ind_est = en.block_entropy(coding.to_sample(), [1, 2, 3])
    report.check_rel("induced_entropy", ind_est.value, h_exact / mu,
                     cfg["tol_entropy"])
    ratio = ind_est.value / est.value
    report.check_rel("entropy_ratio_vs_comp", ratio, float(construction.comp),
                     cfg["tol_entropy"])
    report.check_exact("inversion_violations",
                       construction.verify_inversion(sample, 100, cfg["seed"]), 0)
    report.extras = {
        "mu_U": mu, "comp": str(construction.comp),
        "source_estimate": est.to_json(), "induced_estimate": ind_est.to_json(),
    }
    report.csv_rows = (["side", "normalized_entropy_source"],
                       [[s, v[2]] for s, v in sorted(est.per_side.items())])
    return report.finish()


# -- theorem-a -------------------------------------------------------------------

THEOREM_A_SCHEMA = {
    "kind": ("str", "reparam"),
    "p": ("float", 0.5),
    "matrix": ("ints", [1, 1, 0, 1]),
    "window": ("int", 1024),
    "pad": ("int", 8),
    "u_symbol": ("int", 0),
    "seed": ("int", 11),
    "tol": ("float", 0.05),
    "kakutani_eps": ("float", 0.1),
    "kakutani_n": ("int", 100),
    "kakutani_n_max": ("int", 108),
}


def cmd_theorem_a(cfg: dict) -> Report:
    report = Report("theorem-a", cfg)
    kind = cfg["kind"]
    if kind == "induced":
        inner = cmd_abramov(resolve_config(
            {"p": cfg["p"], "n": cfg["window"], "seed": cfg["seed"],
             "u_symbol": cfg["u_symbol"], "tol_entropy": cfg["tol"]},
            ABRAMOV_SCHEMA, "abramov"))
        report.checks = inner.checks
        report.extras = inner.extras
        return report.finish()

    d = 2
    M = np.asarray(cfg["matrix"], dtype=np.int64).reshape(d, d)
    system = _bernoulli_system(d, cfg["p"])
    sample = sp.sample_window(system, cfg["window"], cfg["pad"], cfg["seed"])
    h_exact = en.shannon([cfg["p"], 1 - cfg["p"]])
    base_est = en.block_entropy(sample, [1, 2, 3])

    if kind == "reparam":
        construction = soe.reparam_soe(M)
        view = sp.reparam_system(sample, M)
        view_est = en.block_entropy(view, [1, 2, 3])
        ratio = view_est.value / base_est.value
        report.check_rel("entropy_ratio_vs_comp", ratio,
                         float(construction.comp), cfg["tol"])
        expected_c = float(np.abs(M).sum(axis=0).max())
        observed_c = boundedness_constant(construction.alpha, sample, 3,
                                          seed=cfg["seed"])
        report.check_exact("boundedness_constant", observed_c, expected_c)
        twist = _standard_twist(3, 2, d)
        perturbed = CoboundaryCocycle(M, twist)
        kk = kakutani_check(perturbed, M.astype(float), cfg["kakutani_eps"],
                            sample, cfg["kakutani_n"], cfg["kakutani_n_max"])
        report.check_exact("kakutani_fraction_good", kk["fraction_good"], 1.0)
        est_json = view_est.to_json()
    elif kind == "sublattice":
        construction = soe.sublattice_soe(M)
        recoded = sp.sublattice_system(sample, M)
        rec_est = en.block_entropy(recoded, [1, 2])
        m = float(construction.comp)
        report.check_rel("recoded_entropy", rec_est.value, m * h_exact,
                         cfg["tol"])
        ratio = rec_est.value / base_est.value
        report.check_rel("entropy_ratio_vs_comp", ratio, m, cfg["tol"])
        est_json = rec_est.to_json()
    else:
        raise WorkbenchError(f"unknown theorem-a kind {kind!r}")

    report.check_rel("source_entropy", base_est.value, h_exact, cfg["tol"])
    report.check_exact("inversion_violations",
                       construction.verify_inversion(sample, 100, cfg["seed"]), 0)
    report.extras = {"comp": str(construction.comp),
                     "source_estimate": base_est.to_json(),
                     "target_estimate": est_json}
    return report.finish()


# -- derandomize -----------------------------------------------------------------

DERANDOMIZE_SCHEMA = {
    "window": ("int", 2048),
    "pad": ("int", 4),
    "p": ("float", 0.5),
    "u_sites": ("str", "0,0:0"),
    "eps": ("float", 0.1),
    "f_norm": ("int", 2),
    "twist_table": ("str", ""),       # path to a LocalIntMap JSON file
    "seed": ("int", 17),
    "cohomology_pairs": ("int", 500),
    "max_rounds": ("int", 6),
}


def cmd_derandomize(cfg: dict) -> Report:
    report = Report("derandomize", cfg)
    d = 2
    eps = cfg["eps"]
    system = _bernoulli_system(d, cfg["p"])
    sample = sp.sample_window(system, cfg["window"], cfg["pad"], cfg["seed"])
    U = sp.parse_cylinder_spec(cfg["u_sites"], d)
    if cfg["twist_table"]:
        import json
        with open(cfg["twist_table"], "r", encoding="utf-8") as fh:
            twist = LocalIntMap.from_json(json.load(fh))
    else:
        twist = _standard_twist(cfg["f_norm"], 2, d)
    sigma = CoboundaryCocycle(np.eye(d, dtype=np.int64), twist,
                              declared=("integrable",))

    delta = eps
    rounds = []
    for _ in range(cfg["max_rounds"]):
        graphing, ms_report = gr.multiscale_graphing(sample, U, delta)
        theta, values, nn_report = gr.nn_encode(graphing, sigma, sample)
        est = en.generated_process_entropy(theta, sigma, sample)
        rounds.append({"delta": delta, "r": ms_report["r"],
                       "cost": ms_report["cost"], "estimate": est.value})
        if est.value < eps:
            break
        # cost scales ~ 1/r; retarget the budget from the measured
        # entropy-per-cost ratio
        delta = min(delta / 2, 0.8 * eps * ms_report["cost"] / est.value)
    report.check_upper("generated_entropy", est.value, eps)
    report.check_upper("graphing_cost", ms_report["cost"], eps)
    report.check_upper("vertex_measure", ms_report["vertex_measure"], eps)
    report.check_true("core_connected", ms_report["connected"])
    report.check_true("nn_cost_bounded",
                      nn_report["cost"] <= nn_report["original_cost"] + 1e-12,
                      observed=nn_report["cost"])

    verts = graphing.vertex_flats()
    restricted = RestrictedCocycle(sigma, PositionSetEvent(sample, verts))
    sigma_ext, eta = extend_by_return_map(restricted, sample, tau=sigma)
    agree_bad = 0
    checked_pairs = 0
    for g in graphing.support_keys():
        if g == graphing.identity:
            continue
        flats = graphing.support[g][:20]
        coords = gr._coords(flats, sample.core_shape)
        lhs = sigma_ext.values_at(g, coords, sample)
        rhs = sigma.values_at(g, coords, sample)
        agree_bad += int(np.any(lhs != rhs, axis=1).sum())
        checked_pairs += len(coords)
    report.check_exact("extension_agrees_on_V_pairs", agree_bad, 0)
    bad = cohomology_violations(sigma_ext, sigma, eta, sample,
                                cfg["cohomology_pairs"], 4, cfg["seed"])
    report.check_exact("cohomology_violations", bad, 0)
    ident = check_cocycle_identity(sigma_ext, sample, 200, 3, cfg["seed"])
    report.check_exact("extension_cocycle_identity_violations",
                       ident["violations"], 0)
    report.extras = {"rounds": rounds, "V_pairs_checked": checked_pairs,
                     "estimate": est.to_json(), "nn": nn_report}
    return report.finish()


# -- geometry --------------------------------------------------------------------

GEOMETRY_SCHEMA = {
    "group": ("str", "z2"),
    "r_max": ("int", 8),
    "oracle_r": ("int", 4),
    "folner_eps": ("float", 0.25),
    "folner_r": ("int", 1),
    "trials": ("int", 200),
    "seed": ("int", 3),
}


def _bfs_ball_oracle(group, r: int):
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


def cmd_geometry(cfg: dict) -> Report:
    report = Report("geometry", cfg)
    group = make_group(cfg["group"])
    oracle = _bfs_ball_oracle(group, cfg["oracle_r"])
    for r in range(cfg["oracle_r"] + 1):
        expect = sorted(g for g, dist in oracle.items() if dist <= r)
        got = [tuple(map(int, row)) for row in ball(group, r).rows]
        report.check_exact(f"ball_oracle_r{r}", got == expect, True)
    rng = make_rng(cfg["seed"], stream=31)
    elems = list(ball(group, 4))
    bad_tri = bad_inv = 0
    for _ in range(cfg["trials"]):
        g = elems[int(rng.integers(len(elems)))]
        h = elems[int(rng.integers(len(elems)))]
        if group.word_length(group.mul(g, h)) > \
                group.word_length(g) + group.word_length(h):
            bad_tri += 1
        if group.word_length(g) != group.word_length(group.inv(g)):
            bad_inv += 1
    report.check_exact("triangle_inequality_violations", bad_tri, 0)
    report.check_exact("inverse_symmetry_violations", bad_inv, 0)

    floor = growth_floor(group, cfg["r_max"])
    if cfg["group"] == "z1":
        report.check_true("growth_floor_linear", floor < 1.0, observed=floor)
    else:
        report.check_true("growth_floor_quadratic", floor >= 1.0, observed=floor)
    F = connected_folner(group, cfg["folner_eps"], cfg["folner_r"])
    defect = folner_defect(group, F, cfg["folner_r"])
    report.check_true("folner_defect_le_eps",
                      defect <= cfg["folner_eps"], observed=float(defect))
    report.check_true("folner_connected", is_r_connected(group, F, 1))
    report.extras = {"ball_sizes": {r: len(ball(group, r))
                                    for r in range(cfg["r_max"] + 1)},
                     "folner_size": len(F), "growth_floor": floor}
    report.csv_rows = (["r", "ball_size"],
                       [[r, len(ball(group, r))] for r in range(cfg["r_max"] + 1)])
    return report.finish()


# -- skeleton --------------------------------------------------------------------

SKELETON_SCHEMA = {
    "group": ("str", "z2"),
    "sides": ("ints", [32, 64]),
    "radii": ("ints", [2, 4, 8]),
    "seed": ("int", 5),
}


def cmd_skeleton(cfg: dict) -> Report:
    report = Report("skeleton", cfg)
    group = make_group(cfg["group"])
    d = group.rank
    rows = []
    ratios = []
    for side in cfg["sides"]:
        F = box_set(group, (0,) * d, (side,) * d)
        for r in cfg["radii"]:
            skel = sk.build_skeleton(F, r)
            nv, ne = len(skel.vertices), len(skel.edges)
            report.check_exact(f"spanning_tree_{side}_{r}", ne, nv - 1)
            report.check_true(
                f"density_{side}_{r}",
                sk.is_r_dense(skel.vertices, F, 2 * r))
            wt = skel.weight()
            scaled = wt * r / len(F)
            ratios.append(scaled)
            rows.append([side, r, nv, wt, scaled])
            sub_r = 2 * r
            Y = sk.FiniteSet(group, F.rows[::3])
            sub = sk.subset_skeleton(skel, Y, sub_r)
            bound = 2 * wt + 2 * sub_r * nv
            report.check_true(f"subset_bound_{side}_{r}",
                              sub.weight() <= bound, observed=sub.weight())
    spread = max(ratios) / min(ratios) if min(ratios) > 0 else float("inf")
    report.check_true("weight_scaling_factor_le_4", spread <= 4.0,
                      observed=spread)
    small = sk.build_skeleton(
        box_set(group, (0,) * d, (min(cfg["sides"]),) * d), cfg["radii"][0])
    report.extras = {"ratio_spread": spread,
                     "sample_skeleton": small.to_json()}
    report.csv_rows = (["side", "r", "vertices", "weight", "weight*r/|F|"], rows)
    return report.finish()


# -- furman ----------------------------------------------------------------------

FURMAN_SCHEMA = {
    "group": ("str", "z2"),
    "eps": ("float", 0.01),
    "trials": ("int", 1000),
    "support_radius": ("int", 10),
    "max_support": ("int", 30),
    "c": ("float", 2 * math.log(3)),
    "seed": ("int", 13),
}


def cmd_furman(cfg: dict) -> Report:
    report = Report("furman", cfg)
    group = make_group(cfg["group"])
    rng = make_rng(cfg["seed"], stream=41)
    elems = [g for g in ball(group, cfg["support_radius"])
             if g != group.identity]
    violations = dist_violations = 0
    c_eps = en.furman_constant(cfg["c"], cfg["eps"])
    for _ in range(cfg["trials"]):
        size = 1 + int(rng.integers(cfg["max_support"]))
        idx = rng.choice(len(elems), size=min(size, len(elems)), replace=False)
        probs = rng.random(len(idx))
        p_map = {elems[int(i)]: float(q) for i, q in zip(idx, probs)}
        res = en.furman_bound_check(p_map, group, cfg["eps"], c=cfg["c"])
        violations += 0 if res["ok"] else 1
        total = sum(p_map.values())
        dist = {g: q / total for g, q in p_map.items()}
        res2 = en.distribution_length_bound(dist, group, cfg["eps"], c=cfg["c"])
        dist_violations += 0 if res2["ok"] else 1
    report.check_exact("sparse_vector_violations", violations, 0)
    report.check_exact("distribution_violations", dist_violations, 0)
    report.extras = {"C_eps": c_eps, "k": en.furman_k(cfg["eps"]),
                     "support_ball": len(elems)}
    return report.finish()


# -- graphing --------------------------------------------------------------------

GRAPHING_SCHEMA = {
    "window": ("int", 512),
    "pad": ("int", 8),
    "alphabet": ("int", 5),
    "u_symbol": ("int", 0),
    "radii": ("ints", [2, 4, 8]),
    "ms_eps": ("float", 0.2),
    "reconstruction_pairs": ("int", 500),
    "seed": ("int", 42),
}


def cmd_graphing(cfg: dict) -> Report:
    report = Report("graphing", cfg)
    k = cfg["alphabet"]
    system = sp.SymbolicSystem(2, k, sp.ProductLaw([1.0 / k] * k))
    sample = sp.sample_window(system, cfg["window"], cfg["pad"], cfg["seed"])
    U = Cylinder({(0, 0): cfg["u_symbol"]})

    rows = []
    scaled = []
    for r in cfg["radii"]:
        tiling = gr.rokhlin_tiling(sample, 1.0, r)
        graphing, rep = gr.low_cost_graphing(sample, tiling, U, r)
        # Vert in U, class match and 4r-density are hard assertions inside
        # the construction; reaching here certifies them.
        report.check_true(f"lowcost_invariants_r{r}", True,
                          observed=f"cost={rep['cost']:.4f}")
        scaled.append(rep["cost"] * r)
        rows.append([r, rep["cost"], rep["cost"] * r,
                     rep["vertex_measure"], rep["n_tiles"]])
    spread = max(scaled) / min(scaled)
    report.check_true("cost_scaling_factor_le_4", spread <= 4.0,
                      observed=spread)

    ms, ms_rep = gr.multiscale_graphing(sample, U, cfg["ms_eps"])
    report.check_upper("multiscale_vertex_measure",
                       ms_rep["vertex_measure"], cfg["ms_eps"])
    report.check_upper("multiscale_cost", ms_rep["cost"], cfg["ms_eps"])
    report.check_true("multiscale_connected", ms_rep["connected"])
    ms_rep["class_count"] = gr.generated_relation(ms).n_classes()

    twist = _standard_twist(2, k, 2)
    alpha = CoboundaryCocycle(np.eye(2, dtype=np.int64), twist)
    rng = make_rng(cfg["seed"], stream=51)
    verts = ms.vertex_flats()
    coords = gr._coords(verts, sample.core_shape)
    bad = 0
    n_pairs = cfg["reconstruction_pairs"]
    ia = rng.integers(0, len(verts), size=n_pairs)
    ib = rng.integers(0, len(verts), size=n_pairs)
    for a, b in zip(ia, ib):
        x = tuple(map(int, coords[a]))
        g = tuple(map(int, coords[b] - coords[a]))
        direct = tuple(map(int, alpha.values_at(
            g, np.asarray([x]), sample)[0]))
        for order in ("canonical", "reversed"):
            got = gr.reconstruct_cocycle(ms, alpha, x, g, order=order)
            if got != direct:
                bad += 1
    report.check_exact("reconstruction_mismatches", bad, 0)
    report.extras = {"multiscale": {key: val for key, val in ms_rep.items()},
                     "lowcost_rows": rows}
    report.csv_rows = (["r", "cost", "cost*r", "vertex_measure", "n_tiles"],
                       rows)
    return report.finish()


# -- entry point -----------------------------------------------------------------

COMMANDS = {
    "abramov": (cmd_abramov, ABRAMOV_SCHEMA),
    "theorem-a": (cmd_theorem_a, THEOREM_A_SCHEMA),
    "derandomize": (cmd_derandomize, DERANDOMIZE_SCHEMA),
    "geometry": (cmd_geometry, GEOMETRY_SCHEMA),
    "skeleton": (cmd_skeleton, SKELETON_SCHEMA),
    "furman": (cmd_furman, FURMAN_SCHEMA),
    "graphing": (cmd_graphing, GRAPHING_SCHEMA),
}


def run_command(name: str, raw_config: dict) -> Report:
    fn, schema = COMMANDS[name]
    cfg = resolve_config(raw_config, schema, name)
    return fn(cfg)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="orbitbench",
        description="entropy / orbit-equivalence workbench commands")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None,
                       help="key = value config file")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--out", default=None, help="write the JSON report here")
        p.add_argument("--csv", default=None, help="write curve tables here")
    args = parser.parse_args(argv)

    raw = read_config_file(args.config) if args.config else {}
    if args.seed is not None:
        raw["seed"] = str(args.seed)
    try:
        report = run_command(args.command, raw)
    except WorkbenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for check in report.checks:
        print(check.line())
    print(f"{'PASS' if report.passed else 'FAIL'} {args.command} "
          f"({report.elapsed_seconds:.2f}s)")
    if args.out:
        report.write_json(args.out)
    if args.csv and getattr(report, "csv_rows", None):
        header, rows = report.csv_rows
        write_csv(args.csv, header, rows)
    return 0 if report.passed else 1


if __name__ == "__main__":
    raise SystemExit(main())
