"""T-graphings on window models.

A graphing is a family (A_g) of core position sets, symmetric in the sense
A_{g^-1} = T^g A_g, together with the identity slot A_e marking the vertex
set.  Edges are the pairs (x, T^g x) for x in A_g; the length-weighted cost
is sum_g |g| * mu(A_g) with mu the empirical core measure.

Constructions here follow the tile-and-skeletonize route: cube Rokhlin
tilings, per-tile subset skeleta transported onto the event set, dyadic
multi-scale unions merged through nested parent grids, and the
nearest-neighbour re-encoding that splits long edges into generator steps.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import CapacityError, DomainError
from .groups import box_set, make_group, pack_rows
from .sampling import OrbitSample
from .skeleton import build_skeleton, mst_complete_rows, _is_dense_rows
from .unionfind import UnionFind


def _flat(coords: np.ndarray, shape) -> np.ndarray:
    return np.ravel_multi_index(tuple(np.asarray(coords, dtype=np.int64).T), shape)


def _coords(flats: np.ndarray, shape) -> np.ndarray:
    return np.stack(np.unravel_index(np.asarray(flats, dtype=np.int64), shape),
                    axis=1).astype(np.int64)


class Graphing:
    def __init__(self, sample: OrbitSample, support: dict):
        self.sample = sample
        self.d = sample.d
        self.core_shape = sample.core_shape
        self.N = sample.core_size
        self.support = {tuple(int(c) for c in g): np.unique(np.asarray(f, dtype=np.int64))
                        for g, f in support.items() if len(f)}
        self._cache: dict = {}

    @property
    def identity(self):
        return (0,) * self.d

    def support_keys(self):
        """Support elements in canonical order (word length, then lex)."""
        keys = list(self.support)
        keys.sort(key=lambda g: (sum(abs(c) for c in g), g))
        return keys

    def vertex_flats(self) -> np.ndarray:
        if "verts" not in self._cache:
            if self.support:
                self._cache["verts"] = np.unique(np.concatenate(
                    [f for f in self.support.values()]))
            else:
                self._cache["verts"] = np.zeros(0, dtype=np.int64)
        return self._cache["verts"]

    def vertex_measure(self) -> float:
        return len(self.vertex_flats()) / self.N

    def support_radius(self) -> int:
        return max((sum(abs(c) for c in g) for g in self.support), default=0)

    def edge_count(self) -> int:
        return sum(len(f) for g, f in self.support.items()
                   if g != self.identity) // 2

    def to_json(self):
        return {
            "core_shape": list(self.core_shape),
            "support": [{"g": list(g),
                         "positions": [list(map(int, c))
                                       for c in _coords(f, self.core_shape)]}
                        for g, f in sorted(self.support.items())],
            "cost": cost(self),
            "vertex_measure": self.vertex_measure(),
        }


def graphing_from_position_sets(sample: OrbitSample, support: dict) -> Graphing:
    """Build a graphing from {g: array of core coordinate rows}."""
    conv = {g: _flat(np.asarray(rows, dtype=np.int64).reshape(-1, sample.d),
                     sample.core_shape)
            for g, rows in support.items() if len(rows)}
    return Graphing(sample, conv)


def validate(graphing: Graphing) -> dict:
    """Assert the symmetry identity A_{g^-1} = T^g A_g on the window
    interior (pairs whose far endpoint stays in the core), and that every
    edge endpoint remains addressable inside the padded window.  Raises
    DomainError naming the offending (g, position)."""
    shape = graphing.core_shape
    pad = graphing.sample.r_pad
    ident = graphing.identity
    boundary_affected = 0
    for g, flats in graphing.support.items():
        coords = _coords(flats, shape)
        shifted = coords + np.asarray(g, dtype=np.int64)
        interior = np.ones(len(shifted), dtype=bool)
        for i, s in enumerate(shape):
            bad = (shifted[:, i] < -pad) | (shifted[:, i] >= s + pad)
            if bad.any():
                pos = tuple(coords[np.flatnonzero(bad)[0]])
                raise DomainError(
                    f"edge at {pos} with move {g} leaves the padded window")
            interior &= (shifted[:, i] >= 0) & (shifted[:, i] < s)
        if g == ident:
            continue
        boundary_affected += int((~interior).sum())
        if not interior.any():
            continue
        ginv = tuple(-c for c in g)
        partner = graphing.support.get(ginv)
        translated = np.sort(_flat(shifted[interior], shape))
        if partner is None or not np.isin(translated, partner,
                                          assume_unique=True).all():
            raise DomainError(f"symmetry violated between A_{g} and A_{ginv}")
    return {
        "ok": True,
        "vertex_measure": graphing.vertex_measure(),
        "support_radius": graphing.support_radius(),
        "edges": graphing.edge_count(),
        "nonempty_moves": len(graphing.support),
        "boundary_affected": boundary_affected,
    }


def cost(graphing: Graphing) -> float:
    """Length-weighted cost: sum_g |g| * |A_g| / N (A_e contributes 0)."""
    total = 0
    for g, flats in graphing.support.items():
        total += sum(abs(c) for c in g) * len(flats)
    return total / graphing.N


class WindowRelation:
    """Equivalence classes generated by a graphing, restricted to its
    vertex set (everything off the vertex set stays a singleton)."""

    def __init__(self, vertex_flats: np.ndarray, labels: np.ndarray):
        self.vertex_flats = vertex_flats
        self.labels = labels

    def n_classes(self) -> int:
        return len(np.unique(self.labels)) if len(self.labels) else 0

    def labels_of_flats(self, flats: np.ndarray) -> np.ndarray:
        if len(self.vertex_flats) == 0:
            return -np.ones(len(flats), dtype=np.int64)
        idx = np.searchsorted(self.vertex_flats, flats)
        idx = np.clip(idx, 0, len(self.vertex_flats) - 1)
        return np.where(self.vertex_flats[idx] == flats, self.labels[idx], -1)


def generated_relation(graphing: Graphing) -> WindowRelation:
    """Union-find closure of the edges {x, x+g}; labels are the smallest
    member flat index of each class (deterministic)."""
    verts = graphing.vertex_flats()
    uf = UnionFind(len(verts))
    shape = graphing.core_shape
    for g, flats in graphing.support.items():
        if g == graphing.identity:
            continue
        shifted = _coords(flats, shape) + np.asarray(g, dtype=np.int64)
        in_core = np.ones(len(shifted), dtype=bool)
        for i, s in enumerate(shape):
            in_core &= (shifted[:, i] >= 0) & (shifted[:, i] < s)
        nbr = _flat(shifted[in_core], shape)
        ia = np.searchsorted(verts, flats[in_core])
        ib = np.searchsorted(verts, nbr)
        ib = np.clip(ib, 0, len(verts) - 1)
        ok = verts[ib] == nbr  # boundary-affected partners may be absent
        for a, b in zip(ia[ok], ib[ok]):
            uf.union(int(a), int(b))
    roots = uf.labels()
    labels = verts[roots]
    return WindowRelation(verts, labels)


def orbit_wise_connected(graphing: Graphing, margin: int = 0) -> tuple:
    """Whether all vertices in the margin-shrunk core share one generated
    class.  Returns (connected, n_excluded_boundary_vertices)."""
    verts = graphing.vertex_flats()
    if len(verts) == 0:
        return True, 0
    rel = generated_relation(graphing)
    coords = _coords(verts, graphing.core_shape)
    keep = np.ones(len(verts), dtype=bool)
    for i, s in enumerate(graphing.core_shape):
        keep &= (coords[:, i] >= margin) & (coords[:, i] < s - margin)
    excluded = int((~keep).sum())
    if not keep.any():
        return True, excluded
    return int(len(np.unique(rel.labels[keep]))) <= 1, excluded


# -- Rokhlin tilings -------------------------------------------------------------

@dataclass
class RokhlinTiling:
    core_shape: tuple
    eps: float
    r: int
    side: int
    boundaries: list = field(repr=False)

    @property
    def grid_shape(self) -> tuple:
        return tuple(len(b) - 1 for b in self.boundaries)

    def n_tiles(self) -> int:
        return int(np.prod(self.grid_shape))

    def tile_boxes(self):
        out = []
        for idx in np.ndindex(self.grid_shape):
            lo = tuple(int(self.boundaries[a][i]) for a, i in enumerate(idx))
            hi = tuple(int(self.boundaries[a][i + 1]) for a, i in enumerate(idx))
            out.append((lo, hi))
        return out

    def tile_index_of(self, coords: np.ndarray) -> np.ndarray:
        coords = np.asarray(coords, dtype=np.int64).reshape(-1, len(self.core_shape))
        per_axis = []
        for a, b in enumerate(self.boundaries):
            per_axis.append(np.searchsorted(b, coords[:, a], side="right") - 1)
        return np.ravel_multi_index(tuple(per_axis), self.grid_shape)


def _boundaries_for(length: int, side: int) -> np.ndarray:
    """Cut [0, length) at multiples of `side`; the last tile absorbs the
    remainder so every tile side lies in [side, 2*side)."""
    k = max(length // side, 1)
    cuts = [i * side for i in range(k)] + [length]
    return np.asarray(cuts, dtype=np.int64)


def minimal_rokhlin_side(d: int, eps: float, r: int) -> int:
    """Smallest n with ((n + 2r)^d - n^d) / n^d <= eps."""
    n = 1
    while True:
        if Fraction((n + 2 * r) ** d - n ** d, n ** d) <= Fraction(eps):
            return n
        n += 1


def rokhlin_tiling(sample: OrbitSample, eps: float, r: int) -> RokhlinTiling:
    """Cube tiling of the core into connected boxes whose boundary defect
    is at most eps; sides chosen minimally by the cube-dilation formula."""
    if eps <= 0 or r < 1:
        raise DomainError("rokhlin_tiling needs eps > 0 and r >= 1")
    d = sample.d
    side = minimal_rokhlin_side(d, eps, r)
    if side > min(sample.core_shape):
        raise CapacityError(
            f"rokhlin tile side {side} exceeds the core {sample.core_shape}")
    boundaries = [_boundaries_for(s, side) for s in sample.core_shape]
    tiling = RokhlinTiling(sample.core_shape, eps, r, side, boundaries)
    _assert_tiles_folner(tiling, eps, r)
    return tiling


def _assert_tiles_folner(tiling: RokhlinTiling, eps: float, r: int) -> None:
    from .groups import dilated_box_size
    shapes = {tuple(int(b[i + 1] - b[i]) for i in range(len(b) - 1))
              for b in [tuple(x) for x in tiling.boundaries]}
    sides_by_axis = [sorted({int(b[i + 1] - b[i]) for i in range(len(b) - 1)})
                     for b in tiling.boundaries]
    import itertools
    for combo in itertools.product(*sides_by_axis):
        size = int(np.prod(combo))
        defect = Fraction(dilated_box_size(combo, r) - size, size)
        assert defect <= Fraction(eps), (
            f"tile {combo} has defect {defect} > {eps}")


# -- per-tile skeleton graphings ---------------------------------------------------

_box_skel_cache: dict = {}
_box_skel_lock = threading.Lock()


def _box_skeleton(shape: tuple, r: int):
    """(2r)-skeleton of an axis box (relative coordinates); memoized by shape."""
    key = (shape, r)
    if key not in _box_skel_cache:
        zd = make_group(f"z{len(shape)}")
        sk = build_skeleton(box_set(zd, (0,) * len(shape), shape), r)
        with _box_skel_lock:
            _box_skel_cache[key] = (sk.vertices.rows, sk.edges, sk.weight())
    return _box_skel_cache[key]


def _subset_skeleton_rows(group, parent_rows, parent_wt, parent_edges,
                          B_rows, r_dense: int):
    """Subset-skeleton step on raw coordinate rows.

    `parent_rows` must be r_dense-dense over B_rows; returns (reps, edges
    as index pairs into reps, weight); asserts the 2w + 2r|V| bound and
    the (2*r_dense)-density of the representatives over B_rows.
    """
    dist = np.full(len(parent_rows), np.iinfo(np.int64).max, dtype=np.int64)
    for i, w in enumerate(parent_rows):
        dist[i] = np.abs(B_rows - w).sum(axis=1).min()
    w_idx = np.flatnonzero(dist <= r_dense)
    if len(w_idx) == 0:
        raise DomainError("parent skeleton is not dense over the tile subset")
    W = parent_rows[w_idx]
    reps = np.empty_like(W)
    for k, w in enumerate(W):
        d_to_b = np.abs(B_rows - w).sum(axis=1)
        reps[k] = B_rows[np.flatnonzero(d_to_b <= r_dense)[0]]
    tree, tree_wt = mst_complete_rows(group, W)
    assert tree_wt <= 2 * parent_wt, "Steiner bound violated on a tile"
    uniq, inv = np.unique(reps, axis=0, return_index=False, return_inverse=True)
    edges = set()
    wt = 0
    for i, j in tree:
        a, b = int(inv[i]), int(inv[j])
        if a != b:
            edge = (min(a, b), max(a, b))
            if edge not in edges:
                edges.add(edge)
                wt += int(np.abs(uniq[a] - uniq[b]).sum())
    bound = 2 * parent_wt + 2 * r_dense * len(parent_rows)
    assert wt <= bound, f"subset skeleton weight {wt} exceeds {bound}"
    assert _is_dense_rows(group, uniq, B_rows, 2 * r_dense)
    return uniq, sorted(edges), wt


def low_cost_graphing(sample: OrbitSample, tiling: RokhlinTiling, U_event,
                      r: int) -> tuple:
    """Per tile: skeletonize the tile, re-root onto U inside the tile, and
    transport the tree edges into (A_g).  Returns (graphing, report).

    Guarantees (asserted): Vert inside U; generated classes equal
    tiles-intersect-Vert; vertices are (T, 4r)-dense in U within each tile.
    """
    if tiling.r != r:
        raise DomainError("tiling was built for a different radius")
    zd = make_group(f"z{sample.d}")
    U_mask = U_event.holds(sample)
    support: dict = {}
    ident = (0,) * sample.d
    total_wt = 0
    vert_tile_pairs = []
    for t_idx, (lo, hi) in enumerate(tiling.tile_boxes()):
        shape = tuple(h - l for l, h in zip(lo, hi))
        sl = tuple(slice(l, h) for l, h in zip(lo, hi))
        local = np.argwhere(U_mask[sl]).astype(np.int64)
        if len(local) == 0:
            continue  # empty tiles contribute nothing
        B_rows = local + np.asarray(lo, dtype=np.int64)
        p_rows, p_edges, p_wt = _box_skeleton(shape, r)
        reps, edges, wt = _subset_skeleton_rows(
            zd, p_rows + np.asarray(lo, dtype=np.int64), p_wt, p_edges,
            B_rows, 2 * r)
        total_wt += wt
        rep_flats = _flat(reps, sample.core_shape)
        support.setdefault(ident, []).append(rep_flats)
        vert_tile_pairs.append((rep_flats, t_idx))
        for i, j in edges:
            g = tuple(int(c) for c in reps[j] - reps[i])
            ginv = tuple(-c for c in g)
            support.setdefault(g, []).append(rep_flats[i:i + 1])
            support.setdefault(ginv, []).append(rep_flats[j:j + 1])
    support = {g: np.concatenate(v) for g, v in support.items()}
    graphing = Graphing(sample, support)
    validate(graphing)

    verts = graphing.vertex_flats()
    u_flats = np.flatnonzero(U_mask.ravel())
    assert np.isin(verts, u_flats, assume_unique=True).all(), \
        "graphing vertices escape U"
    rel = generated_relation(graphing)
    tile_of_vert = tiling.tile_index_of(_coords(verts, sample.core_shape))
    class_of_vert = rel.labels
    pairs = np.stack([tile_of_vert, class_of_vert], axis=1)
    uniq_pairs = np.unique(pairs, axis=0)
    assert len(np.unique(uniq_pairs[:, 0])) == len(uniq_pairs) and \
        len(np.unique(uniq_pairs[:, 1])) == len(uniq_pairs), \
        "generated classes do not match the tiling classes on Vert"

    c = cost(graphing)
    report = {
        "cost": c,
        "c_impl": c * r,
        "vertex_measure": graphing.vertex_measure(),
        "n_tiles": tiling.n_tiles(),
        "n_occupied_tiles": len(vert_tile_pairs),
        "total_weight": total_wt,
        "density_radius": 4 * r,
    }
    return graphing, report


# -- dyadic multi-scale union ------------------------------------------------------

def _parent_boundaries(bounds: np.ndarray) -> np.ndarray:
    """Drop every other interior cut (nested doubling grids)."""
    inner = bounds[:-1][::2]
    return np.concatenate([inner, bounds[-1:]])


def _merge_scale_edges(vert_coords: np.ndarray, child_bounds, parent_bounds,
                       shape) -> dict:
    """One tree per parent tile over the child-tile representatives
    (lexicographically smallest vertex of each nonempty child)."""
    zd = make_group(f"z{len(shape)}")
    child_grid = tuple(len(b) - 1 for b in child_bounds)
    parent_grid = tuple(len(b) - 1 for b in parent_bounds)
    child_axis = [np.searchsorted(b, vert_coords[:, a], side="right") - 1
                  for a, b in enumerate(child_bounds)]
    child_id = np.ravel_multi_index(tuple(child_axis), child_grid)
    parent_axis = [np.searchsorted(b, vert_coords[:, a], side="right") - 1
                   for a, b in enumerate(parent_bounds)]
    parent_id = np.ravel_multi_index(tuple(parent_axis), parent_grid)

    order = np.lexsort((pack_rows(vert_coords), child_id))
    sorted_child = child_id[order]
    first = np.ones(len(order), dtype=bool)
    first[1:] = sorted_child[1:] != sorted_child[:-1]
    rep_rows = vert_coords[order[first]]           # lex-min vertex per child
    rep_parent = parent_id[order[first]]

    support: dict = {}
    for pid in np.unique(rep_parent):
        rows = rep_rows[rep_parent == pid]
        if len(rows) < 2:
            continue
        tree, _ = mst_complete_rows(zd, rows)
        for i, j in tree:
            g = tuple(int(c) for c in rows[j] - rows[i])
            ginv = tuple(-c for c in g)
            fi = _flat(rows[i:i + 1], shape)
            fj = _flat(rows[j:j + 1], shape)
            support.setdefault(g, []).append(fi)
            support.setdefault(ginv, []).append(fj)
    return support


def multiscale_graphing(sample: OrbitSample, U_event, eps: float,
                        r_start: int | None = None) -> tuple:
    """Union of per-scale low-cost graphings over nested dyadic grids.

    The base scale r is calibrated so that the total cost and the vertex
    measure both land under eps; coarser merge scales connect the per-tile
    trees through child-tile representatives, so every vertex of the core
    joins a single generated class.  Returns (graphing, report); all three
    posts (measure < eps, cost < eps, core connectivity) are asserted.
    """
    if eps <= 0:
        raise DomainError("multiscale_graphing needs eps > 0")
    d = sample.d
    feasible = []
    r = 2
    while minimal_rokhlin_side(d, 1.0, r) <= min(sample.core_shape) // 2:
        feasible.append(r)
        r *= 2
    if len(feasible) == 0:
        raise CapacityError("window too small for two dyadic scales")

    if r_start is None:
        # calibration pass at the coarsest feasible scale fixes the
        # implementation constant, then the finest compliant scale is chosen
        calib, calib_report = _multiscale_at(sample, U_event, feasible[-1])
        c_impl = calib_report["cost"] * feasible[-1]
        if calib_report["cost"] < eps and calib_report["vertex_measure"] < eps:
            candidates = [r for r in feasible if 1.25 * c_impl / r < eps]
            start = candidates[0] if candidates else feasible[-1]
        else:
            start = feasible[-1] + 1  # force the capacity branch below
    else:
        start = r_start
    last_error = None
    for r in [x for x in feasible if x >= start]:
        graphing, report = _multiscale_at(sample, U_event, r)
        if report["cost"] < eps and report["vertex_measure"] < eps:
            connected, excluded = orbit_wise_connected(graphing)
            assert connected, "multiscale graphing is not core-connected"
            report.update({"eps": eps, "connected": True,
                           "excluded_boundary_vertices": excluded})
            return graphing, report
        last_error = (f"r={r}: cost {report['cost']:.4f} / measure "
                      f"{report['vertex_measure']:.4f} vs eps {eps}")
    raise CapacityError(f"no admissible base scale fits the window "
                        f"({last_error or 'calibration cost above eps'})")


def _multiscale_at(sample: OrbitSample, U_event, r: int) -> tuple:
    tiling = rokhlin_tiling(sample, 1.0, r)
    base, base_report = low_cost_graphing(sample, tiling, U_event, r)
    support = {g: [f] for g, f in base.support.items()}
    verts = base.vertex_flats()
    vert_coords = _coords(verts, sample.core_shape)

    bounds = [np.asarray(b) for b in tiling.boundaries]
    scales = 1
    while any(len(b) > 2 for b in bounds):
        parents = [_parent_boundaries(b) for b in bounds]
        extra = _merge_scale_edges(vert_coords, bounds, parents,
                                   sample.core_shape)
        for g, lst in extra.items():
            support.setdefault(g, []).extend(lst)
        bounds = parents
        scales += 1
    merged = {g: np.concatenate(lst) for g, lst in support.items()}
    graphing = Graphing(sample, merged)
    validate(graphing)
    c = cost(graphing)
    report = {
        "r": r,
        "scales": scales,
        "base_cost": base_report["cost"],
        "cost": c,
        "c_impl": base_report["c_impl"],
        "vertex_measure": graphing.vertex_measure(),
        "n_tiles": base_report["n_tiles"],
    }
    return graphing, report


# -- nearest-neighbour re-encoding -------------------------------------------------

def geodesic_runs(g: tuple) -> list:
    """Lexicographically minimal geodesic for the canonical representative
    of {g, g^-1}, as (generator, count) runs; the word for the other of the
    pair is the reversed inverse, so edge paths are traversed coherently in
    both directions."""
    d = len(g)
    base = min(g, tuple(-c for c in g))
    gens = sorted([tuple(int(i == a) * s for i in range(d))
                   for a in range(d) for s in (-1, 1)])
    runs = []
    for s in gens:
        axis = int(np.argmax(np.abs(np.asarray(s))))
        amount = base[axis] * s[axis]
        if amount > 0:
            runs.append((s, int(amount)))
    if base != g:
        runs = [(tuple(-c for c in s), L) for s, L in reversed(runs)]
    return runs


def nn_encode(graphing: Graphing, alpha, sample: OrbitSample) -> tuple:
    """Split every edge move into generator steps along canonical geodesics.

    Returns (theta, values, report): theta is the generator-supported
    graphing; values maps each generator s to (flat positions of B_s,
    alpha(s, .) there).  Asserts cost(theta) <= cost(graphing) and that the
    step products reconstruct alpha on every A_g exactly.
    """
    shape = graphing.core_shape
    ident = graphing.identity
    marks: dict = {}
    for g, flats in graphing.support.items():
        if g == ident:
            continue
        coords = _coords(flats, shape)
        prefix = np.zeros(graphing.d, dtype=np.int64)
        for s, L in geodesic_runs(g):
            offs = prefix + np.asarray(s, dtype=np.int64) * \
                np.arange(L, dtype=np.int64)[:, None]
            pts = (coords[:, None, :] + offs[None, :, :]).reshape(-1, graphing.d)
            for i, size in enumerate(shape):
                if pts[:, i].min() < 0 or pts[:, i].max() >= size:
                    raise CapacityError(
                        "padding insufficient for intermediate geodesic points")
            marks.setdefault(s, []).append(_flat(pts, shape))
            prefix = prefix + np.asarray(s, dtype=np.int64) * L
    support = {s: np.unique(np.concatenate(lst)) for s, lst in marks.items()}
    if ident in graphing.support:
        support[ident] = graphing.support[ident]
    theta = Graphing(sample, support)
    validate(theta)
    assert cost(theta) <= cost(graphing) + 1e-12, \
        "nearest-neighbour encoding increased the cost"

    values = {}
    for s, flats in support.items():
        if s == ident:
            continue
        coords = _coords(flats, shape)
        values[s] = (flats, alpha.values_at(s, coords, sample))

    checked = 0
    for g, flats in graphing.support.items():
        if g == ident:
            continue
        coords = _coords(flats, shape)
        direct = alpha.values_at(g, coords, sample)
        acc = np.zeros_like(direct)
        prefix = np.zeros(graphing.d, dtype=np.int64)
        for s, L in geodesic_runs(g):
            for j in range(L):
                acc += alpha.values_at(s, coords + prefix + np.asarray(s) * j,
                                       sample)
            prefix = prefix + np.asarray(s, dtype=np.int64) * L
        assert np.array_equal(acc, direct), \
            f"step-product reconstruction failed on A_{g}"
        checked += len(flats)
    report = {"cost": cost(theta), "original_cost": cost(graphing),
              "reconstruction_checked": checked,
              "generators": sorted(values)}
    return theta, values, report


# -- path reconstruction ------------------------------------------------------------

def _adjacency(graphing: Graphing, reverse: bool = False) -> dict:
    key = ("adj", reverse)
    if key not in graphing._cache:
        adj: dict = {}
        shape = graphing.core_shape
        for g, flats in graphing.support.items():
            if g == graphing.identity:
                continue
            nbr = _flat(_coords(flats, shape) + np.asarray(g, dtype=np.int64),
                        shape)
            for f, n in zip(flats, nbr):
                adj.setdefault(int(f), []).append((g, int(n)))
        order_key = lambda item: (sum(abs(c) for c in item[0]), item[0], item[1])
        for f in adj:
            adj[f].sort(key=order_key, reverse=reverse)
        graphing._cache[key] = adj
    return graphing._cache[key]


def reconstruct_cocycle(graphing: Graphing, alpha, x, g,
                        order: str = "canonical"):
    """BFS a path from x to x+g through the graphing edges and return the
    ordered product of alpha along it (None if no path exists).  For a
    genuine cocycle the result equals alpha(g, x) regardless of the BFS
    tie-breaking order."""
    from collections import deque
    shape = graphing.core_shape
    x = tuple(int(c) for c in x)
    target = tuple(int(a + b) for a, b in zip(x, g))
    verts = graphing.vertex_flats()
    fx = int(_flat(np.asarray([x]), shape)[0])
    ft = int(_flat(np.asarray([target]), shape)[0])
    pos = np.searchsorted(verts, [fx, ft])
    pos = np.clip(pos, 0, max(len(verts) - 1, 0))
    if len(verts) == 0 or verts[pos[0]] != fx or verts[pos[1]] != ft:
        return None
    if fx == ft:
        return (0,) * alpha.target_dim

    adj = _adjacency(graphing, reverse=(order == "reversed"))
    parent = {fx: None}
    queue = deque([fx])
    while queue:
        cur = queue.popleft()
        if cur == ft:
            break
        for step, nbr in adj.get(cur, ()):
            if nbr not in parent:
                parent[nbr] = (cur, step)
                queue.append(nbr)
    if ft not in parent:
        return None
    steps = []
    cur = ft
    while parent[cur] is not None:
        prev, step = parent[cur]
        steps.append((prev, step))
        cur = prev
    steps.reverse()
    total = np.zeros(alpha.target_dim, dtype=np.int64)
    for flat_pos, step in steps:
        coord = _coords(np.asarray([flat_pos]), shape)
        total += alpha.values_at(step, coord, sample=graphing.sample)[0]
    return tuple(int(v) for v in total)
