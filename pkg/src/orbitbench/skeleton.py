"""Skeleta of finite subsets of a word metric.

An r-skeleton of a finite set X is a connected graph on an r-dense vertex
subset; its weight is the sum of word-metric edge lengths.  Construction:
a maximal (2r)-separated net (greedy in canonical order), proximity edges
between net points at distance <= 5r, and a minimum spanning tree of that
proximity graph.  Subsets of a skeletonized set get their own skeleton by
re-rooting near the subset, at a weight of at most 2w + 2r|V|.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .groups import FiniteSet, Group, ZdGroup
from .unionfind import UnionFind


@dataclass
class SkeletonGraph:
    vertices: FiniteSet
    edges: list            # (i, j) index pairs into vertices.rows, i < j
    group: Group

    def weight(self) -> int:
        return skeleton_weight(self)

    def to_json(self):
        return {
            "vertices": self.vertices.to_json(),
            "edges": [[int(i), int(j)] for i, j in self.edges],
            "weight": int(self.weight()),
        }


# -- array-level helpers (shared with the graphing module) --------------------

def dist_rows_to_point(group: Group, rows: np.ndarray, p) -> np.ndarray:
    """d(row, p) = |row * p^-1| for each row."""
    if isinstance(group, ZdGroup):
        return np.abs(rows - np.asarray(p, dtype=np.int64)).sum(axis=1)
    pinv = group.inv(tuple(int(v) for v in p))
    prod = _right_mul_rows_heis(rows, pinv)
    return group.word_lengths_rows(prod)


def _right_mul_rows_heis(rows: np.ndarray, h) -> np.ndarray:
    rows = np.asarray(rows, dtype=np.int64)
    out = np.empty_like(rows)
    out[:, 0] = rows[:, 0] + h[0]
    out[:, 1] = rows[:, 1] + h[1]
    out[:, 2] = rows[:, 2] + h[2] + rows[:, 0] * h[1]
    return out


def pairwise_distances(group: Group, rows_a: np.ndarray,
                       rows_b: np.ndarray) -> np.ndarray:
    if isinstance(group, ZdGroup):
        return np.abs(rows_a[:, None, :] - rows_b[None, :, :]).sum(axis=2)
    out = np.empty((len(rows_a), len(rows_b)), dtype=np.int64)
    for j, p in enumerate(rows_b):
        out[:, j] = dist_rows_to_point(group, rows_a, p)
    return out


def greedy_net_rows(group: Group, rows: np.ndarray, s: int) -> np.ndarray:
    """Greedy maximal (> s)-separated subset, in the order given by `rows`."""
    n = len(rows)
    alive = np.ones(n, dtype=bool)
    chosen = []
    idx = 0
    while idx < n:
        if not alive[idx]:
            jump = int(np.argmax(alive[idx:]))  # next alive candidate
            if not alive[idx + jump]:
                break
            idx += jump
        chosen.append(idx)
        d = dist_rows_to_point(group, rows, rows[idx])
        alive &= d > s
        alive[idx] = False
        idx += 1
    return rows[np.array(chosen, dtype=np.int64)]


def mst_over_edges(n: int, edges: list) -> tuple[list, int]:
    """Kruskal with deterministic (weight, i, j) ordering.

    `edges` holds (w, i, j); returns (tree edges as (i, j), total weight).
    Raises DomainError if the edge set does not connect all n vertices.
    """
    uf = UnionFind(n)
    tree = []
    total = 0
    for w, i, j in sorted(edges):
        if uf.find(i) != uf.find(j):
            uf.union(i, j)
            tree.append((min(i, j), max(i, j)))
            total += w
    if len(tree) != n - 1:
        raise DomainError("spanning tree does not exist: proximity graph is "
                          "disconnected")
    return tree, total


def mst_complete_rows(group: Group, rows: np.ndarray) -> tuple[list, int]:
    """Minimum spanning tree over the complete metric graph on `rows`."""
    n = len(rows)
    if n <= 1:
        return [], 0
    dm = pairwise_distances(group, rows, rows)
    edges = [(int(dm[i, j]), i, j) for i in range(n) for j in range(i + 1, n)]
    return mst_over_edges(n, edges)


# -- public operations ---------------------------------------------------------

def separated_net(points: FiniteSet, s: int) -> FiniteSet:
    """Maximal subset with pairwise distance > s, greedy in canonical order.

    The identity is scanned first when present, so nets of sets containing
    e always contain e.
    """
    if len(points) == 0:
        raise DomainError("separated_net of an empty set")
    group = points.group
    rows = points.rows
    ident = np.asarray(group.identity, dtype=np.int64)
    at_ident = np.flatnonzero(np.all(rows == ident, axis=1))
    if len(at_ident):
        order = np.concatenate([at_ident,
                                np.delete(np.arange(len(rows)), at_ident)])
        rows = rows[order]
    net = greedy_net_rows(group, rows, s)
    return FiniteSet(group, net)


def build_skeleton(F: FiniteSet, r: int) -> SkeletonGraph:
    """(2r)-skeleton of a connected set F: (2r)-separated net, proximity
    edges at distance <= 5r, minimum spanning tree."""
    from .groups import is_r_connected
    if len(F) == 0:
        raise DomainError("build_skeleton of an empty set")
    if r < 1:
        raise DomainError("build_skeleton needs r >= 1")
    if not is_r_connected(F.group, F, 1):
        raise DomainError("build_skeleton requires a 1-connected input set")
    net = separated_net(F, 2 * r)
    rows = net.rows
    n = len(rows)
    if n == 1:
        return SkeletonGraph(net, [], F.group)
    dm = pairwise_distances(F.group, rows, rows)
    edges = [(int(dm[i, j]), i, j)
             for i in range(n) for j in range(i + 1, n)
             if dm[i, j] <= 5 * r]
    tree, _ = mst_over_edges(n, edges)
    return SkeletonGraph(net, tree, F.group)


def subset_skeleton(parent: SkeletonGraph, Y: FiniteSet, r: int) -> SkeletonGraph:
    """(2r)-skeleton of Y from an r-skeleton of an ambient set containing Y.

    Vertices of the parent within distance r of Y are re-rooted to
    representatives inside Y; a minimum spanning tree over those parent
    vertices (complete metric graph) is transported to the representatives.
    The weight satisfies 2*wt(parent) + 2r*|parent vertices| exactly, and
    the tree-over-subset step satisfies the metric Steiner bound
    wt(tree on W) <= 2*wt(parent); both are asserted here, not assumed.
    """
    group = parent.group
    if len(Y) == 0:
        raise DomainError("subset_skeleton of an empty subset")
    V = parent.vertices.rows
    dist_to_y = np.empty(len(V), dtype=np.int64)
    for i, v in enumerate(V):
        dist_to_y[i] = dist_rows_to_point(group, Y.rows, v).min()
    if dist_to_y.min() > r or not _is_dense_rows(group, V, Y.rows, r):
        raise DomainError("parent skeleton is not r-dense over the subset")
    w_idx = np.flatnonzero(dist_to_y <= r)
    W = V[w_idx]
    reps = np.empty_like(W)
    for k, w in enumerate(W):
        d = dist_rows_to_point(group, Y.rows, w)
        reps[k] = Y.rows[np.flatnonzero(d <= r)[0]]  # Y.rows is lex-sorted
    tree, tree_wt = mst_complete_rows(group, W)
    parent_wt = parent.weight()
    assert tree_wt <= 2 * parent_wt, (
        f"Steiner bound violated: tree {tree_wt} > 2*{parent_wt}")

    vertices = FiniteSet(group, reps)
    vert_idx = vertices.index_of_rows(reps)
    edge_set = set()
    for i, j in tree:
        a, b = int(vert_idx[i]), int(vert_idx[j])
        if a != b:
            edge_set.add((min(a, b), max(a, b)))
    sk = SkeletonGraph(vertices, sorted(edge_set), group)
    bound = 2 * parent_wt + 2 * r * len(V)
    assert sk.weight() <= bound, (
        f"subset skeleton weight {sk.weight()} exceeds 2w+2r|V| = {bound}")
    assert _is_dense_rows(group, vertices.rows, Y.rows, 2 * r)
    return sk


def skeleton_weight(sk: SkeletonGraph) -> int:
    """Sum of word-metric lengths over the edges."""
    rows = sk.vertices.rows
    total = 0
    for i, j in sk.edges:
        total += int(dist_rows_to_point(sk.group, rows[i:i + 1], rows[j])[0])
    return total


def _is_dense_rows(group: Group, v_rows: np.ndarray, x_rows: np.ndarray,
                   r: int) -> bool:
    if len(x_rows) == 0:
        return True
    if len(v_rows) == 0:
        return False
    best = np.full(len(x_rows), np.iinfo(np.int64).max, dtype=np.int64)
    for v in v_rows:
        np.minimum(best, dist_rows_to_point(group, x_rows, v), out=best)
        if best.max() <= r:
            return True
    return bool(best.max() <= r)


def is_r_dense(V: FiniteSet, X: FiniteSet, r: int) -> bool:
    """True iff every element of X lies within word distance r of V."""
    return _is_dense_rows(V.group, V.rows, X.rows, r)
