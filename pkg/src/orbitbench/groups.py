"""Finitely generated groups with word metrics, balls and Folner sets.

Two families are supported: the Euclidean lattices Z^d (standard generators,
l1 word length in closed form) and the discrete Heisenberg group H3(Z)
(word lengths by memoized bidirectional BFS over the Cayley graph).
Elements are integer coordinate tuples; for H3 the multiplication is

    (a, b, c) * (a', b', c') = (a + a', b + b', c + c' + a*b').

Word metrics are right-invariant: d(g, h) = |g h^-1|.  The canonical
ordering of elements is lexicographic on coordinates.
"""

from __future__ import annotations

import itertools
import threading
from fractions import Fraction
from math import comb

import numpy as np

from .errors import CapacityError, DomainError
from .unionfind import UnionFind

_BALL_BUDGET = 5_000_000


def coord_bound(rank: int) -> int:
    """Largest coordinate magnitude the packed int64 keys can carry."""
    return 1 << (63 // rank - 1)


def pack_rows(rows: np.ndarray) -> np.ndarray:
    """Bijective, order-preserving packing of integer coordinate rows into
    int64 keys (lexicographic on coordinates).  Coordinate magnitudes are
    budget-checked against the per-rank bit width."""
    rows = np.asarray(rows, dtype=np.int64)
    k = rows.shape[1]
    bits = 63 // k
    bound = 1 << (bits - 1)
    if rows.size and int(np.abs(rows).max()) >= bound:
        raise CapacityError(
            f"coordinate magnitude {int(np.abs(rows).max())} exceeds the "
            f"rank-{k} packing bound {bound}")
    keys = np.zeros(len(rows), dtype=np.int64)
    for i in range(k):
        keys = (keys << bits) | (rows[:, i] + bound)
    return keys


class FiniteSet:
    """A finite, duplicate-free, lexicographically sorted set of elements."""

    __slots__ = ("group", "rows", "_keys")

    def __init__(self, group: "Group", rows: np.ndarray):
        rows = np.asarray(rows, dtype=np.int64).reshape(-1, group.rank)
        if len(rows):
            order = np.lexsort(rows.T[::-1])
            rows = rows[order]
            keep = np.ones(len(rows), dtype=bool)
            keep[1:] = np.any(rows[1:] != rows[:-1], axis=1)
            rows = rows[keep]
        self.group = group
        self.rows = rows
        self._keys = pack_rows(rows)

    @classmethod
    def from_elements(cls, group: "Group", elements) -> "FiniteSet":
        rows = np.array(sorted(set(map(tuple, elements))), dtype=np.int64)
        if rows.size == 0:
            rows = rows.reshape(0, group.rank)
        return cls(group, rows)

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self):
        return (tuple(int(v) for v in row) for row in self.rows)

    def __contains__(self, element) -> bool:
        row = np.asarray([element], dtype=np.int64)
        return bool(self.contains_rows(row)[0])

    def contains_rows(self, rows: np.ndarray) -> np.ndarray:
        if len(self.rows) == 0:
            return np.zeros(len(rows), dtype=bool)
        keys = pack_rows(np.asarray(rows, dtype=np.int64))
        pos = np.searchsorted(self._keys, keys)
        pos = np.clip(pos, 0, len(self._keys) - 1)
        return self._keys[pos] == keys

    def index_of_rows(self, rows: np.ndarray) -> np.ndarray:
        """Index of each row in the canonical order, -1 if absent."""
        if len(self.rows) == 0:
            return -np.ones(len(rows), dtype=np.int64)
        keys = pack_rows(np.asarray(rows, dtype=np.int64))
        pos = np.searchsorted(self._keys, keys)
        pos = np.clip(pos, 0, len(self._keys) - 1)
        out = np.where(self._keys[pos] == keys, pos, -1)
        return out

    def is_box(self):
        """(lo, hi) if this is a full axis-aligned box in Z^d, else None."""
        if not isinstance(self.group, ZdGroup) or len(self.rows) == 0:
            return None
        lo = self.rows.min(axis=0)
        hi = self.rows.max(axis=0) + 1
        if int(np.prod(hi - lo)) == len(self.rows):
            return lo, hi
        return None

    def to_json(self):
        return [list(map(int, row)) for row in self.rows]


class Group:
    """Common interface: coordinates, multiplication, word length, balls."""

    name: str
    rank: int           # coordinate arity of an element
    generators: tuple   # symmetric, identity-free, lex-sorted

    @property
    def identity(self):
        return (0,) * self.rank

    def mul(self, a, b):
        raise NotImplementedError

    def inv(self, a):
        raise NotImplementedError

    def left_mul_rows(self, h, rows: np.ndarray) -> np.ndarray:
        """Vectorized h * x over an (n, rank) array of elements x."""
        raise NotImplementedError

    def word_length(self, g) -> int:
        raise NotImplementedError

    def word_lengths_rows(self, rows: np.ndarray) -> np.ndarray:
        return np.array([self.word_length(tuple(map(int, r))) for r in rows],
                        dtype=np.int64)

    def distance(self, a, b) -> int:
        return self.word_length(self.mul(a, self.inv(b)))

    def ball(self, r: int) -> FiniteSet:
        raise NotImplementedError


class ZdGroup(Group):
    def __init__(self, d: int):
        if d < 1:
            raise DomainError(f"Z^d needs d >= 1, got {d}")
        self.rank = d
        self.name = f"z{d}"
        gens = []
        for i in range(d):
            for s in (-1, 1):
                e = [0] * d
                e[i] = s
                gens.append(tuple(e))
        self.generators = tuple(sorted(gens))
        self._balls: dict[int, FiniteSet] = {}

    def mul(self, a, b):
        return tuple(x + y for x, y in zip(a, b))

    def inv(self, a):
        return tuple(-x for x in a)

    def left_mul_rows(self, h, rows):
        return np.asarray(rows, dtype=np.int64) + np.asarray(h, dtype=np.int64)

    def word_length(self, g) -> int:
        return int(sum(abs(x) for x in g))

    def word_lengths_rows(self, rows):
        return np.abs(np.asarray(rows, dtype=np.int64)).sum(axis=1)

    def ball(self, r: int) -> FiniteSet:
        if r < 0:
            raise DomainError("ball radius must be >= 0")
        if r not in self._balls:
            if ball_size_zd(self.rank, r) > _BALL_BUDGET:
                raise CapacityError(f"ball(r={r}) in {self.name} exceeds budget")
            rng = np.arange(-r, r + 1, dtype=np.int64)
            grids = np.meshgrid(*([rng] * self.rank), indexing="ij")
            rows = np.stack([g.ravel() for g in grids], axis=1)
            rows = rows[np.abs(rows).sum(axis=1) <= r]
            self._balls[r] = FiniteSet(self, rows)
        return self._balls[r]


def ball_size_zd(d: int, r: int) -> int:
    """|{x in Z^d : |x|_1 <= r}| in closed form."""
    return sum(comb(d, k) * 2**k * comb(r, k) for k in range(0, min(d, r) + 1))


class HeisenbergGroup(Group):
    """Discrete Heisenberg group on (a, b, c) with generators a+-1, b+-1.

    Word lengths and balls are memoized; the memo tables are guarded by a
    lock so instances can be shared across threads.
    """

    def __init__(self):
        self.rank = 3
        self.name = "heis"
        self.generators = tuple(sorted([
            (1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0),
        ]))
        self._lengths: dict[tuple, int] = {self.identity: 0}
        self._layers: list[set[tuple]] = [{self.identity}]
        self._layer_seen: set[tuple] = {self.identity}
        self._lock = threading.Lock()

    def mul(self, a, b):
        return (a[0] + b[0], a[1] + b[1], a[2] + b[2] + a[0] * b[1])

    def inv(self, a):
        return (-a[0], -a[1], -a[2] + a[0] * a[1])

    def left_mul_rows(self, h, rows):
        rows = np.asarray(rows, dtype=np.int64)
        out = np.empty_like(rows)
        out[:, 0] = h[0] + rows[:, 0]
        out[:, 1] = h[1] + rows[:, 1]
        out[:, 2] = h[2] + rows[:, 2] + h[0] * rows[:, 1]
        return out

    def _grow_layers(self, up_to: int) -> None:
        while len(self._layers) <= up_to:
            if len(self._layer_seen) > _BALL_BUDGET:
                raise CapacityError(
                    f"Heisenberg ball of radius {len(self._layers)} exceeds budget"
                )
            frontier = self._layers[-1]
            nxt = set()
            for x in frontier:
                for s in self.generators:
                    y = self.mul(s, x)
                    if y not in self._layer_seen:
                        nxt.add(y)
            self._layer_seen.update(nxt)
            dist = len(self._layers)
            for y in nxt:
                self._lengths[y] = dist
            self._layers.append(nxt)

    def word_length(self, g) -> int:
        g = tuple(int(v) for v in g)
        if g in self._lengths:
            return self._lengths[g]
        with self._lock:
            return self._word_length_locked(g)

    def _word_length_locked(self, g) -> int:
        if g in self._lengths:
            return self._lengths[g]
        # Bidirectional BFS: neighbours of x are s*x, generators symmetric.
        df = {self.identity: 0}
        db = {g: 0}
        ff, fb = {self.identity}, {g}
        best = None
        while ff or fb:
            if best is not None and len_f(df, ff) + len_f(db, fb) >= best:
                break
            if len(ff) <= len(fb):
                side, dist, other = ff, df, db
            else:
                side, dist, other = fb, db, df
            nxt = set()
            for x in side:
                for s in self.generators:
                    y = self.mul(s, x)
                    if y not in dist:
                        dist[y] = dist[x] + 1
                        nxt.add(y)
                        if y in other:
                            tot = dist[y] + other[y]
                            if best is None or tot < best:
                                best = tot
            if side is ff:
                ff = nxt
            else:
                fb = nxt
            if not nxt and best is None:
                raise DomainError(f"element {g} unreachable (should not happen)")
        self._lengths[g] = best
        return best

    def ball(self, r: int) -> FiniteSet:
        if r < 0:
            raise DomainError("ball radius must be >= 0")
        with self._lock:
            self._grow_layers(r)
            rows = [e for k in range(r + 1) for e in self._layers[k]]
        return FiniteSet(self, np.array(rows, dtype=np.int64))


def len_f(dist: dict, frontier: set) -> int:
    return min((dist[x] for x in frontier), default=1 << 30)


_GROUPS: dict[str, Group] = {}


def make_group(group_id: str) -> Group:
    """Group by string id: "z1", "z2", ..., or "heis".  Instances are shared
    so that BFS memo tables are reused."""
    gid = group_id.strip().lower()
    if gid not in _GROUPS:
        if gid == "heis":
            _GROUPS[gid] = HeisenbergGroup()
        elif gid.startswith("z") and gid[1:].isdigit():
            _GROUPS[gid] = ZdGroup(int(gid[1:]))
        else:
            raise DomainError(f"unknown group id {group_id!r}")
    return _GROUPS[gid]


def box_set(group: ZdGroup, lo, hi) -> FiniteSet:
    """Axis box prod_i [lo_i, hi_i) as a FiniteSet."""
    axes = [np.arange(int(a), int(b), dtype=np.int64) for a, b in zip(lo, hi)]
    grids = np.meshgrid(*axes, indexing="ij")
    rows = np.stack([g.ravel() for g in grids], axis=1)
    return FiniteSet(group, rows)


def dilated_box_size(sides, r: int) -> int:
    """|B(r) + box| for an axis box in Z^d, exact.

    Points at l1 distance <= r from the box: choose a subset S of axes that
    carry positive excess (2 sided each), the excesses over S are positive
    integers summing to <= r, giving binom(r, |S|) choices.
    """
    sides = [int(s) for s in sides]
    d = len(sides)
    total = 0
    for mask in range(1 << d):
        s_axes = [i for i in range(d) if mask >> i & 1]
        k = len(s_axes)
        inside = 1
        for i in range(d):
            if i not in s_axes:
                inside *= sides[i]
        total += inside * (2**k) * comb(r, k)
    return total


def word_length(group: Group, g) -> int:
    """Minimal generator-word length of g.  0 exactly for the identity."""
    return group.word_length(g)


def ball(group: Group, r: int) -> FiniteSet:
    """{ g : |g| <= r } in canonical (lexicographic) order."""
    return group.ball(r)


def folner_defect(group: Group, F: FiniteSet, r: int) -> Fraction:
    """|(B(r) . F) \\ F| / |F| as an exact rational."""
    if len(F) == 0:
        raise DomainError("folner_defect of an empty set")
    if r < 0:
        raise DomainError("folner_defect needs r >= 0")
    box = F.is_box()
    if box is not None:
        lo, hi = box
        dilated = dilated_box_size(hi - lo, r)
        return Fraction(dilated - len(F), len(F))
    b = group.ball(r)
    if len(b) * len(F) > 50_000_000:
        raise CapacityError(
            f"folner_defect enumeration |B({r})|*|F| = {len(b) * len(F)} too large"
        )
    chunks = [group.left_mul_rows(h, F.rows) for h in b]
    allrows = np.concatenate(chunks, axis=0)
    keys = pack_rows(allrows)
    grown = len(np.unique(keys))
    return Fraction(grown - len(F), len(F))


def is_r_connected(group: Group, E: FiniteSet, r: int) -> bool:
    """True iff E is joined by r-paths inside E (union-find over pairs at
    word distance <= r).  Empty and singleton sets count as connected."""
    n = len(E)
    if n <= 1:
        return True
    if r < 1:
        return False
    if E.is_box() is not None:
        return True  # full boxes are 1-connected along the axes
    uf = UnionFind(n)
    for h in group.ball(r):
        if h == group.identity:
            continue
        mapped = group.left_mul_rows(h, E.rows)
        idx = E.index_of_rows(mapped)
        for a in np.flatnonzero(idx >= 0):
            uf.union(int(a), int(idx[a]))
    root = uf.find(0)
    return all(uf.find(i) == root for i in range(1, n))


def connected_folner(group: Group, eps: float, r: int,
                     max_side: int = 4096) -> FiniteSet:
    """Construct-and-verify a connected set with folner_defect <= eps.

    Z^d uses axis boxes with the side grown until the exact defect passes;
    H3 uses coordinate boxes {0 <= a,b < n, 0 <= c < n^2}.
    """
    if eps <= 0:
        raise DomainError("connected_folner needs eps > 0")
    target = Fraction(eps)
    if isinstance(group, ZdGroup):
        for n in range(1, max_side + 1):
            sides = [n] * group.rank
            defect = Fraction(dilated_box_size(sides, r) - n**group.rank,
                              n**group.rank)
            if defect <= target:
                return box_set(group, [0] * group.rank, sides)
        raise CapacityError(f"no box of side <= {max_side} reaches defect {eps}")
    for n in range(1, max_side + 1):
        if n**4 > _BALL_BUDGET:
            raise CapacityError(f"Heisenberg Folner box n={n} exceeds budget")
        rows = np.array(list(itertools.product(range(n), range(n), range(n * n))),
                        dtype=np.int64)
        F = FiniteSet(group, rows)
        if folner_defect(group, F, r) <= target:
            return F
    raise CapacityError(f"no Heisenberg box of side <= {max_side} reaches {eps}")


def growth_floor(group: Group, r_max: int) -> float:
    """min over 1 <= r <= r_max of |B(r)| / r^2 (empirical quadratic-growth
    constant; < 1 detects linear growth)."""
    if r_max < 1:
        raise DomainError("growth_floor needs r_max >= 1")
    return min(len(group.ball(r)) / r**2 for r in range(1, r_max + 1))
