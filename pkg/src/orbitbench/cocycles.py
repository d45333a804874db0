"""Cocycle algebra over sampled windows.

A cocycle rule evaluates alpha(g, T^v x) at core positions v of a sample,
with values in Z^D.  Rules are composable objects (constant-matrix,
coboundary twist, visit counting, return times, restriction, return-map
extension) so identity checks can exploit structure but always fall back
to sampling.  All identity checks compare integers exactly.
"""

from __future__ import annotations

from fractions import Fraction
from math import floor

import numpy as np

from .errors import DegenerateInputError, DomainError
from .groups import make_group, pack_rows
from .rng import make_rng
from .sampling import Cylinder, LocalIntMap, OrbitSample


class Cocycle:
    """Interface: integer-vector values at (g, position) pairs of a sample."""

    source_dim: int
    target_dim: int
    domain = None                      # None means full domain
    declared: tuple = ("unclassified",)

    def values_at(self, g, positions: np.ndarray,
                  sample: OrbitSample) -> np.ndarray:
        raise NotImplementedError

    def in_domain(self, g, positions: np.ndarray,
                  sample: OrbitSample) -> np.ndarray:
        raise NotImplementedError

    def translate(self, positions: np.ndarray, k,
                  sample: OrbitSample) -> np.ndarray:
        """Position of T^k x for the dynamics this cocycle lives over.
        Cocycles over the source system shift window positions; cocycles
        over an induced system step along visits instead."""
        pos = np.asarray(positions, dtype=np.int64)
        return pos + np.asarray(k, dtype=np.int64)

    def _base_mask(self, g, positions, sample) -> np.ndarray:
        # both endpoints must be addressable points of the padded window
        pos = np.asarray(positions, dtype=np.int64).reshape(-1, sample.d)
        return sample.read_mask(pos) & \
            sample.read_mask(pos + np.asarray(g, dtype=np.int64))


def _as_pos(positions, d) -> np.ndarray:
    return np.asarray(positions, dtype=np.int64).reshape(-1, d)


def target_norms(values: np.ndarray) -> np.ndarray:
    return np.abs(values).sum(axis=1)


class ConstantLinearCocycle(Cocycle):
    """alpha(v, x) = M v; bounded with C = max column l1 norm of M."""

    def __init__(self, M):
        self.M = np.asarray(M, dtype=np.int64)
        self.target_dim, self.source_dim = self.M.shape
        C = int(np.abs(self.M).sum(axis=0).max())
        self.declared = ("bounded", C)

    def values_at(self, g, positions, sample):
        pos = _as_pos(positions, sample.d)
        val = self.M @ np.asarray(g, dtype=np.int64)
        return np.broadcast_to(val, (len(pos), self.target_dim)).copy()

    def in_domain(self, g, positions, sample):
        return self._base_mask(g, positions, sample)


class SubgroupLinearCocycle(Cocycle):
    """alpha(g, x) = M^-1 g, defined only on the sublattice g in M Z^d."""

    def __init__(self, M):
        self.M = np.asarray(M, dtype=np.int64)
        self.target_dim, self.source_dim = self.M.shape
        det = int(round(float(np.linalg.det(self.M))))
        if det == 0:
            raise DomainError("singular matrix")
        self.det = det
        self.adj = np.asarray(np.round(np.linalg.inv(self.M) * det), dtype=np.int64)
        self.declared = ("bounded", int(np.abs(self.adj).sum(axis=0).max()))

    def solve(self, g):
        num = self.adj @ np.asarray(g, dtype=np.int64)
        if np.any(num % self.det):
            return None
        return num // self.det

    def values_at(self, g, positions, sample):
        pos = _as_pos(positions, sample.d)
        w = self.solve(g)
        if w is None:
            raise DomainError(f"{tuple(g)} is not in the sublattice M Z^d")
        return np.broadcast_to(w, (len(pos), self.target_dim)).copy()

    def in_domain(self, g, positions, sample):
        mask = self._base_mask(g, positions, sample)
        if self.solve(g) is None:
            return np.zeros_like(mask)
        return mask


class CoboundaryCocycle(Cocycle):
    """alpha(v, x) = M v + f(T^v x) - f(x) for a local integer map f."""

    def __init__(self, M, f: LocalIntMap, declared=None):
        self.M = np.asarray(M, dtype=np.int64)
        self.target_dim, self.source_dim = self.M.shape
        if f.out_dim != self.target_dim:
            raise DomainError("twist dimension does not match the matrix")
        self.f = f
        base_c = int(np.abs(self.M).sum(axis=0).max())
        # |alpha(g,.)| <= |Mg| + 2 max|f| <= (colmax + 2max|f|) |g|
        self.declared = declared or ("bounded", base_c + 2 * f.max_norm)

    def values_at(self, g, positions, sample):
        pos = _as_pos(positions, sample.d)
        g = np.asarray(g, dtype=np.int64)
        out = np.broadcast_to(self.M @ g, (len(pos), self.target_dim)).copy()
        out += self.f.values_at(sample, pos + g) - self.f.values_at(sample, pos)
        return out

    def in_domain(self, g, positions, sample):
        pos = _as_pos(positions, sample.d)
        g_arr = np.asarray(g, dtype=np.int64)
        return sample.read_mask(pos, self.f.offsets) & \
            sample.read_mask(pos + g_arr, self.f.offsets)


def _visit_data(sample: OrbitSample, U: Cylinder):
    key = ("visits", tuple(sorted(U.sites.items())))
    if key not in sample._cache:
        if sample.d != 1:
            raise DomainError("visit cocycles are defined on Z^1 samples")
        hold = U.holds(sample)
        visits = np.flatnonzero(hold)
        cum = np.zeros(sample.core_size + 1, dtype=np.int64)
        np.cumsum(hold, out=cum[1:])
        sample._cache[key] = (visits, cum)
    return sample._cache[key]


class CountingCocycle(Cocycle):
    """alpha(n, x) = signed number of visits to U in [0, n); a genuine full
    cocycle on Z^1, integrable."""

    source_dim = 1
    target_dim = 1
    declared = ("integrable",)

    def __init__(self, U: Cylinder):
        self.U = U

    def values_at(self, g, positions, sample):
        n = int(np.asarray(g).reshape(-1)[0])
        pos = _as_pos(positions, 1)[:, 0]
        _, cum = _visit_data(sample, self.U)
        return (cum[pos + n] - cum[pos]).reshape(-1, 1)

    def in_domain(self, g, positions, sample):
        n = int(np.asarray(g).reshape(-1)[0])
        pos = _as_pos(positions, 1)[:, 0]
        N = sample.core_size
        return (pos >= 0) & (pos < N) & (pos + n >= 0) & (pos + n <= N)


class ReturnTimeCocycle(Cocycle):
    """beta(m, y) over the induced system: the time of the m-th next visit,
    expressed at visit positions of the source window.  Partial domain U."""

    source_dim = 1
    target_dim = 1
    declared = ("integrable",)

    def __init__(self, U: Cylinder):
        self.U = U
        self.domain = U

    def _index(self, positions, sample):
        visits, _ = _visit_data(sample, self.U)
        pos = _as_pos(positions, 1)[:, 0]
        if len(visits) == 0:
            return visits, -np.ones(len(pos), dtype=np.int64)
        idx = np.searchsorted(visits, pos)
        idx_c = np.clip(idx, 0, len(visits) - 1)
        at_visit = visits[idx_c] == pos
        return visits, np.where(at_visit, idx_c, -1)

    def values_at(self, g, positions, sample):
        m = int(np.asarray(g).reshape(-1)[0])
        visits, idx = self._index(positions, sample)
        if np.any(idx < 0) or np.any(idx + m < 0) or np.any(idx + m >= len(visits)):
            raise DomainError("return-time cocycle evaluated out of domain")
        return (visits[idx + m] - visits[idx]).reshape(-1, 1)

    def in_domain(self, g, positions, sample):
        m = int(np.asarray(g).reshape(-1)[0])
        visits, idx = self._index(positions, sample)
        return (idx >= 0) & (idx + m >= 0) & (idx + m < len(visits))

    def translate(self, positions, k, sample):
        # the induced dynamics steps along visits
        m = int(np.asarray(k).reshape(-1)[0])
        visits, idx = self._index(positions, sample)
        ok = (idx >= 0) & (idx + m >= 0) & (idx + m < len(visits))
        out = np.where(ok, visits[np.clip(idx + m, 0, max(len(visits) - 1, 0))],
                       -10**9)  # off-window sentinel; masked by in_domain
        return out.reshape(-1, 1)


class RestrictedCocycle(Cocycle):
    """Restriction of a cocycle to an event U: defined where both x and
    T^g x satisfy U (and the inner rule is defined)."""

    def __init__(self, inner: Cocycle, U):
        self.inner = inner
        self.domain = U
        self.source_dim = inner.source_dim
        self.target_dim = inner.target_dim
        self.declared = inner.declared

    def values_at(self, g, positions, sample):
        return self.inner.values_at(g, positions, sample)

    def in_domain(self, g, positions, sample):
        pos = _as_pos(positions, sample.d)
        g_arr = np.asarray(g, dtype=np.int64)
        mask = self.inner.in_domain(g, pos, sample)
        return mask & self.domain.holds_at_masked(sample, pos) & \
            self.domain.holds_at_masked(sample, pos + g_arr)


# -- gamma (first enumerated element moving a point into the domain) -----------

class _GammaResolver:
    """gamma(v) = the first element g in the canonical enumeration of Z^d
    (increasing word length, lexicographic ties, identity first) such that
    v + g lies in the domain position set."""

    _BRUTE_LIMIT = 4096

    def __init__(self, sample: OrbitSample, flat_domain: np.ndarray):
        if len(flat_domain) == 0:
            raise DomainError("return map over an empty domain")
        self.sample = sample
        self.flat = np.unique(flat_domain)
        self.coords = np.stack(
            np.unravel_index(self.flat, sample.core_shape), axis=1).astype(np.int64)
        self.member = np.zeros(sample.core_size, dtype=bool)
        self.member[self.flat] = True
        self.group = make_group(f"z{sample.d}")
        self._sorted_offsets: np.ndarray | None = None
        self._offsets_radius = -1

    def _offsets_up_to(self, r: int) -> np.ndarray:
        if r > self._offsets_radius:
            rows = self.group.ball(r).rows
            order = np.lexsort((pack_rows(rows), np.abs(rows).sum(axis=1)))
            self._sorted_offsets = rows[order]
            self._offsets_radius = r
        return self._sorted_offsets

    def gamma_rows(self, positions: np.ndarray) -> np.ndarray:
        pos = _as_pos(positions, self.sample.d)
        if not self.sample.in_core(pos).all():
            bad = pos[~self.sample.in_core(pos)][0]
            raise DomainError(f"gamma requested outside the core at {tuple(bad)}")
        if len(self.coords) <= self._BRUTE_LIMIT:
            return self._gamma_brute(pos)
        return self._gamma_rings(pos)

    def _gamma_brute(self, pos: np.ndarray) -> np.ndarray:
        out = np.empty_like(pos)
        for i, v in enumerate(pos):
            offs = self.coords - v
            norms = np.abs(offs).sum(axis=1)
            order = np.lexsort((pack_rows(offs), norms))
            out[i] = offs[order[0]]
        return out

    def _gamma_rings(self, pos: np.ndarray) -> np.ndarray:
        out = np.empty_like(pos)
        shape = self.sample.core_shape
        for i, v in enumerate(pos):
            r = 1
            found = None
            while found is None:
                offs = self._offsets_up_to(r)
                cand = v + offs
                ok = np.ones(len(cand), dtype=bool)
                for a, s in enumerate(shape):
                    ok &= (cand[:, a] >= 0) & (cand[:, a] < s)
                if ok.any():
                    flats = np.ravel_multi_index(tuple(cand[ok].T), shape)
                    hits = np.flatnonzero(self.member[flats])
                    if len(hits):
                        found = offs[np.flatnonzero(ok)[hits[0]]]
                        break
                if r > max(shape):
                    raise DomainError(
                        f"domain unreachable from position {tuple(v)}")
                r *= 2
            out[i] = found
        return out


class ReturnMapExtensionCocycle(Cocycle):
    """Full-domain extension of a partial cocycle via the U-return map:
    sigma(g, x) = alpha(gamma(T^g x) + g - gamma(x), T^{gamma(x)} x).

    Bound to one sample (desk-scale semantics): gamma is resolved against
    that sample's domain positions.
    """

    def __init__(self, base: Cocycle, sample: OrbitSample, flat_domain: np.ndarray):
        self.base = base
        self.sample_ref = sample
        self.source_dim = base.source_dim
        self.target_dim = base.target_dim
        self.declared = base.declared
        self.resolver = _GammaResolver(sample, flat_domain)

    def gamma_rows(self, positions):
        return self.resolver.gamma_rows(positions)

    def values_at(self, g, positions, sample):
        if sample is not self.sample_ref:
            raise DomainError("extension is bound to the sample it was built on")
        pos = _as_pos(positions, sample.d)
        g = np.asarray(g, dtype=np.int64)
        gv = self.resolver.gamma_rows(pos)
        gvg = self.resolver.gamma_rows(pos + g)
        moved = pos + gv
        gprime = gvg + g - gv
        out = np.empty((len(pos), self.target_dim), dtype=np.int64)
        for key in {tuple(int(c) for c in row) for row in gprime}:
            mask = np.all(gprime == np.asarray(key, dtype=np.int64), axis=1)
            sub = moved[mask]
            ok = self.base.in_domain(key, sub, sample)
            assert ok.all(), "return-map extension left the base domain"
            out[mask] = self.base.values_at(key, sub, sample)
        return out

    def in_domain(self, g, positions, sample):
        # gamma is resolved against core positions only
        pos = _as_pos(positions, sample.d)
        return sample.in_core(pos) & \
            sample.in_core(pos + np.asarray(g, dtype=np.int64))


class TransferFunction:
    """eta(x) = tau(gamma(x), x)^{-1}; the cohomology witness between a
    return-map extension and any other full cocycle agreeing on U."""

    def __init__(self, tau: Cocycle, resolver: _GammaResolver):
        self.tau = tau
        self.resolver = resolver
        self.target_dim = tau.target_dim

    def values_at(self, sample: OrbitSample, positions: np.ndarray) -> np.ndarray:
        pos = _as_pos(positions, sample.d)
        gv = self.resolver.gamma_rows(pos)
        out = np.empty((len(pos), self.target_dim), dtype=np.int64)
        for key in {tuple(int(c) for c in row) for row in gv}:
            mask = np.all(gv == np.asarray(key, dtype=np.int64), axis=1)
            out[mask] = self.tau.values_at(key, pos[mask], sample)
        return -out


# -- operations -----------------------------------------------------------------

def _sample_ball_rows(d: int, radius: int) -> np.ndarray:
    return make_group(f"z{d}").ball(radius).rows


def _random_core_positions(sample, count, rng) -> np.ndarray:
    cols = [rng.integers(0, s, size=count) for s in sample.core_shape]
    return np.stack(cols, axis=1).astype(np.int64)


def check_cocycle_identity(alpha: Cocycle, sample: OrbitSample, trials: int,
                           g_radius: int, seed: int = 0) -> dict:
    """Sample (g, k, position) triples and count exact violations of
    alpha(g+k, x) = alpha(g, T^k x) + alpha(k, x) among in-domain triples."""
    if trials < 1:
        raise DomainError("trials must be >= 1")
    rng = make_rng(seed, stream=11)
    ball = _sample_ball_rows(sample.d, g_radius)
    gi = rng.integers(0, len(ball), size=trials)
    ki = rng.integers(0, len(ball), size=trials)
    pos = _random_core_positions(sample, trials, rng)
    checked = violations = 0
    for pair in {(int(a), int(b)) for a, b in zip(gi, ki)}:
        g, k = ball[pair[0]], ball[pair[1]]
        rows = pos[(gi == pair[0]) & (ki == pair[1])]
        gk = g + k
        moved = alpha.translate(rows, k, sample)
        mask = (alpha.in_domain(k, rows, sample)
                & alpha.in_domain(g, moved, sample)
                & alpha.in_domain(gk, rows, sample))
        rows, moved = rows[mask], moved[mask]
        if len(rows) == 0:
            continue
        lhs = alpha.values_at(gk, rows, sample)
        rhs = alpha.values_at(g, moved, sample) + alpha.values_at(k, rows, sample)
        checked += len(rows)
        violations += int(np.any(lhs != rhs, axis=1).sum())
    return {"violations": violations, "checked": checked,
            "skipped": trials - checked}


def boundedness_constant(alpha: Cocycle, sample: OrbitSample, g_radius: int,
                         n_positions: int = 512, seed: int = 0) -> float:
    """max over sampled in-domain (g, x), g != e, of |alpha(g,x)| / |g|."""
    rng = make_rng(seed, stream=12)
    pos = _random_core_positions(sample, n_positions, rng)
    best = None
    for g in _sample_ball_rows(sample.d, g_radius):
        glen = int(np.abs(g).sum())
        if glen == 0:
            continue
        mask = alpha.in_domain(tuple(g), pos, sample)
        if not mask.any():
            continue
        norms = target_norms(alpha.values_at(tuple(g), pos[mask], sample))
        ratio = float(norms.max()) / glen
        best = ratio if best is None else max(best, ratio)
    if best is None:
        raise DegenerateInputError("no in-domain (g, x) pairs found")
    return best


def _core_positions(sample: OrbitSample) -> np.ndarray:
    axes = [np.arange(s, dtype=np.int64) for s in sample.core_shape]
    grid = np.meshgrid(*axes, indexing="ij")
    return np.stack([a.ravel() for a in grid], axis=1)


def integral_norm(alpha: Cocycle, g, sample: OrbitSample) -> float:
    """Window average of |alpha(g, .)| over in-domain core positions."""
    pos = _core_positions(sample)
    mask = alpha.in_domain(g, pos, sample)
    if not mask.any():
        raise DegenerateInputError("no in-domain positions for this g")
    return float(target_norms(alpha.values_at(g, pos[mask], sample)).mean())


def extend_by_return_map(alpha: Cocycle, sample: OrbitSample,
                         tau: Cocycle | None = None):
    """Extend a partial cocycle to the full window via the U-return map.

    Returns (sigma, eta): sigma agrees with alpha wherever x and T^g x both
    lie in U; when another full cocycle tau with tau|U = alpha is supplied,
    eta(x) = tau(gamma(x), x)^{-1} witnesses that sigma and tau are
    cohomologous.
    """
    if alpha.domain is None:
        raise DomainError("cocycle already has full domain")
    flat = np.flatnonzero(alpha.domain.holds(sample).ravel())
    if len(flat) == 0:
        raise DomainError("the domain event never holds in this window")
    sigma = ReturnMapExtensionCocycle(alpha, sample, flat)
    eta = TransferFunction(tau, sigma.resolver) if tau is not None else None
    return sigma, eta


def cohomology_violations(sigma: Cocycle, tau: Cocycle, eta: TransferFunction,
                          sample: OrbitSample, n_pairs: int, g_radius: int,
                          seed: int = 0) -> int:
    """Count exact violations of sigma(g,x) = eta(T^g x)^-1 tau(g,x) eta(x)."""
    rng = make_rng(seed, stream=13)
    ball = _sample_ball_rows(sample.d, g_radius)
    gi = rng.integers(0, len(ball), size=n_pairs)
    pos = _random_core_positions(sample, n_pairs, rng)
    bad = 0
    for idx in np.unique(gi):
        g = ball[idx]
        rows = pos[gi == idx]
        mask = sigma.in_domain(tuple(g), rows, sample) & \
            tau.in_domain(tuple(g), rows, sample)
        rows = rows[mask]
        if len(rows) == 0:
            continue
        lhs = sigma.values_at(tuple(g), rows, sample)
        rhs = (-eta.values_at(sample, rows + g)
               + tau.values_at(tuple(g), rows, sample)
               + eta.values_at(sample, rows))
        bad += int(np.any(lhs != rhs, axis=1).sum())
    return bad


def lipschitz_extend(points, values, C, query):
    """Extend integer data that is C-Lipschitz on a finite D subset of Z^d:
    floor(min_v { values(v) + C * |u - v|_1 }).  Agrees with the data on D
    and is (C+2)-Lipschitz (the slack absorbs the rounding)."""
    pts = np.asarray(list(points), dtype=np.int64)
    vals = np.asarray(list(values), dtype=np.float64)
    if len(pts) == 0:
        raise DomainError("lipschitz_extend needs a nonempty data set")
    dm = np.abs(pts[:, None, :] - pts[None, :, :]).sum(axis=2)
    gap = np.abs(vals[:, None] - vals[None, :]) - C * dm
    if (gap > 1e-9).any():
        i, j = np.unravel_index(int(np.argmax(gap)), gap.shape)
        raise DomainError(
            f"data is not {C}-Lipschitz: |f{tuple(pts[i])} - f{tuple(pts[j])}|"
            f" = {abs(vals[i] - vals[j])} > C*d = {C * dm[i, j]}")
    q = np.asarray(query, dtype=np.int64)
    return floor(float(np.min(vals + C * np.abs(pts - q).sum(axis=1))))


def lipschitz_extend_grid(points, values, C, lo, hi) -> np.ndarray:
    """Vectorized extension over the grid prod [lo_i, hi_i); same formula."""
    pts = np.asarray(list(points), dtype=np.int64)
    vals = np.asarray(list(values), dtype=np.float64)
    axes = [np.arange(a, b, dtype=np.int64) for a, b in zip(lo, hi)]
    grid = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
    dist = np.abs(grid[:, None, :] - pts[None, :, :]).sum(axis=2)
    ext = np.floor((vals[None, :] + C * dist).min(axis=1))
    shape = tuple(b - a for a, b in zip(lo, hi))
    return ext.reshape(shape).astype(np.int64)


def lipschitz_extend_batch(points: np.ndarray, values: np.ndarray, C: int,
                           lo, hi) -> np.ndarray:
    """Many extensions at once: points (n, s, d) int, values (n, s) int,
    one shared integer C; returns (n, prod(hi-lo)) integer extensions over
    the grid (row-major).  Integer arithmetic throughout, exact."""
    points = np.asarray(points, dtype=np.int64)
    values = np.asarray(values, dtype=np.int64)
    axes = [np.arange(a, b, dtype=np.int64) for a, b in zip(lo, hi)]
    grid = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
    dist = np.abs(points[:, :, None, :] - grid[None, None, :, :]).sum(axis=3)
    return (values[:, :, None] + C * dist).min(axis=1)


def drift_matrix(alpha: Cocycle, sample: OrbitSample):
    """Columns are the exact window averages of alpha(e_i, .), as Fractions."""
    d = sample.d
    cols = []
    pos = _core_positions(sample)
    for i in range(d):
        e = tuple(int(j == i) for j in range(d))
        mask = alpha.in_domain(e, pos, sample)
        vals = alpha.values_at(e, pos[mask], sample)
        count = int(mask.sum())
        cols.append([Fraction(int(vals[:, t].sum()), count)
                     for t in range(alpha.target_dim)])
    out = np.empty((alpha.target_dim, d), dtype=object)
    for i, col in enumerate(cols):
        for t, v in enumerate(col):
            out[t, i] = v
    return out


def kakutani_check(alpha: Cocycle, M, eps: float, sample: OrbitSample,
                   N: int, n_max: int | None = None) -> dict:
    """Fraction of core positions x with |alpha(n e_i, x) - n M e_i| < eps*n
    for every axis i and every N <= n <= n_max."""
    if n_max is None:
        n_max = N + 24
    M = np.asarray(M, dtype=np.float64)
    d = sample.d
    pos = _core_positions(sample)
    included = np.ones(len(pos), dtype=bool)
    good = np.ones(len(pos), dtype=bool)
    for i in range(d):
        e = np.zeros(d, dtype=np.int64)
        e[i] = 1
        for n in range(N, n_max + 1):
            g = tuple(int(v) for v in n * e)
            mask = alpha.in_domain(g, pos, sample)
            included &= mask
            vals = np.zeros((len(pos), alpha.target_dim), dtype=np.int64)
            vals[mask] = alpha.values_at(g, pos[mask], sample)
            diff = np.abs(vals - n * M[:, i][None, :]).sum(axis=1)
            good &= ~mask | (diff < eps * n)
    n_inc = int(included.sum())
    frac = float((good & included).sum() / n_inc) if n_inc else 0.0
    return {"fraction_good": frac, "included": n_inc,
            "excluded": len(pos) - n_inc, "n_range": [N, n_max]}
