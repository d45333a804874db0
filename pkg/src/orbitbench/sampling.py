"""Desk-scale G-system semantics: symbolic windows and derived views.

A system lives on a padded window: the core box [0, side)^d carries the
positions that enter empirical averages, and a padding margin of radius
r_pad keeps every translate needed by local events inside the sampled
region.  Measure-theoretic quantities are window averages over the core;
translates whose support would leave the window are rejected rather than
wrapped, to avoid spurious periodic correlations.

Sampling uses the Philox counter-based generator (see rng.py): identical
(system, sizes, seed) inputs reproduce bit-identical configurations.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError, DegenerateInputError, DomainError
from .rng import STREAM_SAMPLE, make_rng

_WINDOW_BUDGET = 200_000_000  # total window cells


# -- laws and systems ----------------------------------------------------------

@dataclass
class ProductLaw:
    p: np.ndarray

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=np.float64)
        if abs(float(self.p.sum()) - 1.0) > 1e-12 or (self.p < 0).any():
            raise DomainError("product law needs a probability vector (sum 1)")


@dataclass
class MarkovLaw:
    """Z^1-only stationary Markov law: transition matrix P, stationary pi."""
    P: np.ndarray
    pi: np.ndarray

    def __post_init__(self):
        self.P = np.asarray(self.P, dtype=np.float64)
        self.pi = np.asarray(self.pi, dtype=np.float64)
        if np.abs(self.P.sum(axis=1) - 1.0).max() > 1e-12:
            raise DomainError("markov law: rows of P must sum to 1")
        if abs(float(self.pi.sum()) - 1.0) > 1e-12:
            raise DomainError("markov law: pi must sum to 1")
        if np.abs(self.pi @ self.P - self.pi).max() > 1e-10:
            raise DomainError("markov law: pi is not stationary for P")


@dataclass
class SymbolicSystem:
    d: int
    alphabet_size: int
    law: ProductLaw | MarkovLaw

    def __post_init__(self):
        if isinstance(self.law, MarkovLaw) and self.d != 1:
            raise DomainError("markov laws are supported on Z^1 only")
        n = self.alphabet_size
        k = len(self.law.p) if isinstance(self.law, ProductLaw) else len(self.law.pi)
        if n != k:
            raise DomainError(f"alphabet size {n} != law support {k}")


@dataclass
class OrbitSample:
    """A sampled or derived configuration on a padded core box."""
    d: int
    core_shape: tuple
    r_pad: int
    config: np.ndarray          # window array, shape core_shape + 2*r_pad
    alphabet_size: int
    seed: int | None = None
    system: SymbolicSystem | None = None
    meta: str = "sampled"
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def window_shape(self) -> tuple:
        return tuple(s + 2 * self.r_pad for s in self.core_shape)

    @property
    def core_size(self) -> int:
        return int(np.prod(self.core_shape))

    def core_view(self) -> np.ndarray:
        sl = tuple(slice(self.r_pad, self.r_pad + s) for s in self.core_shape)
        return self.config[sl]

    def values_at(self, positions: np.ndarray, offset=None) -> np.ndarray:
        """Configuration at core positions (+ optional offset)."""
        pos = np.asarray(positions, dtype=np.int64).reshape(-1, self.d)
        if offset is not None:
            pos = pos + np.asarray(offset, dtype=np.int64)
        idx = pos + self.r_pad
        for i, w in enumerate(self.window_shape):
            if idx.size and (idx[:, i].min() < 0 or idx[:, i].max() >= w):
                raise DomainError("read outside the padded window")
        return self.config[tuple(idx.T)]

    def in_core(self, positions: np.ndarray) -> np.ndarray:
        pos = np.asarray(positions, dtype=np.int64).reshape(-1, self.d)
        ok = np.ones(len(pos), dtype=bool)
        for i, s in enumerate(self.core_shape):
            ok &= (pos[:, i] >= 0) & (pos[:, i] < s)
        return ok

    def read_mask(self, positions: np.ndarray, offsets=None) -> np.ndarray:
        """Rows whose reads at position+offset all stay inside the window."""
        pos = np.asarray(positions, dtype=np.int64).reshape(-1, self.d)
        if offsets is None or len(offsets) == 0:
            lo = hi = np.zeros(self.d, dtype=np.int64)
        else:
            offs = np.asarray(offsets, dtype=np.int64).reshape(-1, self.d)
            lo, hi = offs.min(axis=0), offs.max(axis=0)
        ok = np.ones(len(pos), dtype=bool)
        for i, s in enumerate(self.core_shape):
            ok &= (pos[:, i] + lo[i] >= -self.r_pad) & \
                  (pos[:, i] + hi[i] < s + self.r_pad)
        return ok

    def require_support(self, offsets: np.ndarray) -> None:
        """Local supports must stay within the padding margin."""
        offsets = np.asarray(offsets, dtype=np.int64).reshape(-1, self.d)
        need = int(np.abs(offsets).max()) if offsets.size else 0
        if need > self.r_pad:
            raise DomainError(
                f"event support exceeds padding: requires r_pad >= {need}, "
                f"sample has r_pad = {self.r_pad}")

    def save(self, path: str) -> None:
        header = {
            "magic": "orbitbench-sample-v1",
            "d": self.d,
            "core_shape": list(self.core_shape),
            "r_pad": self.r_pad,
            "alphabet_size": self.alphabet_size,
            "seed": self.seed,
            "dtype": str(self.config.dtype),
            "meta": self.meta,
        }
        with open(path, "wb") as fh:
            fh.write(json.dumps(header).encode() + b"\n")
            fh.write(np.ascontiguousarray(self.config).tobytes())

    @classmethod
    def load(cls, path: str) -> "OrbitSample":
        with open(path, "rb") as fh:
            header = json.loads(fh.readline().decode())
            if header.get("magic") != "orbitbench-sample-v1":
                raise DomainError(f"{path}: not an orbitbench sample file")
            raw = fh.read()
        shape = tuple(s + 2 * header["r_pad"] for s in header["core_shape"])
        config = np.frombuffer(raw, dtype=np.dtype(header["dtype"])).reshape(shape)
        return cls(d=header["d"], core_shape=tuple(header["core_shape"]),
                   r_pad=header["r_pad"], config=config.copy(),
                   alphabet_size=header["alphabet_size"], seed=header["seed"],
                   meta=header.get("meta", "loaded"))


def sample_window(system: SymbolicSystem, core_side, r_pad: int,
                  seed: int) -> OrbitSample:
    """Draw an i.i.d. (product law) or stationary Markov configuration."""
    if isinstance(core_side, int):
        core_shape = (core_side,) * system.d
    else:
        core_shape = tuple(int(s) for s in core_side)
        if len(core_shape) != system.d:
            raise DomainError("core_side arity does not match the dimension")
    window_shape = tuple(s + 2 * r_pad for s in core_shape)
    if int(np.prod(window_shape)) > _WINDOW_BUDGET:
        raise CapacityError(f"window {window_shape} exceeds the cell budget")
    rng = make_rng(seed, STREAM_SAMPLE)
    k = system.alphabet_size
    dtype = np.int8 if k <= 127 else np.int32
    if isinstance(system.law, ProductLaw):
        cum = np.cumsum(system.law.p)
        cum[-1] = 1.0
        u = rng.random(window_shape)
        config = np.searchsorted(cum, u, side="right").astype(dtype)
    else:
        L = window_shape[0]
        cum_rows = np.cumsum(system.law.P, axis=1)
        cum_rows[:, -1] = 1.0
        cum_pi = np.cumsum(system.law.pi)
        cum_pi[-1] = 1.0
        u = rng.random(L)
        config = np.empty(L, dtype=dtype)
        s = int(np.searchsorted(cum_pi, u[0], side="right"))
        config[0] = s
        for i in range(1, L):
            s = int(np.searchsorted(cum_rows[s], u[i], side="right"))
            config[i] = s
    return OrbitSample(d=system.d, core_shape=core_shape, r_pad=r_pad,
                       config=config, alphabet_size=k, seed=seed, system=system)


# -- local events and observables ----------------------------------------------

@dataclass
class Cylinder:
    """Finite-support symbol constraint: {x : x(u) = sym for (u, sym)}."""
    sites: dict

    def __post_init__(self):
        self.sites = {tuple(int(c) for c in u): int(s)
                      for u, s in self.sites.items()}

    @property
    def support(self) -> np.ndarray:
        if not self.sites:
            return np.zeros((0, 1), dtype=np.int64)
        return np.array(sorted(self.sites), dtype=np.int64)

    def holds(self, sample: OrbitSample) -> np.ndarray:
        """Boolean array over the core: does the event hold at T^v x?"""
        if self.sites:
            sup = np.array(sorted(self.sites), dtype=np.int64)
            if sup.shape[1] != sample.d:
                raise DomainError("cylinder arity does not match the sample")
            sample.require_support(sup)
        out = np.ones(sample.core_shape, dtype=bool)
        for u, sym in sorted(self.sites.items()):
            sl = tuple(slice(sample.r_pad + u[i], sample.r_pad + u[i] + sample.core_shape[i])
                       for i in range(sample.d))
            out &= sample.config[sl] == sym
        return out

    def holds_at(self, sample: OrbitSample, positions: np.ndarray) -> np.ndarray:
        pos = np.asarray(positions, dtype=np.int64).reshape(-1, sample.d)
        ok = np.ones(len(pos), dtype=bool)
        for u, sym in sorted(self.sites.items()):
            ok &= sample.values_at(pos, offset=u) == sym
        return ok

    def holds_at_masked(self, sample: OrbitSample,
                        positions: np.ndarray) -> np.ndarray:
        """Like holds_at, but False (instead of an error) where the support
        would read outside the window."""
        pos = np.asarray(positions, dtype=np.int64).reshape(-1, sample.d)
        readable = sample.read_mask(pos, self.support)
        out = np.zeros(len(pos), dtype=bool)
        if readable.any():
            out[readable] = self.holds_at(sample, pos[readable])
        return out

    def analytic_prob(self, system: SymbolicSystem) -> float:
        if isinstance(system.law, ProductLaw):
            prob = 1.0
            for _, sym in self.sites.items():
                prob *= float(system.law.p[sym])
            return prob
        sites = sorted(self.sites.items())
        if not sites:
            return 1.0
        prob = float(system.law.pi[sites[0][1]])
        for (u0, s0), (u1, s1) in zip(sites, sites[1:]):
            step = np.linalg.matrix_power(system.law.P, u1[0] - u0[0])
            prob *= float(step[s0, s1])
        return prob


class PositionSetEvent:
    """Event that holds exactly on a fixed set of core positions of one
    sample (window-bound; used for graphing vertex sets)."""

    def __init__(self, sample: OrbitSample, flat_positions: np.ndarray):
        self.core_shape = sample.core_shape
        self.flat = np.unique(np.asarray(flat_positions, dtype=np.int64))

    @property
    def support(self) -> np.ndarray:
        return np.zeros((0, len(self.core_shape)), dtype=np.int64)

    def holds(self, sample: OrbitSample) -> np.ndarray:
        out = np.zeros(sample.core_size, dtype=bool)
        out[self.flat] = True
        return out.reshape(sample.core_shape)

    def holds_at(self, sample: OrbitSample, positions: np.ndarray) -> np.ndarray:
        pos = np.asarray(positions, dtype=np.int64).reshape(-1, sample.d)
        ok = sample.in_core(pos)
        out = np.zeros(len(pos), dtype=bool)
        if ok.any():
            flat = np.ravel_multi_index(tuple(pos[ok].T), sample.core_shape)
            hit = np.searchsorted(self.flat, flat)
            hit = np.clip(hit, 0, len(self.flat) - 1)
            out[ok] = self.flat[hit] == flat if len(self.flat) else False
        return out

    def holds_at_masked(self, sample: OrbitSample,
                        positions: np.ndarray) -> np.ndarray:
        return self.holds_at(sample, positions)


class LocalIntMap:
    """Local function of the configuration with values in Z^D, given as a
    lookup table over the patch at a finite support (JSON-friendly)."""

    def __init__(self, support, table: dict, out_dim: int, alphabet_size: int):
        self.offsets = np.array([tuple(int(c) for c in u) for u in support],
                                dtype=np.int64)
        self.out_dim = int(out_dim)
        self.k = int(alphabet_size)
        m = len(self.offsets)
        lut = np.zeros((self.k ** m, self.out_dim), dtype=np.int64)
        for pattern, value in table.items():
            code = 0
            for j, sym in enumerate(pattern):
                code += int(sym) * self.k ** j
            lut[code] = np.asarray(value, dtype=np.int64)
        self.lut = lut

    @property
    def max_norm(self) -> int:
        return int(np.abs(self.lut).sum(axis=1).max())

    def values_at(self, sample: OrbitSample, positions: np.ndarray) -> np.ndarray:
        sample.require_support(self.offsets)
        pos = np.asarray(positions, dtype=np.int64).reshape(-1, sample.d)
        code = np.zeros(len(pos), dtype=np.int64)
        for j, u in enumerate(self.offsets):
            code += sample.values_at(pos, offset=u).astype(np.int64) * self.k ** j
        return self.lut[code]

    def to_json(self):
        def pattern_of(code):
            digits = []
            for _ in self.offsets:
                digits.append(str(code % self.k))
                code //= self.k
            return "".join(digits)

        return {
            "support": [list(map(int, u)) for u in self.offsets],
            "out_dim": self.out_dim,
            "alphabet_size": self.k,
            "table": {pattern_of(c): list(map(int, v))
                      for c, v in enumerate(self.lut) if np.any(v)},
        }

    @classmethod
    def from_json(cls, data: dict) -> "LocalIntMap":
        table = {tuple(int(ch) for ch in pattern): tuple(value)
                 for pattern, value in data["table"].items()}
        return cls(data["support"], table, out_dim=data["out_dim"],
                   alphabet_size=data["alphabet_size"])


def parse_cylinder_spec(text: str, d: int) -> Cylinder:
    """Cylinder events in config syntax: "0,0:0;1,0:2" means
    {x(0,0)=0, x(1,0)=2}; an empty string is the full space."""
    sites = {}
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        offs, sym = part.rsplit(":", 1)
        offset = tuple(int(v) for v in offs.split(","))
        if len(offset) != d:
            raise DomainError(f"cylinder offset {offset} is not {d}-dimensional")
        sites[offset] = int(sym)
    return Cylinder(sites)


def empirical_measure(sample: OrbitSample, event) -> float:
    """Fraction of core positions where the event holds at T^v x."""
    return float(event.holds(sample).mean())


# -- the three concrete constructions -------------------------------------------

@dataclass
class InducedCoding:
    """Visits to U and the (symbol-block, return-time) codes between them."""
    visits: np.ndarray
    return_times: np.ndarray
    code_ids: np.ndarray
    code_count: int
    mean_return_time: float

    def to_sample(self) -> OrbitSample:
        ids = self.code_ids.astype(np.int32)
        return OrbitSample(d=1, core_shape=(len(ids),), r_pad=0, config=ids,
                           alphabet_size=self.code_count, meta="induced-codes")


def induced_system(sample: OrbitSample, U: Cylinder) -> InducedCoding:
    """First-return coding along visits to U (Z^1 samples only)."""
    if sample.d != 1:
        raise DomainError("induced coding is defined on Z^1 samples")
    visits = np.flatnonzero(U.holds(sample))
    if len(visits) < 2:
        raise DegenerateInputError("no (or a single) visit to U in the window")
    rts = np.diff(visits)
    core = sample.core_view()
    k = sample.alphabet_size
    starts = visits[:-1]

    vec_keys = np.full(len(starts), -1, dtype=np.int64)
    long_keys = {}
    for rt in np.unique(rts):
        where = np.flatnonzero(rts == rt)
        if k ** int(rt) < (1 << 62):
            block = core[starts[where][:, None] + np.arange(int(rt))]
            powers = k ** np.arange(int(rt), dtype=np.int64)
            vec_keys[where] = block.astype(np.int64) @ powers
        else:
            for w in where:
                v = int(starts[w])
                long_keys[w] = tuple(int(x) for x in core[v:v + int(rt)])
    pair = np.stack([rts.astype(np.int64), vec_keys], axis=1)
    vec_rows = np.flatnonzero(vec_keys >= 0)
    uniq, inv = np.unique(pair[vec_rows], axis=0, return_inverse=True)
    ids = np.full(len(starts), -1, dtype=np.int64)
    ids[vec_rows] = inv
    n_codes = len(uniq)
    if long_keys:
        table = {}
        for w in sorted(long_keys, key=lambda w: (int(rts[w]), long_keys[w])):
            key = (int(rts[w]), long_keys[w])
            if key not in table:
                table[key] = n_codes
                n_codes += 1
            ids[w] = table[key]
    return InducedCoding(visits=visits, return_times=rts, code_ids=ids,
                         code_count=n_codes,
                         mean_return_time=float(rts.mean()))


def _fits_core(sample: OrbitSample, coords: np.ndarray) -> bool:
    for i, s in enumerate(sample.core_shape):
        if coords[:, i].min() < 0 or coords[:, i].max() >= s:
            return False
    return True


def reparam_system(sample: OrbitSample, M: np.ndarray) -> OrbitSample:
    """View of the sample re-indexed along a unimodular map: y(v) = x(Mv),
    over the largest box of target positions whose image stays in the core."""
    M = np.asarray(M, dtype=np.int64)
    d = sample.d
    if M.shape != (d, d) or abs(round(float(np.linalg.det(M)))) != 1:
        raise DomainError("reparam needs an integer matrix with |det| = 1")
    n = min(sample.core_shape)
    while n >= 4:
        corners = np.array(np.meshgrid(*([[0, n - 1]] * d), indexing="ij"),
                           dtype=np.int64).reshape(d, -1).T
        if _fits_core(sample, corners @ M.T):
            break
        n -= 1
    else:
        raise CapacityError("window too small for the requested re-indexing")
    axes = [np.arange(n, dtype=np.int64)] * d
    grid = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
    img = grid @ M.T + sample.r_pad
    config = sample.config[tuple(img.T)].reshape((n,) * d)
    return OrbitSample(d=d, core_shape=(n,) * d, r_pad=0, config=config,
                       alphabet_size=sample.alphabet_size, meta="reparam-view")


def sublattice_system(sample: OrbitSample, M: np.ndarray) -> OrbitSample:
    """Recode over the fundamental domain of M Z^d (upper-triangular M,
    positive diagonal): new alphabet = alphabet^|det M|.  M = identity is
    the trivial recoding."""
    M = np.asarray(M, dtype=np.int64)
    d = sample.d
    if M.shape != (d, d) or np.any(np.tril(M, -1) != 0) or np.any(np.diag(M) <= 0):
        raise DomainError("sublattice recoding needs upper-triangular M with "
                          "positive diagonal")
    m = int(np.prod(np.diag(M)))
    k = sample.alphabet_size
    if k ** m > (1 << 31):
        raise CapacityError(f"recoded alphabet {k}^{m} too large")
    dom = np.stack([g.ravel() for g in np.meshgrid(
        *[np.arange(int(a), dtype=np.int64) for a in np.diag(M)],
        indexing="ij")], axis=1)
    dom = dom[np.lexsort(dom.T[::-1])]
    sides = []
    for i in range(d):
        n = sample.core_shape[i] // int(M[i, i])
        sides.append(max(n, 1))
    while True:
        corners = np.array(np.meshgrid(*[[0, s - 1] for s in sides],
                                       indexing="ij"),
                           dtype=np.int64).reshape(d, -1).T
        img = corners @ M.T
        worst = img[:, None, :] + dom[None, :, :]
        ok = True
        for i, s in enumerate(sample.core_shape):
            if worst[:, :, i].min() < 0 or worst[:, :, i].max() >= s:
                ok = False
        if ok:
            break
        sides = [max(s - 1, 1) for s in sides]
        if all(s == 1 for s in sides) and not ok:
            raise CapacityError("window too small for sublattice recoding")
    axes = [np.arange(s, dtype=np.int64) for s in sides]
    grid = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
    base = grid @ M.T
    core = sample.core_view()
    code = np.zeros(len(grid), dtype=np.int64)
    for j, u in enumerate(dom):
        code += core[tuple((base + u).T)].astype(np.int64) * k ** j
    dtype = np.int8 if k ** m <= 127 else np.int32
    return OrbitSample(d=d, core_shape=tuple(sides), r_pad=0,
                       config=code.reshape(tuple(sides)).astype(dtype),
                       alphabet_size=k ** m, meta="sublattice-recode")
