"""Shannon and block entropy over windows, the entropy--length inequality,
and graphing-based entropy bounds.

Everything is in nats.  Block (KS) entropy is estimated from empirical
pattern distributions over growing boxes: on Z^1 the conditional
difference H(F_k) - H(F_{k-1}) at the largest reliable side, on Z^d the
normalized H(F_k)/|F_k| (the difference form is unstable in d >= 2 at desk
scale; the plug-in normalized form overestimates, which the tolerances
absorb).  A box side is reliable when alphabet^(side^d) <= N/100.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError, DegenerateInputError, DomainError, EstimatorError
from .graphing import Graphing, cost as graphing_cost, _coords
from .groups import Group
from .sampling import OrbitSample


@dataclass
class Distribution:
    probs: np.ndarray

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=np.float64)
        if (self.probs < -1e-15).any() or abs(float(self.probs.sum()) - 1.0) > 1e-12:
            raise DomainError("not a probability vector")


def shannon(dist) -> float:
    """-sum p log p in nats, with 0 log 0 = 0."""
    p = dist.probs if isinstance(dist, Distribution) else \
        Distribution(np.asarray(dist)).probs
    p = p[p > 0]
    return float(-(p * np.log(p)).sum())


def shannon_counts(counts: np.ndarray) -> float:
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum()
    p = counts[counts > 0] / total
    return float(-(p * np.log(p)).sum())


def binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return float(-p * math.log(p) - (1 - p) * math.log(1 - p))


@dataclass
class EntropyEstimate:
    value: float
    method: str
    window_size: int
    alphabet_size: int
    per_side: dict = field(default_factory=dict)  # side -> (n_patterns, H, H/|box|)
    stderr_proxy: float = 0.0
    excluded_sides: list = field(default_factory=list)

    def to_json(self):
        return {
            "value": self.value,
            "method": self.method,
            "window_size": self.window_size,
            "alphabet_size": self.alphabet_size,
            "per_side": {str(k): list(v) for k, v in self.per_side.items()},
            "stderr_proxy": self.stderr_proxy,
            "excluded_sides": self.excluded_sides,
        }


def _pattern_counts(labels: np.ndarray, side: int, alphabet: int) -> np.ndarray:
    """Counts of side^d patterns read at every in-core position."""
    d = labels.ndim
    m = side ** d
    powers = alphabet ** np.arange(m, dtype=np.int64)
    if alphabet ** m > (1 << 62):
        raise CapacityError("pattern code overflow; side should be excluded")
    view = np.lib.stride_tricks.sliding_window_view(labels, (side,) * d)
    view = view.reshape(-1, m)
    vals_list, cnts_list = [], []
    chunk = max(1, (1 << 22) // m)
    for i in range(0, len(view), chunk):
        codes = view[i:i + chunk].astype(np.int64) @ powers
        v, c = np.unique(codes, return_counts=True)
        vals_list.append(v)
        cnts_list.append(c)
    vals = np.concatenate(vals_list)
    cnts = np.concatenate(cnts_list)
    uniq, inv = np.unique(vals, return_inverse=True)
    out = np.zeros(len(uniq), dtype=np.int64)
    np.add.at(out, inv, cnts)
    return out


def block_entropy(sample: OrbitSample, sides, labels: np.ndarray | None = None,
                  alphabet_size: int | None = None) -> EntropyEstimate:
    """Block-entropy estimate over box sides.

    `labels` defaults to the raw core configuration; pass a derived label
    array (same core shape) to estimate a factor process.  Sides whose
    pattern space exceeds N/100 are excluded; estimates are asserted
    monotone nonincreasing (2% slack) across included sides.
    """
    labels = sample.core_view() if labels is None else labels
    k = int(alphabet_size if alphabet_size is not None else sample.alphabet_size)
    if labels.shape != sample.core_shape:
        raise DomainError("label array does not match the core shape")
    N = labels.size
    d = labels.ndim
    per_side: dict = {}
    excluded = []
    for side in sorted(set(int(s) for s in sides)):
        if side < 1 or side > min(labels.shape):
            excluded.append(side)
            continue
        if k ** (side ** d) > N / 100:
            excluded.append(side)
            continue
        counts = _pattern_counts(labels, side, k)
        H = shannon_counts(counts)
        per_side[side] = (int(len(counts)), H, H / side ** d)
    if not per_side:
        raise DegenerateInputError(
            f"every requested side was excluded (alphabet {k}, window {N})")
    included = sorted(per_side)
    for a, b in zip(included, included[1:]):
        if per_side[b][2] > per_side[a][2] * 1.02 + 1e-9:
            raise EstimatorError(
                f"normalized block entropy increased from side {a} to {b}: "
                f"{per_side[a][2]:.6f} -> {per_side[b][2]:.6f}")
    top = included[-1]
    if d == 1 and top - 1 in per_side:
        value = per_side[top][1] - per_side[top - 1][1]
        method = f"difference(H_{top} - H_{top - 1})"
    else:
        value = per_side[top][2]
        method = f"normalized(side={top})"
    counts = _pattern_counts(labels, top, k)
    p = counts / counts.sum()
    H = per_side[top][1]
    var = float((p * (np.log(np.maximum(p, 1e-300)) + H) ** 2).sum())
    stderr = math.sqrt(max(var, 0.0) / counts.sum()) / max(top ** d, 1)
    value = max(value, 0.0)
    assert value <= math.log(max(k, 2)) + 1e-9, "estimate exceeds log(alphabet)"
    return EntropyEstimate(value=value, method=method, window_size=N,
                           alphabet_size=k, per_side=per_side,
                           stderr_proxy=stderr, excluded_sides=excluded)


def partial_entropy(sample: OrbitSample, U_event, labels_at) -> float:
    """Entropy of a partial observable: H(U) + mu(U) H_{mu|U}(phi).

    Computed as the Shannon entropy of the star-extension (the observable
    equal to phi on U and to a fresh symbol off U); both forms are computed
    and checked against each other.  mu(U) = 0 gives 0 by convention.
    """
    mask = U_event.holds(sample).ravel()
    mu = float(mask.mean())
    if mu == 0.0:
        return 0.0
    pos = _coords(np.flatnonzero(mask), sample.core_shape)
    labels = np.asarray(labels_at(sample, pos)).reshape(-1)
    _, counts = np.unique(labels, return_counts=True)
    n = mask.size
    star_counts = np.concatenate([counts, [n - counts.sum()]]) \
        if counts.sum() < n else counts
    star = shannon_counts(star_counts)
    formula = binary_entropy(mu) + mu * shannon_counts(counts)
    assert abs(star - formula) < 1e-9, "star-extension identity failed"
    return star


def furman_k(eps: float) -> int:
    """Minimal positive integer k with 2 * sum_{n>=1} e^{-kn-1} <= eps."""
    if eps <= 0:
        raise DomainError("eps must be positive")
    k = 1
    while 2 * math.exp(-1) * math.exp(-k) / (1 - math.exp(-k)) > eps:
        k += 1
    return k


def furman_constant(c: float, eps: float) -> float:
    """The entropy--length constant: with c an exponential-growth bound
    (log|B(n)| <= c n for all n >= 1), every [0,1]-valued family (p_g)
    satisfies  sum_g h2(p_g) <= C_eps * sum_g |g| p_g + eps  where
    C_eps = 2(c + k) + 2 log 2 and k = furman_k(eps)."""
    if c <= 0 or eps <= 0:
        raise DomainError("c and eps must be positive")
    return 2 * (c + furman_k(eps)) + 2 * math.log(2)


def growth_log_constant(group: Group, r_max: int = 16, margin: float = 1.1) -> float:
    """Smallest c with log|B(n)| <= c n for n <= r_max, widened by a margin
    (ball growth is submultiplicative, so the margin covers larger n)."""
    best = max(math.log(len(group.ball(n))) / n for n in range(1, r_max + 1))
    return best * margin


def furman_bound_check(p_map: dict, group: Group, eps: float,
                       c: float | None = None, r_check: int = 8) -> dict:
    """Exact check of sum_g h2(p_g) <= C_eps sum_g |g| p_g + eps over a
    sparse family supported off the identity."""
    if c is None:
        c = growth_log_constant(group)
    for n in range(1, r_check + 1):
        assert math.log(len(group.ball(n))) <= c * n + 1e-12, \
            f"growth constant c={c} fails at radius {n}"
    C = furman_constant(c, eps)
    lhs = 0.0
    weighted = 0.0
    for g, p in p_map.items():
        if group.word_length(g) == 0:
            raise DomainError("the identity must not carry mass")
        lhs += binary_entropy(float(p))
        weighted += group.word_length(g) * float(p)
    rhs = C * weighted + eps
    return {"lhs": lhs, "rhs": rhs, "C_eps": C, "ok": lhs <= rhs + 1e-12,
            "weighted_mass": weighted}


def distribution_length_bound(probs: dict, group: Group, eps: float,
                              c: float | None = None) -> dict:
    """Distributional form: H(alpha) <= C_eps E|alpha| + eps for an
    observable alpha concentrated off the identity."""
    if c is None:
        c = growth_log_constant(group)
    C = furman_constant(c, eps)
    p = np.asarray(list(probs.values()), dtype=np.float64)
    H = shannon(Distribution(p))
    mean_len = sum(group.word_length(g) * float(q) for g, q in probs.items())
    rhs = C * mean_len + eps
    return {"H": H, "rhs": rhs, "C_eps": C, "ok": H <= rhs + 1e-12}


def small_set_entropy(alpha, g, U_event, sample: OrbitSample) -> float:
    """H(alpha^g; U) from empirical data: H(U) + mu(U) H_{mu|U}(alpha^g).
    Empty U gives 0 by convention."""
    mask = U_event.holds(sample).ravel()
    mu = float(mask.mean())
    if mu == 0.0:
        return 0.0
    pos = _coords(np.flatnonzero(mask), sample.core_shape)
    ok = alpha.in_domain(g, pos, sample)
    if not ok.any():
        return binary_entropy(mu)
    vals = alpha.values_at(g, pos[ok], sample)
    _, counts = np.unique(vals, axis=0, return_counts=True)
    return binary_entropy(mu) + mu * shannon_counts(counts)


def small_set_entropy_table(alpha, g, nested_events, sample: OrbitSample) -> list:
    """Monotonicity diagnostic: H(alpha^g; U) along a chain of shrinking
    events, as (mu(U), value) rows."""
    rows = []
    for U in nested_events:
        mu = float(U.holds(sample).mean())
        rows.append((mu, small_set_entropy(alpha, g, U, sample)))
    return rows


# -- graphing-generated processes ---------------------------------------------------

def graphing_label_config(graphing: Graphing, alpha, sample: OrbitSample,
                          max_alphabet: int = 100_000) -> tuple:
    """Per-position labels of the process generated by a graphing and the
    cocycle values on it: for each support element g, membership of A_g and
    the value alpha(g, .) there.  Returns (labels array, alphabet size)."""
    shape = sample.core_shape
    code = np.zeros(sample.core_size, dtype=np.int64)
    radix = 1
    for g in graphing.support_keys():
        flats = graphing.support[g]
        if g == graphing.identity:
            n_vals = 1
            idx = np.zeros(len(flats), dtype=np.int64)
        else:
            vals = alpha.values_at(g, _coords(flats, shape), sample)
            uniq, idx = np.unique(vals, axis=0, return_inverse=True)
            n_vals = len(uniq)
        base = n_vals + 1
        if radix > (1 << 62) // base:
            raise CapacityError("generated-process alphabet overflows")
        code[flats] += radix * (1 + idx.reshape(-1))
        radix *= base
    uniq, labels = np.unique(code, return_inverse=True)
    if len(uniq) > max_alphabet:
        raise CapacityError(
            f"generated-process alphabet {len(uniq)} too large to estimate")
    return labels.reshape(shape).astype(np.int32), len(uniq)


def generated_process_entropy(graphing: Graphing, alpha, sample: OrbitSample,
                              sides=(1, 2, 3)) -> EntropyEstimate:
    """Block-entropy estimate of the graphing-generated labeled process."""
    labels, k = graphing_label_config(graphing, alpha, sample)
    return block_entropy(sample, sides, labels=labels, alphabet_size=k)


def graphing_entropy_bound(graphing: Graphing, alpha, sample: OrbitSample,
                           eps: float, c_group: float) -> dict:
    """Two upper bounds for the generated-process entropy, plus the
    estimate when the label alphabet is tractable.

    sum bound:  sum_g H(A_g) + sum_g mu(A_g) H_{mu|A_g}(alpha^g)
    cost bound: H(A_e) + C_eps * cost + eps
    """
    N = graphing.N
    shape = sample.core_shape
    sum_bound = 0.0
    for g in graphing.support_keys():
        flats = graphing.support[g]
        mu = len(flats) / N
        sum_bound += binary_entropy(mu)
        if g != graphing.identity:
            vals = alpha.values_at(g, _coords(flats, shape), sample)
            _, counts = np.unique(vals, axis=0, return_counts=True)
            sum_bound += mu * shannon_counts(counts)
    mu_e = len(graphing.support.get(graphing.identity, ())) / N
    cost_bound = binary_entropy(mu_e) + \
        furman_constant(c_group, eps) * graphing_cost(graphing) + eps
    out = {"sum_bound": sum_bound, "cost_bound": cost_bound,
           "cost": graphing_cost(graphing), "estimate": None}
    try:
        est = generated_process_entropy(graphing, alpha, sample)
        out["estimate"] = est.value
        out["estimate_method"] = est.method
        tol = 0.02 + 3 * est.stderr_proxy
        assert est.value <= sum_bound + tol, \
            f"estimate {est.value} exceeds the sum bound {sum_bound}"
        assert est.value <= cost_bound + tol, \
            f"estimate {est.value} exceeds the cost bound {cost_bound}"
    except CapacityError:
        pass
    return out
