"""The three concrete restricted orbit equivalences used for entropy checks.

Each construction packages the forward and reverse cocycles together with
its analytic compression constant:

  induced(U)      comp = 1 / mu(U)   (first-return system on a Z^1 window)
  reparam(M)      comp = 1           (|det M| = 1 re-indexing, S^v = T^{Mv})
  sublattice(M)   comp = |det M|     (recoding over a fundamental domain)

The inversion relations beta(alpha(g, x), Phi x) = g are checkable exactly
on sampled pairs.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .cocycles import (Cocycle, ConstantLinearCocycle, CountingCocycle,
                       RestrictedCocycle, ReturnTimeCocycle,
                       SubgroupLinearCocycle)
from .errors import DomainError
from .rng import make_rng
from .sampling import Cylinder, OrbitSample, SymbolicSystem


@dataclass
class SoeConstruction:
    kind: str
    alpha: Cocycle
    beta: Cocycle
    comp: Fraction
    meta: dict

    def verify_inversion(self, sample: OrbitSample, n_pairs: int = 100,
                         seed: int = 0) -> int:
        """Count exact violations of beta(alpha(g, x), Phi x) = g over
        sampled in-domain pairs."""
        rng = make_rng(seed, stream=21)
        if self.kind == "induced":
            return self._verify_induced(sample, n_pairs, rng)
        return self._verify_linear(sample, n_pairs, rng)

    def _verify_linear(self, sample, n_pairs, rng) -> int:
        d = sample.d
        bad = 0
        if self.kind == "reparam":
            vs = rng.integers(-8, 9, size=(n_pairs, d))
            gs = vs
        else:
            M = self.meta["M"]
            vs = rng.integers(-8, 9, size=(n_pairs, d))
            gs = vs @ np.asarray(M, dtype=np.int64).T
        pos = np.zeros((1, d), dtype=np.int64)
        for g in gs:
            a = self.alpha.values_at(tuple(g), pos, sample)[0]
            b = self.beta.values_at(tuple(a), pos, sample)[0]
            if tuple(b) != tuple(g):
                bad += 1
        return bad

    def _verify_induced(self, sample, n_pairs, rng) -> int:
        from .cocycles import _visit_data
        visits, _ = _visit_data(sample, self.meta["U"])
        if len(visits) < 3:
            raise DomainError("too few visits to verify the inversion")
        bad = 0
        i = rng.integers(0, len(visits) - 1, size=n_pairs)
        m = 1 + rng.integers(0, np.minimum(16, len(visits) - 1 - i))
        for ii, mm in zip(i, m):
            v = int(visits[ii])
            n = int(visits[ii + mm] - visits[ii])
            pos = np.array([[v]], dtype=np.int64)
            if not self.alpha.in_domain((n,), pos, sample)[0]:
                continue
            a = int(self.alpha.values_at((n,), pos, sample)[0, 0])
            b = int(self.beta.values_at((a,), pos, sample)[0, 0])
            if b != n:
                bad += 1
        return bad


def induced_soe(system: SymbolicSystem, U: Cylinder) -> SoeConstruction:
    mu = U.analytic_prob(system)
    if mu <= 0:
        raise DomainError("induced construction needs mu(U) > 0")
    comp = Fraction(1) / Fraction(mu)
    alpha = RestrictedCocycle(CountingCocycle(U), U)
    beta = ReturnTimeCocycle(U)
    return SoeConstruction("induced", alpha, beta, comp, {"U": U})


def reparam_soe(M) -> SoeConstruction:
    M = np.asarray(M, dtype=np.int64)
    det = int(round(float(np.linalg.det(M))))
    if abs(det) != 1:
        raise DomainError("reparam needs |det M| = 1")
    Minv = np.asarray(np.round(np.linalg.inv(M) * det), dtype=np.int64) * det
    return SoeConstruction("reparam", ConstantLinearCocycle(M),
                           ConstantLinearCocycle(Minv), Fraction(1), {"M": M})


def sublattice_soe(M) -> SoeConstruction:
    M = np.asarray(M, dtype=np.int64)
    det = abs(int(round(float(np.linalg.det(M)))))
    if det <= 1:
        raise DomainError("sublattice construction needs |det M| > 1")
    return SoeConstruction("sublattice", SubgroupLinearCocycle(M),
                           ConstantLinearCocycle(M), Fraction(det), {"M": M})
