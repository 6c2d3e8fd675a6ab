"""Normalizers, bounds and interval constructions for hitting times and counts."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .distributions import DomainError, GeometricMoments, gaussian_quantile
from .records import AtomEndpoints, HitCounts

__all__ = [
    "ComparisonLaw",
    "Interval",
    "clt_standardize",
    "lil_envelope",
    "lil_ratio",
    "be_bound",
    "multinomial_standardize",
    "ratio_stat",
    "diff_stat",
    "comparison_law",
    "ratio_variance_delta",
    "dominance_holds",
    "ratio_ci",
    "FORMULAS",
]

FORMULAS = ("corrected", "as_published")


@dataclass(frozen=True)
class ComparisonLaw:
    p1: float
    p2: float
    gamma2: float
    delta2: float


class Interval(NamedTuple):
    lo: float
    hi: float

    @property
    def halfwidth(self) -> float:
        return 0.5 * (self.hi - self.lo)

    def __contains__(self, x: float) -> bool:
        return self.lo <= x <= self.hi


def clt_standardize(n_k, k: int, m: GeometricMoments):
    """(N_k - k nu) / (sigma sqrt(k)); accepts arrays for ``n_k``."""
    if k < 1:
        raise DomainError("k must be >= 1")
    return (n_k - k * m.nu) / (m.sigma * math.sqrt(k))


def lil_envelope(k, m: GeometricMoments, c: float = 1.0):
    """c * sigma * sqrt(2 k ln ln k).

    The scale sits outside the root (classical Hartman-Wintner form).
    """
    k_arr = np.asarray(k, dtype=float)
    if np.any(k_arr < 16):
        raise DomainError("k must be >= 16 so that ln ln k > 0")
    out = c * m.sigma * np.sqrt(2.0 * k_arr * np.log(np.log(k_arr)))
    return out if out.ndim else float(out)


def lil_ratio(n_k, k, m: GeometricMoments):
    """Centered hitting time over the unit LIL envelope."""
    return (np.asarray(n_k, dtype=float) - np.asarray(k) * m.nu) / lil_envelope(k, m)


def be_bound(k: int, m: GeometricMoments) -> float:
    """36 gamma / sqrt(k), gamma the third central moment of one increment."""
    if k < 1:
        raise DomainError("k must be >= 1")
    return 36.0 * m.gamma / math.sqrt(k)


def multinomial_standardize(counts: HitCounts, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape != (3,) or np.any(p <= 0.0):
        raise DomainError("p must be three positive probabilities")
    n = counts.n
    return (np.asarray(counts.m, dtype=float) - n * p) / np.sqrt(n * p)


def _pair(ep: AtomEndpoints, pair: tuple[int, int]) -> tuple[float, float]:
    i, j = pair
    if i == j or not {i, j} <= {0, 1, 2}:
        raise DomainError(f"pair must be two distinct indices in 0..2, got {pair!r}")
    return ep.p[i], ep.p[j]


def ratio_stat(counts: HitCounts, ep: AtomEndpoints, pair: tuple[int, int] = (0, 1)) -> float:
    """sqrt(n) (m_i / m_j - p_i / p_j), by default lep hits over uep hits."""
    pi, pj = _pair(ep, pair)
    mi, mj = counts.m[pair[0]], counts.m[pair[1]]
    if mj == 0:
        raise DomainError("ratio undefined, no upper hits yet")
    return math.sqrt(counts.n) * (mi / mj - pi / pj)


def diff_stat(counts: HitCounts, ep: AtomEndpoints, pair: tuple[int, int] = (0, 1)) -> float:
    """sqrt(n) ((m_i - m_j) / n - (p_i - p_j))."""
    pi, pj = _pair(ep, pair)
    mi, mj = counts.m[pair[0]], counts.m[pair[1]]
    n = counts.n
    return math.sqrt(n) * ((mi - mj) / n - (pi - pj))


def comparison_law(p1: float, p2: float) -> ComparisonLaw:
    """Limit variances of the ratio and difference statistics for a pair of masses."""
    if not (p1 > 0.0 and p2 > 0.0 and p1 + p2 < 1.0):
        raise DomainError(f"need p1, p2 > 0 and p1 + p2 < 1, got ({p1!r}, {p2!r})")
    gamma2 = (p1 / p2) * (p2**2 * (1.0 - p1) + p1**2 * (1.0 - p2) + 2.0 * (p1 * p2) ** 1.5)
    delta2 = p1 * (1.0 - p1) + p2 * (1.0 - p2) + 2.0 * p1 * p2
    return ComparisonLaw(p1=p1, p2=p2, gamma2=gamma2, delta2=delta2)


def ratio_variance_delta(p1: float, p2: float) -> float:
    """Delta-method limit variance of sqrt(n)(M1/M2 - p1/p2): p1 (p1 + p2) / p2^3.

    Reported next to ``comparison_law(...).gamma2`` so the two can be
    compared against simulation.
    """
    if not (p1 > 0.0 and p2 > 0.0 and p1 + p2 <= 1.0):
        raise DomainError(f"need p1, p2 > 0 and p1 + p2 <= 1, got ({p1!r}, {p2!r})")
    return p1 * (p1 + p2) / p2**3


def dominance_holds(counts: HitCounts, beta: float, ep: AtomEndpoints, strict: bool = False) -> bool:
    """Whether the more likely endpoint leads the other by at least n * beta hits."""
    gap = abs(ep.p1 - ep.p2)
    if not (0.0 < beta < gap):
        raise DomainError(f"beta must lie in (0, |p1 - p2|) = (0, {gap:.6g}), got {beta!r}")
    lead = counts.m1 - counts.m2 if ep.p1 > ep.p2 else counts.m2 - counts.m1
    bar = counts.n * beta
    return lead > bar if strict else lead >= bar


def ratio_ci(
    counts: HitCounts,
    ep: AtomEndpoints,
    u: float,
    formula: str = "corrected",
    r: int | None = None,
) -> Interval:
    """Interval for M1/M2 at nominal coverage 1 - u.

    Both intervals are centered at the observed ratio.  ``corrected`` has
    halfwidth z sqrt(gamma2 / n).  ``as_published`` uses the printed
    binomial(r, 1/2) halfwidth 2^r z / sqrt(2n); the printed statement
    |M1/M2 - 1| <= h inverts to this interval containing 1.  It needs ``r``
    and p1 == p2.
    """
    if not (0.0 < u < 1.0):
        raise DomainError(f"u must lie in (0, 1), got {u!r}")
    if counts.m2 == 0:
        raise DomainError("ratio undefined, no upper hits yet")
    z = gaussian_quantile(1.0 - u / 2.0)
    n = counts.n
    if formula == "corrected":
        law = comparison_law(ep.p1, ep.p2)
        center = counts.m1 / counts.m2
        half = z * math.sqrt(law.gamma2) / math.sqrt(n)
    elif formula == "as_published":
        if abs(ep.p1 - ep.p2) > 1e-12:
            raise DomainError("as_published interval is only defined for p1 == p2")
        if r is None or r < 1:
            raise DomainError("as_published interval needs the binomial parameter r")
        center = counts.m1 / counts.m2
        half = 2.0**r * z / math.sqrt(2.0 * n)
    else:
        raise DomainError(f"formula must be one of {FORMULAS}, got {formula!r}")
    return Interval(center - half, center + half)
