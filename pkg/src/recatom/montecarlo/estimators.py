"""Distances, coverage and the exact Berry-Esseen oracle."""

from __future__ import annotations

import math
from collections import Counter
from typing import Callable, Iterable, Mapping

import numpy as np

from ..asymptotics import Interval, clt_standardize
from ..distributions import DomainError, gaussian_cdf, geometric_moments, nb_logpmf

BE_MAX_K = 2**14


def ks_statistic(sample, cdf: Callable = gaussian_cdf) -> float:
    """One-sample Kolmogorov-Smirnov distance between ``sample`` and ``cdf``.

    ``cdf`` must accept a numpy array.
    """
    x = np.sort(np.asarray(sample, dtype=float))
    m = len(x)
    if m == 0:
        raise DomainError("ks_statistic needs a nonempty sample")
    f = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, m + 1)
    return float(max(np.max(np.abs(i / m - f)), np.max(np.abs((i - 1) / m - f))))


def empirical_pmf(sample: Iterable[int]) -> dict[int, float]:
    counts = Counter(int(v) for v in sample)
    total = sum(counts.values())
    return {v: c / total for v, c in sorted(counts.items())}


def tv_distance(pmf_a: Mapping[int, float], pmf_b: Mapping[int, float]) -> float:
    keys = set(pmf_a) | set(pmf_b)
    return 0.5 * math.fsum(abs(pmf_a.get(v, 0.0) - pmf_b.get(v, 0.0)) for v in keys)


def coverage_estimate(intervals: Iterable[Interval | tuple[float, float]], truth: float) -> float:
    hits = total = 0
    for lo, hi in intervals:
        total += 1
        hits += lo <= truth <= hi
    if total == 0:
        raise DomainError("coverage_estimate needs at least one interval")
    return hits / total


def be_enumeration_range(k: int, p: float) -> tuple[int, int]:
    """Trial counts enumerated by :func:`exact_be_supdist`.

    Upper end sits 50 sqrt(k)/p trials past the mean k/p, at least 50
    standard deviations, so the neglected tail is far below 1e-10.
    """
    return k, math.ceil(k / p + 50.0 * math.sqrt(k) / p)


def exact_be_supdist(k: int, p: float) -> float:
    """sup_x |P(N_k* <= x) - Phi(x)| for N_k ~ NB(k, p), computed exactly.

    N_k* is the standardized number of trials; the sup of a step cdf
    against a continuous one is attained at a jump, so both one-sided
    limits are compared at every support point.
    """
    if not (1 <= k <= BE_MAX_K):
        raise DomainError(f"k must lie in [1, {BE_MAX_K}] (enumeration budget), got {k!r}")
    m = geometric_moments(p)
    lo, hi = be_enumeration_range(k, p)
    n = np.arange(lo, hi + 1)
    cdf = np.minimum(np.cumsum(np.exp(nb_logpmf(k, p, n))), 1.0)
    phi = gaussian_cdf(clt_standardize(n.astype(float), k, m))
    left = np.concatenate(([0.0], cdf[:-1]))
    return float(max(np.max(np.abs(cdf - phi)), np.max(np.abs(left - phi)), 1.0 - cdf[-1]))


def mean_and_stderr(values) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    if len(v) < 2:
        return float(v.mean()), float("nan")
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(len(v)))


def variance_and_stderr(values) -> tuple[float, float]:
    """Sample variance and its large-sample standard error sqrt((m4 - s^4) / R)."""
    v = np.asarray(values, dtype=float)
    r = len(v)
    centered = v - v.mean()
    s2 = float(centered @ centered / (r - 1))
    m4 = float(np.mean(centered**4))
    return s2, math.sqrt(max(m4 - s2 * s2, 0.0) / r)


def proportion_stderr(phat: float, r: int) -> float:
    return math.sqrt(phat * (1.0 - phat) / r)
