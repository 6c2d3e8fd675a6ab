"""Discrete laws used throughout the package.

Geometric and negative binomial laws count *trials* (support starts at 1,
resp. at k).  Finite discrete laws for the observations are described by
:class:`DistributionSpec`.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from itertools import accumulate
from statistics import NormalDist

import numpy as np
from scipy.special import gammaln, ndtr

__all__ = [
    "DomainError",
    "DistributionSpec",
    "GeometricMoments",
    "geometric_pmf",
    "geometric_moments",
    "nb_pmf",
    "nb_logpmf",
    "nb_cdf",
    "sample_x",
    "sample_stream",
    "multinomial_cov",
    "gaussian_cdf",
    "gaussian_quantile",
]

_PROB_TOL = 1e-12
_STD_NORMAL = NormalDist()


class DomainError(ValueError):
    """Raised when an argument lies outside the domain of an operation."""


def _check_open_prob(p: float, name: str = "p") -> None:
    if not (0.0 < p < 1.0):
        raise DomainError(f"{name} must lie in (0, 1), got {p!r}")


@dataclass(frozen=True)
class DistributionSpec:
    """Finite discrete law: ascending support points and their masses.

    Use :meth:`binomial` for the binomial(r, alpha) shorthand; the
    parameters are kept so that ``r`` stays available to callers.
    """

    support: tuple[float, ...]
    probs: tuple[float, ...]
    kind: str = "table"
    r: int | None = None
    alpha: float | None = None

    def __post_init__(self) -> None:
        support = tuple(float(s) for s in self.support)
        probs = tuple(float(q) for q in self.probs)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "probs", probs)
        if not support:
            raise DomainError("support must be nonempty")
        if len(support) != len(probs):
            raise DomainError("support and probs must have the same length")
        if any(b <= a for a, b in zip(support, support[1:])):
            raise DomainError("support must be strictly ascending")
        if any(q < 0.0 or not math.isfinite(q) for q in probs):
            raise DomainError("probs must be finite and nonnegative")
        if abs(math.fsum(probs) - 1.0) > _PROB_TOL:
            raise DomainError(f"probs sum to {math.fsum(probs)!r}, expected 1")

    @classmethod
    def binomial(cls, r: int, alpha: float) -> DistributionSpec:
        if isinstance(r, bool) or int(r) != r or r < 1:
            raise DomainError(f"r must be a positive integer, got {r!r}")
        r = int(r)
        _check_open_prob(alpha, "alpha")
        if r <= 500:
            probs = [math.comb(r, j) * alpha**j * (1.0 - alpha) ** (r - j) for j in range(r + 1)]
        else:
            probs = [
                math.exp(
                    math.lgamma(r + 1) - math.lgamma(j + 1) - math.lgamma(r - j + 1)
                    + j * math.log(alpha) + (r - j) * math.log1p(-alpha)
                )
                for j in range(r + 1)
            ]
            total = math.fsum(probs)
            probs = [q / total for q in probs]
        return cls(tuple(range(r + 1)), tuple(probs), kind="binomial", r=r, alpha=alpha)

    @property
    def cumulative(self) -> tuple[float, ...]:
        return tuple(accumulate(self.probs))

    def to_dict(self) -> dict:
        if self.kind == "binomial":
            return {"kind": "binomial", "r": self.r, "alpha": self.alpha}
        return {"support": list(self.support), "probs": list(self.probs)}

    @classmethod
    def from_dict(cls, data: dict) -> DistributionSpec:
        if data.get("kind") == "binomial":
            return cls.binomial(data["r"], data["alpha"])
        try:
            return cls(tuple(data["support"]), tuple(data["probs"]))
        except KeyError as exc:
            raise DomainError(f"distribution is missing field {exc.args[0]!r}") from None


@dataclass(frozen=True)
class GeometricMoments:
    p: float
    nu: float
    sigma2: float
    gamma: float

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)


def geometric_pmf(p: float, h: int) -> float:
    """P(Z = h) for Z the number of trials up to the first success."""
    _check_open_prob(p)
    if h < 1:
        raise DomainError(f"h must be >= 1, got {h!r}")
    return (1.0 - p) ** (h - 1) * p


def geometric_moments(p: float) -> GeometricMoments:
    """Mean, variance and third central moment of the geometric law on {1, 2, ...}."""
    _check_open_prob(p)
    q = 1.0 - p
    return GeometricMoments(p=p, nu=1.0 / p, sigma2=q / p**2, gamma=q * (2.0 - p) / p**3)


def _check_nb(k: int, p: float) -> None:
    _check_open_prob(p)
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k!r}")


def nb_logpmf(k: int, p: float, n):
    """Log of :func:`nb_pmf`, vectorized over ``n``; ``-inf`` below the support."""
    _check_nb(k, p)
    n_arr = np.asarray(n, dtype=float)
    with np.errstate(invalid="ignore"):
        out = (
            gammaln(n_arr) - gammaln(k) - gammaln(n_arr - k + 1.0)
            + k * math.log(p) + (n_arr - k) * math.log1p(-p)
        )
    out = np.where(n_arr >= k, out, -np.inf)
    return out if out.ndim else float(out)


def nb_pmf(k: int, p: float, n: int) -> float:
    """P(N = n), N the number of trials needed for k successes.

    Evaluated in log space, so k and n in the 1e5 range are fine.
    """
    if n < k:
        _check_nb(k, p)
        return 0.0
    return math.exp(nb_logpmf(k, p, n))


def nb_cdf(k: int, p: float, n) -> np.ndarray | float:
    """P(N <= n).  Array input returns an array of the same shape."""
    _check_nb(k, p)
    n_arr = np.asarray(n)
    if n_arr.size == 0:
        return np.zeros(n_arr.shape)
    top = int(np.max(n_arr))
    if top < k:
        out = np.zeros(n_arr.shape)
        return out if out.ndim else 0.0
    grid = np.arange(k, top + 1)
    cum = np.cumsum(np.exp(nb_logpmf(k, p, grid)))
    np.minimum(cum, 1.0, out=cum)
    idx = np.floor(n_arr).astype(np.int64) - k
    out = np.where(idx >= 0, cum[np.clip(idx, 0, None)], 0.0)
    return out if out.ndim else float(out)


def sample_x(spec: DistributionSpec, rng: np.random.Generator) -> float:
    """One draw from ``spec`` by inverse cdf on the cumulative masses."""
    cum = spec.cumulative
    i = bisect_right(cum, rng.random())
    return spec.support[min(i, len(cum) - 1)]


def sample_stream(spec: DistributionSpec, size: int, rng: np.random.Generator) -> np.ndarray:
    """``size`` iid draws; consumes the stream exactly like repeated :func:`sample_x`."""
    cum = np.asarray(spec.cumulative)
    idx = np.searchsorted(cum, rng.random(size), side="right")
    np.minimum(idx, len(cum) - 1, out=idx)
    return np.asarray(spec.support)[idx]


def multinomial_cov(p) -> np.ndarray:
    """Limit covariance of the standardized multinomial vector.

    Diagonal 1 - p_i, off-diagonal -sqrt(p_i p_j).
    """
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or np.any(p <= 0.0) or abs(math.fsum(p) - 1.0) > _PROB_TOL:
        raise DomainError(f"p must be a positive probability vector, got {p!r}")
    root = np.sqrt(p)
    return np.eye(len(p)) - np.outer(root, root)


def gaussian_cdf(x):
    """Standard normal cdf; arrays are handled elementwise."""
    if isinstance(x, np.ndarray):
        return ndtr(x)
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def gaussian_quantile(u: float) -> float:
    if not (0.0 < u < 1.0):
        raise DomainError(f"quantile requires 0 < u < 1, got {u!r}")
    return _STD_NORMAL.inv_cdf(u)
