"""Record values, record times and endpoint hitting processes.

Everything here works on plain observation sequences, so a stream read from
a file behaves exactly like a simulated one.  Simulation helpers draw from a
:class:`~recatom.distributions.DistributionSpec` with a numpy ``Generator``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .distributions import DistributionSpec, DomainError, sample_stream

__all__ = [
    "AtomEndpoints",
    "Outcome",
    "Endpoint",
    "RecordTrace",
    "HittingTimes",
    "HitCounts",
    "endpoints_of",
    "classify_outcome",
    "records_of",
    "run_record_trace",
    "hitting_times",
    "simulate_hitting_times",
    "simulate_hits_array",
    "hit_counts",
    "read_stream",
]

_MASS_TOL = 1e-12


@dataclass(frozen=True)
class AtomEndpoints:
    lep: float
    uep: float
    p1: float
    p2: float
    p3: float

    def __post_init__(self) -> None:
        if not self.lep < self.uep:
            raise DomainError("lep must be strictly below uep")
        if min(self.p1, self.p2, self.p3) < 0.0:
            raise DomainError("endpoint masses must be nonnegative")
        if abs(self.p1 + self.p2 + self.p3 - 1.0) > _MASS_TOL:
            raise DomainError("p1 + p2 + p3 must equal 1")

    @property
    def p(self) -> tuple[float, float, float]:
        return (self.p1, self.p2, self.p3)

    @property
    def interior_empty(self) -> bool:
        """True for two-point laws, which the asymptotic analyses exclude."""
        return self.p3 <= 0.0

    def require_standing_assumption(self) -> None:
        """Both endpoints are atoms and 0 < p1 + p2 < 1."""
        if self.p1 <= 0.0 or self.p2 <= 0.0:
            raise DomainError("both endpoints must carry positive mass")
        if self.interior_empty:
            raise DomainError("p3 = 0: the law puts no mass strictly between the endpoints")

    def mass(self, endpoint: Endpoint | str) -> float:
        return self.p[_ENDPOINT_INDEX[Endpoint(endpoint)]]


class Outcome(str, Enum):
    LEP = "LEP"
    MID = "MID"
    UEP = "UEP"


class Endpoint(str, Enum):
    LOWER = "lower"
    UPPER = "upper"
    NEITHER = "neither"


_ENDPOINT_INDEX = {Endpoint.LOWER: 0, Endpoint.UPPER: 1, Endpoint.NEITHER: 2}


@dataclass(frozen=True)
class RecordTrace:
    record_values: tuple[float, ...]
    record_times: tuple[int, ...]
    terminated: bool
    horizon: int

    @property
    def count(self) -> int:
        return len(self.record_values)


@dataclass(frozen=True)
class HittingTimes:
    endpoint: Endpoint
    times: tuple[int, ...]
    exhausted: bool = False


@dataclass(frozen=True)
class HitCounts:
    n: int
    m1: int
    m2: int
    m3: int

    def __post_init__(self) -> None:
        if self.n < 1 or min(self.m1, self.m2, self.m3) < 0:
            raise DomainError("counts must be nonnegative and n >= 1")
        if self.m1 + self.m2 + self.m3 != self.n:
            raise DomainError("m1 + m2 + m3 must equal n")

    @property
    def m(self) -> tuple[int, int, int]:
        return (self.m1, self.m2, self.m3)


def endpoints_of(spec: DistributionSpec) -> AtomEndpoints:
    """Extreme atoms of ``spec`` and the masses at lep, uep and in between."""
    atoms = [(x, q) for x, q in zip(spec.support, spec.probs) if q > 0.0]
    if len(atoms) < 2:
        raise DomainError("no distinct endpoints: the law is degenerate")
    (lep, p1), (uep, p2) = atoms[0], atoms[-1]
    p3 = math.fsum(q for _, q in atoms[1:-1])
    return AtomEndpoints(lep=lep, uep=uep, p1=p1, p2=p2, p3=p3)


def classify_outcome(x: float, ep: AtomEndpoints) -> Outcome:
    if x == ep.lep:
        return Outcome.LEP
    if x == ep.uep:
        return Outcome.UEP
    return Outcome.MID


def records_of(stream: Iterable[float], uep: float | None = None) -> RecordTrace:
    """Strong upper records of an observation sequence (times are 1-based).

    With ``uep`` given, the trace is marked terminated once the running
    maximum reaches it; later observations cannot produce records.
    """
    values: list[float] = []
    times: list[int] = []
    count = 0
    for count, x in enumerate(stream, start=1):
        if not values or x > values[-1]:
            values.append(x)
            times.append(count)
    if count == 0:
        raise DomainError("stream is empty")
    terminated = uep is not None and values[-1] == uep
    return RecordTrace(tuple(values), tuple(times), terminated, count)


def run_record_trace(
    spec: DistributionSpec,
    horizon: int,
    rng: np.random.Generator,
    chunk: int = 256,
) -> RecordTrace:
    """Records of a freshly simulated sequence of length ``horizon``.

    Draws stop once uep is hit: no later observation can exceed an atom
    upper endpoint, so the trace is already final.
    """
    if horizon < 1:
        raise DomainError("horizon must be >= 1")
    uep = max(x for x, q in zip(spec.support, spec.probs) if q > 0.0)
    values: list[float] = []
    times: list[int] = []
    seen = 0
    while seen < horizon:
        block = sample_stream(spec, min(chunk, horizon - seen), rng)
        running = values[-1] if values else -math.inf
        # candidate records: strict new maxima within the block
        prefix = np.maximum.accumulate(np.concatenate(([running], block)))
        new = np.flatnonzero(block > prefix[:-1])
        for j in new:
            values.append(float(block[j]))
            times.append(seen + int(j) + 1)
        seen += len(block)
        if values and values[-1] == uep:
            return RecordTrace(tuple(values), tuple(times), True, horizon)
    return RecordTrace(tuple(values), tuple(times), False, horizon)


def _endpoint_mask(obs: np.ndarray, ep: AtomEndpoints, endpoint: Endpoint) -> np.ndarray:
    if endpoint is Endpoint.LOWER:
        return obs == ep.lep
    if endpoint is Endpoint.UPPER:
        return obs == ep.uep
    return (obs != ep.lep) & (obs != ep.uep)


def hitting_times(
    stream: Sequence[float],
    ep: AtomEndpoints,
    endpoint: Endpoint | str,
    k_max: int,
) -> HittingTimes:
    """First ``k_max`` (1-based) indices where ``stream`` hits ``endpoint``.

    ``exhausted`` is set when the stream ends before ``k_max`` hits.
    """
    if k_max < 1:
        raise DomainError("k_max must be >= 1")
    endpoint = Endpoint(endpoint)
    obs = np.asarray(stream, dtype=float)
    hits = np.flatnonzero(_endpoint_mask(obs, ep, endpoint))[:k_max] + 1
    return HittingTimes(endpoint, tuple(int(t) for t in hits), exhausted=len(hits) < k_max)


def simulate_hitting_times(
    spec: DistributionSpec,
    endpoint: Endpoint | str,
    k_max: int,
    rng: np.random.Generator,
    max_draws: int | None = None,
) -> HittingTimes:
    """Simulate observations until ``k_max`` hits of ``endpoint`` occurred.

    ``max_draws`` truncates infinite waits; exhaustion is then reported.
    """
    endpoint = Endpoint(endpoint)
    times, exhausted = simulate_hits_array(spec, endpoint, k_max, rng, max_draws)
    return HittingTimes(endpoint, tuple(int(t) for t in times), exhausted)


def simulate_hits_array(
    spec: DistributionSpec,
    endpoint: Endpoint | str,
    k_max: int,
    rng: np.random.Generator,
    max_draws: int | None = None,
) -> tuple[np.ndarray, bool]:
    """Array form of :func:`simulate_hitting_times`: (times, exhausted)."""
    if k_max < 1:
        raise DomainError("k_max must be >= 1")
    endpoint = Endpoint(endpoint)
    ep = endpoints_of(spec)
    p = ep.mass(endpoint)
    if p <= 0.0 and max_draws is None:
        raise DomainError(f"{endpoint.value} endpoint has zero mass; pass max_draws to truncate")
    # first block covers the expected wait plus a few standard deviations
    block = max(64, int(k_max / p + 4.0 * math.sqrt(k_max) / p)) if p > 0 else 4096
    found: list[np.ndarray] = []
    total = 0
    seen = 0
    while total < k_max:
        if max_draws is not None:
            block = min(block, max_draws - seen)
            if block <= 0:
                break
        obs = sample_stream(spec, block, rng)
        hits = np.flatnonzero(_endpoint_mask(obs, ep, endpoint))[: k_max - total] + seen + 1
        found.append(hits)
        total += len(hits)
        seen += block
        block = max(64, block // 4)
    times = np.concatenate(found) if found else np.empty(0, dtype=np.int64)
    return times, total < k_max


def hit_counts(stream: Sequence[float], ep: AtomEndpoints, n: int) -> HitCounts:
    """Counts of lep / uep / neither among the first ``n`` observations."""
    if n < 1:
        raise DomainError("n must be >= 1")
    obs = np.asarray(stream, dtype=float)
    if len(obs) < n:
        raise DomainError(f"stream has {len(obs)} observations, fewer than n={n}")
    head = obs[:n]
    m1 = int(np.count_nonzero(head == ep.lep))
    m2 = int(np.count_nonzero(head == ep.uep))
    return HitCounts(n=n, m1=m1, m2=m2, m3=n - m1 - m2)


def read_stream(path: str | Path) -> list[float]:
    """Observation file: one decimal value per line, blank lines ignored."""
    out = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        text = line.strip()
        if not text:
            continue
        try:
            out.append(float(text))
        except ValueError:
            raise DomainError(f"{path}:{lineno}: not a number: {text!r}") from None
    return out
