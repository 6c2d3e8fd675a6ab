"""One class per experiment kind.

An experiment validates its parameters up front, produces a fixed-width
row of floats per replicate (a pure function of the replicate's stream),
and turns the stacked rows into scalar results.  Rows are aggregated in
replicate order, so the outcome does not depend on how replicates were
distributed over workers.
"""

from __future__ import annotations

import math
from typing import Any, ClassVar

import numpy as np

from .. import asymptotics as asy
from ..distributions import (
    DomainError,
    gaussian_quantile,
    geometric_moments,
    multinomial_cov,
    nb_logpmf,
    sample_stream,
)
from ..records import Endpoint, HitCounts, endpoints_of, hit_counts, run_record_trace, simulate_hits_array
from .config import ConfigError, ExperimentConfig, ScalarResult, Threshold
from .estimators import (
    BE_MAX_K,
    be_enumeration_range,
    empirical_pmf,
    exact_be_supdist,
    ks_statistic,
    mean_and_stderr,
    proportion_stderr,
    tv_distance,
    variance_and_stderr,
)

DEFAULT_BE_KS = list(range(1, 201)) + [2**8, 2**10, 2**12, 2**14]

Outcome = tuple[list[ScalarResult], dict[str, list[dict[str, Any]]], list[str]]


class Experiment:
    kind: ClassVar[str]
    defaults: ClassVar[dict[str, Any]] = {}
    uses_rng: ClassVar[bool] = True
    width: ClassVar[int] = 1

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.spec = cfg.dist
        unknown = set(cfg.params) - set(self.defaults)
        if unknown:
            raise ConfigError(f"{self.kind}: unknown params {', '.join(sorted(unknown))}")
        self.params = {**self.defaults, **cfg.params}
        try:
            self.ep = endpoints_of(self.spec)
            self.setup()
        except DomainError as exc:
            raise ConfigError(f"{self.kind}: {exc}") from None

    # parameter helpers -------------------------------------------------
    def _int(self, name: str, lo: int = 1, hi: int | None = None) -> int:
        value = self.params[name]
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{self.kind}: {name} must be an integer, got {value!r}")
        if value < lo or (hi is not None and value > hi):
            raise ConfigError(f"{self.kind}: {name} must lie in [{lo}, {hi if hi is not None else 'inf'}], got {value}")
        self.params[name] = value
        return value

    def _float(self, name: str, lo: float = -math.inf, hi: float = math.inf, open_lo: bool = False) -> float:
        value = self.params[name]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{self.kind}: {name} must be a number, got {value!r}")
        value = float(value)
        if not (lo < value if open_lo else lo <= value) or value > hi:
            raise ConfigError(f"{self.kind}: {name} out of range, got {value}")
        self.params[name] = value
        return value

    def _endpoint(self) -> Endpoint:
        try:
            endpoint = Endpoint(self.params["endpoint"])
        except ValueError:
            raise ConfigError(f"{self.kind}: endpoint must be lower, upper or neither") from None
        self.params["endpoint"] = endpoint.value
        if self.ep.mass(endpoint) <= 0.0:
            raise ConfigError(f"{self.kind}: the {endpoint.value} endpoint has zero mass")
        return endpoint

    # hooks -------------------------------------------------------------
    def setup(self) -> None:
        pass

    def replicate_count(self) -> int:
        return self.cfg.replicates

    def replicate(self, index: int, rng: np.random.Generator | None) -> tuple[float, ...]:
        raise NotImplementedError

    def aggregate(self, rows: np.ndarray) -> Outcome:
        raise NotImplementedError

    def counts(self, rng: np.random.Generator) -> HitCounts:
        return hit_counts(sample_stream(self.spec, self.n, rng), self.ep, self.n)


class HittingLaw(Experiment):
    kind = "hitting-law"
    defaults = {"k": 5, "endpoint": "upper", "tv_max": 0.02}

    def setup(self) -> None:
        self.k = self._int("k", 1, 10**5)
        self.endpoint = self._endpoint()
        self.p = self.ep.mass(self.endpoint)
        self._float("tv_max", 0.0, 1.0)

    def replicate(self, index, rng):
        times, _ = simulate_hits_array(self.spec, self.endpoint, self.k, rng)
        return (float(times[-1]),)

    def aggregate(self, rows):
        sample = rows[:, 0].astype(np.int64)
        emp = empirical_pmf(sample)
        top = max(int(sample.max()), be_enumeration_range(self.k, self.p)[1])
        grid = np.arange(self.k, top + 1)
        exact = dict(zip(grid.tolist(), np.exp(nb_logpmf(self.k, self.p, grid)).tolist()))
        tv = tv_distance(emp, exact)
        mean, se = mean_and_stderr(sample)
        results = [
            ScalarResult("tv_distance", tv, None, Threshold("<=", self.params["tv_max"])),
            ScalarResult("mean_hitting_time", mean, se),
            ScalarResult("nb_mean", self.k / self.p),
        ]
        table = [
            {"n": n, "empirical": emp.get(n, 0.0), "exact": exact[n]}
            for n in range(self.k, int(sample.max()) + 1)
        ]
        return results, {"pmf": table}, []


class Clt(Experiment):
    kind = "clt"
    defaults = {"k": 4096, "endpoint": "upper", "ks_max": 0.02}

    def setup(self) -> None:
        self.k = self._int("k", 1, 10**6)
        self.endpoint = self._endpoint()
        self.moments = geometric_moments(self.ep.mass(self.endpoint))
        self._float("ks_max", 0.0, 1.0)

    def replicate(self, index, rng):
        times, _ = simulate_hits_array(self.spec, self.endpoint, self.k, rng)
        return (float(times[-1]),)

    def aggregate(self, rows):
        z = asy.clt_standardize(rows[:, 0], self.k, self.moments)
        mean, mean_se = mean_and_stderr(z)
        var, var_se = variance_and_stderr(z)
        results = [
            ScalarResult("ks_distance", ks_statistic(z), None, Threshold("<=", self.params["ks_max"])),
            ScalarResult("standardized_mean", mean, mean_se),
            ScalarResult("standardized_variance", var, var_se),
        ]
        return results, {}, []


class Lil(Experiment):
    kind = "lil"
    defaults = {
        "k_min": 1000,
        "k_max": 100000,
        "endpoint": "upper",
        "band_lo": 0.2,
        "band_hi": 1.5,
        "min_fraction": 0.9,
    }

    def setup(self) -> None:
        self.k_min = self._int("k_min", 16)
        self.k_max = self._int("k_max", self.k_min, 10**7)
        self.endpoint = self._endpoint()
        self.moments = geometric_moments(self.ep.mass(self.endpoint))
        lo = self._float("band_lo", 0.0)
        self._float("band_hi", lo)
        self._float("min_fraction", 0.0, 1.0)
        self.ks = np.arange(self.k_min, self.k_max + 1)
        self.envelope = asy.lil_envelope(self.ks, self.moments)

    def replicate(self, index, rng):
        times, _ = simulate_hits_array(self.spec, self.endpoint, self.k_max, rng)
        dev = np.abs(times[self.k_min - 1:] - self.ks * self.moments.nu)
        return (float(np.max(dev / self.envelope)),)

    def aggregate(self, rows):
        peaks = rows[:, 0]
        inside = (peaks >= self.params["band_lo"]) & (peaks <= self.params["band_hi"])
        frac = float(inside.mean())
        mean, se = mean_and_stderr(peaks)
        results = [
            ScalarResult("fraction_in_band", frac, proportion_stderr(frac, len(peaks)),
                         Threshold(">=", self.params["min_fraction"])),
            ScalarResult("mean_peak_ratio", mean, se),
            ScalarResult("min_peak_ratio", float(peaks.min())),
            ScalarResult("max_peak_ratio", float(peaks.max())),
        ]
        table = [{"path": i, "peak_ratio": float(v)} for i, v in enumerate(peaks)]
        return results, {"peaks": table}, []


class BeExact(Experiment):
    """Exact sup-distance against the Berry-Esseen bound over a (p, k) grid.

    Each grid point counts as one replicate; no randomness is involved.
    """

    kind = "be-exact"
    defaults = {"p": None, "k": None, "endpoint": "upper", "max_violations": 0, "rate_factor": 1.2}
    uses_rng = False
    width = 2

    def setup(self) -> None:
        endpoint = self._endpoint()
        ps = self.params["p"]
        if ps is None:
            ps = [self.ep.mass(endpoint)]
        elif not isinstance(ps, list):
            ps = [ps]
        ks = self.params["k"] if self.params["k"] is not None else DEFAULT_BE_KS
        if not isinstance(ks, list):
            ks = [ks]
        for p in ps:
            if isinstance(p, bool) or not isinstance(p, (int, float)) or not 0.0 < p < 1.0:
                raise ConfigError(f"be-exact: p values must lie in (0, 1), got {p!r}")
        for k in ks:
            if isinstance(k, bool) or not isinstance(k, int) or not 1 <= k <= BE_MAX_K:
                raise ConfigError(f"be-exact: k values must be integers in [1, {BE_MAX_K}], got {k!r}")
        self.params["p"] = [float(p) for p in ps]
        self.params["k"] = list(ks)
        self._int("max_violations", 0)
        self._float("rate_factor", 1.0)
        self.grid = [(p, k) for p in self.params["p"] for k in self.params["k"]]

    def replicate_count(self) -> int:
        return len(self.grid)

    def replicate(self, index, rng):
        p, k = self.grid[index]
        return exact_be_supdist(k, p), asy.be_bound(k, geometric_moments(p))

    def aggregate(self, rows):
        sup, bound = rows[:, 0], rows[:, 1]
        violations = int(np.count_nonzero(sup > bound))
        results = [
            ScalarResult("violations", violations, None, Threshold("<=", self.params["max_violations"])),
            ScalarResult("max_supdist_over_bound", float(np.max(sup / bound))),
        ]
        factor = self.params["rate_factor"]
        by_point = {pk: s for pk, s in zip(self.grid, sup)}
        for p in self.params["p"]:
            if (p, 2**12) in by_point and (p, 2**14) in by_point:
                scaled12 = by_point[(p, 2**12)] * 2**6
                scaled14 = by_point[(p, 2**14)] * 2**7
                results.append(ScalarResult(
                    f"rate_ratio_p{p:g}", scaled14 / scaled12, None, Threshold("in", 1.0 / factor, factor),
                ))
        table = [
            {"p": p, "k": k, "supdist": float(s), "bound": float(b), "supdist_sqrt_k": float(s * math.sqrt(k))}
            for (p, k), s, b in zip(self.grid, sup, bound)
        ]
        return results, {"be": table}, []


class Multinomial(Experiment):
    kind = "multinomial"
    defaults = {"n": 10000, "cov_tol": 0.02}
    width = 3

    def setup(self) -> None:
        self.n = self._int("n")
        self.ep.require_standing_assumption()
        self._float("cov_tol", 0.0)
        self.sigma = multinomial_cov(self.ep.p)

    def replicate(self, index, rng):
        return tuple(asy.multinomial_standardize(self.counts(rng), self.ep.p))

    def aggregate(self, rows):
        r = len(rows)
        centered = rows - rows.mean(axis=0)
        cov = centered.T @ centered / (r - 1)
        tol = self.params["cov_tol"]
        results = []
        for i in range(3):
            for j in range(i, 3):
                prod = centered[:, i] * centered[:, j]
                results.append(ScalarResult(
                    f"cov_{i + 1}{j + 1}", float(cov[i, j]), float(prod.std(ddof=1) / math.sqrt(r)),
                    Threshold("abs", float(self.sigma[i, j]), tol),
                ))
        results.append(ScalarResult("max_abs_cov_error", float(np.max(np.abs(cov - self.sigma))), None,
                                    Threshold("<=", tol)))
        return results, {}, []


class Ratio(Experiment):
    kind = "ratio"
    defaults = {"n": 10000, "var_rel_tol": 0.10, "ks_max": 0.02}

    def setup(self) -> None:
        self.n = self._int("n")
        self.ep.require_standing_assumption()
        self._float("var_rel_tol", 0.0)
        self._float("ks_max", 0.0, 1.0)
        self.law = asy.comparison_law(self.ep.p1, self.ep.p2)
        self.var_delta = asy.ratio_variance_delta(self.ep.p1, self.ep.p2)

    def replicate(self, index, rng):
        return (asy.ratio_stat(self.counts(rng), self.ep),)

    def aggregate(self, rows):
        stat = rows[:, 0]
        var, se = variance_and_stderr(stat)
        gamma = math.sqrt(self.law.gamma2)
        results = [
            ScalarResult("ratio_variance", var, se, Threshold("rel", self.law.gamma2, self.params["var_rel_tol"])),
            ScalarResult("ratio_ks", ks_statistic(stat / gamma), None, Threshold("<=", self.params["ks_max"])),
            ScalarResult("gamma2", self.law.gamma2),
            ScalarResult("delta_method_variance", self.var_delta),
            ScalarResult("ratio_ks_delta_method", ks_statistic(stat / math.sqrt(self.var_delta))),
        ]
        return results, {}, []


class Difference(Experiment):
    kind = "difference"
    defaults = {"n": 10000, "var_rel_tol": 0.10, "ks_max": 0.02}

    def setup(self) -> None:
        self.n = self._int("n")
        self.ep.require_standing_assumption()
        self._float("var_rel_tol", 0.0)
        self._float("ks_max", 0.0, 1.0)
        self.law = asy.comparison_law(self.ep.p1, self.ep.p2)

    def replicate(self, index, rng):
        return (asy.diff_stat(self.counts(rng), self.ep),)

    def aggregate(self, rows):
        stat = rows[:, 0]
        var, se = variance_and_stderr(stat)
        results = [
            ScalarResult("diff_variance", var, se, Threshold("rel", self.law.delta2, self.params["var_rel_tol"])),
            ScalarResult("diff_ks", ks_statistic(stat / math.sqrt(self.law.delta2)), None,
                         Threshold("<=", self.params["ks_max"])),
            ScalarResult("delta2", self.law.delta2),
        ]
        return results, {}, []


class Dominance(Experiment):
    kind = "dominance"
    defaults = {"n": 10000, "beta": 0.2, "min_frequency": 0.999, "strict": True}
    width = 2

    def setup(self) -> None:
        self.n = self._int("n")
        self.ep.require_standing_assumption()
        gap = abs(self.ep.p1 - self.ep.p2)
        beta = self._float("beta", 0.0, open_lo=True)
        if not beta < gap:
            raise ConfigError(f"dominance: beta must lie in (0, |p1 - p2|) = (0, {gap:.6g}), got {beta}")
        self._float("min_frequency", 0.0, 1.0)
        if not isinstance(self.params["strict"], bool):
            raise ConfigError("dominance: strict must be true or false")

    def replicate(self, index, rng):
        counts = self.counts(rng)
        lead = counts.m1 - counts.m2 if self.ep.p1 > self.ep.p2 else counts.m2 - counts.m1
        holds = asy.dominance_holds(counts, self.params["beta"], self.ep, strict=self.params["strict"])
        return float(holds), float(lead) / self.n

    def aggregate(self, rows):
        freq = float(rows[:, 0].mean())
        lead, lead_se = mean_and_stderr(rows[:, 1])
        results = [
            ScalarResult("dominance_frequency", freq, proportion_stderr(freq, len(rows)),
                         Threshold(">=", self.params["min_frequency"])),
            ScalarResult("mean_lead_per_trial", lead, lead_se),
            ScalarResult("mass_gap", abs(self.ep.p1 - self.ep.p2)),
        ]
        return results, {}, []


class Coverage(Experiment):
    kind = "coverage"
    defaults = {
        "n": 100000,
        "u": 0.05,
        "formula": "both",
        "corrected_lo": 0.94,
        "corrected_hi": 0.96,
        "as_published_min": 0.999,
    }
    width = 3

    def setup(self) -> None:
        self.n = self._int("n")
        self.ep.require_standing_assumption()
        self._float("u", 0.0, 1.0, open_lo=True)
        if not self.params["u"] < 1.0:
            raise ConfigError("coverage: u must lie in (0, 1)")
        formula = str(self.params["formula"]).replace("-", "_")
        if formula not in ("corrected", "as_published", "both"):
            raise ConfigError("coverage: formula must be corrected, as_published or both")
        self.params["formula"] = formula
        lo = self._float("corrected_lo", 0.0, 1.0)
        self._float("corrected_hi", lo, 1.0)
        self._float("as_published_min", 0.0, 1.0)
        self.formulas = ["corrected", "as_published"] if formula == "both" else [formula]
        self.r = None
        if "as_published" in self.formulas:
            if self.spec.kind != "binomial":
                raise ConfigError("coverage: as_published formula needs a binomial distribution (r)")
            if abs(self.ep.p1 - self.ep.p2) > 1e-12:
                raise ConfigError("coverage: as_published formula needs p1 == p2 (alpha = 1/2)")
            self.r = self.spec.r
        self.truth = self.ep.p1 / self.ep.p2
        self.z = gaussian_quantile(1.0 - self.params["u"] / 2.0)
        self.delta_half = self.z * math.sqrt(asy.ratio_variance_delta(self.ep.p1, self.ep.p2) / self.n)

    def replicate(self, index, rng):
        counts = self.counts(rng)
        row = []
        for formula in ("corrected", "as_published"):
            if formula in self.formulas:
                row.append(float(self.truth in asy.ratio_ci(counts, self.ep, self.params["u"], formula, self.r)))
            else:
                row.append(math.nan)
        row.append(float(abs(counts.m1 / counts.m2 - self.truth) <= self.delta_half))
        return tuple(row)

    def _halfwidth(self, formula: str) -> float:
        # halfwidths depend on n only, so evaluate at the mean counts
        m = max(1, round(self.n * self.ep.p2))
        stub = HitCounts(self.n, m, m, self.n - 2 * m)
        return asy.ratio_ci(stub, self.ep, self.params["u"], formula, self.r).halfwidth

    def aggregate(self, rows):
        r = len(rows)
        results = []
        bounds = {
            "corrected": Threshold("in", self.params["corrected_lo"], self.params["corrected_hi"]),
            "as_published": Threshold(">=", self.params["as_published_min"]),
        }
        for col, formula in enumerate(("corrected", "as_published")):
            if formula in self.formulas:
                cov = float(rows[:, col].mean())
                results.append(ScalarResult(f"coverage_{formula}", cov, proportion_stderr(cov, r), bounds[formula]))
                results.append(ScalarResult(f"halfwidth_{formula}", self._halfwidth(formula)))
        notes = []
        if len(self.formulas) == 2:
            ratio = self._halfwidth("as_published") / self._halfwidth("corrected")
            target = 2.0 ** (2 * self.r - 1)
            results.append(ScalarResult("halfwidth_ratio", ratio, None, Threshold("abs", target, 1e-9)))
            notes.append(f"as_published halfwidth is {ratio:.9g} times the corrected one (2^(2r-1) = {target:g})")
        cov_delta = float(rows[:, 2].mean())
        results.append(ScalarResult("coverage_delta_method", cov_delta, proportion_stderr(cov_delta, r)))
        results.append(ScalarResult("halfwidth_delta_method", self.delta_half))
        return results, {}, notes


class Finiteness(Experiment):
    kind = "finiteness"
    defaults = {"horizon": 10000, "min_terminated": 0.999, "single_record_tol": 0.02}
    width = 2

    def setup(self) -> None:
        self.horizon = self._int("horizon")
        self._float("min_terminated", 0.0, 1.0)
        self._float("single_record_tol", 0.0)

    def replicate(self, index, rng):
        trace = run_record_trace(self.spec, self.horizon, rng)
        return float(trace.terminated), float(trace.count == 1)

    def aggregate(self, rows):
        r = len(rows)
        term = float(rows[:, 0].mean())
        single = float(rows[:, 1].mean())
        results = [
            ScalarResult("terminated_fraction", term, proportion_stderr(term, r),
                         Threshold(">=", self.params["min_terminated"])),
            ScalarResult("no_second_record_fraction", single, proportion_stderr(single, r),
                         Threshold("abs", self.ep.p2, self.params["single_record_tol"])),
            ScalarResult("uep_mass", self.ep.p2),
        ]
        return results, {}, []


EXPERIMENTS: dict[str, type[Experiment]] = {
    cls.kind: cls
    for cls in (HittingLaw, Clt, Lil, BeExact, Multinomial, Ratio, Difference, Dominance, Coverage, Finiteness)
}


def build_experiment(cfg: ExperimentConfig) -> Experiment:
    return EXPERIMENTS[cfg.kind](cfg)


__all__ = ["Experiment", "EXPERIMENTS", "build_experiment", "DEFAULT_BE_KS"]
