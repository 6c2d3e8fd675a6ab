"""Experiment configuration, thresholds and reports (JSON / CSV)."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from ..distributions import DistributionSpec, DomainError

KINDS = (
    "hitting-law",
    "clt",
    "lil",
    "be-exact",
    "multinomial",
    "ratio",
    "difference",
    "dominance",
    "coverage",
    "finiteness",
)

CSV_HEADER = ("name", "value", "mc_stderr", "threshold", "pass")


class ConfigError(ValueError):
    """Invalid experiment configuration; raised before any simulation work."""


def parse_dist(text: str) -> DistributionSpec:
    """``binomial:r=<int>,alpha=<float>`` or ``table:<path>`` (CSV rows support,prob)."""
    head, sep, rest = text.partition(":")
    if not sep:
        raise ConfigError(f"malformed dist {text!r}: expected 'binomial:...' or 'table:<path>'")
    if head == "binomial":
        fields = {}
        for item in rest.split(","):
            key, eq, value = item.partition("=")
            if not eq:
                raise ConfigError(f"malformed dist {text!r}: expected key=value, got {item!r}")
            fields[key.strip()] = value.strip()
        if set(fields) != {"r", "alpha"}:
            raise ConfigError(f"malformed dist {text!r}: binomial needs exactly r and alpha")
        try:
            r = int(fields["r"])
        except ValueError:
            raise ConfigError(f"dist parameter r must be an integer, got {fields['r']!r}") from None
        if r < 1:
            raise ConfigError(f"dist parameter r must be >= 1, got {r}")
        try:
            alpha = float(fields["alpha"])
        except ValueError:
            raise ConfigError(f"dist parameter alpha must be a number, got {fields['alpha']!r}") from None
        try:
            return DistributionSpec.binomial(r, alpha)
        except DomainError as exc:
            raise ConfigError(f"dist parameter alpha: {exc}") from None
    if head == "table":
        return read_table(rest)
    raise ConfigError(f"malformed dist {text!r}: unknown family {head!r}")


def read_table(path: str | Path) -> DistributionSpec:
    support, probs = [], []
    try:
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or not "".join(row).strip():
                    continue
                try:
                    x, q = float(row[0]), float(row[1])
                except (ValueError, IndexError):
                    if not support and not probs:
                        continue  # header line
                    raise ConfigError(f"{path}: bad row {row!r}") from None
                support.append(x)
                probs.append(q)
    except OSError as exc:
        raise ConfigError(f"cannot read distribution table {path}: {exc.strerror}") from None
    try:
        return DistributionSpec(tuple(support), tuple(probs))
    except DomainError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def dist_from_json(value: Any) -> DistributionSpec:
    if isinstance(value, str):
        return parse_dist(value)
    if isinstance(value, dict):
        try:
            return DistributionSpec.from_dict(value)
        except (DomainError, TypeError) as exc:
            raise ConfigError(f"dist: {exc}") from None
    raise ConfigError(f"dist must be an object or a dist string, got {type(value).__name__}")


@dataclass
class ExperimentConfig:
    kind: str
    dist: DistributionSpec
    params: dict[str, Any] = field(default_factory=dict)
    replicates: int = 1
    master_seed: int = 0
    workers: int = 1

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}; expected one of {', '.join(KINDS)}")
        for name in ("replicates", "workers"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        seed = self.master_seed
        if isinstance(seed, bool) or not isinstance(seed, int) or not (0 <= seed < 2**64):
            raise ConfigError(f"master_seed must be an unsigned 64-bit integer, got {seed!r}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "dist": self.dist.to_dict(),
            "params": dict(sorted(self.params.items())),
            "replicates": self.replicates,
            "master_seed": self.master_seed,
            "workers": self.workers,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ExperimentConfig:
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(data) - {"kind", "dist", "params", "replicates", "master_seed", "workers"}
        if unknown:
            raise ConfigError(f"unknown config fields: {', '.join(sorted(unknown))}")
        for required in ("kind", "dist"):
            if required not in data:
                raise ConfigError(f"config is missing {required!r}")
        params = data.get("params", {})
        if not isinstance(params, dict):
            raise ConfigError("params must be an object")
        return cls(
            kind=data["kind"],
            dist=dist_from_json(data["dist"]),
            params=dict(params),
            replicates=data.get("replicates", 1),
            master_seed=data.get("master_seed", 0),
            workers=data.get("workers", 1),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def load(cls, path: str | Path) -> ExperimentConfig:
        try:
            data = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from None
        return cls.from_dict(data)


@dataclass(frozen=True)
class Threshold:
    """A pass criterion declared before the run.

    ``op`` is one of ``<=``, ``>=``, ``in`` (closed interval ``[lo, hi]``),
    ``rel`` (|value / target - 1| <= tol) or ``abs`` (|value - target| <= tol).
    """

    op: str
    a: float
    b: float | None = None

    def check(self, value: float) -> bool:
        if not math.isfinite(value):
            return False
        if self.op == "<=":
            return value <= self.a
        if self.op == ">=":
            return value >= self.a
        if self.op == "in":
            return self.a <= value <= self.b
        if self.op == "rel":
            return abs(value / self.a - 1.0) <= self.b
        if self.op == "abs":
            return abs(value - self.a) <= self.b
        raise ValueError(f"unknown threshold op {self.op!r}")

    def __str__(self) -> str:
        if self.op in ("<=", ">="):
            return f"{self.op}{_fmt(self.a)}"
        if self.op == "in":
            return f"[{_fmt(self.a)};{_fmt(self.b)}]"
        if self.op == "rel":
            return f"{_fmt(self.a)}+-{_fmt(100 * self.b)}%"
        return f"{_fmt(self.a)}+-{_fmt(self.b)}"


def _fmt(x: float | int | None) -> str:
    if x is None:
        return ""
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return f"{x:.9g}"


@dataclass(frozen=True)
class ScalarResult:
    name: str
    value: float
    mc_stderr: float | None = None
    threshold: Threshold | None = None

    @property
    def passed(self) -> bool | None:
        return None if self.threshold is None else self.threshold.check(self.value)

    def csv_row(self) -> list[str]:
        verdict = "" if self.passed is None else ("pass" if self.passed else "fail")
        return [self.name, _fmt(self.value), _fmt(self.mc_stderr), str(self.threshold or ""), verdict]

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "value": self.value,
            "mc_stderr": self.mc_stderr,
            "threshold": str(self.threshold) if self.threshold else None,
            "pass": self.passed,
        }


@dataclass
class Report:
    config: dict[str, Any]
    results: list[ScalarResult]
    tables: dict[str, list[dict[str, Any]]] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)
    duration_s: float = 0.0

    @property
    def passed(self) -> bool:
        return all(r.passed is not False for r in self.results)

    def __getitem__(self, name: str) -> ScalarResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in self.results:
            writer.writerow(r.csv_row())
        return buf.getvalue()

    def to_dict(self, with_duration: bool = True) -> dict[str, Any]:
        out = {
            "config": self.config,
            "results": [r.to_dict() for r in self.results],
            "pass": self.passed,
            "notes": list(self.notes),
            "tables": self.tables,
        }
        if with_duration:
            out["duration_s"] = self.duration_s
        return out

    def to_json(self, with_duration: bool = True) -> str:
        return json.dumps(_json_safe(self.to_dict(with_duration)), indent=2)

    def table_csv(self, name: str) -> str:
        rows = self.tables[name]
        buf = io.StringIO()
        if rows:
            writer = csv.writer(buf, lineterminator="\n")
            cols = list(rows[0])
            writer.writerow(cols)
            for row in rows:
                writer.writerow([_fmt(row[c]) if isinstance(row[c], float) else row[c] for c in cols])
        return buf.getvalue()


def _json_safe(obj: Any) -> Any:
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj
