"""Command-line front end.

Exit codes: 0 all declared thresholds pass, 1 some threshold failed,
2 usage error, 3 configuration error, 4 runtime error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .distributions import DomainError
from .montecarlo.config import KINDS, ConfigError, ExperimentConfig, Report, parse_dist
from .montecarlo.experiments import build_experiment
from .montecarlo.runner import run_experiment

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3, 4
SEED_ENV = "RECATOM_SEED"

# flag dest -> (option string, params key); the params key matches the experiment defaults
KIND_FLAGS: dict[str, dict[str, str]] = {
    "hitting-law": {"k": "k", "endpoint": "endpoint"},
    "clt": {"k": "k", "endpoint": "endpoint"},
    "lil": {"k_max": "k_max", "k_min": "k_min", "endpoint": "endpoint"},
    "be-exact": {"k": "k", "p": "p", "endpoint": "endpoint"},
    "multinomial": {"n": "n"},
    "ratio": {"n": "n"},
    "difference": {"n": "n"},
    "dominance": {"n": "n", "beta": "beta"},
    "coverage": {"n": "n", "u": "u", "formula": "formula"},
    "finiteness": {"horizon": "horizon"},
}
COMMON = ("dist", "reps", "seed", "workers")


class UsageError(Exception):
    def __init__(self, message: str, code: int = EXIT_USAGE, usage: str = ""):
        super().__init__(message)
        self.code = code
        self.usage = usage


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would sys.exit(2) here
        raise UsageError(f"{self.prog}: error: {message}", EXIT_USAGE, self.format_usage())


@dataclass
class CliInvocation:
    subcommand: str
    flags: dict[str, Any] = field(default_factory=dict)
    config_path: str | None = None
    output: str = "csv"
    out_path: str | None = None
    table_out: str | None = None


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="recatom", description="Record and hitting-time experiments for atom endpoints.")
    subs = parser.add_subparsers(dest="subcommand", metavar="SUBCOMMAND", parser_class=_Parser)
    subs.required = True
    for kind in KINDS:
        sub = subs.add_parser(kind, help=f"run the {kind} experiment")
        sub.add_argument("--dist", help="binomial:r=<int>,alpha=<float> or table:<path>")
        sub.add_argument("--reps", type=int, help="number of replicates")
        sub.add_argument("--seed", type=_seed, help=f"master seed ({SEED_ENV} overrides)")
        sub.add_argument("--workers", type=int, help="worker processes")
        sub.add_argument("--config", dest="config_path", help="JSON experiment config")
        sub.add_argument("--output", choices=("csv", "json", "both"), default="csv")
        sub.add_argument("--out", dest="out_path", help="output file (default: stdout)")
        sub.add_argument("--table-out", dest="table_out", help="write plot-ready per-point tables as CSV")
        flags = KIND_FLAGS[kind]
        if "k" in flags:
            sub.add_argument("--k", type=_int_list if kind == "be-exact" else int)
        if kind == "be-exact":
            sub.add_argument("--p", type=_float_list, help="comma-separated success probabilities")
        if "k_max" in flags:
            sub.add_argument("--k-max", dest="k_max", type=int)
            sub.add_argument("--k-min", dest="k_min", type=int)
        if "n" in flags:
            sub.add_argument("--n", type=int)
        if "horizon" in flags:
            sub.add_argument("--horizon", type=int)
        if "beta" in flags:
            sub.add_argument("--beta", type=float)
        if "u" in flags:
            sub.add_argument("--u", type=float)
        if "endpoint" in flags:
            sub.add_argument("--endpoint", choices=("lower", "upper", "neither"))
        if "formula" in flags:
            sub.add_argument("--formula", choices=("corrected", "as-published", "both"))
    val = subs.add_parser("validate-config", help="check a JSON config without running it")
    val.add_argument("--config", dest="config_path", required=True)
    subs.add_parser("version", help="print the version")
    return parser


def parse_invocation(argv: Sequence[str]) -> CliInvocation:
    """Parse and validate ``argv``; raises :class:`UsageError` carrying the exit code."""
    parser = build_parser()
    ns = vars(parser.parse_args(list(argv)))
    sub = ns.pop("subcommand")
    inv = CliInvocation(subcommand=sub, config_path=ns.pop("config_path", None))
    if sub in ("validate-config", "version"):
        return inv
    inv.output = ns.pop("output")
    inv.out_path = ns.pop("out_path")
    inv.table_out = ns.pop("table_out")
    inv.flags = {k: v for k, v in ns.items() if v is not None}
    for name in ("reps", "workers"):
        if name in inv.flags and inv.flags[name] < 1:
            raise UsageError(f"--{name} must be a positive integer, got {inv.flags[name]}")
    if "dist" in inv.flags:
        try:
            parse_dist(inv.flags["dist"])
        except ConfigError as exc:
            raise UsageError(f"--dist: {exc}", EXIT_CONFIG) from None
    return inv


def render_invocation(inv: CliInvocation) -> list[str]:
    """argv that parses back to ``inv``."""
    argv = [inv.subcommand]
    if inv.config_path is not None:
        argv += ["--config", inv.config_path]
    if inv.subcommand in ("validate-config", "version"):
        return argv
    for key, value in inv.flags.items():
        if isinstance(value, list):
            value = ",".join(repr(v) if isinstance(v, float) else str(v) for v in value)
        elif isinstance(value, float):
            value = repr(value)
        argv += ["--" + key.replace("_", "-"), str(value)]
    argv += ["--output", inv.output]
    if inv.out_path is not None:
        argv += ["--out", inv.out_path]
    if inv.table_out is not None:
        argv += ["--table-out", inv.table_out]
    return argv


def build_config(inv: CliInvocation, environ: dict[str, str] | None = None) -> ExperimentConfig:
    """Merge config file, flags and environment (env > flag > config)."""
    environ = os.environ if environ is None else environ
    base: dict[str, Any] = {}
    if inv.config_path is not None:
        base = ExperimentConfig.load(inv.config_path).to_dict()
        if base["kind"] != inv.subcommand:
            raise ConfigError(f"config kind {base['kind']!r} does not match subcommand {inv.subcommand!r}")
    flags = inv.flags
    data: dict[str, Any] = {
        "kind": inv.subcommand,
        "params": dict(base.get("params", {})),
        "replicates": base.get("replicates", 1),
        "master_seed": base.get("master_seed", 0),
        "workers": base.get("workers", 1),
    }
    if "dist" in flags:
        dist = parse_dist(flags["dist"])
        if "dist" in base and base["dist"] != dist.to_dict():
            raise ConfigError("conflicting distributions: --dist differs from the config file's dist")
        data["dist"] = dist.to_dict()
    elif "dist" in base:
        data["dist"] = base["dist"]
    else:
        raise ConfigError("no distribution given: pass --dist or a config with a dist")
    if "reps" in flags:
        data["replicates"] = flags["reps"]
    if "workers" in flags:
        data["workers"] = flags["workers"]
    if "seed" in flags:
        data["master_seed"] = flags["seed"]
    if environ.get(SEED_ENV):
        try:
            data["master_seed"] = _seed(environ[SEED_ENV])
        except (ValueError, argparse.ArgumentTypeError):
            raise ConfigError(f"{SEED_ENV} must be an unsigned 64-bit integer, got {environ[SEED_ENV]!r}") from None
    for dest, key in KIND_FLAGS[inv.subcommand].items():
        if dest in flags:
            value = flags[dest]
            data["params"][key] = value.replace("-", "_") if dest == "formula" else value
    cfg = ExperimentConfig.from_dict(data)
    build_experiment(cfg)  # parameter validation, before any work
    return cfg


def emit_report(report: Report, inv: CliInvocation, stdout=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    try:
        if inv.out_path in (None, "-"):
            if inv.output in ("csv", "both"):
                stdout.write(report.to_csv())
            if inv.output in ("json", "both"):
                stdout.write(report.to_json() + "\n")
        else:
            out = Path(inv.out_path)
            if inv.output == "both":
                out.with_suffix(".csv").write_text(report.to_csv())
                out.with_suffix(".json").write_text(report.to_json() + "\n")
            elif inv.output == "csv":
                out.write_text(report.to_csv())
            else:
                out.write_text(report.to_json() + "\n")
        if inv.table_out is not None:
            base = Path(inv.table_out)
            for name in report.tables:
                base.with_name(f"{base.stem}_{name}.csv").write_text(report.table_csv(name))
    except OSError as exc:
        print(f"recatom: cannot write output: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK if report.passed else EXIT_FAIL


def main(argv: Sequence[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        inv = parse_invocation(argv)
    except UsageError as exc:
        if exc.usage:
            sys.stderr.write(exc.usage)
        print(str(exc), file=sys.stderr)
        return exc.code
    if inv.subcommand == "version":
        print(f"recatom {__version__}")
        return EXIT_OK
    try:
        if inv.subcommand == "validate-config":
            cfg = ExperimentConfig.load(inv.config_path)
            exp = build_experiment(cfg)
            print(json.dumps({**cfg.to_dict(), "params": dict(sorted(exp.params.items()))}, indent=2))
            return EXIT_OK
        cfg = build_config(inv)
    except (ConfigError, DomainError) as exc:
        print(f"recatom: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        report = run_experiment(cfg)
    except Exception as exc:  # noqa: BLE001 - every runtime failure maps to exit 4
        print(f"recatom: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return emit_report(report, inv)


if __name__ == "__main__":
    sys.exit(main())
