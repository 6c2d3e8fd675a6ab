"""Replicate dispatch over worker processes."""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .config import ExperimentConfig, Report
from .experiments import Experiment, build_experiment
from .seeding import replicate_rng

# contiguous chunks per worker; more chunks smooth out uneven replicate costs
_CHUNKS_PER_WORKER = 4


def _run_rows(exp: Experiment, start: int, stop: int) -> np.ndarray:
    rows = np.empty((stop - start, exp.width))
    seed = exp.cfg.master_seed
    for i in range(start, stop):
        rng = replicate_rng(seed, i) if exp.uses_rng else None
        rows[i - start] = exp.replicate(i, rng)
    return rows


def _run_chunk(cfg_dict: dict, start: int, stop: int) -> np.ndarray:
    exp = build_experiment(ExperimentConfig.from_dict(cfg_dict))
    return _run_rows(exp, start, stop)


def _chunks(total: int, pieces: int) -> list[tuple[int, int]]:
    bounds = np.linspace(0, total, min(pieces, total) + 1).round().astype(int)
    return [(int(a), int(b)) for a, b in zip(bounds, bounds[1:]) if b > a]


def run_experiment(cfg: ExperimentConfig) -> Report:
    """Run every replicate of ``cfg`` and aggregate the results.

    Parameters are validated before any replicate runs.  The report,
    apart from ``duration_s``, does not depend on ``cfg.workers``.
    """
    started = time.perf_counter()
    exp = build_experiment(cfg)
    total = exp.replicate_count()
    if cfg.workers == 1 or total == 1:
        rows = _run_rows(exp, 0, total)
    else:
        cfg_dict = cfg.to_dict()
        cfg_dict["params"] = dict(exp.params)
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            futures = [
                pool.submit(_run_chunk, cfg_dict, a, b)
                for a, b in _chunks(total, cfg.workers * _CHUNKS_PER_WORKER)
            ]
            rows = np.concatenate([f.result() for f in futures])
    results, tables, notes = exp.aggregate(rows)
    echo = cfg.to_dict()
    echo.pop("workers")
    echo["params"] = dict(sorted(exp.params.items()))
    return Report(
        config=echo,
        results=results,
        tables=tables,
        notes=notes,
        duration_s=time.perf_counter() - started,
    )
