"""Run many independent histories, optionally across worker processes."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

from .engine import HistoryResult, ModelParams, SimulationPolicy, run_history
from .rng import history_seed
from .topology import Topology


def _run_chunk(args) -> list[HistoryResult]:
    topology, model, policy, master_seed, indices, keep_intervals = args
    out = []
    for h in indices:
        res = run_history(topology, model, policy, history_seed(master_seed, h), h)
        if not keep_intervals:
            res = replace(res, reference_intervals=[], visible_intervals=[])
        out.append(res)
    return out


def _chunks(n: int, size: int) -> list[range]:
    return [range(i, min(n, i + size)) for i in range(0, n, size)]


def resolve_jobs(jobs: int | None) -> int:
    if jobs is None or jobs <= 0:
        return os.cpu_count() or 1
    return jobs


def run_campaign(
    topology: Topology,
    model: ModelParams,
    policy: SimulationPolicy,
    histories: int,
    master_seed: int,
    jobs: int | None = 1,
    keep_intervals: bool = False,
) -> list[HistoryResult]:
    """Simulate ``histories`` histories; the result list is ordered by history index.

    History ``h`` always gets the seed derived from (master_seed, h), so the
    output does not depend on ``jobs`` or on chunking.
    """
    if histories < 1:
        raise ValueError(f"histories must be >= 1, got {histories}")
    jobs = min(resolve_jobs(jobs), histories)
    if jobs == 1:
        return _run_chunk((topology, model, policy, master_seed, range(histories), keep_intervals))
    size = max(1, histories // (jobs * 8))
    tasks = [(topology, model, policy, master_seed, c, keep_intervals) for c in _chunks(histories, size)]
    results: list[HistoryResult] = []
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        for part in pool.map(_run_chunk, tasks):
            results.extend(part)
    results.sort(key=lambda r: r.history)
    return results
