"""Chunked Monte Carlo driver with schedule-independent results.

Iterations are grouped into fixed blocks of CHUNK_ITERATIONS. Workers
process whole blocks; the parent folds block results together in block
order. Because the block boundaries and the fold order never depend on
the worker count, every reduction (including floating-point sums)
follows the same arithmetic tree and the output is bit-identical
whether the run used one process or twenty.

Worker processes are forked, so the samplers' precomputed tables are
shared copy-on-write instead of being pickled.
"""

from __future__ import annotations

import multiprocessing
import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Mapping, Sequence

import numpy as np

from .sampling import DatasetSampler

__all__ = ["CHUNK_ITERATIONS", "Reducer", "run_simulation", "default_workers"]

# Fixed block size. Changing it changes float summation trees and
# therefore byte-level output; it is a constant, not a tuning knob.
CHUNK_ITERATIONS = 32


class Reducer:
    """Per-iteration reduction of simulated counts.

    Subclasses set out_shape/dtype/mode and implement reduce(), which
    receives the iteration index and a dict of simulated count arrays
    keyed by metric tag ("turnout", "result"). mode "stack" keeps one
    row per iteration; mode "sum" accumulates elementwise totals.
    reduce() must be pure and must not mutate shared state: the same
    instance runs concurrently in forked workers.
    """

    out_shape: tuple[int, ...] = ()
    dtype: np.dtype = np.dtype(np.int64)
    mode: str = "stack"

    def reduce(
        self, iteration_index: int, counts: Mapping[str, np.ndarray]
    ) -> np.ndarray:
        raise NotImplementedError


# Worker payload, installed in the parent immediately before the pool
# forks so children inherit it without pickling.
_ACTIVE: dict | None = None


def _run_chunk(bounds: tuple[int, int]):
    start, end = bounds
    samplers: dict[str, DatasetSampler] = _ACTIVE["samplers"]
    reducers: Sequence[Reducer] = _ACTIVE["reducers"]
    master_seed: int = _ACTIVE["master_seed"]
    tags = sorted(samplers)

    stacks: list[list[np.ndarray] | None] = []
    sums: list[np.ndarray | None] = []
    for r in reducers:
        if r.mode == "sum":
            stacks.append(None)
            sums.append(np.zeros(r.out_shape, dtype=r.dtype))
        else:
            stacks.append([])
            sums.append(None)

    for it in range(start, end):
        counts = {tag: samplers[tag].draw(master_seed, it) for tag in tags}
        for j, r in enumerate(reducers):
            val = r.reduce(it, counts)
            if r.mode == "sum":
                sums[j] += val
            else:
                stacks[j].append(np.asarray(val, dtype=r.dtype))

    out = []
    for j, r in enumerate(reducers):
        if r.mode == "sum":
            out.append(sums[j])
        else:
            out.append(np.stack(stacks[j]))
    return start, out


def default_workers() -> int:
    return os.cpu_count() or 1


def run_simulation(
    samplers: Mapping[str, DatasetSampler],
    reducers: Sequence[Reducer],
    iterations: int,
    master_seed: int,
    workers: int | None = None,
    progress: Callable[[int, int], None] | None = None,
) -> list[np.ndarray]:
    """Run the null simulation and return one array per reducer.

    Stack-mode reducers yield shape (iterations, *out_shape) with row i
    holding iteration i; sum-mode reducers yield shape out_shape. The
    result depends only on (samplers, reducers, iterations,
    master_seed), never on workers.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if not samplers:
        raise ValueError("at least one sampler is required")
    sizes = {s.n_stations for s in samplers.values()}
    if len(sizes) != 1:
        raise ValueError("all samplers must cover the same station set")

    global _ACTIVE
    chunks = [
        (s, min(s + CHUNK_ITERATIONS, iterations))
        for s in range(0, iterations, CHUNK_ITERATIONS)
    ]
    _ACTIVE = {
        "samplers": dict(samplers),
        "reducers": list(reducers),
        "master_seed": int(master_seed),
    }
    try:
        if workers is None:
            workers = default_workers()
        workers = max(1, min(int(workers), len(chunks)))
        if workers == 1:
            parts = []
            done = 0
            for ch in chunks:
                parts.append(_run_chunk(ch))
                done += ch[1] - ch[0]
                if progress is not None:
                    progress(done, iterations)
        else:
            ctx = multiprocessing.get_context("fork")
            with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
                parts = []
                for part in pool.map(_run_chunk, chunks):
                    parts.append(part)
                    if progress is not None:
                        # map yields in submission order, so this is monotone
                        progress(min(part[0] + CHUNK_ITERATIONS, iterations), iterations)
    finally:
        _ACTIVE = None

    parts.sort(key=lambda t: t[0])
    results: list[np.ndarray] = []
    for j, r in enumerate(reducers):
        blocks = [p[1][j] for p in parts]
        if r.mode == "sum":
            total = np.zeros(r.out_shape, dtype=r.dtype)
            for b in blocks:  # fold in chunk order: fixed summation tree
                total += b
            results.append(total)
        else:
            results.append(np.concatenate(blocks, axis=0))
    return results
