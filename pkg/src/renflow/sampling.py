"""Deterministic chunked Monte Carlo with per-chunk random streams."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

CHUNK = 2000


def thread_count() -> int:
    try:
        n = int(os.environ.get("RENFLOW_THREADS", "1"))
    except ValueError:
        n = 1
    return max(1, n)


def stream(seed: int, index: int) -> np.random.Generator:
    """Random generator for chunk ``index``; independent of worker scheduling."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def chunk_sizes(n: int, chunk: int = CHUNK) -> list:
    sizes = [chunk] * (n // chunk)
    if n % chunk:
        sizes.append(n % chunk)
    return sizes


def run_chunks(worker, n: int, seed: int, chunk: int = CHUNK) -> list:
    """Call ``worker(rng, size)`` for each chunk and return results in chunk order."""
    sizes = chunk_sizes(n, chunk)
    jobs = [(stream(seed, i), size) for i, size in enumerate(sizes)]
    threads = thread_count()
    if threads == 1 or len(jobs) == 1:
        return [worker(rng, size) for rng, size in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda job: worker(*job), jobs))


def santalo_draw(rng: np.random.Generator, size: int):
    """Boundary parameter in [0, 1), entry angle with density sin(w)/2, chord fraction."""
    u = rng.random((size, 3))
    omega = np.arccos(1.0 - 2.0 * u[:, 1])
    return u[:, 0], omega, u[:, 2]


def ratio_mean(weights, values):
    """Weighted mean and its ratio-estimator standard error."""
    w = np.asarray(weights, dtype=float)
    v = np.asarray(values, dtype=float)
    total = w.sum()
    if total <= 0.0:
        return 0.0, 0.0
    mean = float(w @ v / total)
    se = float(np.sqrt(np.sum((w * (v - mean)) ** 2)) / total)
    return mean, se
