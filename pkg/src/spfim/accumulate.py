"""One-pass mean/variance accumulators and a worker-count-invariant reduction."""

from __future__ import annotations

import atexit
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError


@dataclass
class VarianceAccumulator:
    """Count, running mean and sum of squared deviations per entry."""

    count: int
    mean: np.ndarray
    m2: np.ndarray

    @classmethod
    def empty(cls, size: int) -> "VarianceAccumulator":
        return cls(0, np.zeros(size), np.zeros(size))

    @classmethod
    def from_values(cls, values) -> "VarianceAccumulator":
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.shape[0] == 0:
            return cls.empty(values.shape[1])
        mean = values.mean(axis=0)
        dev = values - mean
        return cls(values.shape[0], mean, np.einsum("ij,ij->j", dev, dev))

    def add(self, x) -> None:
        """Welford update with a single observation."""
        x = np.asarray(x, dtype=float)
        self.count += 1
        delta = x - self.mean
        self.mean = self.mean + delta / self.count
        self.m2 = self.m2 + delta * (x - self.mean)

    @property
    def variance(self) -> np.ndarray:
        """Unbiased sample variance; zero when fewer than two observations."""
        if self.count < 2:
            return np.zeros_like(self.m2)
        return self.m2 / (self.count - 1)


def merge_accumulators(a: VarianceAccumulator, b: VarianceAccumulator) -> VarianceAccumulator:
    """Pooled accumulator of the union of both samples (Chan et al. update)."""
    if a.mean.shape != b.mean.shape:
        raise DimensionError(f"accumulator shapes differ: {a.mean.shape} vs {b.mean.shape}")
    if b.count == 0:
        return VarianceAccumulator(a.count, a.mean.copy(), a.m2.copy())
    if a.count == 0:
        return VarianceAccumulator(b.count, b.mean.copy(), b.m2.copy())
    n = a.count + b.count
    delta = b.mean - a.mean
    mean = a.mean + delta * (b.count / n)
    m2 = a.m2 + b.m2 + delta * delta * (a.count * b.count / n)
    return VarianceAccumulator(n, mean, m2)


def tree_reduce(accs: list[VarianceAccumulator]) -> VarianceAccumulator:
    """Pairwise merge in a fixed tree order: (0,1), (2,3), ... then repeat."""
    if not accs:
        raise ValueError("nothing to reduce")
    level = list(accs)
    while len(level) > 1:
        nxt = [merge_accumulators(level[i], level[i + 1]) for i in range(0, len(level) - 1, 2)]
        if len(level) % 2:
            nxt.append(level[-1])
        level = nxt
    return level[0]


_POOLS: dict[int, ProcessPoolExecutor] = {}


def _shutdown_pools():
    for pool in _POOLS.values():
        pool.shutdown(cancel_futures=True)
    _POOLS.clear()


atexit.register(_shutdown_pools)


def map_tasks(fn, tasks, workers: int = 1) -> list:
    """``[fn(t) for t in tasks]``, optionally across worker processes.

    Results come back in task order, so any reduction over them is
    independent of the worker count.
    """
    tasks = list(tasks)
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    pool = _POOLS.get(workers)
    if pool is None:
        pool = _POOLS[workers] = ProcessPoolExecutor(max_workers=workers)
    return list(pool.map(fn, tasks))
