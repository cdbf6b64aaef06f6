"""Isotropic Gaussian sampling, rank-based selection, and winner statistics.

One iteration draws lam standard-normal mutations, evaluates the quadratic
objective, selects by rank (best, l-th best, or the average of the mu best),
and records the selected vector together with its value and its distance to
the optimum. A mergeable single-pass accumulator turns the winner stream
into a mean vector and covariance matrix.

Reproducibility contract: iterations are pre-partitioned into fixed-size
blocks; block b of a run draws from Philox seeded by (seed, spawn_key=b),
and each iteration consumes exactly lam * n deviates. Worker threads only
decide who executes a block, never what it produces, so results are
bit-identical for any worker count. The deviates themselves come from
numpy's Generator.standard_normal, pinned per numpy build.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Union

import numpy as np

from .landscape import Objective, eval_objective_many

__all__ = [
    "Best",
    "LthDegree",
    "MuAverage",
    "SelectionMode",
    "SampleConfig",
    "WinnerRecord",
    "CovarianceAccumulator",
    "merge",
    "sample_population",
    "select",
    "run_iteration",
    "run_sampling",
    "perturbed_identity",
    "perturbed_identities",
]

BLOCK_ITERS = 4096
_CHUNK_BUDGET = 1 << 23  # doubles per population buffer (~64 MiB)


@dataclass(frozen=True)
class Best:
    """Keep the single minimal individual."""


@dataclass(frozen=True)
class LthDegree:
    """Keep the individual with the ell-th smallest value."""

    ell: int


@dataclass(frozen=True)
class MuAverage:
    """Keep the arithmetic mean of the mu smallest individuals."""

    mu: int


SelectionMode = Union[Best, LthDegree, MuAverage]


def _mode_param(mode: SelectionMode) -> int:
    if isinstance(mode, Best):
        return 1
    if isinstance(mode, LthDegree):
        return mode.ell
    if isinstance(mode, MuAverage):
        return mode.mu
    raise TypeError(f"unknown selection mode: {mode!r}")


@dataclass(frozen=True)
class SampleConfig:
    """Everything one sampling run depends on (and nothing else)."""

    objective: Objective
    lam: int
    mode: SelectionMode
    iters: int
    seed: int
    workers: int = 1

    def __post_init__(self):
        if self.lam < 1:
            raise ValueError("population size must be >= 1")
        if self.iters < 1:
            raise ValueError("iteration count must be >= 1")
        if self.workers < 1:
            raise ValueError("worker count must be >= 1")
        k = _mode_param(self.mode)
        if not 1 <= k <= self.lam:
            raise ValueError(f"selection degree {k} out of range 1..{self.lam}")


@dataclass(frozen=True)
class WinnerRecord:
    """Selected vector, its objective value, and its distance to the optimum."""

    vector: np.ndarray
    value: float
    distance: float


def sample_population(rng: np.random.Generator, n: int, lam: int) -> np.ndarray:
    """Draw lam independent standard-normal mutations of dimension n."""
    if lam < 1:
        raise ValueError("population size must be >= 1")
    return rng.standard_normal((lam, n))


def select(values, mode: SelectionMode) -> np.ndarray:
    """Indices selected from one population's values, ties to the lowest index.

    Best yields the argmin, LthDegree(ell) the index of the ell-th order
    statistic, MuAverage(mu) the mu smallest (in ascending value order).
    """
    values = np.asarray(values, dtype=float)
    if values.ndim != 1:
        raise ValueError("values must be one-dimensional")
    k = _mode_param(mode)
    if not 1 <= k <= values.size:
        raise ValueError(f"selection degree {k} out of range 1..{values.size}")
    order = np.argsort(values, kind="stable")
    if isinstance(mode, Best):
        return order[:1]
    if isinstance(mode, LthDegree):
        return order[k - 1 : k]
    return order[:k]


def run_iteration(config: SampleConfig, rng: np.random.Generator) -> WinnerRecord:
    """One full iteration: sample, evaluate, select."""
    obj = config.objective
    population = sample_population(rng, obj.n, config.lam)
    values = eval_objective_many(obj, population)
    chosen = select(values, config.mode)
    if isinstance(config.mode, MuAverage):
        vector = population[chosen].mean(axis=0)
        value = float(values[chosen].mean())
    else:
        vector = population[chosen[0]].copy()
        value = float(values[chosen[0]])
    distance = float(np.linalg.norm(vector - obj.minimizer))
    return WinnerRecord(vector=vector, value=value, distance=distance)


class CovarianceAccumulator:
    """Streaming mean/comoment accumulator over winner vectors.

    Single-writer; uses the standard one-pass update (exact running mean,
    centered cross-products for the comoment). The comoment is kept exactly
    symmetric. Accumulators over disjoint streams merge by the pooled
    formula in any order.
    """

    __slots__ = ("count", "mean", "comoment", "distance_sum")

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError("dimension must be >= 1")
        self.count = 0
        self.mean = np.zeros(dim)
        self.comoment = np.zeros((dim, dim))
        self.distance_sum = 0.0

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def add(self, record: WinnerRecord) -> "CovarianceAccumulator":
        """Absorb one winner record (Welford update)."""
        vector = np.asarray(record.vector, dtype=float)
        if vector.shape != (self.dim,):
            raise ValueError(f"record dimension {vector.shape} != {self.dim}")
        self.count += 1
        delta = vector - self.mean
        self.mean += delta / self.count
        delta2 = vector - self.mean
        self.comoment += 0.5 * (np.outer(delta, delta2) + np.outer(delta2, delta))
        self.distance_sum += float(record.distance)
        return self

    @classmethod
    def from_vectors(cls, vectors: np.ndarray, distances: np.ndarray) -> "CovarianceAccumulator":
        """Build an accumulator from a batch already held in memory."""
        vectors = np.asarray(vectors, dtype=float)
        if vectors.ndim != 2:
            raise ValueError("vectors must have shape (count, dim)")
        acc = cls(vectors.shape[1])
        acc.count = vectors.shape[0]
        if acc.count:
            acc.mean = vectors.mean(axis=0)
            centered = vectors - acc.mean
            m = centered.T @ centered
            acc.comoment = 0.5 * (m + m.T)
            acc.distance_sum = float(np.asarray(distances, dtype=float).sum())
        return acc

    def copy(self) -> "CovarianceAccumulator":
        dup = CovarianceAccumulator(self.dim)
        dup.count = self.count
        dup.mean = self.mean.copy()
        dup.comoment = self.comoment.copy()
        dup.distance_sum = self.distance_sum
        return dup

    def finalize(self) -> tuple[np.ndarray, np.ndarray, float]:
        """Mean vector, covariance (1/N convention), and mean distance."""
        if self.count < 2:
            raise ValueError("covariance needs at least two records")
        covariance = self.comoment / self.count
        return self.mean.copy(), covariance, self.distance_sum / self.count


def merge(a: CovarianceAccumulator, b: CovarianceAccumulator) -> CovarianceAccumulator:
    """Pooled accumulator equal to accumulating the concatenated streams."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    if a.count == 0:
        return b.copy()
    if b.count == 0:
        return a.copy()
    out = CovarianceAccumulator(a.dim)
    out.count = a.count + b.count
    delta = b.mean - a.mean
    out.mean = a.mean + delta * (b.count / out.count)
    out.comoment = a.comoment + b.comoment + np.outer(delta, delta) * (a.count * b.count / out.count)
    out.distance_sum = a.distance_sum + b.distance_sum
    return out


def _block_generator(seed: int, block_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block_index,))))


def _select_block(z: np.ndarray, values: np.ndarray, mode: SelectionMode):
    """Vectorized selection over a (m, lam, n) population chunk."""
    m = values.shape[0]
    rows = np.arange(m)
    if isinstance(mode, Best):
        idx = values.argmin(axis=1)
        return z[rows, idx], values[rows, idx]
    if isinstance(mode, LthDegree):
        if mode.ell == 1:
            idx = values.argmin(axis=1)
        else:
            idx = np.argpartition(values, mode.ell - 1, axis=1)[:, mode.ell - 1]
        return z[rows, idx], values[rows, idx]
    part = np.argpartition(values, mode.mu - 1, axis=1)[:, : mode.mu]
    winners = z[rows[:, None], part].mean(axis=1)
    vals = np.take_along_axis(values, part, axis=1).mean(axis=1)
    return winners, vals


def _run_block(config: SampleConfig, start: int, stop: int, collect: bool):
    obj = config.objective
    n, lam = obj.n, config.lam
    hessian = obj.hessian.entries
    translation = obj.translation
    zstar = obj.minimizer
    rng = _block_generator(config.seed, start // BLOCK_ITERS)

    total = stop - start
    acc = CovarianceAccumulator(n)
    collected = np.empty(total) if collect else None
    chunk = max(1, min(total, _CHUNK_BUDGET // max(1, lam * n)))
    buffer = np.empty((chunk, lam, n))
    done = 0
    while done < total:
        m = min(chunk, total - done)
        z = buffer[:m]
        rng.standard_normal(out=z.reshape(-1))
        flat = z.reshape(m * lam, n)
        values = np.einsum("ij,jk,ik->i", flat, hessian, flat, optimize=True)
        if translation.any():
            values += flat @ translation
        values = values.reshape(m, lam)
        winners, winner_values = _select_block(z, values, config.mode)
        distances = np.sqrt(((winners - zstar) ** 2).sum(axis=1))
        acc = merge(acc, CovarianceAccumulator.from_vectors(winners, distances))
        if collect:
            collected[done : done + m] = winner_values
        done += m
    return acc, collected


def run_sampling(config: SampleConfig, collect_values: bool = False):
    """Run the full sampling loop and return the merged accumulator.

    Returns (accumulator, values) where values is the per-iteration winning
    value array when collect_values is set, else None. Blocks are merged in
    index order, so the result does not depend on the worker count.
    """
    n_blocks = -(-config.iters // BLOCK_ITERS)
    spans = [(b * BLOCK_ITERS, min(config.iters, (b + 1) * BLOCK_ITERS)) for b in range(n_blocks)]

    if config.workers == 1 or n_blocks == 1:
        results = [_run_block(config, a, b, collect_values) for a, b in spans]
    else:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            futures = [pool.submit(_run_block, config, a, b, collect_values) for a, b in spans]
            results = [f.result() for f in futures]

    acc = CovarianceAccumulator(config.objective.n)
    for block_acc, _ in results:
        acc = merge(acc, block_acc)
    values = np.concatenate([v for _, v in results]) if collect_values else None
    return acc, values


def perturbed_identity(rng: np.random.Generator, n: int, epsilon: float) -> np.ndarray:
    """I + E with E symmetric, upper triangle i.i.d. N(0, epsilon^2).

    Draws a full n x n block (fixed deviate count) and mirrors the upper
    triangle; epsilon = 0 returns the identity exactly.
    """
    if epsilon < 0.0:
        raise ValueError("perturbation scale must be nonnegative")
    g = rng.standard_normal((n, n))
    e = np.triu(g) + np.triu(g, 1).T
    return np.eye(n) + epsilon * e


def perturbed_identities(rng: np.random.Generator, n: int, epsilon: float, count: int) -> np.ndarray:
    """Stack of `count` independent perturbed identities, shape (count, n, n)."""
    if epsilon < 0.0:
        raise ValueError("perturbation scale must be nonnegative")
    if count < 1:
        raise ValueError("count must be >= 1")
    g = rng.standard_normal((count, n, n))
    e = np.triu(g) + np.triu(g, 1).transpose(0, 2, 1)
    return np.eye(n) + epsilon * e
