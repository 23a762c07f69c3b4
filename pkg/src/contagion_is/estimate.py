"""Batched estimation, relative errors and second-moment decay diagnostics."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .control import ControlPolicy, rate_U0
from .errors import ConfigurationError
from .model import ModelSpec
from .simulate import simulate_many


@dataclass(frozen=True)
class BatchStats:
    """Estimator statistics over ``B`` equal batches.

    ``rel_error`` is the sample standard deviation (ddof=1) of the batch means
    divided by their grand mean, with no 1/sqrt(B) factor.  It is ``nan``
    when no sample hit the target.
    """

    batch_means: np.ndarray = field(repr=False)
    estimate: float
    rel_error: float
    second_moment: float
    emp_rate: float
    bound_rate: Optional[float]
    hits: int
    samples: int
    wall_time: float

    @property
    def no_hits(self) -> bool:
        return self.hits == 0

    @property
    def standard_error(self) -> float:
        """Standard error of the grand mean."""
        return float(np.std(self.batch_means, ddof=1) / math.sqrt(len(self.batch_means)))


def summarize(weights: np.ndarray, n: int, bound_rate: Optional[float] = None, wall_time: float = 0.0):
    """Build BatchStats from a (B, N) array of estimator weights."""
    weights = np.asarray(weights, dtype=float)
    if weights.ndim != 2 or weights.shape[0] < 2 or weights.shape[1] < 1:
        raise ConfigurationError(f"need at least 2 batches of >= 1 sample, got shape {weights.shape}")
    batch_means = weights.mean(axis=1)
    estimate = float(batch_means.mean())
    hits = int(np.count_nonzero(weights))
    rel = float(np.std(batch_means, ddof=1) / estimate) if estimate > 0.0 else math.nan
    second = float(np.mean(weights * weights))
    emp = -math.log(second) / n if second > 0.0 else math.nan
    return BatchStats(batch_means, estimate, rel, second, emp, bound_rate, hits, weights.size, wall_time)


def bound_rate_for(spec: ModelSpec, policy: ControlPolicy) -> Optional[float]:
    """Wbar(0,0)/2 + U(0,0) when U(0,0) is computable."""
    if not spec.reduces_to_1d:
        return None
    return policy.initial_value / 2.0 + rate_U0(spec)


def run_batches(
    spec: ModelSpec,
    policy: ControlPolicy,
    batches: int = 100,
    samples_per_batch: int = 5000,
    seed: int = 1,
    workers: int = 1,
) -> BatchStats:
    if batches < 2 or samples_per_batch < 1:
        raise ConfigurationError("need batches >= 2 and samples_per_batch >= 1")
    t0 = time.perf_counter()
    paths = simulate_many(spec, policy, batches, samples_per_batch, seed, workers)
    weights = paths.weights().reshape(batches, samples_per_batch)
    elapsed = time.perf_counter() - t0
    return summarize(weights, spec.n, bound_rate_for(spec, policy), elapsed)


@dataclass(frozen=True)
class OptimalityReport:
    emp_rate: float
    bound_rate: Optional[float]
    optimal_rate: float
    gap_to_bound: Optional[float]
    gap_to_optimal: float
    consistent: Optional[bool]
    insufficient_data: bool


def optimality_report(stats: BatchStats, policy: ControlPolicy, spec: ModelSpec) -> OptimalityReport:
    """Compare -(1/n) log E[p^2] with the subsolution bound and with 2 x (-(1/n) log p).

    ``consistent`` is true when the empirical rate is no worse than the bound
    minus a 5/n finite-size slack.
    """
    if stats.second_moment <= 0.0 or stats.estimate <= 0.0:
        return OptimalityReport(math.nan, stats.bound_rate, math.nan, None, math.nan, None, True)
    n = spec.n
    optimal = -2.0 * math.log(stats.estimate) / n
    bound = stats.bound_rate
    gap = None if bound is None else stats.emp_rate - bound
    consistent = None if bound is None else bool(stats.emp_rate >= bound - 5.0 / n)
    return OptimalityReport(
        emp_rate=stats.emp_rate,
        bound_rate=bound,
        optimal_rate=optimal,
        gap_to_bound=gap,
        gap_to_optimal=stats.emp_rate - optimal,
        consistent=consistent,
        insufficient_data=False,
    )
