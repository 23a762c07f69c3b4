"""Trajectory sampler for the embedded jump chain under a control policy.

Each sample owns a random stream derived from ``(master_seed, batch, sample)``
alone, so results do not depend on execution order or on how samples are
split across workers.  The stream is xoshiro256** seeded through splitmix64.

The log-likelihood ratio dP/dQbar accumulated over the completed jumps is

    sum_k n (Lbar - L)(x_{k-1}) tau_k + log lambda_v(x_{k-1}) - log lambdabar_v(x_{k-1})

and the path stops at the first jump time past the horizon (weight zero) or
when the total count reaches the threshold.  Because every tilt used here is
a common factor ``f = 1 + c / D(x)`` on all groups, the jump direction is
drawn with probabilities lambda_j / L and the log term equals ``-log f``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numba
import numpy as np

from .control import ControlPolicy, Variant
from .errors import ConfigurationError, NumericalError
from .model import ModelSpec

@dataclass(frozen=True)
class RngStreamSpec:
    master_seed: int
    batch_index: int = 0
    sample_index: int = 0


@dataclass(frozen=True)
class SampleResult:
    hit: bool
    log_lr: float
    jumps: int
    stop_time: float

    @property
    def weight(self) -> float:
        return math.exp(self.log_lr) if self.hit else 0.0


# --- random streams ---------------------------------------------------------


@numba.njit(cache=True, inline="always")
def _fmix64(x):
    # splitmix64 finalizer, a bijection on 64-bit words
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


@numba.njit(cache=True)
def _seed_state(master, batch, sample, state):
    h = _fmix64(master + np.uint64(0x9E3779B97F4A7C15))
    h = _fmix64(h + batch)
    h = _fmix64(h ^ (sample * np.uint64(0xD1B54A32D192ED03)))
    for i in range(4):
        h = h + np.uint64(0x9E3779B97F4A7C15)
        state[i] = _fmix64(h)


@numba.njit(cache=True, inline="always")
def _rotl(x, k):
    return (x << np.uint64(k)) | (x >> np.uint64(64 - k))


@numba.njit(cache=True)
def _next_u64(s):
    result = _rotl(s[1] * np.uint64(5), 7) * np.uint64(9)
    t = s[1] << np.uint64(17)
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], 45)
    return result


@numba.njit(cache=True)
def _uniform(s):
    """Uniform double on [0, 1) from the top 53 bits."""
    return float(_next_u64(s) >> np.uint64(11)) * (1.0 / 9007199254740992.0)


def _u64(v: int) -> np.uint64:
    return np.uint64(int(v) & 0xFFFFFFFFFFFFFFFF)


def derive_stream(s: RngStreamSpec) -> np.ndarray:
    """xoshiro256** state for one (seed, batch, sample) triple."""
    state = np.empty(4, dtype=np.uint64)
    _seed_state(_u64(s.master_seed), _u64(s.batch_index), _u64(s.sample_index), state)
    return state


def stream_uniforms(s: RngStreamSpec, count: int) -> np.ndarray:
    """First ``count`` uniforms of a derived stream (inspection/testing aid)."""
    state = derive_stream(s)
    return np.array([_uniform(state) for _ in range(count)])


# --- path kernel ------------------------------------------------------------


@numba.njit(cache=True)
def _path(a, sizes, b, n, kstar, horizon, group, tilted, c, a_eff, rng, counts, lam):
    d = a.shape[0]
    for j in range(d):
        counts[j] = 0
    clock = 0.0
    log_lr = 0.0
    jumps = 0
    total = 0
    while True:
        e = math.exp(b * total / n)
        lam_tot = 0.0
        rem_tot = 0
        for j in range(d):
            rem = sizes[j] - counts[j]
            if group:
                lam[j] = a[j] * rem * math.exp(b * counts[j] / n) / n
            else:
                lam[j] = a[j] * rem * e / n
            lam_tot += lam[j]
            rem_tot += rem
        if tilted:
            dnm = a_eff * (rem_tot / n) * e
            f = 1.0 + c / dnm
            lbar = lam_tot * f
        else:
            f = 1.0
            lbar = lam_tot
        if not lbar > 0.0:
            return False, log_lr, jumps, clock

        tau = -math.log(1.0 - _uniform(rng)) / (n * lbar)
        if clock + tau > horizon:
            return False, log_lr, jumps, clock + tau
        clock += tau

        u = _uniform(rng) * lam_tot
        acc = 0.0
        pick = -1
        for j in range(d):
            if lam[j] > 0.0:
                acc += lam[j]
                pick = j
                if u < acc:
                    break
        if pick < 0:
            return False, math.nan, jumps, clock
        if tilted:
            log_lr += n * (lbar - lam_tot) * tau - math.log(f)
        counts[pick] += 1
        jumps += 1
        total += 1
        if total >= kstar:
            return True, log_lr, jumps, clock


@numba.njit(cache=True, nogil=True)
def _run_range(a, sizes, b, n, kstar, horizon, group, tilted, c, a_eff, master, per_batch, start, stop,
               hit, log_lr, jumps, stop_time):
    rng = np.empty(4, dtype=np.uint64)
    counts = np.empty(a.shape[0], dtype=np.int64)
    lam = np.empty(a.shape[0])
    for i in range(start, stop):
        ui = np.uint64(i)
        _seed_state(master, ui // per_batch, ui % per_batch, rng)
        h, lr, nj, st = _path(a, sizes, b, n, kstar, horizon, group, tilted, c, a_eff, rng, counts, lam)
        hit[i] = h
        log_lr[i] = lr
        jumps[i] = nj
        stop_time[i] = st


def _kernel_args(spec: ModelSpec, policy: ControlPolicy):
    if policy.spec != spec:
        raise ConfigurationError("policy was built for a different model")
    tilted = policy.variant is not Variant.NONE and policy.c != 0.0
    return (
        np.asarray(spec.a, dtype=np.float64),
        np.asarray(spec.group_sizes, dtype=np.int64),
        float(spec.b),
        int(spec.n),
        int(spec.hit_count),
        float(spec.horizon),
        spec.coupling == "group",
        bool(tilted),
        float(policy.c),
        float(policy.a_eff or 0.0),
    )


def sample_path(spec: ModelSpec, policy: ControlPolicy, rng: RngStreamSpec) -> SampleResult:
    """Simulate one trajectory; the estimator weight is ``hit * exp(log_lr)``."""
    state = derive_stream(rng)
    counts = np.empty(spec.d, dtype=np.int64)
    h, lr, nj, st = _path(*_kernel_args(spec, policy), state, counts, np.empty(spec.d))
    if not math.isfinite(lr):
        raise NumericalError("non-finite log-likelihood increment")
    return SampleResult(bool(h), float(lr), int(nj), float(st))


@dataclass(frozen=True)
class PathArrays:
    """Flat per-sample outputs indexed by ``batch * samples_per_batch + sample``."""

    hit: np.ndarray
    log_lr: np.ndarray
    jumps: np.ndarray
    stop_time: np.ndarray

    def weights(self) -> np.ndarray:
        return np.where(self.hit, np.exp(np.where(self.hit, self.log_lr, 0.0)), 0.0)


def simulate_many(
    spec: ModelSpec,
    policy: ControlPolicy,
    batches: int,
    samples_per_batch: int,
    seed: int,
    workers: int = 1,
) -> PathArrays:
    """Run ``batches * samples_per_batch`` independent paths.

    Work is cut into contiguous index ranges handed to a thread pool; the
    kernel releases the GIL.  Outputs are written by index, so they are
    identical for any ``workers``.
    """
    total = batches * samples_per_batch
    args = _kernel_args(spec, policy)
    out = PathArrays(
        hit=np.zeros(total, dtype=np.bool_),
        log_lr=np.zeros(total),
        jumps=np.zeros(total, dtype=np.int64),
        stop_time=np.zeros(total),
    )
    master = _u64(seed)
    per = np.uint64(samples_per_batch)

    def run(lo, hi):
        _run_range(*args, master, per, lo, hi, out.hit, out.log_lr, out.jumps, out.stop_time)

    workers = max(1, int(workers))
    if workers == 1 or total < 2 * workers:
        run(0, total)
    else:
        edges = np.linspace(0, total, workers + 1).astype(np.int64)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for fut in [pool.submit(run, int(lo), int(hi)) for lo, hi in zip(edges[:-1], edges[1:])]:
                fut.result()

    if not np.all(np.isfinite(out.log_lr)):
        raise NumericalError("non-finite log-likelihood ratio in simulated paths")
    return out
