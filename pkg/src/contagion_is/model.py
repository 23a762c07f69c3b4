"""Intensity model, lattice state and the large-deviation primitives H, L.

The default intensity of group ``j`` in scaled state ``x`` is

    lambda_j(x) = a_j (w_j - x_j) exp(b * sum(x))

and the process jumps ``x -> x + e_j / n`` at rate ``n * lambda_j(x)``.
Everything public in this module works with the scaled intensities; the
factor ``n`` only appears inside the sampler and the exact oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigurationError, DomainError

#: slack allowed when a scaled state produced by lattice rounding sits on
#: the edge of the box Omega
CLAMP_TOL = 1e-12
#: slack used when converting n*z into an integer hitting count
THRESHOLD_TOL = 1e-9

COUPLINGS = ("total", "group")


@dataclass(frozen=True)
class ModelSpec:
    """Portfolio model: ``d`` groups with weights ``w``, base intensities ``a``,
    contagion exponent ``b``, population ``n``, horizon and threshold ``z``."""

    a: tuple[float, ...]
    w: tuple[float, ...]
    b: float
    n: int
    horizon: float
    threshold: float
    coupling: str = "total"

    def __post_init__(self):
        a = tuple(float(v) for v in np.atleast_1d(self.a))
        w = tuple(float(v) for v in np.atleast_1d(self.w))
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "b", float(self.b))
        object.__setattr__(self, "horizon", float(self.horizon))
        object.__setattr__(self, "threshold", float(self.threshold))
        if int(self.n) != self.n:
            raise ConfigurationError(f"n must be an integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))

        if len(a) == 0:
            raise ConfigurationError("at least one group is required")
        if len(a) != len(w):
            raise ConfigurationError(f"len(a)={len(a)} does not match len(w)={len(w)}")
        if any(not math.isfinite(v) or v <= 0.0 for v in w):
            raise ConfigurationError(f"group weights must be positive, got {w}")
        if abs(math.fsum(w) - 1.0) > 1e-12:
            raise ConfigurationError(f"group weights must sum to 1, got sum {math.fsum(w)!r}")
        if any(not math.isfinite(v) or v < 0.0 for v in a):
            raise ConfigurationError(f"intensities a_j must be nonnegative, got {a}")
        if max(a) <= 0.0:
            raise ConfigurationError("at least one a_j must be positive")
        if not math.isfinite(self.b) or self.b < 0.0:
            raise ConfigurationError(f"contagion exponent b must be >= 0, got {self.b}")
        if self.n < 1:
            raise ConfigurationError(f"population n must be >= 1, got {self.n}")
        if not math.isfinite(self.horizon) or self.horizon <= 0.0:
            raise ConfigurationError(f"horizon must be positive, got {self.horizon}")
        if not 0.0 < self.threshold < 1.0:
            raise ConfigurationError(f"threshold z must lie in (0, 1), got {self.threshold}")
        if self.coupling not in COUPLINGS:
            raise ConfigurationError(f"coupling must be one of {COUPLINGS}, got {self.coupling!r}")

    @classmethod
    def homogeneous(cls, d: int = 1, a: float = 0.01, **kwargs) -> "ModelSpec":
        """``d`` equally weighted groups sharing the intensity ``a``."""
        return cls(a=(a,) * d, w=(1.0 / d,) * d, **kwargs)

    @property
    def d(self) -> int:
        return len(self.a)

    @property
    def a_arr(self) -> np.ndarray:
        return np.asarray(self.a)

    @property
    def w_arr(self) -> np.ndarray:
        return np.asarray(self.w)

    @property
    def a_star(self) -> float:
        return max(self.a)

    @property
    def is_homogeneous(self) -> bool:
        return all(v == self.a[0] for v in self.a)

    @property
    def reduces_to_1d(self) -> bool:
        """True when the total intensity depends on x only through sum(x)."""
        return self.is_homogeneous and (self.d == 1 or self.coupling == "total")

    @property
    def group_sizes(self) -> tuple[int, ...]:
        # n*w_j is rounded to nearest when it is not an integer
        return tuple(int(round(self.n * wj)) for wj in self.w)

    @property
    def hit_count(self) -> int:
        """Smallest integer total default count that is >= n*z."""
        return int(math.ceil(self.n * self.threshold - THRESHOLD_TOL))

    def with_threshold(self, z: float) -> "ModelSpec":
        return replace(self, threshold=z)


@dataclass(frozen=True)
class LatticeState:
    """Integer default counts per group plus the elapsed time."""

    counts: tuple[int, ...]
    clock: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "counts", tuple(int(k) for k in self.counts))
        if any(k < 0 for k in self.counts):
            raise DomainError(f"default counts must be nonnegative, got {self.counts}")
        if self.clock < 0.0:
            raise DomainError(f"clock must be nonnegative, got {self.clock}")

    @classmethod
    def origin(cls, spec: ModelSpec) -> "LatticeState":
        return cls((0,) * spec.d, 0.0)

    @property
    def total(self) -> int:
        return sum(self.counts)

    def validate(self, spec: ModelSpec) -> None:
        if len(self.counts) != spec.d:
            raise DomainError(f"state has {len(self.counts)} groups, model has {spec.d}")
        for j, (k, size) in enumerate(zip(self.counts, spec.group_sizes)):
            if k > size:
                raise DomainError(f"group {j} has {k} defaults but only {size} members")

    def scaled(self, spec: ModelSpec) -> np.ndarray:
        self.validate(spec)
        return np.asarray(self.counts, dtype=float) / spec.n


def check_state(spec: ModelSpec, x) -> np.ndarray:
    """Return ``x`` as a float array clamped into Omega, or raise DomainError."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (spec.d,):
        raise DomainError(f"state must have shape ({spec.d},), got {x.shape}")
    w = spec.w_arr
    for j in range(spec.d):
        if not math.isfinite(x[j]) or x[j] < -CLAMP_TOL or x[j] > w[j] + CLAMP_TOL:
            raise DomainError(f"component x[{j}]={x[j]!r} outside [0, w_{j}={w[j]}]")
    return np.clip(x, 0.0, w)


def intensity_unchecked(spec: ModelSpec, x: np.ndarray) -> np.ndarray:
    """lambda(x) for one state or a stack of states (last axis = groups)."""
    if spec.coupling == "group":
        return spec.a_arr * (spec.w_arr - x) * np.exp(spec.b * x)
    return spec.a_arr * (spec.w_arr - x) * np.exp(spec.b * x.sum(axis=-1, keepdims=True))


def intensity_eval(spec: ModelSpec, x) -> np.ndarray:
    """Scaled default intensities lambda_j(x)."""
    return intensity_unchecked(spec, check_state(spec, x))


def total_intensity(spec: ModelSpec, x) -> float:
    return float(intensity_eval(spec, x).sum())


def effective_intensity(a: float, b: float, s):
    """One-dimensional reduction a (1 - s) e^{b s} of the total intensity."""
    s = np.asarray(s, dtype=float)
    return a * (1.0 - s) * np.exp(b * s)


def hamiltonian_eval(spec: ModelSpec, x, alpha) -> float:
    """H(x, alpha) = sum_j lambda_j(x) (exp(alpha_j) - 1)."""
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    if alpha.shape != (spec.d,):
        raise DomainError(f"alpha must have shape ({spec.d},), got {alpha.shape}")
    if not np.all(np.isfinite(alpha)):
        raise DomainError(f"alpha must be finite, got {alpha}")
    lam = intensity_eval(spec, x)
    return float(np.dot(lam, np.expm1(alpha)))


def local_rate_eval(spec: ModelSpec, x, beta) -> float:
    """Convex conjugate L(x, beta) of H, with the convention 0 log 0 = 0."""
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    if beta.shape != (spec.d,):
        raise DomainError(f"beta must have shape ({spec.d},), got {beta.shape}")
    if np.any(beta < 0.0) or not np.all(np.isfinite(beta)):
        raise DomainError(f"beta must be finite and nonnegative, got {beta}")
    lam = intensity_eval(spec, x)
    total = 0.0
    for bj, lj in zip(beta, lam):
        if bj == 0.0:
            total += lj
        elif lj == 0.0:
            return math.inf
        else:
            total += bj * math.log(bj / lj) - bj + lj
    return total


def _grid_min_total(spec: ModelSpec, lo: np.ndarray, hi: np.ndarray, m: int):
    axes = [np.linspace(lo[j], hi[j], m) for j in range(spec.d)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, spec.d)
    pts = pts[pts.sum(axis=1) <= spec.threshold]
    if len(pts) == 0:
        return math.inf, None
    vals = intensity_unchecked(spec, pts).sum(axis=1)
    i = int(np.argmin(vals))
    return float(vals[i]), pts[i]


def mane_critical_value(spec: ModelSpec, tol: float = 1e-8) -> float:
    """c_H = -inf of the total intensity over {x in Omega : sum(x) < z}."""
    z = spec.threshold
    if spec.reduces_to_1d:
        # a(1-s)e^{bs} has no interior minimum, so the infimum sits at an end
        a = spec.a[0]
        return -float(min(effective_intensity(a, spec.b, 0.0), effective_intensity(a, spec.b, z)))

    w = spec.w_arr
    m = [int(math.ceil(4 * spec.n * wj)) + 1 for wj in w]
    axes = [np.linspace(0.0, w[j], m[j]) for j in range(spec.d)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, spec.d)
    pts = pts[pts.sum(axis=1) <= z]
    vals = intensity_unchecked(spec, pts).sum(axis=1)
    i = int(np.argmin(vals))
    best, centre = float(vals[i]), pts[i]
    half = w / (np.asarray(m) - 1)
    for _ in range(200):
        lo = np.clip(centre - 2 * half, 0.0, w)
        hi = np.clip(centre + 2 * half, 0.0, w)
        val, arg = _grid_min_total(spec, lo, hi, 21)
        half = half / 5.0
        if arg is None:
            break
        improved = best - val
        if val < best:
            best, centre = val, arg
        if improved < tol and half.max() < tol:
            break
    return -best


def target_hit(spec: ModelSpec, state: LatticeState) -> bool:
    """True once the total default count reaches n*z."""
    state.validate(spec)
    return state.total >= spec.hit_count
