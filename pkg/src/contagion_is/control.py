"""Sampling controls built from Hamilton-Jacobi subsolutions.

Every importance-sampling variant here tilts the intensities as

    lambdabar_j(x) = lambda_j(x) * exp(alpha_j(x; c)),
    alpha_j(x; c)   = log(1 + c / D(x)),

with ``D(x) = a_eff * (1 - sum(x)) * exp(b * sum(x))``.  For the
one-dimensional and homogeneous models ``a_eff`` is the common intensity and
``D`` is the total intensity, so ``H(x, alpha) = c`` exactly.  For the
a*-majorant ``a_eff = max_j a_j`` and ``H(x, alpha) <= c``.  The matching
potential only depends on ``s = sum(x)``:

    A(s; c) = int_0^s log(1 + c / (a_eff (1 - y) e^{b y})) dy
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy import integrate, optimize
from scipy.integrate import solve_ivp

from .errors import ConfigurationError, DomainError, NumericalError
from .model import (
    ModelSpec,
    check_state,
    effective_intensity,
    hamiltonian_eval,
    intensity_eval,
    intensity_unchecked,
    mane_critical_value,
    total_intensity,
)


class Variant(str, Enum):
    NONE = "none"
    OPTIMAL_1D = "optimal-1d"
    HOMOGENEOUS = "homogeneous"
    A_STAR = "a-star-majorant"


@dataclass(frozen=True)
class QuadratureSettings:
    abs_tol: float = 1e-12
    max_subdivisions: int = 60

    def __post_init__(self):
        if not self.abs_tol > 0.0:
            raise ConfigurationError(f"abs_tol must be positive, got {self.abs_tol}")
        if self.max_subdivisions < 1:
            raise ConfigurationError("max_subdivisions must be >= 1")


DEFAULT_QUAD = QuadratureSettings()

#: required accuracy of the energy-level equation
ENERGY_RESIDUAL_TOL = 1e-10


def _quad(f, lo: float, hi: float, settings: QuadratureSettings) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(
                f, lo, hi, epsabs=settings.abs_tol, epsrel=0.0, limit=settings.max_subdivisions
            )
        except integrate.IntegrationWarning:
            # roundoff-limited; fall back to the default relative criterion
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, err = integrate.quad(f, lo, hi, epsabs=settings.abs_tol, limit=settings.max_subdivisions)
    if not math.isfinite(val):
        raise NumericalError(f"quadrature on [{lo}, {hi}] returned {val}")
    return val


def effective_a(spec: ModelSpec, a_star: bool = False) -> float:
    """Intensity of the one-dimensional reduction used by the controls."""
    if spec.reduces_to_1d:
        return spec.a[0]
    if a_star:
        return spec.a_star
    raise ConfigurationError(
        "the one-dimensional reduction needs equal a_j; request the a*-reduction instead"
    )


def _min_effective(a_eff: float, b: float, upper: float) -> float:
    # a(1-s)e^{bs} is concave-then-decreasing: its minimum on [0, u] is at an end
    return float(min(effective_intensity(a_eff, b, 0.0), effective_intensity(a_eff, b, upper)))


def energy_integral(
    spec: ModelSpec, c: float, a_eff: Optional[float] = None, quad: QuadratureSettings = DEFAULT_QUAD
) -> float:
    """int_0^z dy / (lambda_eff(y) + c)."""
    if a_eff is None:
        a_eff = effective_a(spec)
    a, b = a_eff, spec.b
    if c + _min_effective(a, b, spec.threshold) <= 0.0:
        return math.inf
    return _quad(lambda y: 1.0 / (a * (1.0 - y) * math.exp(b * y) + c), 0.0, spec.threshold, quad)


def solve_energy_level(
    spec: ModelSpec, a_star: bool = False, quad: QuadratureSettings = DEFAULT_QUAD
) -> float:
    """Energy level c* solving int_0^z dy / (lambda_eff(y) + c) = T.

    The integral decreases strictly in ``c``, so the root is unique once it
    is bracketed above the admissibility bound.
    """
    a = effective_a(spec, a_star=a_star)
    T = spec.horizon
    lower = max(mane_critical_value(spec), -_min_effective(a, spec.b, spec.threshold))

    def resid(c):
        return energy_integral(spec, c, a, quad) - T

    scale = max(abs(lower), a)
    delta = 1e-3 * scale
    lo = lower + delta
    while resid(lo) <= 0.0:
        delta /= 10.0
        lo = lower + delta
        if delta < 1e-15 * scale:
            raise NumericalError(
                f"no admissible energy level: integral stays below T={T} down to c={lo!r} "
                f"(admissibility bound {lower!r})"
            )
    hi = max(lo, 0.0) + 1.0
    for _ in range(200):
        if resid(hi) < 0.0:
            break
        hi *= 2.0
    else:
        raise NumericalError(f"no admissible energy level: no sign change on [{lo!r}, {hi!r}]")

    c_star = optimize.brentq(resid, lo, hi, xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=500)
    if abs(resid(c_star)) > ENERGY_RESIDUAL_TOL:
        raise NumericalError(f"energy level residual {resid(c_star):.3e} exceeds tolerance")
    return float(c_star)


def fluid_hitting_time(spec: ModelSpec, c: float, a_eff: Optional[float] = None) -> float:
    """Time for the tilted fluid path x' = lambdabar(x) to reach sum(x) = z.

    The tilt is alpha_j = log(1 + c / D(x)) with D(x) = a_eff (1 - sum x) e^{b sum x};
    ``a_eff`` defaults to max_j a_j.
    """
    a_eff = spec.a_star if a_eff is None else a_eff
    b, z = spec.b, spec.threshold
    if c + _min_effective(a_eff, b, z) <= 0.0:
        return math.inf

    def rhs(t, x):
        s = x.sum()
        return intensity_unchecked(spec, x) * (1.0 + c / (a_eff * (1.0 - s) * math.exp(b * s)))

    def reached(t, x):
        return x.sum() - z

    reached.terminal = True
    reached.direction = 1
    sol = solve_ivp(rhs, (0.0, 1e6), np.zeros(spec.d), events=reached, rtol=1e-11, atol=1e-14, method="LSODA")
    hits = sol.t_events[0]
    return float(hits[0]) if len(hits) else math.inf


def fluid_energy_level(spec: ModelSpec, a_eff: Optional[float] = None) -> float:
    """Energy level whose tilted fluid path reaches the threshold exactly at T.

    For equal a_j the fluid obeys s' = lambda(s) + c, so this coincides with
    :func:`solve_energy_level`; for unequal a_j it is the default level of the
    a*-majorant policy.
    """
    a_eff = spec.a_star if a_eff is None else a_eff
    T = spec.horizon
    lower = -_min_effective(a_eff, spec.b, spec.threshold)

    def resid(c):
        return fluid_hitting_time(spec, c, a_eff) - T

    scale = max(abs(lower), a_eff)
    delta = 1e-3 * scale
    while resid(lower + delta) <= 0.0:
        delta /= 10.0
        if delta < 1e-15 * scale:
            raise NumericalError(f"no admissible energy level above {lower!r}")
    lo = lower + delta
    hi = max(lo, 0.0) + 1.0
    for _ in range(200):
        if resid(hi) < 0.0:
            break
        hi *= 2.0
    else:
        raise NumericalError(f"no admissible energy level: no sign change on [{lo!r}, {hi!r}]")
    return float(optimize.brentq(resid, lo, hi, xtol=1e-15, rtol=1e-13, maxiter=500))


def mane_potential_1d(
    spec: ModelSpec,
    x: float,
    c: float,
    a_eff: Optional[float] = None,
    quad: QuadratureSettings = DEFAULT_QUAD,
) -> float:
    """Potential A(x; c) = int_0^x log(1 + c / lambda_eff(y)) dy."""
    if a_eff is None:
        a_eff = effective_a(spec)
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"potential argument must lie in [0, 1], got {x}")
    if x == 0.0 or c == 0.0:
        return 0.0
    a, b = a_eff, spec.b
    if c + _min_effective(a, b, x) <= 0.0:
        raise DomainError(
            f"log(1 + c/lambda) is singular on [0, {x}] for c={c}: need c > {-_min_effective(a, b, x)}"
        )
    return _quad(lambda y: math.log1p(c / (a * (1.0 - y) * math.exp(b * y))), 0.0, x, quad)


def initial_value(spec: ModelSpec, c: float, a_eff: Optional[float] = None, quad=DEFAULT_QUAD) -> float:
    """Wbar(0, 0) = 2 A(z; c) - 2 c T."""
    return 2.0 * mane_potential_1d(spec, spec.threshold, c, a_eff, quad) - 2.0 * c * spec.horizon


def rate_U0(spec: ModelSpec, quad: QuadratureSettings = DEFAULT_QUAD) -> float:
    """Large-deviation rate U(0, 0) of the one-dimensional/homogeneous model."""
    if not spec.reduces_to_1d:
        raise ConfigurationError("U(0,0) is only available for one-dimensional or homogeneous models")
    c = solve_energy_level(spec, quad=quad)
    return mane_potential_1d(spec, spec.threshold, c, quad=quad) - c * spec.horizon


@dataclass(frozen=True)
class ControlPolicy:
    """A tilted-intensity rule together with its subsolution data.

    ``a_eff`` is the intensity of the one-dimensional reduction defining the
    tilt denominator; it is ``None`` for plain Monte Carlo.
    """

    spec: ModelSpec
    variant: Variant
    c: float
    a_eff: Optional[float]
    initial_value: float

    def denominator(self, x) -> float:
        x = check_state(self.spec, x)
        s = x.sum()
        return self.a_eff * float((self.spec.w_arr - x).sum()) * math.exp(self.spec.b * s)

    def tilt(self, x) -> np.ndarray:
        if self.variant is Variant.NONE:
            check_state(self.spec, x)
            return np.zeros(self.spec.d)
        dnm = self.denominator(x)
        if dnm + self.c <= 0.0:
            raise DomainError(f"tilt undefined at x={x}: denominator {dnm} <= -c")
        return np.full(self.spec.d, math.log1p(self.c / dnm))

    def tilted_intensity(self, x) -> np.ndarray:
        lam = intensity_eval(self.spec, x)
        if self.variant is Variant.NONE:
            return lam
        return lam * (1.0 + self.c / self.denominator(x))

    def potential(self, x) -> float:
        if self.variant is Variant.NONE:
            return 0.0
        s = float(check_state(self.spec, x).sum())
        return mane_potential_1d(self.spec, min(s, 1.0), self.c, self.a_eff)

    def subsolution(self, t: float, x) -> float:
        """Wbar(t, x) = 2 A(z) - 2 A(x) - 2 c (T - t)."""
        if self.variant is Variant.NONE:
            return 0.0
        A_z = mane_potential_1d(self.spec, self.spec.threshold, self.c, self.a_eff)
        return 2.0 * A_z - 2.0 * self.potential(x) - 2.0 * self.c * (self.spec.horizon - t)


def build_policy(
    spec: ModelSpec, variant, c: Optional[float] = None, quad: QuadratureSettings = DEFAULT_QUAD
) -> ControlPolicy:
    variant = Variant(variant)
    if variant is Variant.NONE:
        return ControlPolicy(spec, variant, 0.0, None, 0.0)

    if variant is Variant.OPTIMAL_1D and spec.d != 1:
        raise ConfigurationError(f"optimal-1d needs a one-group model, got d={spec.d}")
    if variant is Variant.HOMOGENEOUS and not spec.reduces_to_1d:
        raise ConfigurationError(
            f"homogeneous policy needs equal a_j and total-count contagion, got a={spec.a}, "
            f"coupling={spec.coupling!r}"
        )

    a_star = variant is Variant.A_STAR
    a_eff = spec.a_star if a_star else spec.a[0]
    if c is None:
        if a_star:
            # a non-positive fluid level means the event is not rare; c = 0 leaves P unchanged
            c = max(fluid_energy_level(spec, a_eff), 0.0)
        else:
            c = solve_energy_level(spec, quad=quad)
    c = float(c)
    if a_star and c < 0.0:
        raise ConfigurationError(f"a-star-majorant needs an energy level c >= 0, got {c}")
    c_H = mane_critical_value(spec)
    if not c > c_H:
        raise ConfigurationError(f"energy level c={c} must exceed the critical value {c_H}")
    if c + _min_effective(a_eff, spec.b, spec.threshold) <= 0.0:
        raise ConfigurationError(f"energy level c={c} makes the tilt undefined before the threshold")
    w0 = initial_value(spec, c, a_eff, quad)
    return ControlPolicy(spec, variant, c, a_eff, w0)


# --- verification -----------------------------------------------------------


@dataclass(frozen=True)
class SubsolutionReport:
    min_residual: float
    max_terminal: float
    interior_points: int
    terminal_points: int
    passed: bool


def _box_grid(spec: ModelSpec, per_axis: int) -> np.ndarray:
    axes = [np.linspace(0.0, wj, per_axis) for wj in spec.w]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, spec.d)


def verify_subsolution(policy: ControlPolicy, spec: ModelSpec, grid_per_axis: int = 33, tol: float = 1e-9):
    """Check Wbar_t - 2 H(x, -DWbar/2) >= 0 off D_z and Wbar(T, .) <= 0 on D_z.

    With Wbar_t = 2c and -DWbar/2 = alpha(x; c) the residual is 2c - 2H(x, alpha).
    """
    if grid_per_axis < 2:
        raise ConfigurationError("grid_per_axis must be >= 2")
    pts = _box_grid(spec, grid_per_axis)
    s = pts.sum(axis=1)
    inside = s < spec.threshold - 1e-12

    residuals = [2.0 * policy.c - 2.0 * hamiltonian_eval(spec, x, policy.tilt(x)) for x in pts[inside]]

    terminal = []
    if policy.variant is Variant.NONE:
        terminal = [0.0] * int((~inside).sum())
    else:
        A_z = mane_potential_1d(spec, spec.threshold, policy.c, policy.a_eff)
        cache: dict[float, float] = {}
        for sv in np.round(s[~inside], 14):
            sv = float(min(sv, 1.0))
            if sv not in cache:
                try:
                    cache[sv] = 2.0 * A_z - 2.0 * mane_potential_1d(spec, sv, policy.c, policy.a_eff)
                except DomainError:
                    cache[sv] = math.inf
            terminal.append(cache[sv])

    min_res = min(residuals) if residuals else math.inf
    max_term = max(terminal) if terminal else -math.inf
    return SubsolutionReport(
        min_residual=float(min_res),
        max_terminal=float(max_term),
        interior_points=len(residuals),
        terminal_points=len(terminal),
        passed=bool(min_res >= -tol and max_term <= tol),
    )


@dataclass(frozen=True)
class CurlReport:
    field: str
    max_abs_curl: float
    points: int
    conservative: bool


def conservativity_check(
    spec: ModelSpec, c: float, grid_per_axis: int = 21, field: str = "naive", tol: float = 1e-6
) -> CurlReport:
    """Scalar curl d(alpha_1)/dx_2 - d(alpha_2)/dx_1 of a d=2 tilt field.

    ``field="naive"`` uses alpha_j = log(1 + c / sum_i lambda_i(x)); ``"a-star"``
    replaces the denominator by a* sum_i (w_i - x_i) e^{b sum x}.
    """
    if spec.d != 2:
        raise ConfigurationError(f"the curl check is defined for d=2, got d={spec.d}")
    if field == "naive":
        def alpha(x):
            return np.full(2, math.log1p(c / total_intensity(spec, x)))
    elif field == "a-star":
        def alpha(x):
            dnm = spec.a_star * float((spec.w_arr - x).sum()) * math.exp(spec.b * x.sum())
            return np.full(2, math.log1p(c / dnm))
    else:
        raise ConfigurationError(f"unknown field {field!r}")

    h = 1e-5 * spec.w_arr
    w = spec.w_arr
    axes = [np.linspace(2 * h[j], w[j] - 2 * h[j], grid_per_axis) for j in range(2)]
    worst, count = 0.0, 0
    e1, e2 = np.array([h[0], 0.0]), np.array([0.0, h[1]])
    for x1 in axes[0]:
        for x2 in axes[1]:
            x = np.array([x1, x2])
            if x.sum() + h.sum() >= spec.threshold:
                continue
            d1_dx2 = (alpha(x + e2)[0] - alpha(x - e2)[0]) / (2 * h[1])
            d2_dx1 = (alpha(x + e1)[1] - alpha(x - e1)[1]) / (2 * h[0])
            worst = max(worst, abs(d1_dx2 - d2_dx1))
            count += 1
    return CurlReport(field, worst, count, worst <= tol)


def _l(u):
    return np.where(u > 0, u * np.log(np.where(u > 0, u, 1.0)) - u + 1.0, 1.0)


def saddle_objective(lam, lam_bar, lam_hat, alpha) -> float:
    """sum_j 2 lam_j l(hat/lam) - bar_j l(hat/bar) + hat_j alpha_j."""
    lam, lam_bar, lam_hat = map(np.asarray, (lam, lam_bar, lam_hat))
    return float(
        np.sum(2 * lam * _l(lam_hat / lam) - lam_bar * _l(lam_hat / lam_bar) + lam_hat * np.asarray(alpha))
    )


@dataclass(frozen=True)
class SaddleReport:
    saddle_value: float
    target: float
    abs_error: float
    hat_min_increase: float
    bar_max_increase: float
    passed: bool


def saddle_identity_check(spec: ModelSpec, x, alpha, rel_step: float = 1e-2, tol: float = 1e-8) -> SaddleReport:
    """Evaluate the Isaacs inner objective at lambdabar = lambdahat = lambda e^{-alpha/2}.

    The value must equal -2 H(x, -alpha/2); moving lambdahat alone may only
    raise it (inner infimum), moving lambdabar alone may only lower it.
    """
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    lam = intensity_eval(spec, x)
    if np.any(lam <= 0.0):
        raise DomainError(f"saddle check needs an interior state with positive intensities, got {lam}")
    saddle = lam * np.exp(-alpha / 2.0)
    value = saddle_objective(lam, saddle, saddle, alpha)
    target = -2.0 * hamiltonian_eval(spec, x, -alpha / 2.0)

    hat_changes, bar_changes = [], []
    for factors in _perturbations(spec.d, rel_step):
        moved = saddle * factors
        hat_changes.append(saddle_objective(lam, saddle, moved, alpha) - value)
        bar_changes.append(saddle_objective(lam, moved, saddle, alpha) - value)
    hat_min, bar_max = min(hat_changes), max(bar_changes)
    err = abs(value - target)
    slack = 1e-14 * max(1.0, float(lam.sum()))
    return SaddleReport(
        saddle_value=value,
        target=target,
        abs_error=err,
        hat_min_increase=hat_min,
        bar_max_increase=bar_max,
        passed=bool(err <= tol and hat_min >= -slack and bar_max <= slack),
    )


def _perturbations(d: int, step: float):
    for j in range(d):
        for sign in (-1.0, 1.0):
            f = np.ones(d)
            f[j] += sign * step
            yield f
    for signs in np.ndindex(*(3,) * d):
        f = 1.0 + step * (np.asarray(signs) - 1.0)
        if np.any(f != 1.0):
            yield f
