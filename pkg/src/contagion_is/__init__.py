"""Importance sampling for rare default cascades in contagion models."""

from .control import (
    ControlPolicy,
    QuadratureSettings,
    Variant,
    build_policy,
    conservativity_check,
    fluid_energy_level,
    initial_value,
    mane_potential_1d,
    rate_U0,
    saddle_identity_check,
    solve_energy_level,
    verify_subsolution,
)
from .errors import ConfigurationError, DomainError, NumericalError, OracleTooLarge
from .estimate import BatchStats, OptimalityReport, optimality_report, run_batches, summarize
from .model import (
    LatticeState,
    ModelSpec,
    hamiltonian_eval,
    intensity_eval,
    local_rate_eval,
    mane_critical_value,
    target_hit,
)
from .oracle import binomial_tail_reference, exact_hit_probability
from .simulate import RngStreamSpec, SampleResult, sample_path, simulate_many

__all__ = [
    "BatchStats", "ConfigurationError", "ControlPolicy", "DomainError", "LatticeState", "ModelSpec",
    "NumericalError", "OptimalityReport", "OracleTooLarge", "QuadratureSettings", "RngStreamSpec",
    "SampleResult", "Variant", "binomial_tail_reference", "build_policy", "conservativity_check",
    "exact_hit_probability", "fluid_energy_level", "hamiltonian_eval", "initial_value", "intensity_eval",
    "local_rate_eval", "mane_critical_value", "mane_potential_1d", "optimality_report", "rate_U0",
    "run_batches", "saddle_identity_check", "sample_path", "simulate_many", "solve_energy_level",
    "summarize", "target_hit", "verify_subsolution",
]
