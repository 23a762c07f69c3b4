"""Plain-text ``key = value`` run configuration.

Example::

    # two-group setup
    model.n = 125
    model.a = 0.01, 0.05
    model.w = 0.8, 0.2
    model.b = 5
    horizon = 5
    threshold = 0.10, 0.20, 0.40
    sampler.method = is-astar
    run.batches = 100
    run.samples = 5000
    run.seed = 1

Missing keys take the defaults of :class:`RunConfig`.  ``model.w`` defaults
to equal weights, ``model.d`` to the length of ``model.a`` (a single ``a``
is repeated ``d`` times).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields, replace
from typing import Optional

from .control import Variant
from .errors import ConfigurationError
from .model import COUPLINGS, ModelSpec

METHODS = {
    "mc": Variant.NONE,
    "is1d": Variant.OPTIMAL_1D,
    "is-hom": Variant.HOMOGENEOUS,
    "is-astar": Variant.A_STAR,
}


class ConfigError(ConfigurationError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def _default_workers() -> int:
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)


@dataclass(frozen=True)
class RunConfig:
    n: int = 125
    a: tuple[float, ...] = (0.01,)
    w: Optional[tuple[float, ...]] = None
    b: float = 0.0
    coupling: str = "total"
    horizon: float = 5.0
    thresholds: tuple[float, ...] = (0.10,)
    method: str = "is1d"
    c: Optional[float] = None
    batches: int = 100
    samples: int = 5000
    seed: int = 1
    workers: int = field(default_factory=_default_workers)

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(float(v) for v in self.a))
        w = self.w if self.w is not None else (1.0 / len(self.a),) * len(self.a)
        object.__setattr__(self, "w", tuple(float(v) for v in w))
        object.__setattr__(self, "thresholds", tuple(float(v) for v in self.thresholds))
        if self.method not in METHODS:
            raise ConfigError(f"unknown sampler.method {self.method!r}; choose from {sorted(METHODS)}")
        if self.batches < 2 or self.samples < 1:
            raise ConfigError("run.batches must be >= 2 and run.samples >= 1")
        if self.workers < 1:
            raise ConfigError("run.workers must be >= 1")
        if not self.thresholds:
            raise ConfigError("at least one threshold is required")
        if self.seed < 0 or self.seed >= 2**64:
            raise ConfigError("run.seed must be an unsigned 64-bit integer")
        for z in self.thresholds:
            self.spec_for(z)

    @property
    def d(self) -> int:
        return len(self.a)

    @property
    def weights(self) -> tuple[float, ...]:
        return self.w

    @property
    def variant(self) -> Variant:
        return METHODS[self.method]

    def spec_for(self, z: float) -> ModelSpec:
        return ModelSpec(
            a=self.a, w=self.weights, b=self.b, n=self.n, horizon=self.horizon, threshold=z,
            coupling=self.coupling,
        )

    def to_text(self) -> str:
        """Serialize in the same format :func:`parse_config` reads."""
        lines = [
            f"model.n = {self.n}",
            f"model.a = {_join(self.a)}",
            f"model.w = {_join(self.weights)}",
            f"model.b = {self.b!r}",
            f"model.coupling = {self.coupling}",
            f"horizon = {self.horizon!r}",
            f"threshold = {_join(self.thresholds)}",
            f"sampler.method = {self.method}",
        ]
        if self.c is not None:
            lines.append(f"sampler.c = {self.c!r}")
        lines += [
            f"run.batches = {self.batches}",
            f"run.samples = {self.samples}",
            f"run.seed = {self.seed}",
            f"run.workers = {self.workers}",
        ]
        return "\n".join(lines) + "\n"


def _join(values) -> str:
    return ", ".join(repr(float(v)) for v in values)


def _floats(text: str, line: int) -> tuple[float, ...]:
    try:
        vals = tuple(float(tok) for tok in text.replace(";", ",").split(",") if tok.strip())
    except ValueError:
        raise ConfigError(f"expected a comma-separated list of numbers, got {text!r}", line) from None
    if not vals:
        raise ConfigError("empty list", line)
    return vals


def _int(text: str, line: int) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"expected an integer, got {text!r}", line) from None


def _float(text: str, line: int) -> float:
    vals = _floats(text, line)
    if len(vals) != 1:
        raise ConfigError(f"expected a single number, got {text!r}", line)
    return vals[0]


KEYS = {
    "model.d", "model.n", "model.a", "model.w", "model.b", "model.coupling",
    "horizon", "threshold", "sampler.method", "sampler.c",
    "run.batches", "run.samples", "run.seed", "run.workers",
}


def parse_config(text: str, base: Optional[RunConfig] = None) -> RunConfig:
    """Parse ``key = value`` lines on top of ``base`` (default RunConfig())."""
    seen: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in seen:
            raise ConfigError(f"duplicate key {key!r} (first set on line {seen[key][1]})", lineno)
        if not value:
            raise ConfigError(f"missing value for {key!r}", lineno)
        seen[key] = (value, lineno)

    cfg = base if base is not None else RunConfig()
    updates: dict = {}

    def get(key, conv):
        if key in seen:
            value, line = seen[key]
            return conv(value, line)
        return None

    a = get("model.a", lambda v, ln: _floats(v, ln))
    d = get("model.d", _int)
    if a is None:
        a = cfg.a
    if d is not None:
        if len(a) == 1:
            a = a * d
        elif len(a) != d:
            raise ConfigError(f"model.d = {d} but model.a has {len(a)} entries", seen["model.d"][1])
    updates["a"] = a
    w = get("model.w", lambda v, ln: _floats(v, ln))
    if w is not None:
        updates["w"] = w
    elif cfg.w is not None and len(cfg.w) == len(a):
        updates["w"] = cfg.w
    else:
        updates["w"] = None
    for key, name, conv in [
        ("model.n", "n", _int),
        ("model.b", "b", _float),
        ("horizon", "horizon", _float),
        ("sampler.c", "c", _float),
        ("run.batches", "batches", _int),
        ("run.samples", "samples", _int),
        ("run.seed", "seed", _int),
        ("run.workers", "workers", _int),
    ]:
        val = get(key, conv)
        if val is not None:
            updates[name] = val
    z = get("threshold", lambda v, ln: _floats(v, ln))
    if z is not None:
        updates["thresholds"] = z
    for key, name, allowed in [("model.coupling", "coupling", COUPLINGS), ("sampler.method", "method", tuple(METHODS))]:
        if key in seen:
            value, line = seen[key]
            if value not in allowed:
                raise ConfigError(f"{key} must be one of {allowed}, got {value!r}", line)
            updates[name] = value

    try:
        return replace(cfg, **updates)
    except ConfigError:
        raise
    except ConfigurationError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path) -> RunConfig:
    with open(path) as fh:
        return parse_config(fh.read())


def config_fields() -> list[str]:
    return [f.name for f in fields(RunConfig)]
