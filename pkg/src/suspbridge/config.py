"""Flat ``section.key = value`` configuration documents.

A document is UTF-8 text with one assignment per line; ``#`` starts a
comment and blank lines are ignored::

    bridge.n_modes = 16
    integrator.dt = 1e-3
    initial.scenario = longitudinal

Every key not mentioned keeps its default, unknown keys are rejected, and
``emit_config`` writes a document that ``parse_config`` maps back to an
identical configuration (floats are written with ``repr``).
"""

from __future__ import annotations

import dataclasses
import hashlib
import math
import typing
from dataclasses import dataclass, field, fields

from .dynamics import BridgeParams
from .errors import ParameterError
from .integration import IntegratorConfig, PicardConfig
from .numerics import make_grid
from .scenarios import SCENARIOS

__all__ = [
    "ConfigError",
    "CableSection",
    "GridSection",
    "InitialSection",
    "OutputSection",
    "SimulationConfig",
    "parse_config",
    "emit_config",
    "config_hash",
    "replace_section",
    "DEFAULTS_VERSION",
]

# bumped whenever a default value changes, recorded in every run manifest
DEFAULTS_VERSION = 1

OUTPUT_FORMATS = ("csv", "json")


class ConfigError(ParameterError):
    """Syntax or semantic error in a configuration document."""

    def __init__(self, message, line=None, key=None):
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
        self.line = line
        self.key = key


@dataclass(frozen=True)
class CableSection:
    s0: float = 1.0
    tolerance: float = 1e-9
    ivp_steps: int = 4096

    def __post_init__(self):
        if not (math.isfinite(self.s0) and self.s0 > 0):
            raise ParameterError(f"s0 must be positive, got {self.s0}")
        if not self.tolerance > 0:
            raise ParameterError(f"tolerance must be positive, got {self.tolerance}")
        if self.ivp_steps < 1:
            raise ParameterError(f"ivp_steps must be >= 1, got {self.ivp_steps}")


@dataclass(frozen=True)
class GridSection:
    panel_count: int = 256
    points_per_panel: int = 4
    fd_points: int = 4096

    def __post_init__(self):
        # make_grid owns the panel/point checks
        make_grid(math.pi, self.panel_count, self.points_per_panel)
        if self.fd_points < 1:
            raise ParameterError(f"fd_points must be >= 1, got {self.fd_points}")


@dataclass(frozen=True)
class InitialSection:
    scenario: str = "longitudinal"
    amplitude: float = 0.5
    slack_amplitude: float = 2.0
    theta_perturbation: float = 1e-4

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ParameterError(f"scenario must be one of {SCENARIOS}, got {self.scenario!r}")
        for name in ("amplitude", "slack_amplitude"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ParameterError(f"{name} must be non-negative, got {value}")
        if not math.isfinite(self.theta_perturbation):
            raise ParameterError(f"theta_perturbation must be finite, got {self.theta_perturbation}")


@dataclass(frozen=True)
class OutputSection:
    directory: str = "out"
    formats: tuple = ("csv", "json")

    def __post_init__(self):
        if not self.directory:
            raise ParameterError("directory must not be empty")
        bad = [f for f in self.formats if f not in OUTPUT_FORMATS]
        if bad:
            raise ParameterError(f"formats must be drawn from {OUTPUT_FORMATS}, got {bad}")


@dataclass(frozen=True)
class SimulationConfig:
    cable: CableSection = field(default_factory=CableSection)
    bridge: BridgeParams = field(default_factory=BridgeParams)
    grid: GridSection = field(default_factory=GridSection)
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    picard: PicardConfig = field(default_factory=PicardConfig)
    initial: InitialSection = field(default_factory=InitialSection)
    output: OutputSection = field(default_factory=OutputSection)

    def __post_init__(self):
        if self.grid.fd_points < 16 * self.bridge.n_modes:
            raise ConfigError(
                f"grid.fd_points = {self.grid.fd_points} must be >= 16 * bridge.n_modes = {16 * self.bridge.n_modes}",
                key="grid.fd_points",
            )
        if self.picard.horizon < self.picard.inner_dt:
            raise ConfigError("picard.horizon must cover at least one picard.inner_dt step", key="picard.horizon")
        if self.integrator.t_end < self.integrator.dt:
            raise ConfigError("integrator.t_end must cover at least one integrator.dt step", key="integrator.t_end")


SECTIONS = tuple(f.name for f in fields(SimulationConfig))


def _section_types():
    hints = typing.get_type_hints(SimulationConfig)
    return {name: hints[name] for name in SECTIONS}


def _field_types(cls):
    hints = typing.get_type_hints(cls)
    return {f.name: hints[f.name] for f in fields(cls)}


def _convert(raw: str, kind, key: str, line: int):
    try:
        if kind is float:
            value = float(raw)
            if math.isnan(value):
                raise ValueError("nan")
            return value
        if kind is int:
            return int(raw)
        if kind is bool:
            lowered = raw.lower()
            if lowered in ("true", "yes", "1"):
                return True
            if lowered in ("false", "no", "0"):
                return False
            raise ValueError(raw)
        if kind is tuple:
            return tuple(item.strip() for item in raw.split(",") if item.strip())
        return raw
    except ValueError:
        name = getattr(kind, "__name__", str(kind))
        raise ConfigError(f"{key}: cannot read {raw!r} as {name}", line=line, key=key) from None


def parse_config(text: str) -> SimulationConfig:
    """Parse a configuration document; missing keys take their defaults."""
    section_types = _section_types()
    assigned: dict[str, dict[str, object]] = {name: {} for name in SECTIONS}
    first_line: dict[str, int] = {}

    for number, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'section.key = value', got {raw_line.strip()!r}", line=number)
        key, raw = (part.strip() for part in line.split("=", 1))
        if key.count(".") != 1:
            raise ConfigError(f"key {key!r} must have the form section.key", line=number, key=key)
        section, name = key.split(".")
        if section not in section_types:
            raise ConfigError(f"unknown section {section!r} (known: {', '.join(SECTIONS)})", line=number, key=key)
        kinds = _field_types(section_types[section])
        if name not in kinds:
            raise ConfigError(f"unknown key {key!r}", line=number, key=key)
        if key in first_line:
            raise ConfigError(f"duplicate key {key!r} (first set on line {first_line[key]})", line=number, key=key)
        if not raw:
            raise ConfigError(f"{key}: missing value", line=number, key=key)
        first_line[key] = number
        assigned[section][name] = _convert(raw, kinds[name], key, number)

    built = {}
    for section, values in assigned.items():
        try:
            built[section] = section_types[section](**values)
        except ConfigError:
            raise
        except ParameterError as exc:
            lines = [first_line[f"{section}.{k}"] for k in values]
            raise ConfigError(f"[{section}] {exc}", line=min(lines) if lines else None) from None
    try:
        return SimulationConfig(**built)
    except ConfigError as exc:
        raise ConfigError(str(exc), line=first_line.get(exc.key), key=exc.key) from None


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(str(v) for v in value)
    return str(value)


def emit_config(config: SimulationConfig) -> str:
    """Canonical document listing every key, in declaration order."""
    lines = []
    for section in SECTIONS:
        obj = getattr(config, section)
        lines.append(f"# {section}")
        for f in fields(obj):
            lines.append(f"{section}.{f.name} = {_format(getattr(obj, f.name))}")
        lines.append("")
    return "\n".join(lines)


def config_hash(config: SimulationConfig, extra: dict | None = None) -> str:
    """SHA-256 of the canonical document plus any run flags."""
    h = hashlib.sha256(emit_config(config).encode("utf-8"))
    for key in sorted(extra or {}):
        h.update(f"\n{key}={extra[key]!r}".encode("utf-8"))
    return h.hexdigest()


def replace_section(config: SimulationConfig, section: str, **changes) -> SimulationConfig:
    """Copy of ``config`` with fields of one section changed."""
    if section not in SECTIONS:
        raise ParameterError(f"unknown section {section!r}")
    try:
        new_section = dataclasses.replace(getattr(config, section), **changes)
    except TypeError as exc:
        raise ParameterError(str(exc)) from None
    return dataclasses.replace(config, **{section: new_section})
