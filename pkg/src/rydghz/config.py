"""Strict INI run configuration with named presets.

Sections map onto the protocol layers: [run] global knobs, [pulses] the
branch-transfer operating point plus preparation variant, [isolation] the
permutation operating point, [integrator] tolerances, and one section per
subcommand carrying its specific block.  Unknown sections or keys are
rejected so a typo cannot silently fall back to a default.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .propagator import IntegratorConfig
from .protocols import ISOLATED_W, WParams

PRESETS = ("fig2", "fig3_top", "fig3_bottom", "fig4")


class ConfigError(ValueError):
    """Raised for malformed, incomplete, or unknown configuration input."""


@dataclass(frozen=True)
class SweepBlock:
    parameter: str = "tau_over_T"
    grid: tuple[float, ...] = ()
    observable: str = "step2_populations"


@dataclass(frozen=True)
class ScalingBlock:
    n_min: int = 3
    n_max: int = 12
    threshold: float = 0.95
    area_lo: float = 40.0
    area_hi: float = 600.0
    rel_tol: float = 0.01
    taus: tuple[float, ...] = (0.3, 0.4, 0.5, 0.6, 0.7)


@dataclass(frozen=True)
class RunConfig:
    n_atoms: int = 5
    gamma_T: float = 0.0
    initial: str = "prepared"  # basis label, or the prepared superposition
    transfer: WParams = WParams(omega_max=125.0, delta=50.0, tau=0.5)
    isolation: WParams = ISOLATED_W
    prepare_omega_T: float = 125.0
    rap_variant: str = "resonant_half_pi"
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    oracle_draws: int = 100
    sweep: SweepBlock = field(default_factory=SweepBlock)
    scaling: ScalingBlock = field(default_factory=ScalingBlock)

    def __post_init__(self) -> None:
        if self.n_atoms < 1:
            raise ConfigError("n_atoms must be >= 1")
        if self.gamma_T < 0:
            raise ConfigError("gamma_T must be >= 0")
        if self.rap_variant not in ("resonant_half_pi", "half_chirp"):
            raise ConfigError(f"unknown rap_variant {self.rap_variant!r}")


_SCHEMA: dict[str, tuple[str, ...]] = {
    "run": ("n_atoms", "gamma_t", "initial"),
    "pulses": (
        "omega_m_t",
        "delta_t",
        "tau_over_t",
        "order",
        "rap_variant",
        "prepare_omega_t",
    ),
    "isolation": ("omega_m_t", "delta_t", "tau_over_t"),
    "integrator": ("rtol", "atol", "method", "samples", "max_step"),
    "oracle": ("draws",),
    "sweep": ("parameter", "grid", "observable"),
    "scaling": ("n_min", "n_max", "threshold", "area_lo", "area_hi", "rel_tol", "taus"),
}


def parse_grid(text: str) -> tuple[float, ...]:
    """Grid syntax: comma list '0.1,0.2,0.3' or linspace 'start:stop:count'."""
    text = text.strip()
    if not text:
        raise ConfigError("empty grid")
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"grid range must be start:stop:count, got {text!r}")
        try:
            start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError as exc:
            raise ConfigError(f"bad grid range {text!r}: {exc}") from None
        if count < 1:
            raise ConfigError("grid count must be >= 1")
        if count == 1:
            return (start,)
        step = (stop - start) / (count - 1)
        return tuple(start + i * step for i in range(count))
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"bad grid list {text!r}: {exc}") from None


def _check_known(parser: configparser.ConfigParser) -> None:
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        allowed = _SCHEMA[section]
        for key in parser[section]:
            if key not in allowed:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")


def _get(parser, section, key, cast, default):
    if not parser.has_option(section, key):
        return default
    raw = parser.get(section, key)
    try:
        return cast(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for [{section}] {key}: {raw!r} ({exc})") from None


def load_config(path: str | Path) -> RunConfig:
    """Parse, validate, and freeze a RunConfig from an INI file."""
    parser = configparser.ConfigParser(interpolation=None)
    text = Path(path).read_text()
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    return _from_parser(parser)


def load_preset(name: str) -> RunConfig:
    """Load one of the packaged presets by name."""
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    ref = resources.files("rydghz").joinpath(f"presets/{name}.ini")
    parser = configparser.ConfigParser(interpolation=None)
    parser.read_string(ref.read_text(), source=name)
    return _from_parser(parser)


def _from_parser(parser: configparser.ConfigParser) -> RunConfig:
    _check_known(parser)
    base = RunConfig()
    try:
        return _build(parser, base)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _build(parser: configparser.ConfigParser, base: RunConfig) -> RunConfig:
    transfer = WParams(
        omega_max=_get(parser, "pulses", "omega_m_t", float, 125.0),
        delta=_get(parser, "pulses", "delta_t", float, 50.0),
        tau=_get(parser, "pulses", "tau_over_t", float, 0.5),
        order=_get(parser, "pulses", "order", str, "intuitive"),
    )
    isolation = WParams(
        omega_max=_get(parser, "isolation", "omega_m_t", float, ISOLATED_W.omega_max),
        delta=_get(parser, "isolation", "delta_t", float, ISOLATED_W.delta),
        tau=_get(parser, "isolation", "tau_over_t", float, ISOLATED_W.tau),
    )
    max_step = _get(parser, "integrator", "max_step", float, None)
    integrator = IntegratorConfig(
        rtol=_get(parser, "integrator", "rtol", float, 1e-10),
        atol=_get(parser, "integrator", "atol", float, 1e-12),
        method=_get(parser, "integrator", "method", str, "compiled"),
        samples=_get(parser, "integrator", "samples", int, 2000),
        max_step=max_step,
    )
    sweep = SweepBlock(
        parameter=_get(parser, "sweep", "parameter", str, base.sweep.parameter),
        grid=_get(parser, "sweep", "grid", parse_grid, base.sweep.grid),
        observable=_get(parser, "sweep", "observable", str, base.sweep.observable),
    )
    scaling = ScalingBlock(
        n_min=_get(parser, "scaling", "n_min", int, base.scaling.n_min),
        n_max=_get(parser, "scaling", "n_max", int, base.scaling.n_max),
        threshold=_get(parser, "scaling", "threshold", float, base.scaling.threshold),
        area_lo=_get(parser, "scaling", "area_lo", float, base.scaling.area_lo),
        area_hi=_get(parser, "scaling", "area_hi", float, base.scaling.area_hi),
        rel_tol=_get(parser, "scaling", "rel_tol", float, base.scaling.rel_tol),
        taus=_get(parser, "scaling", "taus", parse_grid, base.scaling.taus),
    )
    return RunConfig(
        n_atoms=_get(parser, "run", "n_atoms", int, base.n_atoms),
        gamma_T=_get(parser, "run", "gamma_t", float, base.gamma_T),
        initial=_get(parser, "run", "initial", str, base.initial),
        transfer=transfer,
        isolation=isolation,
        prepare_omega_T=_get(parser, "pulses", "prepare_omega_t", float, 125.0),
        rap_variant=_get(parser, "pulses", "rap_variant", str, base.rap_variant),
        integrator=integrator,
        oracle_draws=_get(parser, "oracle", "draws", int, base.oracle_draws),
        sweep=sweep,
        scaling=scaling,
    )


def require_keys(parser_cfg: RunConfig, *dotted: str) -> None:
    """Assert that subcommand-critical fields are present and nonempty."""
    for name in dotted:
        obj = parser_cfg
        for part in name.split("."):
            obj = getattr(obj, part)
        if obj is None or (isinstance(obj, tuple) and len(obj) == 0):
            raise ConfigError(f"missing required config key {name!r}")
