"""Run configuration: YAML files, command-line overrides and device presets."""

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigError, NoPreset
from .experiments import default_baseline_grid, default_grape_grid
from .fidelity import PenaltyConfig
from .model import ModelParams
from .optimizer import OptimizerConfig

COMMANDS = ("optimize", "simulate", "sweep", "fig1", "validate-rwa", "composite-study")

# detuning delta_omega / 2pi in GHz
PRESETS = {"phase-qubit": 0.2, "transmon": 0.455}


@dataclass(frozen=True)
class SweepSettings:
    baseline_grid: tuple = tuple(float(t) for t in default_baseline_grid())
    grape_grid: tuple = tuple(float(t) for t in default_grape_grid())
    families: tuple = ("rectangular", "gaussian(2)", "gaussian(3)", "grape")
    renormalize_gaussian: bool = True
    workers: int = 1


@dataclass(frozen=True)
class RunConfig:
    command: str
    model: ModelParams = field(default_factory=ModelParams)
    n_slices: int = 256
    gate_time: float = float(2 * np.pi)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    penalty: PenaltyConfig = field(default_factory=lambda: PenaltyConfig(enabled=False))
    sweep: SweepSettings = field(default_factory=SweepSettings)
    output: str = "runs"
    label: str | None = None
    seed: int = 0
    preset: str | None = None
    pulse_path: str | None = None
    initial: str = "0"
    epsilon: float = 30.0

    @property
    def run_dir(self):
        return Path(self.output) / (self.label or self.command)

    def to_dict(self):
        out = dataclasses.asdict(self)
        out["sweep"] = {k: list(v) if isinstance(v, tuple) else v for k, v in out["sweep"].items()}
        return out


_SECTIONS = {"model": ModelParams, "optimizer": OptimizerConfig, "penalty": PenaltyConfig, "sweep": SweepSettings}


def _type_name(annotation):
    return getattr(annotation, "__name__", str(annotation))


def _coerce(key, value, default, annotation):
    text = str(annotation)
    if value is None:
        if default is None or "None" in text:
            return None
        raise ConfigError(key, f"expected {_type_name(annotation)}, got null")
    if isinstance(default, bool) or text == "bool":
        if isinstance(value, bool):
            return value
        raise ConfigError(key, f"expected bool, got {type(value).__name__}")
    if isinstance(default, tuple) or "tuple" in text:
        if not isinstance(value, (list, tuple)):
            raise ConfigError(key, f"expected a list, got {type(value).__name__}")
        items = [_coerce(f"{key}[{i}]", v, default[0] if default else None,
                         type(default[0]) if default else object) for i, v in enumerate(value)]
        return tuple(items)
    if isinstance(default, int) and not isinstance(default, bool) or text == "int":
        if isinstance(value, int) and not isinstance(value, bool):
            return value
        raise ConfigError(key, f"expected int, got {type(value).__name__}")
    if isinstance(default, float) or "float" in text:
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
        raise ConfigError(key, f"expected float, got {type(value).__name__}")
    if isinstance(default, str) or "str" in text:
        if isinstance(value, str):
            return value
        raise ConfigError(key, f"expected str, got {type(value).__name__}")
    return value


def _build(cls, values, prefix):
    if not isinstance(values, dict):
        raise ConfigError(prefix, f"expected a mapping, got {type(values).__name__}")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in values.items():
        if key not in fields:
            raise ConfigError(f"{prefix}.{key}", "unknown key")
        f = fields[key]
        default = f.default if f.default is not dataclasses.MISSING else None
        kwargs[key] = _coerce(f"{prefix}.{key}", value, default, f.type)
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(prefix, str(exc)) from exc


def config_from_mapping(data):
    """Validate a nested mapping into a :class:`RunConfig`; unknown keys are errors."""
    if not isinstance(data, dict):
        raise ConfigError("<root>", "expected a mapping")
    if "command" not in data:
        raise ConfigError("command", "missing")
    if data["command"] not in COMMANDS:
        raise ConfigError("command", f"expected one of {COMMANDS}, got {data['command']!r}")
    fields = {f.name: f for f in dataclasses.fields(RunConfig)}
    kwargs = {}
    for key, value in data.items():
        if key not in fields:
            raise ConfigError(key, "unknown key")
        if key in _SECTIONS:
            kwargs[key] = _build(_SECTIONS[key], value or {}, key)
        else:
            f = fields[key]
            default = f.default if f.default is not dataclasses.MISSING else None
            kwargs[key] = _coerce(key, value, default, f.type)
    cfg = RunConfig(**kwargs)
    if "seed" in data:
        # the top-level seed drives the optimizer's random starts
        cfg = dataclasses.replace(cfg, optimizer=dataclasses.replace(cfg.optimizer, seed=cfg.seed))
    if cfg.n_slices < 1:
        raise ConfigError("n_slices", "must be >= 1")
    if cfg.preset is not None:
        if cfg.preset not in PRESETS:
            raise ConfigError("preset", f"expected one of {sorted(PRESETS)}, got {cfg.preset!r}")
        # natural units: a preset only fixes the physical scale of delta_omega = 1
        cfg = dataclasses.replace(cfg, model=dataclasses.replace(cfg.model, delta_omega=1.0))
    if cfg.initial not in ("0", "1", "L"):
        raise ConfigError("initial", f"expected one of 0, 1, L, got {cfg.initial!r}")
    return cfg


def load_config_file(path):
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh) or {}
    except OSError as exc:
        raise ConfigError(str(path), exc.strerror or str(exc)) from exc
    except yaml.YAMLError as exc:
        raise ConfigError(str(path), f"invalid YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(str(path), "top level must be a mapping")
    return data


def merge(base, overrides):
    """Recursively overlay ``overrides`` onto ``base`` (both plain mappings)."""
    out = dict(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = merge(out[key], value)
        else:
            out[key] = value
    return out


def parse_config(source=None, **overrides):
    """Build a RunConfig from a YAML path or mapping plus keyword overrides."""
    data = {}
    if isinstance(source, (str, Path)):
        data = load_config_file(source)
    elif isinstance(source, dict):
        data = dict(source)
    return config_from_mapping(merge(data, overrides))


def detuning_ghz(preset):
    if preset is None:
        raise NoPreset("a device preset is required for unit conversion")
    try:
        return PRESETS[preset]
    except KeyError:
        raise NoPreset(f"unknown preset {preset!r}; expected one of {sorted(PRESETS)}") from None


def convert_units(value, preset, kind="time"):
    """Natural units to lab units for a device preset.

    ``kind="time"``: t [1/delta_omega] -> ns, t / (2 pi f).
    ``kind="amplitude"``: lambda [delta_omega] -> lambda/2pi in GHz, lambda * f.
    """
    f = detuning_ghz(preset)
    if kind == "time":
        return value / (2 * np.pi * f)
    if kind == "amplitude":
        return value * f
    raise ValueError(f"kind must be 'time' or 'amplitude', got {kind!r}")
