"""YAML run configuration: parsing, validation, serialization, overrides.

The configuration is a mapping with five optional sections: morphology,
gait, grid, simulation and output. Every key is checked; an unknown key at
any level is a hard error, not a warning, so typos cannot silently fall back
to defaults. parse_config and serialize_config are exact inverses on the
dataclass side: parse_config(serialize_config(cfg)) == cfg.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import yaml

from .gait import (
    DEFAULT_OMEGA,
    DEFAULT_TRIALS_PER_CELL,
    DEFAULT_WAVE_NUMBER,
    GaitParams,
    ParameterGrid,
    make_grid,
)
from .morphology import (
    DEFAULT_JOINT_LIMIT,
    DEFAULT_LINK_LENGTH,
    DEFAULT_LINK_MASS,
    DEFAULT_LINK_RADIUS,
    DEFAULT_NUM_MODULES,
    DEFAULT_TIP_RADIUS,
    RobotModel,
    build_model,
)
from .simcore import DEFAULT_PERTURBATION_SCALE, TrialConfig


class ConfigError(ValueError):
    """Raised for malformed, unknown or inconsistent configuration input."""


def _require_mapping(value, where: str) -> Mapping:
    if not isinstance(value, Mapping):
        raise ConfigError(f"{where} must be a mapping, got {type(value).__name__}")
    return value

def _no_unknown_keys(mapping: Mapping, allowed: Sequence[str], where: str) -> None:
    unknown = sorted(set(mapping) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key {unknown[0]!r} in {where}")

def _get_float(mapping: Mapping, key: str, default: float, where: str) -> float:
    value = mapping.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}.{key} must be a number, got {value!r}")
    return float(value)

def _get_int(mapping: Mapping, key: str, default: int, where: str) -> int:
    value = mapping.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where}.{key} must be an integer, got {value!r}")
    return int(value)


# ---------------------------------------------------------------------------
# Sections
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LegsConfig:
    length_m: float | None = None
    ratio_preset: str | None = None
    pair_count: int | None = None
    attachment: str | tuple[int, ...] = "all"
    splay_angle_rad: float = 0.0
    tip_radius_m: float = DEFAULT_TIP_RADIUS

    _KEYS = ("length_m", "ratio_preset", "pair_count", "attachment",
             "splay_angle_rad", "tip_radius_m")

    @staticmethod
    def parse(mapping: Mapping, where: str = "morphology.legs") -> "LegsConfig":
        _no_unknown_keys(mapping, LegsConfig._KEYS, where)
        length = mapping.get("length_m")
        preset = mapping.get("ratio_preset")
        if (length is None) == (preset is None):
            raise ConfigError(f"{where} needs exactly one of length_m or ratio_preset")
        if length is not None:
            length = _get_float(mapping, "length_m", 0.0, where)
        if preset is not None and preset not in ("short", "medium", "long"):
            raise ConfigError(f"{where}.ratio_preset must be short, medium or long, got {preset!r}")
        pair_count = mapping.get("pair_count")
        if pair_count is not None:
            pair_count = _get_int(mapping, "pair_count", 0, where)
        attachment = mapping.get("attachment", "all")
        if isinstance(attachment, str):
            if attachment not in ("all", "evenly_spaced"):
                raise ConfigError(
                    f"{where}.attachment must be 'all', 'evenly_spaced' or a module list, got {attachment!r}")
            if attachment == "evenly_spaced" and pair_count is None:
                raise ConfigError(f"{where}.pair_count is required with evenly_spaced attachment")
        elif isinstance(attachment, Sequence):
            attachment = tuple(int(m) for m in attachment)
            if pair_count is not None and pair_count != len(attachment):
                raise ConfigError(
                    f"{where}.pair_count={pair_count} disagrees with {len(attachment)} listed modules")
        else:
            raise ConfigError(f"{where}.attachment must be a string or list, got {attachment!r}")
        return LegsConfig(
            length_m=length,
            ratio_preset=preset,
            pair_count=pair_count,
            attachment=attachment,
            splay_angle_rad=_get_float(mapping, "splay_angle_rad", 0.0, where),
            tip_radius_m=_get_float(mapping, "tip_radius_m", DEFAULT_TIP_RADIUS, where),
        )

    def serialize(self) -> dict:
        out: dict[str, Any] = {}
        if self.length_m is not None:
            out["length_m"] = self.length_m
        if self.ratio_preset is not None:
            out["ratio_preset"] = self.ratio_preset
        if self.pair_count is not None:
            out["pair_count"] = self.pair_count
        out["attachment"] = list(self.attachment) if isinstance(self.attachment, tuple) else self.attachment
        out["splay_angle_rad"] = self.splay_angle_rad
        out["tip_radius_m"] = self.tip_radius_m
        return out


@dataclass(frozen=True)
class MorphologyConfig:
    num_modules: int = DEFAULT_NUM_MODULES
    link_length_m: float = DEFAULT_LINK_LENGTH
    link_radius_m: float = DEFAULT_LINK_RADIUS
    link_mass_kg: float = DEFAULT_LINK_MASS
    head_tail_length_m: float = DEFAULT_LINK_LENGTH
    joint_limit_rad: float = DEFAULT_JOINT_LIMIT
    legs: LegsConfig | None = None

    _KEYS = ("num_modules", "link_length_m", "link_radius_m", "link_mass_kg",
             "head_tail_length_m", "joint_limit_rad", "legs")

    @staticmethod
    def parse(mapping: Mapping, where: str = "morphology") -> "MorphologyConfig":
        _no_unknown_keys(mapping, MorphologyConfig._KEYS, where)
        legs = None
        if mapping.get("legs") is not None:
            legs = LegsConfig.parse(_require_mapping(mapping["legs"], f"{where}.legs"))
        return MorphologyConfig(
            num_modules=_get_int(mapping, "num_modules", DEFAULT_NUM_MODULES, where),
            link_length_m=_get_float(mapping, "link_length_m", DEFAULT_LINK_LENGTH, where),
            link_radius_m=_get_float(mapping, "link_radius_m", DEFAULT_LINK_RADIUS, where),
            link_mass_kg=_get_float(mapping, "link_mass_kg", DEFAULT_LINK_MASS, where),
            head_tail_length_m=_get_float(mapping, "head_tail_length_m", DEFAULT_LINK_LENGTH, where),
            joint_limit_rad=_get_float(mapping, "joint_limit_rad", DEFAULT_JOINT_LIMIT, where),
            legs=legs,
        )

    def serialize(self) -> dict:
        out: dict[str, Any] = {
            "num_modules": self.num_modules,
            "link_length_m": self.link_length_m,
            "link_radius_m": self.link_radius_m,
            "link_mass_kg": self.link_mass_kg,
            "head_tail_length_m": self.head_tail_length_m,
            "joint_limit_rad": self.joint_limit_rad,
        }
        if self.legs is not None:
            out["legs"] = self.legs.serialize()
        return out

    def to_model(self) -> RobotModel:
        return build_model(self.serialize())


@dataclass(frozen=True)
class GaitConfig:
    A_y_rad: float = math.pi / 4
    A_p_rad: float = math.pi / 6
    omega_rad_s: float = DEFAULT_OMEGA
    n_y: float = DEFAULT_WAVE_NUMBER
    n_p: float = DEFAULT_WAVE_NUMBER
    delta_d_rad: float = math.pi / 2

    _KEYS = ("A_y_rad", "A_p_rad", "omega_rad_s", "n", "n_y", "n_p", "delta_d_rad")

    @staticmethod
    def parse(mapping: Mapping, where: str = "gait") -> "GaitConfig":
        _no_unknown_keys(mapping, GaitConfig._KEYS, where)
        has_n = "n" in mapping
        has_split = "n_y" in mapping or "n_p" in mapping
        if has_n and has_split:
            raise ConfigError(f"{where} may give n or the n_y/n_p pair, not both")
        if has_n:
            n = _get_float(mapping, "n", 0.0, where)
            n_y = n_p = n
        else:
            n_y = _get_float(mapping, "n_y", DEFAULT_WAVE_NUMBER, where)
            n_p = _get_float(mapping, "n_p", DEFAULT_WAVE_NUMBER, where)
        return GaitConfig(
            A_y_rad=_get_float(mapping, "A_y_rad", math.pi / 4, where),
            A_p_rad=_get_float(mapping, "A_p_rad", math.pi / 6, where),
            omega_rad_s=_get_float(mapping, "omega_rad_s", DEFAULT_OMEGA, where),
            n_y=n_y,
            n_p=n_p,
            delta_d_rad=_get_float(mapping, "delta_d_rad", math.pi / 2, where),
        )

    def serialize(self) -> dict:
        out: dict[str, Any] = {
            "A_y_rad": self.A_y_rad,
            "A_p_rad": self.A_p_rad,
            "omega_rad_s": self.omega_rad_s,
        }
        if self.n_y == self.n_p:
            out["n"] = self.n_y
        else:
            out["n_y"] = self.n_y
            out["n_p"] = self.n_p
        out["delta_d_rad"] = self.delta_d_rad
        return out

    def to_params(self, num_modules: int) -> GaitParams:
        return GaitParams(
            amp_yaw=self.A_y_rad,
            amp_pitch=self.A_p_rad,
            omega=self.omega_rad_s,
            yaw_waves=self.n_y,
            pitch_waves=self.n_p,
            num_modules=num_modules,
            phase_offset=self.delta_d_rad,
        )


@dataclass(frozen=True)
class GridConfig:
    A_p_start_rad: float = math.pi / 12
    A_p_step_rad: float = math.pi / 12
    A_p_count: int = 5
    n_start: float = 0.6
    n_step: float = 0.15
    n_count: int = 6
    A_y_rad: float = math.pi / 4
    delta_d_rad: float = math.pi / 2
    trials_per_cell: int = DEFAULT_TRIALS_PER_CELL
    variants: tuple[str, ...] = ("limbless",)

    _KEYS = ("A_p_start_rad", "A_p_step_rad", "A_p_count", "n_start", "n_step",
             "n_count", "A_y_rad", "delta_d_rad", "trials_per_cell", "variants")
    _VARIANT_NAMES = ("limbless", "short", "medium", "long")

    @staticmethod
    def parse(mapping: Mapping, where: str = "grid") -> "GridConfig":
        _no_unknown_keys(mapping, GridConfig._KEYS, where)
        variants = mapping.get("variants", ["limbless"])
        if isinstance(variants, str) or not isinstance(variants, Sequence):
            raise ConfigError(f"{where}.variants must be a list of variant names")
        for name in variants:
            if name not in GridConfig._VARIANT_NAMES:
                raise ConfigError(
                    f"{where}.variants entry {name!r} is not one of {list(GridConfig._VARIANT_NAMES)}")
        if len(set(variants)) != len(variants):
            raise ConfigError(f"{where}.variants has duplicates")
        return GridConfig(
            A_p_start_rad=_get_float(mapping, "A_p_start_rad", math.pi / 12, where),
            A_p_step_rad=_get_float(mapping, "A_p_step_rad", math.pi / 12, where),
            A_p_count=_get_int(mapping, "A_p_count", 5, where),
            n_start=_get_float(mapping, "n_start", 0.6, where),
            n_step=_get_float(mapping, "n_step", 0.15, where),
            n_count=_get_int(mapping, "n_count", 6, where),
            A_y_rad=_get_float(mapping, "A_y_rad", math.pi / 4, where),
            delta_d_rad=_get_float(mapping, "delta_d_rad", math.pi / 2, where),
            trials_per_cell=_get_int(mapping, "trials_per_cell", DEFAULT_TRIALS_PER_CELL, where),
            variants=tuple(variants),
        )

    def serialize(self) -> dict:
        return {
            "A_p_start_rad": self.A_p_start_rad,
            "A_p_step_rad": self.A_p_step_rad,
            "A_p_count": self.A_p_count,
            "n_start": self.n_start,
            "n_step": self.n_step,
            "n_count": self.n_count,
            "A_y_rad": self.A_y_rad,
            "delta_d_rad": self.delta_d_rad,
            "trials_per_cell": self.trials_per_cell,
            "variants": list(self.variants),
        }

    def to_grid(self, joint_limit: float = DEFAULT_JOINT_LIMIT) -> ParameterGrid:
        return make_grid(
            amp_pitch_start=self.A_p_start_rad,
            amp_pitch_step=self.A_p_step_rad,
            amp_pitch_count=self.A_p_count,
            wave_number_start=self.n_start,
            wave_number_step=self.n_step,
            wave_number_count=self.n_count,
            amp_yaw=self.A_y_rad,
            phase_offset=self.delta_d_rad,
            trials_per_cell=self.trials_per_cell,
            joint_limit=joint_limit,
        )


@dataclass(frozen=True)
class SimulationConfig:
    timestep_s: float | None = None
    duration_cycles: int = 3
    initial_roll_rad: float = 0.0
    perturbation_scale_rad: float = DEFAULT_PERTURBATION_SCALE
    seed: int = 0

    _KEYS = ("timestep_s", "duration_cycles", "initial_roll_rad",
             "perturbation_scale_rad", "seed")

    @staticmethod
    def parse(mapping: Mapping, where: str = "simulation") -> "SimulationConfig":
        _no_unknown_keys(mapping, SimulationConfig._KEYS, where)
        timestep = mapping.get("timestep_s")
        if timestep is not None:
            timestep = _get_float(mapping, "timestep_s", 0.0, where)
        return SimulationConfig(
            timestep_s=timestep,
            duration_cycles=_get_int(mapping, "duration_cycles", 3, where),
            initial_roll_rad=_get_float(mapping, "initial_roll_rad", 0.0, where),
            perturbation_scale_rad=_get_float(
                mapping, "perturbation_scale_rad", DEFAULT_PERTURBATION_SCALE, where),
            seed=_get_int(mapping, "seed", 0, where),
        )

    def serialize(self) -> dict:
        out: dict[str, Any] = {}
        if self.timestep_s is not None:
            out["timestep_s"] = self.timestep_s
        out.update(
            duration_cycles=self.duration_cycles,
            initial_roll_rad=self.initial_roll_rad,
            perturbation_scale_rad=self.perturbation_scale_rad,
            seed=self.seed,
        )
        return out


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "out"
    formats: tuple[str, ...] = ("svg",)

    _KEYS = ("directory", "formats")
    _FORMATS = ("svg", "png")

    @staticmethod
    def parse(mapping: Mapping, where: str = "output") -> "OutputConfig":
        _no_unknown_keys(mapping, OutputConfig._KEYS, where)
        directory = mapping.get("directory", "out")
        if not isinstance(directory, str) or not directory:
            raise ConfigError(f"{where}.directory must be a non-empty string")
        formats = mapping.get("formats", ["svg"])
        if isinstance(formats, str) or not isinstance(formats, Sequence) or not formats:
            raise ConfigError(f"{where}.formats must be a non-empty list")
        for fmt in formats:
            if fmt not in OutputConfig._FORMATS:
                raise ConfigError(f"{where}.formats entry {fmt!r} is not one of {list(OutputConfig._FORMATS)}")
        return OutputConfig(directory=directory, formats=tuple(formats))

    def serialize(self) -> dict:
        return {"directory": self.directory, "formats": list(self.formats)}


@dataclass(frozen=True)
class Config:
    morphology: MorphologyConfig = field(default_factory=MorphologyConfig)
    gait: GaitConfig = field(default_factory=GaitConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    simulation: SimulationConfig = field(default_factory=SimulationConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    _KEYS = ("morphology", "gait", "grid", "simulation", "output")

    def to_model(self) -> RobotModel:
        return self.morphology.to_model()

    def to_gait_params(self) -> GaitParams:
        return self.gait.to_params(self.morphology.num_modules)

    def to_trial(self, model: RobotModel | None = None, gait: GaitParams | None = None) -> TrialConfig:
        model = model if model is not None else self.to_model()
        gait = gait if gait is not None else self.to_gait_params()
        sim = self.simulation
        return TrialConfig(
            model=model,
            gait=gait,
            duration_cycles=sim.duration_cycles,
            timestep=sim.timestep_s,
            initial_roll=sim.initial_roll_rad,
            perturbation_seed=sim.seed,
            perturbation_scale=sim.perturbation_scale_rad,
        )


def parse_config(mapping: Mapping) -> Config:
    mapping = _require_mapping(mapping, "config")
    _no_unknown_keys(mapping, Config._KEYS, "config")
    def section(name):
        return _require_mapping(mapping.get(name, {}), name)
    return Config(
        morphology=MorphologyConfig.parse(section("morphology")),
        gait=GaitConfig.parse(section("gait")),
        grid=GridConfig.parse(section("grid")),
        simulation=SimulationConfig.parse(section("simulation")),
        output=OutputConfig.parse(section("output")),
    )


def serialize_config(config: Config) -> dict:
    return {
        "morphology": config.morphology.serialize(),
        "gait": config.gait.serialize(),
        "grid": config.grid.serialize(),
        "simulation": config.simulation.serialize(),
        "output": config.output.serialize(),
    }


def config_to_yaml(config: Config) -> str:
    return yaml.safe_dump(serialize_config(config), sort_keys=False, default_flow_style=False)


def load_config(path) -> Config:
    """Parse a YAML config file; a missing or unreadable file is a ConfigError."""
    try:
        with open(str(path), "r", encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
    if raw is None:
        raw = {}
    return parse_config(raw)


def apply_overrides(mapping: Mapping, overrides: Sequence[str]) -> dict:
    """Apply `section.key=value` strings on top of a raw config mapping.

    Values parse as YAML scalars, so `--set gait.n=1.2` yields a float and
    `--set grid.variants=[limbless,long]` a list. Returns a new dict.
    """
    out: dict = {k: (dict(v) if isinstance(v, Mapping) else v) for k, v in mapping.items()}
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        dotted, _, text = item.partition("=")
        path = dotted.strip().split(".")
        if not all(path):
            raise ConfigError(f"override {item!r} has an empty key component")
        try:
            value = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"override {item!r} has invalid value: {exc}") from exc
        node = out
        for part in path[:-1]:
            nxt = node.get(part)
            if nxt is None:
                nxt = node[part] = {}
            elif isinstance(nxt, Mapping):
                nxt = node[part] = dict(nxt)
            else:
                raise ConfigError(f"override {item!r} descends into non-mapping {part!r}")
            node = nxt
        node[path[-1]] = value
    return out
