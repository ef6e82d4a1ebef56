"""Flat ``key = value`` run configuration with typo-safe keys.

Lines are ``block.name = value``; ``#`` starts a comment. Every key has a
default, unknown keys are rejected, and ``--set`` overrides use the same
syntax as the file.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

from .material import SELLMEIER_SETS, MaterialModel
from .modesolver import CouplerGeometry


class ConfigError(ValueError):
    pass


def _floats(text):
    return tuple(float(v) for v in text.split(",") if v.strip())


def _mode(text):
    value = int(text)
    if value not in (0, 1):
        raise ValueError("pump mode must be 0 or 1")
    return value


def _optional_float(text):
    return None if text.strip().lower() in ("", "none") else float(text)


# key -> (attribute, parser)
_SCHEMA = {
    "material.sellmeier_set": ("sellmeier_set", str),
    "material.sellmeier_o": ("sellmeier_o", _floats),
    "material.sellmeier_e": ("sellmeier_e", _floats),
    "material.delta_n_h": ("delta_n_h", float),
    "material.delta_n_v": ("delta_n_v", float),
    "material.d24": ("d24", float),
    "geometry.width_a_um": ("width_a_um", float),
    "geometry.gap_d_um": ("gap_d_um", float),
    "geometry.depth_b_um": ("depth_b_um", float),
    "geometry.length_L_mm": ("length_L_mm", float),
    "geometry.cover_index": ("cover_index", float),
    "geometry.grating_period_um": ("grating_period_um", _optional_float),
    "pump.wavelength_nm": ("pump_nm", float),
    "pump.pump_mode": ("pump_mode", _mode),
    "sweep.signal_start_nm": ("signal_start_nm", float),
    "sweep.signal_stop_nm": ("signal_stop_nm", float),
    "sweep.signal_points": ("signal_points", int),
    "sweep.grating_start": ("grating_start", float),
    "sweep.grating_stop": ("grating_stop", float),
    "sweep.grating_points": ("grating_points", int),
    "sweep.tolerance_nm": ("tolerance_nm", _floats),
    "state.filter_center_nm": ("filter_center_nm", _optional_float),
    "state.filter_width_nm": ("filter_width_nm", float),
    "state.threshold": ("threshold", float),
    "spdc.scale": ("scale", float),
    "calibrate.target_K": ("target_K", float),
    "output.directory": ("out_dir", str),
}


@dataclass(frozen=True)
class RunConfig:
    sellmeier_set: str = "congruent"
    sellmeier_o: tuple = ()
    sellmeier_e: tuple = ()
    # exactly three guided supermodes for both polarizations over the whole default sweep
    delta_n_h: float = 0.0024
    delta_n_v: float = 0.0025
    d24: float = 1.0
    width_a_um: float = 6.0
    gap_d_um: float = 6.0
    depth_b_um: float = 7.0
    length_L_mm: float = 2.55
    cover_index: float = 1.0
    grating_period_um: float = None
    pump_nm: float = 675.0
    pump_mode: int = 0
    signal_start_nm: float = 1250.0
    signal_stop_nm: float = 1450.0
    signal_points: int = 201
    grating_start: float = 0.89
    grating_stop: float = 0.92
    grating_points: int = 301
    tolerance_nm: tuple = (-50.0, 0.0, 50.0)
    filter_center_nm: float = None
    filter_width_nm: float = 0.0
    threshold: float = 0.01
    scale: float = 1.0
    target_K: float = 0.9074
    out_dir: str = "out"

    def __post_init__(self):
        if self.sellmeier_set not in SELLMEIER_SETS:
            raise ConfigError(f"material.sellmeier_set must be one of {sorted(SELLMEIER_SETS)}")
        for name in ("width_a_um", "gap_d_um", "depth_b_um", "length_L_mm", "pump_nm", "scale", "target_K"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.signal_points < 2 or self.grating_points < 2:
            raise ConfigError("sweeps need at least two points")
        if not self.signal_start_nm < self.signal_stop_nm or not self.grating_start < self.grating_stop:
            raise ConfigError("sweep ranges must be increasing")
        if self.filter_width_nm < 0:
            raise ConfigError("state.filter_width_nm must be non-negative")

    @property
    def pump_wavelength(self):
        return self.pump_nm * 1e-3

    @property
    def filter_center(self):
        return 2 * self.pump_nm if self.filter_center_nm is None else self.filter_center_nm

    def material(self) -> MaterialModel:
        o, e = SELLMEIER_SETS[self.sellmeier_set]
        try:
            return MaterialModel(self.sellmeier_o or o, self.sellmeier_e or e, self.delta_n_h, self.delta_n_v,
                                 self.d24)
        except ValueError as err:
            raise ConfigError(str(err)) from err

    def geometry(self) -> CouplerGeometry:
        try:
            return CouplerGeometry(self.width_a_um, self.gap_d_um, self.depth_b_um, self.length_L_mm,
                                   self.grating_period_um, self.cover_index)
        except ValueError as err:
            raise ConfigError(str(err)) from err

    def signal_sweep(self):
        return {"start_nm": self.signal_start_nm, "stop_nm": self.signal_stop_nm, "n_points": self.signal_points}

    def echo(self) -> str:
        lines = []
        for key, (attr, _) in _SCHEMA.items():
            value = getattr(self, attr)
            if isinstance(value, tuple):
                value = ",".join(repr(v) for v in value)
            elif value is None:
                value = "none"
            elif isinstance(value, float):
                value = repr(value)
            lines.append(f"{key} = {value}")
        return "\n".join(lines) + "\n"


def parse_assignments(lines, source="config"):
    """Map ``key = value`` lines to RunConfig attribute values."""
    values = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key = value, got {raw.strip()!r}")
        key, _, text = (part.strip() for part in line.partition("="))
        if key not in _SCHEMA:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        attr, parse = _SCHEMA[key]
        try:
            values[attr] = parse(text)
        except ValueError as err:
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {err}") from None
    return values


def load_config(path=None, overrides=()) -> RunConfig:
    values = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                values.update(parse_assignments(fh, str(path)))
        except OSError as err:
            raise ConfigError(f"cannot read config {path}: {err}") from err
    values.update(parse_assignments(overrides, "--set"))
    return RunConfig(**values)
