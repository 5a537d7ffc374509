# Copyright (c) 2024 CRS4
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
# http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""
Run configuration files.

A run configuration is a TOML document with SI units throughout; every error names
the key path it refers to (and the CSV row for tabulated inputs).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional, Union

import numpy as np
import toml

import ponder.log as logging
from ponder.cavity import CavityConfig, LaserNoise, NoiseModel, PowerSpec
from ponder.constants import (DEFAULT_ANGLE_POINTS, DEFAULT_F_CAP_RATIO,
                              DEFAULT_F_MAX, DEFAULT_F_MIN,
                              DEFAULT_FREQ_NOISE_COEFF,
                              DEFAULT_FREQ_NOISE_EXPONENT,
                              DEFAULT_FREQUENCY_POINTS, DEFAULT_Q,
                              DEFAULT_RIN_ASD, DEFAULT_SWEEP_CAP,
                              DEFAULT_TEMPERATURE, DEFAULT_WAVELENGTH,
                              MIN_POINTS_PER_DECADE, SCHEMA_VERSION,
                              SWEEP_AXES)
from ponder.detection import HomodyneSetup
from ponder.errors import ConfigurationError, InvalidParameter
from ponder.mechanics import (BeamProfile, CantileverGeometry, MechMode,
                              Oscillator, SampledModeShape, apply_q_overrides,
                              read_mode_shape_csv, read_modes_csv)
from ponder.metrics import default_angles, default_frequencies
from ponder.models import (DampingKind, Measurement, MeasurementPort,
                           Objective, PowerKind)
from ponder.utils import get_config

# set up logging
logger = logging.getLogger(__name__)

# marker of a mandatory key
REQUIRED = object()

LOCK_PLANTS = ("open_loop", "optical_spring", "mechanics")

# configuration keys of the dataclass fields, per table
CAVITY_KEYS = {"length": "length_m", "wavelength": "wavelength_m", "power.watts": "power.watts"}
GEOMETRY_KEYS = {
    "length_l": "length_m", "radius_r": "radius_m", "width_w": "width_m",
    "thickness_cantilever": "thickness_cantilever_m", "thickness_mirror": "thickness_mirror_m",
    "youngs_modulus": "youngs_modulus_pa", "shear_modulus": "shear_modulus_pa",
    "density_mirror": "density_mirror", "density_cantilever": "density_cantilever",
}


@dataclass(frozen=True)
class GridConfig:
    f_min: float = DEFAULT_F_MIN
    f_max: float = DEFAULT_F_MAX
    points: int = DEFAULT_FREQUENCY_POINTS
    angle_points: int = DEFAULT_ANGLE_POINTS
    #: upper frequency of the summary search, Hz; |f_OS|/3 when not given
    f_cap: Optional[float] = None

    def frequencies(self) -> np.ndarray:
        return default_frequencies(self.f_min, self.f_max, self.points)

    def angles(self) -> np.ndarray:
        return default_angles(self.angle_points)


@dataclass(frozen=True)
class LockConfig:
    gain: float = 1.0
    zeros_hz: tuple = ()
    poles_hz: tuple = ()
    f_min: float = 10.0
    f_max: float = 1e6
    points_per_decade: int = 100
    #: one of LOCK_PLANTS; ignored when a measured plant is given
    plant: str = "open_loop"
    plant_csv: Optional[Path] = None

    def frequencies(self) -> np.ndarray:
        decades = math.log10(self.f_max / self.f_min)
        points = max(2, int(math.ceil(decades * self.points_per_decade)) + 1)
        return np.logspace(math.log10(self.f_min), math.log10(self.f_max), points)


@dataclass(frozen=True)
class ModeShapeConfig:
    path: Path
    shape: SampledModeShape


@dataclass(frozen=True)
class SweepConfig:
    axes: dict
    cap: int = DEFAULT_SWEEP_CAP
    objective: Objective = Objective.MIN_N_MIN
    f_cap_ratio: float = DEFAULT_F_CAP_RATIO


@dataclass(frozen=True)
class RunConfig:
    """A validated run configuration with defaults applied"""
    cavity: CavityConfig
    noise: NoiseModel
    grid: GridConfig = field(default_factory=GridConfig)
    oscillator: Optional[Oscillator] = None
    measurement: Measurement = Measurement.DIRECT
    homodyne: Optional[HomodyneSetup] = None
    lock: Optional[LockConfig] = None
    geometry: Optional[CantileverGeometry] = None
    mode_shapes: tuple = ()
    beam: Optional[BeamProfile] = None
    sweep: Optional[SweepConfig] = None
    path: Optional[Path] = None
    schema_version: int = SCHEMA_VERSION

    @property
    def laser(self) -> LaserNoise:
        return self.noise.laser

    def require_oscillator(self) -> Oscillator:
        if self.oscillator is None:
            raise ConfigurationError("An [oscillator] table is required", "oscillator")
        return self.oscillator


class Table:
    """Typed access to a TOML table, reporting errors with their key path"""

    def __init__(self, data: Any, path: str, base_dir: Optional[Path] = None):
        if not isinstance(data, dict):
            raise ConfigurationError(f"Expected a table, got {type(data).__name__}", path or None)
        self._data = data
        self._path = path
        self._base_dir = base_dir or Path.cwd()

    def key_path(self, key: str) -> str:
        return f"{self._path}.{key}" if self._path else key

    def __contains__(self, key: str) -> bool:
        return key in self._data

    def keys(self):
        return self._data.keys()

    def raw(self, key: str, default: Any = REQUIRED) -> Any:
        if key not in self._data:
            if default is REQUIRED:
                raise ConfigurationError("Missing required key", self.key_path(key))
            return default
        return self._data[key]

    def table(self, key: str, required: bool = False) -> Optional[Table]:
        if key not in self._data:
            if required:
                raise ConfigurationError("Missing required table", self.key_path(key))
            return None
        return Table(self._data[key], self.key_path(key), self._base_dir)

    def tables(self, key: str) -> list[Table]:
        items = self._data.get(key, [])
        if not isinstance(items, list):
            raise ConfigurationError("Expected an array of tables", self.key_path(key))
        return [Table(item, f"{self.key_path(key)}[{i}]", self._base_dir) for i, item in enumerate(items)]

    def float(self, key: str, default: Any = REQUIRED) -> Optional[float]:
        value = self.raw(key, default)
        if value is None or value is default:
            return value
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigurationError(f"Expected a number, got {value!r}", self.key_path(key))
        if not math.isfinite(value):
            raise ConfigurationError(f"Expected a finite number, got {value!r}", self.key_path(key))
        return float(value)

    def int(self, key: str, default: Any = REQUIRED) -> Optional[int]:
        value = self.raw(key, default)
        if value is None or value is default:
            return value
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigurationError(f"Expected an integer, got {value!r}", self.key_path(key))
        return value

    def bool(self, key: str, default: Any = REQUIRED) -> bool:
        value = self.raw(key, default)
        if not isinstance(value, bool):
            raise ConfigurationError(f"Expected true or false, got {value!r}", self.key_path(key))
        return value

    def str(self, key: str, default: Any = REQUIRED) -> Optional[str]:
        value = self.raw(key, default)
        if value is None or value is default:
            return value
        if not isinstance(value, str):
            raise ConfigurationError(f"Expected a string, got {value!r}", self.key_path(key))
        return value

    def floats(self, key: str, default: Any = REQUIRED) -> tuple:
        value = self.raw(key, default)
        if not isinstance(value, (list, tuple)):
            raise ConfigurationError(f"Expected an array of numbers, got {value!r}", self.key_path(key))
        for item in value:
            if isinstance(item, bool) or not isinstance(item, (int, float)):
                raise ConfigurationError(f"Expected an array of numbers, got {item!r}", self.key_path(key))
        return tuple(float(v) for v in value)

    def enum(self, key: str, enum_type, default: Any = REQUIRED):
        value = self.raw(key, default)
        try:
            return enum_type.get(value)
        except InvalidParameter as e:
            raise ConfigurationError(e.message, self.key_path(key)) from e

    def file(self, key: str) -> Path:
        """A path relative to the configuration file; it must exist"""
        path = Path(self.str(key))
        if not path.is_absolute():
            path = self._base_dir / path
        if not path.is_file():
            raise ConfigurationError(f"File not found: {path}", self.key_path(key))
        return path

    def warn_unknown(self, known: set) -> None:
        for key in self._data:
            if key not in known:
                logger.warning("Ignoring unknown key %s", self.key_path(key))


def __key_path__(section: str, name: str, renames: dict) -> str:
    # invariants spanning several fields are named like "t1+t2+l1+l2" or "t2/r2"
    names = re.split(r"[+/]", name)
    return ", ".join(f"{section}.{renames.get(n, n)}" for n in names)


def __build__(section: str, factory: Callable, renames: Optional[dict] = None, **kwargs):
    try:
        return factory(**kwargs)
    except InvalidParameter as e:
        raise ConfigurationError(e.message or str(e), __key_path__(section, e.name, renames or {})) from e


def __parse_cavity__(table: Table) -> CavityConfig:
    power = table.table("power", required=True)
    power_spec = __build__("cavity.power", PowerSpec, {"power.watts": "watts"},
                           kind=power.enum("kind", PowerKind), watts=power.float("watts"))
    table.warn_unknown({"length_m", "wavelength_m", "t1", "t2", "l1", "l2", "detuning", "mode_matching",
                        "measurement_port", "power"})
    return __build__(
        "cavity", CavityConfig, CAVITY_KEYS,
        length=table.float("length_m"),
        t1=table.float("t1"),
        t2=table.float("t2"),
        detuning=table.float("detuning"),
        power_spec=power_spec,
        wavelength=table.float("wavelength_m", DEFAULT_WAVELENGTH),
        l1=table.float("l1", 0.0),
        l2=table.float("l2", 0.0),
        mode_matching=table.float("mode_matching", 1.0),
        measurement_port=table.enum("measurement_port", MeasurementPort, MeasurementPort.TRANSMISSION),
    )


def __parse_noise__(laser: Optional[Table], noise: Optional[Table]) -> NoiseModel:
    laser_noise = LaserNoise()
    if laser is not None:
        laser_noise = __build__(
            "laser", LaserNoise,
            rin_asd=laser.float("rin_asd", DEFAULT_RIN_ASD),
            freq_noise_coeff=laser.float("freq_noise_coeff", DEFAULT_FREQ_NOISE_COEFF),
            freq_noise_exponent=laser.float("freq_noise_exponent", DEFAULT_FREQ_NOISE_EXPONENT),
        )
    if noise is None:
        return NoiseModel(laser=laser_noise)
    return NoiseModel(laser=laser_noise, thermal=noise.bool("thermal", True), rin=noise.bool("rin", True),
                      pn=noise.bool("pn", True))


def __parse_oscillator__(table: Table) -> Oscillator:
    temperature = table.float("temperature_k", DEFAULT_TEMPERATURE)
    damping = table.enum("damping", DampingKind, DampingKind.STRUCTURAL)
    if ("csv" in table) == ("modes" in table):
        raise ConfigurationError("Give either a mode list (modes) or a CSV file (csv)",
                                 f"{table.key_path('csv')}, {table.key_path('modes')}")
    if "csv" in table:
        modes = read_modes_csv(table.file("csv"), damping)
    else:
        modes = []
        for mode in table.tables("modes"):
            modes.append(__build__(
                mode.key_path("").rstrip("."), MechMode.from_q,
                {"freq": "freq_hz", "modal_mass": "modal_mass_kg", "loss_factor": "q"},
                freq=mode.float("freq_hz"),
                modal_mass=mode.float("modal_mass_kg"),
                q=mode.float("q", DEFAULT_Q),
                damping_kind=mode.enum("damping", DampingKind, damping),
            ))
    overrides = {}
    for item in table.tables("q_overrides"):
        q = item.float("q")
        if not q > 0:
            raise ConfigurationError("Quality factors must be positive", item.key_path("q"))
        overrides[item.int("index")] = q
    if overrides:
        try:
            modes = apply_q_overrides(modes, overrides)
        except InvalidParameter as e:
            raise ConfigurationError(e.message, table.key_path("q_overrides")) from e
    return __build__("oscillator", Oscillator, {"modes": "modes", "temperature": "temperature_k"},
                     modes=tuple(modes), temperature=temperature)


def __parse_grid__(table: Optional[Table]) -> GridConfig:
    points = int(get_config("frequency_points", DEFAULT_FREQUENCY_POINTS))
    angle_points = int(get_config("angle_points", DEFAULT_ANGLE_POINTS))
    if table is None:
        return GridConfig(points=points, angle_points=angle_points)
    grid = GridConfig(
        f_min=table.float("f_min_hz", DEFAULT_F_MIN),
        f_max=table.float("f_max_hz", DEFAULT_F_MAX),
        points=table.int("points", points),
        angle_points=table.int("angle_points", angle_points),
        f_cap=table.float("f_cap_hz", None),
    )
    if not grid.f_min > 0:
        raise ConfigurationError("The frequency grid must start above 0 Hz", table.key_path("f_min_hz"))
    if not grid.f_max > grid.f_min:
        raise ConfigurationError("f_max_hz must exceed f_min_hz",
                                 f"{table.key_path('f_min_hz')}, {table.key_path('f_max_hz')}")
    if grid.points < 2:
        raise ConfigurationError("At least two frequencies are needed", table.key_path("points"))
    if grid.angle_points < 1:
        raise ConfigurationError("At least one angle is needed", table.key_path("angle_points"))
    if grid.f_cap is not None and not grid.f_cap > 0:
        raise ConfigurationError("f_cap_hz must be positive", table.key_path("f_cap_hz"))
    return grid


def __parse_detection__(table: Optional[Table]) -> tuple[Measurement, Optional[HomodyneSetup]]:
    if table is None:
        return Measurement.DIRECT, None
    measurement = table.enum("measurement", Measurement, Measurement.DIRECT)
    if measurement is Measurement.DIRECT:
        return measurement, None
    t2 = table.float("t2")
    setup = __build__(
        "detection", HomodyneSetup,
        t2=t2,
        r2=table.float("r2", 1.0 - t2),
        e_signal=table.float("e_signal", 1.0),
        e_lo=table.float("e_lo", 0.0),
        theta=math.radians(table.float("theta_deg", 0.0)),
    )
    return measurement, setup


def __parse_lock__(table: Optional[Table]) -> Optional[LockConfig]:
    if table is None:
        return None
    lock = LockConfig(
        gain=table.float("gain", 1.0),
        zeros_hz=table.floats("zeros_hz", ()),
        poles_hz=table.floats("poles_hz", ()),
        f_min=table.float("f_min_hz", 10.0),
        f_max=table.float("f_max_hz", 1e6),
        points_per_decade=table.int("points_per_decade", 100),
        plant=table.str("plant", "open_loop"),
        plant_csv=table.file("plant_csv") if "plant_csv" in table else None,
    )
    if lock.plant not in LOCK_PLANTS:
        raise ConfigurationError(f"Expected one of {list(LOCK_PLANTS)}", table.key_path("plant"))
    if not 0 < lock.f_min < lock.f_max:
        raise ConfigurationError("Expected 0 < f_min_hz < f_max_hz",
                                 f"{table.key_path('f_min_hz')}, {table.key_path('f_max_hz')}")
    if lock.points_per_decade < MIN_POINTS_PER_DECADE:
        raise ConfigurationError(f"At least {MIN_POINTS_PER_DECADE} points per decade are needed",
                                 table.key_path("points_per_decade"))
    return lock


def __parse_geometry__(table: Optional[Table]) -> Optional[CantileverGeometry]:
    if table is None:
        return None
    defaults = CantileverGeometry.__dataclass_fields__
    values = {}
    for name, key in GEOMETRY_KEYS.items():
        default = defaults[name].default
        values[name] = table.float(key, REQUIRED if name in ("length_l", "radius_r", "width_w") else default)
    return __build__("geometry", CantileverGeometry, GEOMETRY_KEYS, **values)


def __parse_mode_shapes__(root: Table) -> tuple[tuple, Optional[BeamProfile]]:
    shapes = []
    for item in root.tables("mode_shapes"):
        path = item.file("csv")
        volume_norm = item.float("volume_norm_kg")
        shape = __build__(item.key_path("").rstrip("."), read_mode_shape_csv, {"volume_norm": "volume_norm_kg"},
                          path=path, volume_norm=volume_norm)
        shapes.append(ModeShapeConfig(path, shape))
    beam_table = root.table("beam", required=bool(shapes))
    beam = None
    if beam_table is not None:
        beam = __build__("beam", BeamProfile, {"waist_radius": "waist_m", "center_x": "center_x_m",
                                               "center_y": "center_y_m"},
                         waist_radius=beam_table.float("waist_m"),
                         center_x=beam_table.float("center_x_m", 0.0),
                         center_y=beam_table.float("center_y_m", 0.0))
    return tuple(shapes), beam


def __parse_sweep__(table: Optional[Table]) -> Optional[SweepConfig]:
    if table is None:
        return None
    axes_table = table.table("axes", required=True)
    axes = {}
    for name in axes_table.keys():
        if name not in SWEEP_AXES:
            raise ConfigurationError(f"Unknown sweep axis; expected one of {list(SWEEP_AXES)}",
                                     axes_table.key_path(name))
        values = axes_table.floats(name)
        if not values:
            raise ConfigurationError("An axis needs at least one value", axes_table.key_path(name))
        axes[name] = values
    cap = table.int("cap", int(get_config("sweep_cap", DEFAULT_SWEEP_CAP)))
    if cap < 1:
        raise ConfigurationError("The cap must be positive", table.key_path("cap"))
    f_cap_ratio = table.float("f_cap_ratio", DEFAULT_F_CAP_RATIO)
    if not f_cap_ratio > 0:
        raise ConfigurationError("Must be positive", table.key_path("f_cap_ratio"))
    return SweepConfig(axes, cap, table.enum("objective", Objective, Objective.MIN_N_MIN), f_cap_ratio)


def load_toml(path: Union[str, Path]) -> dict:
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as f:
            return toml.load(f)
    except OSError as e:
        raise ConfigurationError(f"Unable to read {path}: {e}") from e
    except toml.TomlDecodeError as e:
        raise ConfigurationError(f"Invalid TOML in {path}: {e}") from e


def parse_config_data(data: dict, base_dir: Optional[Path] = None, path: Optional[Path] = None) -> RunConfig:
    """Validate an already loaded configuration document"""
    root = Table(data, "", base_dir)
    version = root.int("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigurationError(f"Unsupported schema version {version} (expected {SCHEMA_VERSION})",
                                 "schema_version")
    root.warn_unknown({"schema_version", "cavity", "laser", "oscillator", "noise", "detection", "grid",
                       "lock", "geometry", "mode_shapes", "beam", "sweep"})
    cavity = __parse_cavity__(root.table("cavity", required=True))
    noise = __parse_noise__(root.table("laser"), root.table("noise"))
    oscillator_table = root.table("oscillator")
    oscillator = __parse_oscillator__(oscillator_table) if oscillator_table is not None else None
    measurement, homodyne = __parse_detection__(root.table("detection"))
    mode_shapes, beam = __parse_mode_shapes__(root)
    config = RunConfig(
        cavity=cavity,
        noise=noise,
        grid=__parse_grid__(root.table("grid")),
        oscillator=oscillator,
        measurement=measurement,
        homodyne=homodyne,
        lock=__parse_lock__(root.table("lock")),
        geometry=__parse_geometry__(root.table("geometry")),
        mode_shapes=mode_shapes,
        beam=beam,
        sweep=__parse_sweep__(root.table("sweep")),
        path=path,
        schema_version=version,
    )
    logger.debug("Parsed configuration: %r", config)
    return config


def parse_config(path: Union[str, Path]) -> RunConfig:
    """
    Read and validate a run configuration

    Relative file references are resolved against the directory of the configuration.

    :param path: the TOML file
    :return: the validated configuration
    :raises ConfigurationError: on missing keys, wrong types, unit or invariant violations
    """
    path = Path(path)
    return parse_config_data(load_toml(path), path.parent.resolve(), path)
