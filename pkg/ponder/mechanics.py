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
Multi-mode mechanical oscillator.

The susceptibility uses the e^{-iΩt} convention of the field equations, so a lossy
mode has a positive imaginary part and the thermal displacement PSD reads
S_x = 4 k_B T Im χ / Ω (single-sided).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np
from scipy.integrate import trapezoid
from scipy.interpolate import LinearNDInterpolator
from scipy.spatial import Delaunay

import ponder.log as logging
from ponder.constants import BOLTZMANN, DEFAULT_Q, DEFAULT_TEMPERATURE
from ponder.errors import ConfigurationError, InvalidParameter
from ponder.models import DampingKind, ModeKind

# set up logging
logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class MechMode:
    """A mechanical eigenmode seen by the cavity beam"""
    #: eigenfrequency, Hz
    freq: float
    #: modal mass, kg
    modal_mass: float
    #: loss factor φ = 1/Q
    loss_factor: float
    damping_kind: DampingKind = DampingKind.STRUCTURAL

    def __post_init__(self):
        object.__setattr__(self, "damping_kind", DampingKind.get(self.damping_kind))
        if not (math.isfinite(self.freq) and self.freq > 0):
            raise InvalidParameter("freq", self.freq, "the mode frequency must be positive")
        if not (math.isfinite(self.modal_mass) and self.modal_mass > 0):
            raise InvalidParameter("modal_mass", self.modal_mass, "the modal mass must be positive")
        if not 0 < self.loss_factor < 1:
            raise InvalidParameter("loss_factor", self.loss_factor, "must lie in (0, 1)")

    @classmethod
    def from_q(cls, freq: float, modal_mass: float, q: float = DEFAULT_Q,
               damping_kind: DampingKind = DampingKind.STRUCTURAL) -> MechMode:
        if not q > 1:
            raise InvalidParameter("q", q, "the quality factor must exceed 1")
        return cls(freq, modal_mass, 1.0 / q, damping_kind)

    @property
    def q(self) -> float:
        return 1.0 / self.loss_factor

    @property
    def omega(self) -> float:
        return 2 * math.pi * self.freq

    @property
    def damping_rate(self) -> float:
        """Energy damping rate Γ = Ω φ in rad/s (the full rate of the s² + Γs + Ω² form)"""
        return self.omega * self.loss_factor


@dataclass(frozen=True)
class Oscillator:
    """Set of uncorrelated mechanical modes at a common temperature"""
    modes: tuple[MechMode, ...]
    temperature: float = DEFAULT_TEMPERATURE

    def __post_init__(self):
        modes = tuple(sorted(self.modes, key=lambda m: m.freq))
        if not modes:
            raise InvalidParameter("modes", modes, "an oscillator needs at least one mode")
        for previous, mode in zip(modes, modes[1:]):
            if mode.freq == previous.freq:
                raise InvalidParameter("modes", mode.freq, "duplicate mode frequency")
        if not self.temperature > 0:
            raise InvalidParameter("temperature", self.temperature, "must be positive")
        object.__setattr__(self, "modes", modes)

    @property
    def fundamental(self) -> MechMode:
        return self.modes[0]

    @property
    def highest(self) -> MechMode:
        return self.modes[-1]

    def with_temperature(self, temperature: float) -> Oscillator:
        return replace(self, temperature=temperature)


@dataclass(frozen=True)
class SampledModeShape:
    """
    Out-of-plane displacement ψ_z of a mode sampled on the mirror surface
    """
    #: array of shape (N, 3) with columns x (m), y (m), ψ_z
    surface_samples: np.ndarray
    #: volume normalisation ∫ρ|ψ|², kg
    volume_norm: float

    def __post_init__(self):
        samples = np.asarray(self.surface_samples, dtype=float)
        if samples.ndim != 2 or samples.shape[1] != 3:
            raise InvalidParameter("surface_samples", samples.shape, "expected (x, y, psi_z) triples")
        if not self.volume_norm > 0:
            raise InvalidParameter("volume_norm", self.volume_norm, "must be positive")
        xy = samples[:, :2]
        if len(samples) < 3 or np.linalg.matrix_rank(xy - xy.mean(axis=0)) < 2:
            raise InvalidParameter("surface_samples", len(samples), "at least 3 non-collinear samples are needed")
        object.__setattr__(self, "surface_samples", samples)


@dataclass(frozen=True)
class BeamProfile:
    #: 1/e intensity radius, m
    waist_radius: float
    center_x: float = 0.0
    center_y: float = 0.0

    def __post_init__(self):
        if not self.waist_radius > 0:
            raise InvalidParameter("waist_radius", self.waist_radius, "must be positive")


@dataclass(frozen=True)
class ModalMass:
    """Outcome of the overlap between a mode shape and the beam"""
    #: laser-weighted displacement
    lwd: float
    #: modal mass in kg, None when the beam sits on a nodal point
    mass: Optional[float]

    @property
    def unbounded(self) -> bool:
        return self.mass is None


@dataclass(frozen=True)
class CantileverGeometry:
    """
    Mirror pad of radius R on a cantilever of length L and width W
    """
    length_l: float
    radius_r: float
    width_w: float
    thickness_cantilever: float = 225e-9
    thickness_mirror: float = 4e-6
    youngs_modulus: float = 85e9
    shear_modulus: float = 60e9
    density_mirror: float = 4562.0
    density_cantilever: float = 5316.0

    def __post_init__(self):
        for name, value in self.__dict__.items():
            if not (math.isfinite(value) and value > 0):
                raise InvalidParameter(name, value, "must be positive")


@dataclass(frozen=True)
class AnalyticMode:
    kind: ModeKind
    freq: float
    #: bending order n, None for the fundamental and torsional modes
    order: Optional[int] = field(default=None)


# eigenvalues of the clamped-free beam for the bending orders 3..5
BENDING_EIGENVALUES = {3: 4.7, 4: 7.9, 5: 11.0}


def __as_frequency__(f: ArrayLike) -> np.ndarray:
    return np.asarray(f, dtype=float)


def mode_susceptibility(mode: MechMode, f: ArrayLike) -> ArrayLike:
    f = __as_frequency__(f)
    if mode.damping_kind is DampingKind.STRUCTURAL:
        loss = mode.freq ** 2 * mode.loss_factor
    else:
        loss = f * mode.freq * mode.loss_factor
    return 1.0 / ((2 * math.pi) ** 2 * mode.modal_mass * (mode.freq ** 2 - f ** 2 - 1j * loss))


def susceptibility(osc: Oscillator, f: ArrayLike) -> ArrayLike:
    """
    Displacement response to a force at the beam spot, m/N

    :param osc: the oscillator
    :param f: frequency or array of frequencies (Hz, ≥ 0)
    :return: the complex susceptibility (sum over the modes)
    """
    if np.any(__as_frequency__(f) < 0):
        raise InvalidParameter("f", f, "the frequency must be non-negative")
    return sum(mode_susceptibility(mode, f) for mode in osc.modes)


def __check_positive_frequency__(f: ArrayLike) -> np.ndarray:
    f = __as_frequency__(f)
    if np.any(f <= 0):
        raise InvalidParameter("f", f, "the frequency must be positive")
    return f


def thermal_force_psd(mode: MechMode, temperature: float, f: ArrayLike) -> ArrayLike:
    """
    Single-sided thermal force PSD of a mode, N²/Hz

    Structural damping gives 4 k_B T m Ω₀² φ / Ω, viscous damping the white 4 k_B T m Γ.
    """
    f = __check_positive_frequency__(f)
    if mode.damping_kind is DampingKind.STRUCTURAL:
        psd = 4 * BOLTZMANN * temperature * mode.modal_mass * mode.omega ** 2 * mode.loss_factor / (2 * math.pi * f)
    else:
        psd = 4 * BOLTZMANN * temperature * mode.modal_mass * mode.damping_rate * np.ones_like(f)
    return psd if np.ndim(psd) else float(psd)


def thermal_displacement_psd(osc: Oscillator, f: ArrayLike) -> ArrayLike:
    """
    Single-sided thermal displacement PSD, m²/Hz: the uncorrelated sum of
    |χₙ|² S_F,n over the modes
    """
    f = __check_positive_frequency__(f)
    psd = sum(np.abs(mode_susceptibility(mode, f)) ** 2 * thermal_force_psd(mode, osc.temperature, f)
              for mode in osc.modes)
    return psd if np.ndim(psd) else float(psd)


def effective_thermal_force_psd(osc: Oscillator, f: ArrayLike) -> ArrayLike:
    """
    Force PSD that, applied through the total susceptibility, reproduces the
    multi-mode thermal displacement
    """
    chi = susceptibility(osc, __check_positive_frequency__(f))
    return thermal_displacement_psd(osc, f) / np.abs(chi) ** 2


def modal_mass(shape: SampledModeShape, beam: BeamProfile, resolution: int = 401) -> ModalMass:
    """
    Modal mass seen by a Gaussian beam

    The samples are triangulated and linearly interpolated on a regular grid spanning
    ±5 waist radii around the beam centre (outside the samples ψ_z = 0); the weighted
    displacement is integrated with the trapezoidal rule.

    :param shape: the sampled mode shape
    :param beam: the beam profile
    :param resolution: the number of grid points per axis (made odd)
    :return: the laser-weighted displacement and the modal mass, unbounded on a nodal point
    :raises InvalidParameter: if the beam centre lies outside the sampled surface
    """
    samples = shape.surface_samples
    triangulation = Delaunay(samples[:, :2])
    center = np.array([[beam.center_x, beam.center_y]])
    if triangulation.find_simplex(center)[0] < 0:
        raise InvalidParameter("beam", (beam.center_x, beam.center_y),
                               "the beam centre lies outside the sampled surface")
    interpolator = LinearNDInterpolator(triangulation, samples[:, 2], fill_value=0.0)

    n = resolution if resolution % 2 else resolution + 1
    r = beam.waist_radius
    offsets = np.linspace(-5 * r, 5 * r, n)
    xs = beam.center_x + offsets
    ys = beam.center_y + offsets
    grid_x, grid_y = np.meshgrid(xs, ys)
    psi = np.nan_to_num(interpolator(grid_x, grid_y))
    weight = np.exp(-(offsets[None, :] ** 2 + offsets[:, None] ** 2) / r ** 2) / (math.pi * r ** 2)

    lwd = float(trapezoid(trapezoid(psi * weight, xs, axis=1), ys))
    scale = float(trapezoid(trapezoid(np.abs(psi) * weight, xs, axis=1), ys))
    if abs(lwd) <= 1e-9 * scale or lwd == 0.0:
        logger.warning("The beam sits on a nodal point of the mode: unbounded modal mass")
        return ModalMass(lwd=lwd, mass=None)
    return ModalMass(lwd=lwd, mass=shape.volume_norm / lwd ** 2)


def analytic_modes(geom: CantileverGeometry) -> list[AnalyticMode]:
    """
    Closed-form estimates of the cantilever modes: the two fundamental
    pendulum modes of the mirror pad, the torsional mode and the bending modes n = 3..5
    """
    y = geom.youngs_modulus
    tau_c = geom.thickness_cantilever
    tau_m = geom.thickness_mirror
    length = geom.length_l
    radius = geom.radius_r
    width = geom.width_w
    rho_m = geom.density_mirror
    rho_c = geom.density_cantilever

    pad = rho_m * math.pi ** 3 * radius ** 2 * (length + radius) ** 3 * tau_m
    modes = [
        AnalyticMode(ModeKind.FUND_Z, 0.25 * math.sqrt(y * width * tau_c ** 3 / pad)),
        AnalyticMode(ModeKind.FUND_Y, 0.25 * math.sqrt(y * width ** 3 * tau_c / pad)),
        AnalyticMode(ModeKind.TORSION, 0.1 * math.sqrt(geom.shear_modulus * width * tau_c ** 3
                                                       / (length * radius ** 4 * rho_m * tau_m))),
    ]
    for n, eigenvalue in BENDING_EIGENVALUES.items():
        prefactor = eigenvalue ** 2 / (4 * math.pi)
        modes.append(AnalyticMode(ModeKind.BEND_Z,
                                  prefactor * math.sqrt(tau_c ** 2 * y / (3 * length ** 4 * rho_c)), n))
        modes.append(AnalyticMode(ModeKind.BEND_Y,
                                  prefactor * math.sqrt(width ** 2 * y / (3 * rho_c * length ** 4)), n))
    return sorted(modes, key=lambda m: m.freq)


def apply_q_overrides(modes: Sequence[MechMode], overrides: dict[int, float]) -> list[MechMode]:
    """
    Replace the quality factor of selected modes (indices refer to the list sorted by frequency)
    """
    modes = sorted(modes, key=lambda m: m.freq)
    for index, q in overrides.items():
        if not 0 <= index < len(modes):
            raise InvalidParameter("q_overrides.index", index, f"no mode with index {index}")
        modes[index] = replace(modes[index], loss_factor=1.0 / q)
    return modes


def read_csv_rows(path: Path, columns: Iterable[str]) -> list[tuple[int, dict]]:
    columns = list(columns)
    try:
        with open(path, newline="", encoding="utf-8") as f:
            reader = csv.DictReader(line for line in f if not line.lstrip().startswith("#"))
            missing = [c for c in columns if c not in (reader.fieldnames or [])]
            if missing:
                raise ConfigurationError(f"Missing column(s) {missing} in {path}")
            return [(i, row) for i, row in enumerate(reader, start=1)]
    except OSError as e:
        raise ConfigurationError(f"Unable to read {path}: {e}") from e


def parse_csv_float(row: dict, column: str, index: int, path: Path) -> float:
    try:
        return float(row[column])
    except (TypeError, ValueError):
        raise ConfigurationError(f"Invalid value {row[column]!r} for column {column!r} in {path}", row=index)


def read_modes_csv(path: Union[str, Path],
                   damping_kind: DampingKind = DampingKind.STRUCTURAL) -> list[MechMode]:
    """
    Read a mode list with columns `freq_hz, modal_mass_kg[, q]`

    :raises ConfigurationError: if the file is malformed or the frequencies are not strictly increasing
    """
    path = Path(path)
    modes: list[MechMode] = []
    previous = None
    for index, row in read_csv_rows(path, ("freq_hz", "modal_mass_kg")):
        freq = parse_csv_float(row, "freq_hz", index, path)
        mass = parse_csv_float(row, "modal_mass_kg", index, path)
        q = parse_csv_float(row, "q", index, path) if row.get("q") not in (None, "") else DEFAULT_Q
        if previous is not None and freq <= previous[1]:
            raise ConfigurationError(
                f"Mode frequencies must be strictly increasing: row {index} ({freq} Hz) "
                f"follows row {previous[0]} ({previous[1]} Hz) in {path}", row=index)
        try:
            modes.append(MechMode.from_q(freq, mass, q, damping_kind))
        except InvalidParameter as e:
            raise ConfigurationError(f"{e} in {path}", row=index) from e
        previous = (index, freq)
    if not modes:
        raise ConfigurationError(f"No modes found in {path}")
    return modes


def read_mode_shape_csv(path: Union[str, Path], volume_norm: float) -> SampledModeShape:
    """Read a mode shape point cloud with columns `x_m, y_m, psi_z`"""
    path = Path(path)
    rows = read_csv_rows(path, ("x_m", "y_m", "psi_z"))
    samples = [[parse_csv_float(row, c, i, path) for c in ("x_m", "y_m", "psi_z")] for i, row in rows]
    return SampledModeShape(np.array(samples, dtype=float), volume_norm)
