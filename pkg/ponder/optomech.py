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
Optical spring, cavity modulation gains and stability of the optomechanical loop.

The spring constant K_OS is positive (restoring) for blue detuning. Frequency
responses are evaluated at the Laplace variable s = i 2π f and accept scalar or
array frequencies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import numpy as np

import ponder.log as logging
from ponder.cavity import CavityConfig, DerivedCavity, exact_linewidth
from ponder.constants import MIN_POINTS_PER_DECADE, SPEED_OF_LIGHT
from ponder.errors import ConfigurationError, InvalidParameter
from ponder.mechanics import (Oscillator, parse_csv_float, read_csv_rows,
                              susceptibility)
from ponder.models import SpringMode

# set up logging
logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]
Response = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SpringResponse:
    """
    Optical spring at the requested frequency plus its DC summaries
    """
    #: K_OS(s = i2πf), N/m
    k_os: Union[complex, np.ndarray]
    #: DC value of K_OS, N/m
    k_dc: float
    #: modified cavity poles γ(1 ± iδ), rad/s
    gamma_plus: complex
    gamma_minus: complex
    #: γ(1 + δ²), rad/s
    gamma_0: float
    #: signed square of the spring frequency K_dc / m, (rad/s)²; None without a mass
    omega_os_squared: Optional[float] = None
    #: spring frequency, rad/s, negative for an anti-restoring spring
    omega_os: Optional[float] = None
    #: anti-damping rate 2Ω_OS²/γ₀, rad/s
    gamma_os: Optional[float] = None
    mode: SpringMode = SpringMode.APPROXIMATE

    @property
    def f_os(self) -> Optional[float]:
        """Spring frequency in Hz (signed)"""
        return None if self.omega_os is None else self.omega_os / (2 * math.pi)


@dataclass(frozen=True)
class EffectiveOscillator:
    """Mechanical mode dressed by the optical spring"""
    omega_om_squared: float
    #: signed effective frequency, rad/s (negative when anti-restoring)
    omega_om: float
    gamma_om: float

    @property
    def anti_restoring(self) -> bool:
        return self.omega_om_squared < 0

    @property
    def stable(self) -> bool:
        return self.omega_om_squared > 0 and self.gamma_om > 0

    def __iter__(self):
        yield self.omega_om
        yield self.gamma_om


@dataclass(frozen=True)
class RationalFilter:
    """
    Real-rational filter gain · Π(1 + s/ω_z) / Π(1 + s/ω_p), corner frequencies in Hz
    """
    gain: float = 1.0
    zeros_hz: tuple[float, ...] = ()
    poles_hz: tuple[float, ...] = ()

    def __post_init__(self):
        if not math.isfinite(self.gain):
            raise InvalidParameter("gain", self.gain, "must be finite")
        for name in ("zeros_hz", "poles_hz"):
            corners = tuple(float(c) for c in getattr(self, name))
            if any(not math.isfinite(c) or c == 0 for c in corners):
                raise InvalidParameter(name, corners, "corner frequencies must be finite and non-zero")
            object.__setattr__(self, name, corners)

    def __call__(self, f: ArrayLike) -> np.ndarray:
        s = 2j * math.pi * np.asarray(f, dtype=float)
        response = self.gain * np.ones_like(s)
        for z in self.zeros_hz:
            response = response * (1 + s / (2 * math.pi * z))
        for p in self.poles_hz:
            response = response / (1 + s / (2 * math.pi * p))
        return response


@dataclass(frozen=True)
class TabulatedResponse:
    """
    Measured frequency response, interpolated linearly in log f (real and imaginary parts)
    """
    freqs: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        freqs = np.asarray(self.freqs, dtype=float)
        values = np.asarray(self.values, dtype=complex)
        if freqs.ndim != 1 or freqs.shape != values.shape or len(freqs) < 2:
            raise InvalidParameter("freqs", freqs.shape, "expected matching 1-D arrays of at least two points")
        if np.any(freqs <= 0) or np.any(np.diff(freqs) <= 0):
            raise InvalidParameter("freqs", freqs, "frequencies must be positive and strictly increasing")
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "values", values)

    def __call__(self, f: ArrayLike) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        if np.any(f < self.freqs[0]) or np.any(f > self.freqs[-1]):
            raise InvalidParameter("f", (float(np.min(f)), float(np.max(f))), "outside the tabulated range")
        log_f = np.log10(f)
        log_grid = np.log10(self.freqs)
        return np.interp(log_f, log_grid, self.values.real) + 1j * np.interp(log_f, log_grid, self.values.imag)


@dataclass(frozen=True)
class LoopModel:
    #: frequency response of the plant vs Hz
    plant: Response
    filter: RationalFilter = field(default_factory=RationalFilter)
    label: str = "loop"

    def open_loop(self, f: ArrayLike) -> np.ndarray:
        return np.asarray(self.plant(f)) * self.filter(f)


@dataclass(frozen=True)
class MarginReport:
    #: unity-gain frequencies, Hz
    unity_gain_crossings: list[float]
    #: phase margins at the crossings, degrees
    phase_margins: list[float]
    #: gain margin at the first -180° crossing, dB
    gain_margin_db: Optional[float]
    stable: bool

    def to_dict(self) -> dict:
        return {
            "unity_gain_crossings_hz": self.unity_gain_crossings,
            "phase_margins_deg": self.phase_margins,
            "gain_margin_db": self.gain_margin_db,
            "stable": self.stable,
        }


@dataclass(frozen=True)
class BodeRow:
    f: float
    plant_mag_db: float
    plant_phase_deg: float
    filter_mag_db: float
    filter_phase_deg: float
    open_loop_mag_db: float
    open_loop_phase_deg: float


def __laplace__(f: ArrayLike) -> Union[complex, np.ndarray]:
    return 2j * math.pi * np.asarray(f, dtype=float)


def __poles__(derived: DerivedCavity) -> tuple[complex, complex, float]:
    gamma = derived.gamma_rad
    delta = derived.detuning
    return gamma * (1 + 1j * delta), gamma * (1 - 1j * delta), gamma * (1 + delta ** 2)


def __round_trip__(config: CavityConfig) -> tuple[float, float, float]:
    rho1 = math.sqrt(1.0 - config.t1 - config.l1)
    rho2 = math.sqrt(1.0 - config.t2 - config.l2)
    theta = config.detuning * 2 * math.pi * exact_linewidth(config) * config.length / SPEED_OF_LIGHT
    return rho1, rho2, theta


def __exact_denominator__(rho: float, theta: float, phi: np.ndarray) -> np.ndarray:
    z = np.exp(2j * phi)
    return 1 + rho ** 2 * z ** 2 - 2 * rho * z * math.cos(2 * theta)


def __spring__(config: CavityConfig, derived: DerivedCavity, f: ArrayLike, mode: SpringMode):
    k = 2 * math.pi / config.wavelength
    if mode is SpringMode.APPROXIMATE:
        gamma_plus, gamma_minus, _ = __poles__(derived)
        s = __laplace__(f)
        dc = 16 * k * derived.p_cav / (SPEED_OF_LIGHT * derived.total_loss) \
            * derived.detuning / (1 + derived.detuning ** 2)
        return dc / ((1 + s / gamma_plus) * (1 + s / gamma_minus))
    rho1, rho2, theta = __round_trip__(config)
    rho = rho1 * rho2
    phi = -2 * math.pi * np.asarray(f, dtype=float) * config.length / SPEED_OF_LIGHT
    numerator = 4 * k * (1 + rho2 ** 2 - config.t2) * derived.p_cav * rho * np.exp(2j * phi) * math.sin(2 * theta)
    return numerator / (SPEED_OF_LIGHT * __exact_denominator__(rho, theta, phi))


def optical_spring(config: CavityConfig, derived: DerivedCavity, f: ArrayLike,
                   mode: SpringMode = SpringMode.APPROXIMATE, mass: Optional[float] = None) -> SpringResponse:
    """
    Radiation-pressure rigidity of the detuned cavity

    :param config: the cavity configuration
    :param derived: the derived cavity quantities (provides the intracavity power)
    :param f: frequency (or array of frequencies), Hz
    :param mode: exact round-trip expression or lowest-order approximation
    :param mass: mass of the mirror mode, kg; enables the spring frequency and anti-damping
    :return: the spring response
    """
    mode = SpringMode.get(mode)
    gamma_plus, gamma_minus, gamma_0 = __poles__(derived)
    k_os = __spring__(config, derived, f, mode)
    k_dc = float(np.real(__spring__(config, derived, 0.0, mode)))
    omega_os_squared = omega_os = gamma_os = None
    if mass is not None:
        if not mass > 0:
            raise InvalidParameter("mass", mass, "must be positive")
        omega_os_squared = k_dc / mass
        omega_os = math.copysign(math.sqrt(abs(omega_os_squared)), omega_os_squared)
        gamma_os = 2 * omega_os_squared / gamma_0
    return SpringResponse(k_os=k_os, k_dc=k_dc, gamma_plus=gamma_plus, gamma_minus=gamma_minus,
                          gamma_0=gamma_0, omega_os_squared=omega_os_squared, omega_os=omega_os,
                          gamma_os=gamma_os, mode=mode)


def spring_frequency(config: CavityConfig, derived: DerivedCavity, mass: float) -> float:
    """Signed DC optical spring frequency f_OS in Hz"""
    return optical_spring(config, derived, 0.0, SpringMode.APPROXIMATE, mass=mass).f_os


def oscillator_spring(config: CavityConfig, derived: DerivedCavity, osc: Oscillator) -> SpringResponse:
    """DC spring acting on the fundamental mode of `osc`"""
    return optical_spring(config, derived, 0.0, SpringMode.APPROXIMATE, mass=osc.fundamental.modal_mass)


def modulation_gains(config: CavityConfig, derived: DerivedCavity, f: ArrayLike,
                     mode: SpringMode = SpringMode.APPROXIMATE) -> tuple:
    """
    Gains from unit amplitude and phase modulation of the input field to the
    relative intracavity power fluctuation

    :return: (g_in_am, g_in_pm)
    """
    mode = SpringMode.get(mode)
    if mode is SpringMode.APPROXIMATE:
        gamma_plus, gamma_minus, gamma_0 = __poles__(derived)
        s = __laplace__(f)
        delta = derived.detuning
        scale = 4 * config.t1 / derived.total_loss ** 2 / (1 + delta ** 2)
        poles = (1 + s / gamma_minus) * (1 + s / gamma_plus)
        return scale * (1 + s / gamma_0) / poles, -scale * delta * (s / gamma_0) / poles
    rho1, rho2, theta = __round_trip__(config)
    rho = rho1 * rho2
    phi = -2 * math.pi * np.asarray(f, dtype=float) * config.length / SPEED_OF_LIGHT
    z = np.exp(2j * phi)
    denominator = (1 + rho ** 2 - 2 * rho * math.cos(2 * theta)) * __exact_denominator__(rho, theta, phi)
    g_am = config.t1 * ((1 + rho ** 2 * z) * np.exp(1j * phi)
                        - 2 * rho * z * math.cos(2 * theta) * np.cos(phi)) / denominator
    g_pm = config.t1 * 2j * z * rho * math.sin(2 * theta) * np.sin(phi) / denominator
    return g_am, g_pm


def open_loop_gain(k_os: Union[complex, np.ndarray], chi: Union[complex, np.ndarray]):
    """Open-loop gain of the optomechanical loop, G_OL = χ K_OS"""
    return k_os * chi


def effective_oscillator(omega_m: float, gamma_m: float, spring: SpringResponse) -> EffectiveOscillator:
    """
    Mechanical mode dressed by the spring: Ω_OM² = Ω_m² + Ω_OS², Γ_OM = Γ_m − Γ_OS

    A negative Γ_OM (or Ω_OM²) is a reported state: the system needs external feedback.
    """
    omega_os_squared = spring.omega_os_squared or 0.0
    gamma_os = spring.gamma_os or 0.0
    omega_squared = omega_m ** 2 + omega_os_squared
    result = EffectiveOscillator(
        omega_om_squared=omega_squared,
        omega_om=math.copysign(math.sqrt(abs(omega_squared)), omega_squared),
        gamma_om=gamma_m - gamma_os,
    )
    if not result.stable:
        logger.info("Unstable optomechanical oscillator: %r", result)
    return result


def closed_loop_poles(effective: EffectiveOscillator) -> np.ndarray:
    """Roots of s² + Γ_OM s + Ω_OM²"""
    return np.roots([1.0, effective.gamma_om, effective.omega_om_squared])


def suppression_factor(omega_os: float, omega_m: float, gamma_m: float, f: ArrayLike) -> ArrayLike:
    """
    In-loop suppression of the ambient motion |Ω_OS² / (Ω_m² − Ω² + iΩΓ_m)|
    """
    omega = 2 * math.pi * np.asarray(f, dtype=float)
    if np.any(omega < 0):
        raise InvalidParameter("f", f, "the frequency must be non-negative")
    result = np.abs(omega_os ** 2 / (omega_m ** 2 - omega ** 2 + 1j * omega * gamma_m))
    return result if np.ndim(result) else float(result)


def optomechanical_open_loop(config: CavityConfig, derived: DerivedCavity, osc: Oscillator,
                             mode: SpringMode = SpringMode.APPROXIMATE) -> Response:
    """Frequency response G_OL(f) = χ(f) K_OS(f) of the oscillator in the cavity"""
    def response(f: np.ndarray) -> np.ndarray:
        return open_loop_gain(__spring__(config, derived, f, mode), susceptibility(osc, f))
    return response


def suppressed_plant(open_loop: Response) -> Response:
    """Plant seen by an external lock acting through the optical spring, 1 / (1 + G_OL)"""
    def response(f: np.ndarray) -> np.ndarray:
        return 1.0 / (1.0 + open_loop(f))
    return response


def __check_grid__(f_grid: Sequence[float]) -> np.ndarray:
    f = np.asarray(f_grid, dtype=float)
    if f.ndim != 1 or len(f) < 2:
        raise InvalidParameter("f_grid", len(f), "at least two frequencies are needed")
    if np.any(f <= 0) or np.any(np.diff(f) <= 0):
        raise InvalidParameter("f_grid", f, "frequencies must be positive and strictly increasing")
    decades = math.log10(f[-1] / f[0])
    density = (len(f) - 1) / decades
    if density < MIN_POINTS_PER_DECADE * (1 - 1e-9):
        raise InvalidParameter("f_grid", density,
                               f"the grid is too sparse: at least {MIN_POINTS_PER_DECADE} points per decade")
    return f


def __wrap_phase__(degrees: float) -> float:
    wrapped = (degrees + 180.0) % 360.0 - 180.0
    return 180.0 if wrapped == -180.0 else wrapped


def __interpolate__(x0: float, x1: float, y0: float, y1: float, y: float) -> float:
    if y1 == y0:
        return x0
    return x0 + (y - y0) * (x1 - x0) / (y1 - y0)


def loop_margins(loop: LoopModel, f_grid: Sequence[float]) -> MarginReport:
    """
    Unity-gain crossings, phase margins and gain margin of the open loop

    Crossings of |G| = 1 are located by linear interpolation of log|G| in log f; the phase
    margin is 180° minus the magnitude of the phase, wrapped to (-180°, 180°], at each crossing.
    The gain margin is read where Im G changes sign with Re G < 0 for the first time.

    :param loop: the loop model
    :param f_grid: sorted frequency grid, Hz, with at least 50 points per decade
    :return: the margin report
    :raises InvalidParameter: if the grid is unsorted or too sparse
    """
    f = __check_grid__(f_grid)
    g = np.asarray(loop.open_loop(f), dtype=complex)
    log_f = np.log10(f)
    log_mag = np.log10(np.abs(g))
    phase = np.degrees(np.unwrap(np.angle(g)))

    crossings: list[float] = []
    margins: list[float] = []
    for i in range(len(f)):
        at_unity = log_mag[i] == 0.0
        changes = i + 1 < len(f) and log_mag[i] * log_mag[i + 1] < 0
        if not (at_unity or changes):
            continue
        if at_unity:
            x, ph = log_f[i], phase[i]
        else:
            x = __interpolate__(log_f[i], log_f[i + 1], log_mag[i], log_mag[i + 1], 0.0)
            ph = phase[i] + (phase[i + 1] - phase[i]) * (x - log_f[i]) / (log_f[i + 1] - log_f[i])
        crossings.append(float(10 ** x))
        margins.append(float(180.0 - abs(__wrap_phase__(ph))))

    gain_margin = None
    for i in range(len(f)):
        if g[i].imag == 0.0 and g[i].real < 0:
            gain_margin = float(-20 * log_mag[i])
            break
        if i + 1 < len(f) and g[i].imag * g[i + 1].imag < 0:
            x = __interpolate__(log_f[i], log_f[i + 1], g[i].imag, g[i + 1].imag, 0.0)
            t = (x - log_f[i]) / (log_f[i + 1] - log_f[i])
            real = g[i].real + t * (g[i + 1].real - g[i].real)
            if real < 0:
                gain_margin = float(-20 * (log_mag[i] + t * (log_mag[i + 1] - log_mag[i])))
                break

    stable = all(m > 0 for m in margins) and (gain_margin is None or gain_margin > 0)
    report = MarginReport(unity_gain_crossings=crossings, phase_margins=margins,
                          gain_margin_db=gain_margin, stable=stable)
    logger.debug("Margins of %s: %r", loop.label, report)
    return report


def bode(loop: LoopModel, f_grid: Sequence[float]) -> list[BodeRow]:
    """Magnitude (dB) and phase (degrees) of plant, filter and open loop"""
    f = np.asarray(f_grid, dtype=float)
    plant = np.asarray(loop.plant(f), dtype=complex)
    filt = np.asarray(loop.filter(f), dtype=complex)
    open_loop = plant * filt

    def db(x):
        return 20 * np.log10(np.abs(x))

    def deg(x):
        return np.degrees(np.angle(x))

    return [BodeRow(*row) for row in zip(f, db(plant), deg(plant), db(filt), deg(filt),
                                         db(open_loop), deg(open_loop))]


def read_response_csv(path: Union[str, Path]) -> TabulatedResponse:
    """Read a measured response with columns `f_hz, re, im`"""
    path = Path(path)
    rows = read_csv_rows(path, ("f_hz", "re", "im"))
    freqs = [parse_csv_float(row, "f_hz", i, path) for i, row in rows]
    values = [complex(parse_csv_float(row, "re", i, path), parse_csv_float(row, "im", i, path)) for i, row in rows]
    try:
        return TabulatedResponse(np.array(freqs), np.array(values))
    except InvalidParameter as e:
        raise ConfigurationError(f"{e} in {path}") from e
