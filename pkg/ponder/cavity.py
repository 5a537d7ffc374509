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
Optical configuration of the cavity and the quantities derived from it.

Conventions: configuration and reports use Hz; the linewidth ``gamma_hwhm`` is the
half width at half maximum in Hz (multiply by 2π for the cavity decay rate in rad/s).
Noise spectral densities are single-sided and normalised to shot noise.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

import ponder.log as logging
from ponder.constants import (DEFAULT_FREQ_NOISE_COEFF,
                              DEFAULT_FREQ_NOISE_EXPONENT, DEFAULT_RIN_ASD,
                              DEFAULT_WAVELENGTH, HBAR, PLANCK,
                              SPEED_OF_LIGHT)
from ponder.errors import InvalidParameter, NumericalError
from ponder.models import MeasurementPort, NoiseSource, PowerKind

# set up logging
logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PowerSpec:
    """
    Power figure of a configuration, tagged with its interpretation
    """
    #: how `watts` is to be read
    kind: PowerKind
    #: the power in watts
    watts: float

    def __post_init__(self):
        object.__setattr__(self, "kind", PowerKind.get(self.kind))
        if not math.isfinite(self.watts) or self.watts <= 0:
            raise InvalidParameter("power.watts", self.watts, "must be a positive number of watts")


@dataclass(frozen=True)
class CavityConfig:
    """
    Optical parameters of the Fabry-Perot cavity.

    Mirror transmissions and losses are power fractions; `detuning` is in units
    of the linewidth (positive for blue detuning).
    """
    length: float
    t1: float
    t2: float
    detuning: float
    power_spec: PowerSpec
    wavelength: float = DEFAULT_WAVELENGTH
    l1: float = 0.0
    l2: float = 0.0
    mode_matching: float = 1.0
    measurement_port: MeasurementPort = MeasurementPort.TRANSMISSION

    def __post_init__(self):
        object.__setattr__(self, "measurement_port", MeasurementPort.get(self.measurement_port))
        for name in ("length", "wavelength"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise InvalidParameter(name, value, "must be positive")
        for name in ("t1", "t2"):
            value = getattr(self, name)
            if not 0 < value < 1:
                raise InvalidParameter(name, value, "must lie in (0, 1)")
        for name in ("l1", "l2"):
            value = getattr(self, name)
            if not 0 <= value < 1:
                raise InvalidParameter(name, value, "must lie in [0, 1)")
        total = self.t1 + self.t2 + self.l1 + self.l2
        if total >= 1:
            raise InvalidParameter("t1+t2+l1+l2", total, "mirror transmissions and losses must sum below 1")
        if not 0 < self.mode_matching <= 1:
            raise InvalidParameter("mode_matching", self.mode_matching, "must lie in (0, 1]")
        if not math.isfinite(self.detuning):
            raise InvalidParameter("detuning", self.detuning, "must be finite")

    @property
    def total_loss(self) -> float:
        return self.t1 + self.t2 + self.l2

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class DerivedCavity:
    """
    Quantities derived from a :class:`CavityConfig` (lowest order in the round-trip loss)
    """
    #: half width at half maximum, Hz
    gamma_hwhm: float
    finesse: float
    #: round-trip loss T1 + T2 + L2
    total_loss: float
    escape_refl: float
    escape_trans: float
    escape_loss: float
    #: intracavity power at the configured detuning, W
    p_cav: float
    #: input power coupled to the cavity mode, W
    p_in: float
    #: laser power needed once mode matching is accounted for, W
    p_in_required: float
    p_trans: float
    p_refl: float
    #: rotation of the carrier with respect to the laser, rad
    carrier_rotation: float
    #: squeezing angle of an ideal measurement port, rad
    xi0: float
    #: free spectral range, Hz
    free_spectral_range: float
    detuning: float

    @property
    def gamma_rad(self) -> float:
        """Cavity amplitude decay rate in rad/s"""
        return 2 * math.pi * self.gamma_hwhm

    def to_dict(self) -> dict:
        result = asdict(self)
        result["gamma_rad"] = self.gamma_rad
        return result


@dataclass(frozen=True)
class LaserNoise:
    """
    Classical noise of the laser: intensity noise amplitude spectral density and
    the frequency-noise law S_ff(f) = coeff / f^exponent (Hz²/Hz)
    """
    rin_asd: float = DEFAULT_RIN_ASD
    freq_noise_coeff: float = DEFAULT_FREQ_NOISE_COEFF
    freq_noise_exponent: float = DEFAULT_FREQ_NOISE_EXPONENT

    def __post_init__(self):
        if not self.rin_asd >= 0:
            raise InvalidParameter("rin_asd", self.rin_asd, "must be non-negative")
        if not self.freq_noise_coeff >= 0:
            raise InvalidParameter("freq_noise_coeff", self.freq_noise_coeff, "must be non-negative")

    def frequency_noise(self, f: float) -> float:
        """Frequency noise PSD S_ff in Hz²/Hz at `f`"""
        return self.freq_noise_coeff / f ** self.freq_noise_exponent


@dataclass(frozen=True)
class NoiseModel:
    """
    Classical noise sources and the switches enabling them
    """
    laser: LaserNoise = field(default_factory=LaserNoise)
    thermal: bool = True
    rin: bool = True
    pn: bool = True

    def is_enabled(self, source: NoiseSource) -> bool:
        if source is NoiseSource.QUANTUM:
            return True
        return bool(getattr(self, source.value))

    @classmethod
    def quantum_only(cls, laser: LaserNoise | None = None) -> NoiseModel:
        return cls(laser=laser or LaserNoise(), thermal=False, rin=False, pn=False)


@dataclass(frozen=True)
class LambdaParams:
    """
    Dimensionless strengths of the classical noises relative to the quantum radiation pressure
    """
    lambda_th: float
    lambda_rin: float
    lambda_pn: float
    lambda_cln: float
    #: squared optomechanical coupling 4πP_cav/(ħLλ), rad²/s² per m²
    g_squared: float


def photon_energy(wavelength: float) -> float:
    """Energy ħω of a photon of the given wavelength, J"""
    return PLANCK * SPEED_OF_LIGHT / wavelength


def __check_finite__(values: dict) -> None:
    for name, value in values.items():
        if not np.isfinite(value):
            raise NumericalError(f"Non-finite derived quantity {name} = {value!r}")


def derive(config: CavityConfig) -> DerivedCavity:
    """
    Compute the derived cavity quantities

    Whichever of the input and intracavity powers is not given by the power specification
    is solved from the resonant build-up 4E^R/𝓣 and the Lorentzian 1/(1+δ²).
    Mode matching only scales the laser power required at the input.

    :param config: the cavity configuration
    :return: the derived quantities
    :raises NumericalError: if any derived quantity is not finite
    """
    total_loss = config.total_loss
    delta = config.detuning
    escape_refl = config.t1 / total_loss
    escape_trans = config.t2 / total_loss
    escape_loss = config.l2 / total_loss
    lorentzian = 1.0 / (1.0 + delta ** 2)
    build_up = 4.0 * escape_refl / total_loss

    kind = config.power_spec.kind
    watts = config.power_spec.watts
    if kind is PowerKind.INPUT:
        p_in = watts
        p_cav = build_up * p_in * lorentzian
    elif kind is PowerKind.RESONANT_CAVITY:
        p_cav = watts * lorentzian
        p_in = watts / build_up
    else:
        p_cav = watts
        p_in = watts / (build_up * lorentzian)

    gamma_rad = SPEED_OF_LIGHT * total_loss / (4.0 * config.length)
    values = dict(
        gamma_hwhm=gamma_rad / (2 * math.pi),
        finesse=2 * math.pi / total_loss,
        total_loss=total_loss,
        escape_refl=escape_refl,
        escape_trans=escape_trans,
        escape_loss=escape_loss,
        p_cav=p_cav,
        p_in=p_in,
        p_in_required=p_in / config.mode_matching,
        p_trans=config.t2 * p_cav,
        p_refl=p_in * (1.0 - 4.0 * escape_refl * (1.0 - escape_refl) * lorentzian),
        carrier_rotation=math.atan(-delta),
        xi0=0.5 * math.atan(delta),
        free_spectral_range=SPEED_OF_LIGHT / (2.0 * config.length),
        detuning=delta,
    )
    __check_finite__(values)
    derived = DerivedCavity(**values)
    logger.debug("Derived cavity: %r", derived)
    return derived


def __round_trip_amplitude__(config: CavityConfig) -> float:
    rho1 = math.sqrt(1.0 - config.t1 - config.l1)
    rho2 = math.sqrt(1.0 - config.t2 - config.l2)
    return rho1 * rho2


def exact_linewidth(config: CavityConfig) -> float:
    """
    Linewidth (HWHM, Hz) from the round-trip amplitude ρ₁ρ₂, valid
    as long as the detuning is small compared to the free spectral range
    """
    rho = __round_trip_amplitude__(config)
    return SPEED_OF_LIGHT * (1.0 - rho) / (2.0 * config.length * 2 * math.pi * math.sqrt(rho))


def exact_finesse(config: CavityConfig) -> float:
    rho = __round_trip_amplitude__(config)
    return math.pi * math.sqrt(rho) / (1.0 - rho)


def classical_noise_psd(laser: LaserNoise, p_in: float, wavelength: float, f: float) -> tuple[float, float]:
    """
    Intensity and phase noise of the laser, normalised to the shot noise of `p_in`

    :param laser: the laser noise model
    :param p_in: the laser power, W
    :param wavelength: the laser wavelength, m
    :param f: the Fourier frequency, Hz
    :return: (S_RIN, S_PN)
    :raises InvalidParameter: if f ≤ 0 or p_in < 0
    """
    if not f > 0:
        raise InvalidParameter("f", f, "the frequency must be positive")
    if p_in < 0:
        raise InvalidParameter("p_in", p_in, "must be non-negative")
    photon_rate = p_in / (2.0 * photon_energy(wavelength))
    s_rin = laser.rin_asd ** 2 * photon_rate
    s_pn = laser.frequency_noise(f) / f ** 2 * photon_rate
    return s_rin, s_pn


def lambda_params(derived: DerivedCavity, config: CavityConfig, laser: LaserNoise,
                  s_f_th: float, f: float) -> LambdaParams:
    """
    Noise strengths λ of the thermal force and of the laser noise

    :param derived: the derived cavity quantities
    :param config: the cavity configuration
    :param laser: the laser noise model
    :param s_f_th: the thermal force PSD at `f`, N²/Hz
    :param f: the Fourier frequency, Hz
    :raises InvalidParameter: if the intracavity power or the frequency is not positive
    """
    p_cav = derived.p_cav
    if not p_cav > 0:
        raise InvalidParameter("p_cav", p_cav, "the intracavity power must be positive")
    if not f > 0:
        raise InvalidParameter("f", f, "the frequency must be positive")
    total_loss = derived.total_loss
    wavelength = config.wavelength

    lambda_th = s_f_th * SPEED_OF_LIGHT * total_loss * wavelength / (16 * math.pi * HBAR * p_cav)
    photon_rate = p_cav / (2.0 * photon_energy(wavelength))
    escape_factor = total_loss ** 2 / (4.0 * config.t1)
    lambda_rin = laser.rin_asd ** 2 * photon_rate * escape_factor
    lambda_pn = laser.frequency_noise(f) / f ** 2 * photon_rate * escape_factor * config.detuning ** 2
    return LambdaParams(
        lambda_th=lambda_th,
        lambda_rin=lambda_rin,
        lambda_pn=lambda_pn,
        lambda_cln=lambda_rin + lambda_pn,
        g_squared=4 * math.pi * p_cav / (HBAR * config.length * wavelength),
    )
