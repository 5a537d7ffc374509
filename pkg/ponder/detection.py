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
Single-photodiode homodyne readout and correlation-based verification of squeezing.

The signal is combined with a local oscillator (LO) on an unbalanced beam splitter;
the photodiode reads the quadrature φ_S of the signal along the resulting carrier.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import ponder.log as logging
from ponder.errors import InvalidParameter
from ponder.models import NoiseSource

# set up logging
logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class HomodyneSetup:
    #: power transmission of the combining splitter for the signal
    t2: float
    #: power reflection for the LO
    r2: float
    #: carrier amplitude of the signal, √W
    e_signal: float
    #: carrier amplitude of the LO, √W
    e_lo: float
    #: relative LO phase, rad
    theta: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.t2 <= 1.0 and 0.0 <= self.r2 <= 1.0) or abs(self.t2 + self.r2 - 1.0) > 1e-12:
            raise InvalidParameter("t2/r2", (self.t2, self.r2), "must be power fractions adding up to 1")
        if self.e_signal < 0 or self.e_lo < 0:
            raise InvalidParameter("e_signal/e_lo", (self.e_signal, self.e_lo), "amplitudes must be non-negative")

    @classmethod
    def from_transmission(cls, t2: float, e_signal: float, e_lo: float, theta: float = 0.0) -> HomodyneSetup:
        return cls(t2, 1.0 - t2, e_signal, e_lo, theta)

    @property
    def t(self) -> float:
        return math.sqrt(self.t2)

    @property
    def r(self) -> float:
        return math.sqrt(self.r2)

    @property
    def detected_power(self) -> float:
        """Carrier power on the photodiode, W"""
        x = self.r * self.e_lo * math.cos(self.theta) + self.t * self.e_signal
        y = self.r * self.e_lo * math.sin(self.theta)
        return x * x + y * y


def homodyne_angles(setup: HomodyneSetup) -> tuple[float, float]:
    """
    Measured quadrature with respect to the signal (φ_S) and to the LO (φ_LO), rad

    :raises InvalidParameter: if the two carriers cancel on the photodiode
    """
    lo = setup.r * setup.e_lo
    signal = setup.t * setup.e_signal
    if setup.detected_power <= 1e-30 * max(lo * lo + signal * signal, 1e-300):
        raise InvalidParameter("setup", setup, "the carrier vanishes on the photodiode")
    phi_s = math.atan2(lo * math.sin(setup.theta), lo * math.cos(setup.theta) + signal)
    phi_lo = math.atan2(-signal * math.sin(setup.theta), lo + signal * math.cos(setup.theta))
    logger.debug("Homodyne readout at phi_s = %.6g°, phi_lo = %.6g°", math.degrees(phi_s), math.degrees(phi_lo))
    return phi_s, phi_lo


def homodyne_spectrum(s_signal: float, t2: float, r2: float) -> float:
    """Noise on the photodiode relative to shot noise: t²S_S(φ_S) + r² for a shot-noise-limited LO"""
    if s_signal < 0:
        raise InvalidParameter("s_signal", s_signal, "must be non-negative")
    return t2 * s_signal + r2


def constant_power_lock(t2: float, e_signal: float, phi_s: float, detected_power: float) -> tuple[float, float]:
    """
    LO amplitude and phase reading quadrature `phi_s` while the photodiode power
    is held at `detected_power`

    :return: (e_lo in √W, θ in rad)
    """
    if not 0.0 <= t2 < 1.0:
        raise InvalidParameter("t2", t2, "the LO needs a non-zero reflection")
    if not detected_power > 0:
        raise InvalidParameter("detected_power", detected_power, "must be positive")
    r = math.sqrt(1.0 - t2)
    amplitude = math.sqrt(detected_power)
    x = amplitude * math.cos(phi_s) - math.sqrt(t2) * e_signal
    y = amplitude * math.sin(phi_s)
    e_lo, theta = math.hypot(x, y) / r, math.atan2(y, x)
    logger.debug("Constant-power lock at phi_s = %.6g°: e_lo = %.6g √W, theta = %.6g°",
                 math.degrees(phi_s), e_lo, math.degrees(theta))
    return e_lo, theta


def correlation(r_rel: float, s_da: float = 0.0, s_db: float = 0.0) -> float:
    """
    Normalised cross-spectrum of the two halves of a beam split 50/50,
    C = η(R-1)/(R+1), η = [(1 + S_da/(1+R))(1 + S_db/(1+R))]^(-1/2)

    :param r_rel: beam noise relative to shot noise
    :param s_da: dark noise of detector a, relative to the shot noise of its half
    :param s_db: dark noise of detector b
    """
    if not r_rel > 0:
        raise InvalidParameter("r_rel", r_rel, "must be positive")
    if s_da < 0 or s_db < 0:
        raise InvalidParameter("s_da/s_db", (s_da, s_db), "dark noise must be non-negative")
    eta = ((1 + s_da / (1 + r_rel)) * (1 + s_db / (1 + r_rel))) ** -0.5
    return eta * (r_rel - 1) / (r_rel + 1)


def noise_from_correlation(c: float) -> float:
    """Beam noise relative to shot noise from an ideal correlation measurement, R = (1+C)/(1-C)"""
    if not abs(c) < 1:
        raise InvalidParameter("c", c, "|c| must be below 1")
    return (1 + c) / (1 - c)


def correlation_from_squeezing(s_s: float, t2: float) -> float:
    """Correlation expected after the homodyne splitter for a signal noise `s_s` and ideal detectors"""
    return correlation(homodyne_spectrum(s_s, t2, 1.0 - t2))


def apply_homodyne(grid, setup: HomodyneSetup):
    """
    Noise grid as seen through the homodyne splitter: vacuum enters with weight r²,
    every source is attenuated by t²
    """
    logger.debug("Homodyne splitter on the %s grid: t² = %g", grid.port, setup.t2)
    layers = {}
    for source, layer in grid.layers.items():
        layers[source] = setup.t2 * layer + (setup.r2 if source is NoiseSource.QUANTUM else 0.0)
    return dataclasses.replace(grid, layers=layers)
