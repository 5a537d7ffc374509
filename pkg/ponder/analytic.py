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
Closed-form squeezing results, valid when the measurement frequency lies well above the
mechanical resonance and well below both the optical spring and the cavity linewidth.

All covariance matrices are in the (amplitude, phase) quadrature basis and normalised to
shot noise; classical noises are first-order perturbations of strength λ.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

import ponder.log as logging
from ponder.constants import (BOLTZMANN, HBAR, PERTURBATION_WARNING_LEVEL,
                              SPEED_OF_LIGHT)
from ponder.errors import InvalidParameter
from ponder.models import ClassicalNoise, MeasurementPort

# set up logging
logger = logging.getLogger(__name__)

# (port, noise) pairs with a closed-form perturbation
SUPPORTED_PERTURBATIONS = (
    (MeasurementPort.TRANSMISSION, ClassicalNoise.THERMAL),
    (MeasurementPort.TRANSMISSION, ClassicalNoise.CLN),
    (MeasurementPort.REFLECTION, ClassicalNoise.THERMAL),
    (MeasurementPort.REFLECTION, ClassicalNoise.RIN),
    (MeasurementPort.REFLECTION, ClassicalNoise.PN),
)


@dataclass(frozen=True)
class SqueezeAngle:
    """Squeezing quadrature ξ₀ of the noiseless cavity, tan 2ξ₀ = δ"""
    xi0: float
    delta: float

    def __post_init__(self):
        if not abs(self.xi0) < math.pi / 4:
            raise InvalidParameter("xi0", self.xi0, "must lie in (-π/4, π/4)")
        if abs(math.tan(2 * self.xi0) - self.delta) > 1e-12 * max(1.0, abs(self.delta)):
            raise InvalidParameter("xi0", self.xi0, f"tan(2·xi0) differs from delta = {self.delta}")

    @property
    def degrees(self) -> float:
        return math.degrees(self.xi0)


@dataclass(frozen=True)
class PerturbationResult:
    """First-order change of squeezing, anti-squeezing and ellipse orientation"""
    d_squeeze: float
    d_antisqueeze: float
    #: rotation of the squeezing ellipse, rad
    rotation: float


@dataclass(frozen=True)
class Ellipse:
    """Noise ellipse of a covariance matrix"""
    s_min: float
    s_max: float
    #: orientation of the squeezed axis, rad, in (-π/2, π/2]
    angle: float


@dataclass(frozen=True)
class QRPNEstimate:
    #: radiation-pressure displacement ASD, m/√Hz
    x_qrpn: float
    #: thermal displacement ASD, m/√Hz
    x_th: float
    ratio: float


def __check_fraction__(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise InvalidParameter(name, value, "must lie in [0, 1]")


def __check_detuning__(delta: float) -> None:
    if not math.isfinite(delta):
        raise InvalidParameter("delta", delta, "must be finite")
    if delta == 0:
        raise InvalidParameter("delta", delta, "no squeezing without detuning")


def __warn_first_order__(**strengths: float) -> None:
    for name, value in strengths.items():
        if value > PERTURBATION_WARNING_LEVEL:
            logger.warning("%s = %g is beyond the validity of the first-order formulas", name, value)


def ideal_squeeze(delta: float) -> tuple[float, float]:
    """
    Squeezing of a lossless single-port cavity and its quadrature

    :return: (S_ideal, ξ_min) with S_ideal = δ²/(2 + δ² + 2√(1+δ²)), ξ_min = ½ arctan δ
    """
    if not math.isfinite(delta):
        raise InvalidParameter("delta", delta, "must be finite")
    s_ideal = delta ** 2 / (2 + delta ** 2 + 2 * math.sqrt(1 + delta ** 2))
    return s_ideal, 0.5 * math.atan(delta)


def squeeze_angle(delta: float) -> SqueezeAngle:
    return SqueezeAngle(0.5 * math.atan(delta), delta)


def thermal_null_quadrature(delta: float) -> float:
    """Quadrature (rad) free of thermal noise: 2ξ₀ = arctan δ"""
    return math.atan(delta)


def sigma_quantum_port(e: float, delta: float) -> tuple[np.ndarray, float]:
    """
    Covariance of a port with escape efficiency `e`, quantum noise only

    :return: the matrix [[1, -2E/δ], [-2E/δ, 1 + 4E/δ²]] and its smaller eigenvalue
             S_Q = E·S_ideal + 1 - E
    :raises InvalidParameter: if δ = 0 or E is not in [0, 1]
    """
    __check_fraction__("e", e)
    __check_detuning__(delta)
    matrix = np.array([[1.0, -2 * e / delta], [-2 * e / delta, 1 + 4 * e / delta ** 2]])
    s_ideal, _ = ideal_squeeze(delta)
    return matrix, e * s_ideal + 1.0 - e


def __noise_direction__(port: MeasurementPort, noise: ClassicalNoise, e_meas: float, e_refl: float,
                        delta: float) -> tuple[float, np.ndarray]:
    # every perturbation is rank one: weight · u uᵀ
    if noise is ClassicalNoise.THERMAL:
        return e_meas, np.array([1.0, -1.0 / delta])
    if port is MeasurementPort.TRANSMISSION and noise is ClassicalNoise.CLN:
        return 4 * e_meas * e_refl / delta ** 2, np.array([0.0, 1.0])
    if port is MeasurementPort.REFLECTION and noise is ClassicalNoise.RIN:
        return 1.0, np.array([1.0, -(2 * e_meas + delta ** 2) / delta])
    if port is MeasurementPort.REFLECTION and noise is ClassicalNoise.PN:
        return 1.0, np.array([1.0, (1 - 2 * e_meas) / delta])
    raise InvalidParameter("noise", f"{port}/{noise}", "no closed form for this port and noise")


def perturbation_matrix(port: Union[MeasurementPort, str], noise: Union[ClassicalNoise, str],
                        e_meas: float, e_refl: float, delta: float, lam: float) -> np.ndarray:
    """Covariance added to σ_Q by a classical noise of strength `lam`"""
    port, noise = MeasurementPort.get(port), ClassicalNoise.get(noise)
    __check_fraction__("e_meas", e_meas)
    __check_fraction__("e_refl", e_refl)
    __check_detuning__(delta)
    if lam < 0:
        raise InvalidParameter("lambda", lam, "must be non-negative")
    weight, u = __noise_direction__(port, noise, e_meas, e_refl, delta)
    return weight * lam * np.outer(u, u)


def sigma_with_classical(port: Union[MeasurementPort, str], noise: Union[ClassicalNoise, str],
                         e_meas: float, e_refl: float, delta: float, lam: float) -> np.ndarray:
    """
    Covariance of the measured port with one classical noise added

    Thermal noise applies to both ports; the combined laser noise (CLN) to transmission only;
    intensity (RIN) and phase (PN) noise to reflection only.

    :param port: the measured port
    :param noise: the classical noise
    :param e_meas: escape efficiency of the measured port
    :param e_refl: escape efficiency of the input (reflection) port
    :param delta: detuning
    :param lam: noise strength λ ≥ 0
    :raises InvalidParameter: on an unsupported (port, noise) pair
    """
    delta_sigma = perturbation_matrix(port, noise, e_meas, e_refl, delta, lam)
    sigma_q, _ = sigma_quantum_port(e_meas, delta)
    return sigma_q + delta_sigma


def __eigenbasis__(xi0: float) -> tuple[np.ndarray, np.ndarray]:
    squeezed = np.array([math.cos(xi0), math.sin(xi0)])
    anti_squeezed = np.array([-math.sin(xi0), math.cos(xi0)])
    return squeezed, anti_squeezed


def perturbed_trans_squeezing(e_t: float, e_r: float, delta: float, lambda_th: float,
                              lambda_rin: float, lambda_pn: float) -> float:
    """
    Squeezing in transmission with thermal and laser noise to first order: S_Q plus the
    projections of the perturbations on the unperturbed squeezed quadrature
    """
    __warn_first_order__(lambda_th=lambda_th, lambda_rin=lambda_rin, lambda_pn=lambda_pn)
    _, s_q = sigma_quantum_port(e_t, delta)
    squeezed, _ = __eigenbasis__(0.5 * math.atan(delta))
    port = MeasurementPort.TRANSMISSION
    delta_sigma = (perturbation_matrix(port, ClassicalNoise.THERMAL, e_t, e_r, delta, lambda_th)
                   + perturbation_matrix(port, ClassicalNoise.CLN, e_t, e_r, delta, lambda_rin + lambda_pn))
    return s_q + float(squeezed @ delta_sigma @ squeezed)


def __check_xi0__(xi0: float) -> None:
    if not abs(xi0) < math.pi / 4:
        raise InvalidParameter("xi0", xi0, "must lie in (-π/4, π/4)")
    if xi0 == 0:
        raise InvalidParameter("xi0", xi0, "the squeezing ellipse is degenerate at xi0 = 0")


def perturbation_effects(port: Union[MeasurementPort, str], noise: Union[ClassicalNoise, str],
                         e_meas: float, e_refl: float, xi0: float, lam: float) -> PerturbationResult:
    """
    First-order effect of a classical noise on the squeezing ellipse of σ_Q

    The unperturbed eigenvectors are (cos ξ₀, sin ξ₀) and (-sin ξ₀, cos ξ₀) for every escape
    efficiency; the eigenvalue shifts are the diagonal elements of the perturbation in that
    basis and the rotation is the off-diagonal element over the eigenvalue gap. Reflection
    rows keep their full dependence on E^R.
    """
    __check_xi0__(xi0)
    __warn_first_order__(**{"lambda": lam})
    delta = math.tan(2 * xi0)
    delta_sigma = perturbation_matrix(port, noise, e_meas, e_refl, delta, lam)
    squeezed, anti_squeezed = __eigenbasis__(xi0)
    if e_meas == 0:
        return PerturbationResult(float(squeezed @ delta_sigma @ squeezed),
                                  float(anti_squeezed @ delta_sigma @ anti_squeezed), 0.0)
    gap = e_meas * (math.tan(xi0) ** 2 - 1.0 / math.tan(xi0) ** 2)
    return PerturbationResult(
        d_squeeze=float(squeezed @ delta_sigma @ squeezed),
        d_antisqueeze=float(anti_squeezed @ delta_sigma @ anti_squeezed),
        rotation=float(anti_squeezed @ delta_sigma @ squeezed) / gap,
    )


def perturbation_table(port: Union[MeasurementPort, str], noise: Union[ClassicalNoise, str],
                       e_meas: float, e_refl: float, xi0: float, lam: float) -> PerturbationResult:
    """
    Tabulated closed forms of :func:`perturbation_effects`; the reflection RIN and PN
    rows assume full escape efficiency in reflection
    """
    port, noise = MeasurementPort.get(port), ClassicalNoise.get(noise)
    __check_xi0__(xi0)
    sec2 = 1.0 / math.cos(xi0) ** 2
    csc2 = 1.0 / math.sin(xi0) ** 2
    t2 = math.tan(2 * xi0)
    if noise is ClassicalNoise.THERMAL:
        e = e_meas
        return PerturbationResult(0.25 * e * sec2 * lam, 0.25 * e * csc2 * lam, t2 / 8 * lam)
    if port is MeasurementPort.TRANSMISSION and noise is ClassicalNoise.CLN:
        factor = e_refl * lam
        c2 = math.cos(2 * xi0) ** 2
        return PerturbationResult(e_meas * c2 * sec2 * factor, e_meas * c2 * csc2 * factor,
                                  -0.25 * math.sin(4 * xi0) * factor)
    if port is MeasurementPort.REFLECTION and noise is ClassicalNoise.RIN:
        return PerturbationResult(
            16 * math.sin(xi0) ** 6 / math.sin(4 * xi0) ** 2 * lam,
            math.cos(xi0) ** 2 / math.tan(xi0) ** 2 / math.cos(2 * xi0) ** 2 * lam,
            -t2 ** 3 / 8 * lam,
        )
    if port is MeasurementPort.REFLECTION and noise is ClassicalNoise.PN:
        return PerturbationResult(0.25 * sec2 * lam, 0.25 * csc2 * lam, t2 / 8 * lam)
    raise InvalidParameter("noise", f"{port}/{noise}", "no closed form for this port and noise")


def ellipse(cov: np.ndarray) -> Ellipse:
    """Eigen-decomposition of a 2×2 covariance matrix"""
    matrix = np.asarray(cov, dtype=float)
    if matrix.shape != (2, 2):
        raise InvalidParameter("cov", matrix.shape, "expected a 2×2 matrix")
    values, vectors = np.linalg.eigh(0.5 * (matrix + matrix.T))
    angle = math.atan2(vectors[1, 0], vectors[0, 0])
    if angle > math.pi / 2:
        angle -= math.pi
    elif angle <= -math.pi / 2:
        angle += math.pi
    return Ellipse(float(values[0]), float(values[1]), angle)


def total_uncertainty(e: float, delta: float, multiport: bool = False, e_loss: float = 0.0) -> float:
    """
    Determinant of the output covariance: (4E(1-E) + δ²)/δ² for a single port,
    or with E = E^L for the joint reflection and transmission state
    """
    __check_detuning__(delta)
    efficiency = e_loss if multiport else e
    __check_fraction__("e_loss" if multiport else "e", efficiency)
    return (4 * efficiency * (1 - efficiency) + delta ** 2) / delta ** 2


def qrpn_closed_forms(m: float, p_circ: float, t_i: float, delta: float, wavelength: float, f: float,
                      mode_params: tuple[float, float, float]) -> QRPNEstimate:
    """
    Radiation-pressure and thermal displacement well above the mechanical resonance

    :param m: mass, kg
    :param p_circ: circulating power, W
    :param t_i: input coupler transmission (the only loss)
    :param delta: detuning
    :param wavelength: m
    :param f: measurement frequency, Hz
    :param mode_params: (f_m in Hz, Q, temperature in K) of the single structurally damped mode
    """
    f_m, q, temperature = mode_params
    for name, value in (("m", m), ("p_circ", p_circ), ("t_i", t_i), ("wavelength", wavelength),
                        ("f", f), ("f_m", f_m), ("q", q), ("temperature", temperature)):
        if not value > 0:
            raise InvalidParameter(name, value, "must be positive")
    omega = 2 * math.pi * f
    omega_0 = 2 * math.pi * SPEED_OF_LIGHT / wavelength
    omega_m = 2 * math.pi * f_m
    x_qrpn = math.sqrt(32 * HBAR * omega_0 * p_circ / (t_i * (1 + delta ** 2))) / (m * SPEED_OF_LIGHT * omega ** 2)
    x_th = math.sqrt(4 * BOLTZMANN * temperature * omega_m ** 2 / (omega ** 5 * m * q))
    return QRPNEstimate(x_qrpn, x_th, x_qrpn / x_th)


def qrpn_projection(tf_am, tf_cal, p_in: float, t_total: float, t_i: float, wavelength: float) -> np.ndarray:
    """
    Displacement projected from the measured amplitude-modulation response: the shot noise
    of the effective input power √((T_total/T_i)·2ħω₀P_in) times TF_AM / TF_cal

    :raises InvalidParameter: if the calibration vanishes anywhere
    """
    tf_am = np.asarray(tf_am, dtype=complex)
    tf_cal = np.asarray(tf_cal, dtype=complex)
    if tf_am.shape != tf_cal.shape:
        raise InvalidParameter("tf_cal", tf_cal.shape, f"shape differs from tf_am {tf_am.shape}")
    if np.any(tf_cal == 0):
        raise InvalidParameter("tf_cal", None, "the calibration transfer function vanishes")
    omega_0 = 2 * math.pi * SPEED_OF_LIGHT / wavelength
    p_eff = math.sqrt(t_total / t_i * 2 * HBAR * omega_0 * p_in)
    return np.abs(p_eff * tf_am / tf_cal)
