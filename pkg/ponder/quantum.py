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
Frequency-domain solver of the linearised optomechanical field equations.

At every frequency the 16 field variables (intracavity field, port inputs and outputs,
mirror displacement and forces) are related by a dynamical matrix DM; the response to the
inputs is (I - DM)^-1. Creation operators are solved as independent variables with
conjugated coefficients. The responses are converted from the sideband (a, a†) to the
quadrature (amplitude, phase) picture, and the output covariance matrices are normalised
to shot noise.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import LinAlgError, lu_factor, lu_solve

import ponder.log as logging
from ponder.cavity import (CavityConfig, DerivedCavity, NoiseModel,
                           classical_noise_psd)
from ponder.constants import HBAR, SPEED_OF_LIGHT
from ponder.errors import ConsistencyError, InvalidParameter, SingularSolveError
from ponder.mechanics import (Oscillator, effective_thermal_force_psd,
                              susceptibility)
from ponder.models import InputPort, MeasurementPort, NoiseSource
from ponder.utils import parallel_map

# set up logging
logger = logging.getLogger(__name__)


@enum.unique
class Field(enum.IntEnum):
    """Ordering of the field variables in the dynamical matrix"""
    A = 0
    AD = 1
    AIN3 = 2
    AIN3D = 3
    AIN2 = 4
    AIN2D = 5
    AOUT2 = 6
    AOUT2D = 7
    AIN1 = 8
    AIN1D = 9
    AOUT1 = 10
    AOUT1D = 11
    X = 12
    P = 13
    FRAD = 14
    FTH = 15


FIELD_COUNT = len(Field)

# independent inputs of the system, in the column order of the solve
INPUT_FIELDS = (Field.AIN1, Field.AIN1D, Field.AIN2, Field.AIN2D, Field.AIN3, Field.AIN3D, Field.FTH)

# (field, conjugate) pairs of every optical input and output
OPTICAL_INPUTS = {
    InputPort.LASER: (Field.AIN1, Field.AIN1D),
    InputPort.TRANS: (Field.AIN2, Field.AIN2D),
    InputPort.LOSS: (Field.AIN3, Field.AIN3D),
}
OUTPUTS = {
    MeasurementPort.REFLECTION: (Field.AOUT1, Field.AOUT1D),
    MeasurementPort.TRANSMISSION: (Field.AOUT2, Field.AOUT2D),
}
# the input reflected promptly into every output
OUTPUT_SOURCES = {
    MeasurementPort.REFLECTION: InputPort.LASER,
    MeasurementPort.TRANSMISSION: InputPort.TRANS,
}

# sideband (a, a†) to quadrature (amplitude, phase) conversion and its inverse
SIDEBAND_TO_QUADRATURE = np.array([[1, 1], [-1j, 1j]]) / math.sqrt(2)
QUADRATURE_TO_SIDEBAND = np.array([[1, 1j], [1, -1j]]) / math.sqrt(2)

# relative tolerance on the hermiticity of the covariance matrices
HERMITICITY_TOLERANCE = 1e-9


@dataclass(frozen=True)
class PortRates:
    """Decay rates of the cavity ports and optomechanical coupling (rad/s)"""
    gamma1: float
    gamma2: float
    gamma3: float
    gamma: float
    #: detuning Δ = δγ, rad/s
    delta_abs: float
    #: coupling g, with g² = 4πP_cav/(ħLλ)
    g: float

    def __post_init__(self):
        if abs(self.gamma - (self.gamma1 + self.gamma2 + self.gamma3)) > 1e-12 * self.gamma:
            raise InvalidParameter("gamma", self.gamma, "must equal gamma1 + gamma2 + gamma3")
        if self.g < 0:
            raise InvalidParameter("g", self.g, "must be non-negative")

    @property
    def detuning(self) -> float:
        return self.delta_abs / self.gamma

    def rate(self, port: InputPort) -> float:
        return {InputPort.LASER: self.gamma1, InputPort.TRANS: self.gamma2, InputPort.LOSS: self.gamma3}[port]


@dataclass(frozen=True)
class DynamicalMatrix:
    """The dynamical matrix at one frequency, with the rates it was built from"""
    matrix: np.ndarray
    rates: PortRates
    #: frequency, Hz
    f: float

    def __getitem__(self, key):
        return self.matrix[key]


@dataclass(frozen=True)
class PortTF:
    """
    Quadrature transfer matrix from an input to an output port: 2×2 for optical
    inputs, a 2×1 column (per newton) for the thermal force
    """
    input_port: InputPort
    output_port: MeasurementPort
    matrix: np.ndarray


@dataclass(frozen=True)
class PortCovariance:
    port: MeasurementPort
    #: frequency, Hz
    freq: float
    #: real symmetric 2×2 matrix, shot noise = identity
    matrix: np.ndarray

    @property
    def determinant(self) -> float:
        return float(np.linalg.det(self.matrix))

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)


@dataclass(frozen=True)
class SourceCovariances:
    """Contribution of every noise source to the covariance of a port at one frequency"""
    port: MeasurementPort
    freq: float
    layers: dict

    @property
    def total(self) -> np.ndarray:
        return sum(self.layers.values())

    def covariance(self, source: Optional[NoiseSource] = None) -> PortCovariance:
        matrix = self.total if source is None else self.layers[source]
        return PortCovariance(self.port, self.freq, matrix)


def port_rates(config: CavityConfig, derived: DerivedCavity) -> PortRates:
    """Port decay rates γᵢ = cTᵢ/4L (for T₁, T₂ and L₂), detuning and coupling"""
    scale = SPEED_OF_LIGHT / (4.0 * config.length)
    gamma1, gamma2, gamma3 = scale * config.t1, scale * config.t2, scale * config.l2
    gamma = gamma1 + gamma2 + gamma3
    g = math.sqrt(4 * math.pi * derived.p_cav / (HBAR * config.length * config.wavelength))
    return PortRates(gamma1, gamma2, gamma3, gamma, config.detuning * gamma, g)


def build_dynamical_matrix(rates: PortRates, osc: Oscillator, f: float) -> DynamicalMatrix:
    """
    Dynamical matrix of the field equations at frequency `f` (Hz)

    The displacement responds to the forces through the full multi-mode susceptibility.

    :raises InvalidParameter: if f ≤ 0
    """
    if not f > 0:
        raise InvalidParameter("f", f, "the dynamical matrix is singular at f = 0")
    omega = 2 * math.pi * f
    inv = 1.0 / (-1j * omega)
    gamma, delta, g = rates.gamma, rates.delta_abs, rates.g

    dm = np.zeros((FIELD_COUNT, FIELD_COUNT), dtype=complex)
    dm[Field.A, Field.A] = -(gamma - 1j * delta) * inv
    dm[Field.AD, Field.AD] = -(gamma + 1j * delta) * inv
    dm[Field.A, Field.X] = 1j * g * inv
    dm[Field.AD, Field.X] = -1j * g * inv
    for port, (field, field_d) in OPTICAL_INPUTS.items():
        coupling = math.sqrt(2 * rates.rate(port))
        dm[Field.A, field] = coupling * inv
        dm[Field.AD, field_d] = coupling * inv
    for output, (out, out_d) in OUTPUTS.items():
        source = OUTPUT_SOURCES[output]
        field, field_d = OPTICAL_INPUTS[source]
        coupling = math.sqrt(2 * rates.rate(source))
        dm[out, field] = -1
        dm[out_d, field_d] = -1
        dm[out, Field.A] = coupling
        dm[out_d, Field.AD] = coupling
    chi = complex(susceptibility(osc, f))
    dm[Field.X, Field.FRAD] = chi
    dm[Field.X, Field.FTH] = chi
    dm[Field.FRAD, Field.A] = -HBAR * g
    dm[Field.FRAD, Field.AD] = -HBAR * g
    return DynamicalMatrix(dm, rates, f)


def __column_scales__(rates: PortRates) -> np.ndarray:
    # natural size of every variable for unit (shot-noise) inputs
    scales = np.ones(FIELD_COUNT)
    root_gamma = math.sqrt(rates.gamma)
    scales[[Field.A, Field.AD]] = 1.0 / root_gamma
    if rates.g > 0:
        scales[Field.X] = root_gamma / rates.g
        scales[[Field.FRAD, Field.FTH]] = HBAR * rates.g / root_gamma
    return scales


def solve_inputs(dm: DynamicalMatrix) -> np.ndarray:
    """
    Response of every field variable to unit inputs, as a 16×7 matrix
    whose columns follow `INPUT_FIELDS`

    :raises SingularSolveError: if the system cannot be solved at this frequency
    """
    columns = __column_scales__(dm.rates)
    system = (np.eye(FIELD_COUNT) - dm.matrix) * columns[None, :]
    rows = 1.0 / np.max(np.abs(system), axis=1)
    system = system * rows[:, None]

    input_index = [int(f) for f in INPUT_FIELDS]
    rhs = np.zeros((FIELD_COUNT, len(INPUT_FIELDS)), dtype=complex)
    rhs[input_index, np.arange(len(INPUT_FIELDS))] = 1.0
    rhs = rhs * rows[:, None] * columns[input_index][None, :]
    try:
        lu, piv = lu_factor(system)
        if np.any(np.diag(lu) == 0):
            raise SingularSolveError(dm.f)
        solution = lu_solve((lu, piv), rhs)
    except (LinAlgError, ValueError) as e:
        if logger.isEnabledFor(logging.DEBUG):
            logger.debug(e)
        raise SingularSolveError(dm.f) from e
    response = solution * columns[:, None] / columns[input_index][None, :]
    if not np.all(np.isfinite(response)):
        raise SingularSolveError(dm.f, "Non-finite response of the optomechanical system")
    return response


def port_transfer_matrices(dm: DynamicalMatrix) -> list[PortTF]:
    """
    Quadrature transfer matrices from {laser, trans vacuum, loss vacuum, thermal force}
    to {reflection, transmission}
    """
    response = solve_inputs(dm)
    column = {field: i for i, field in enumerate(INPUT_FIELDS)}
    tfs: list[PortTF] = []
    for output, (out, out_d) in OUTPUTS.items():
        for port, (field, field_d) in OPTICAL_INPUTS.items():
            sideband = np.array([[response[out, column[field]], response[out, column[field_d]]],
                                 [response[out_d, column[field]], response[out_d, column[field_d]]]])
            tfs.append(PortTF(port, output, SIDEBAND_TO_QUADRATURE @ sideband @ QUADRATURE_TO_SIDEBAND))
        force = np.array([[response[out, column[Field.FTH]]], [response[out_d, column[Field.FTH]]]])
        tfs.append(PortTF(InputPort.THERMAL_FORCE, output, SIDEBAND_TO_QUADRATURE @ force))
    return tfs


def find_tf(tfs: Sequence[PortTF], input_port: InputPort, output_port: MeasurementPort) -> np.ndarray:
    for tf in tfs:
        if tf.input_port is input_port and tf.output_port is output_port:
            return tf.matrix
    raise InvalidParameter("tfs", (input_port, output_port), "transfer matrix not available")


def input_laser_covariance(s_rin: float, s_pn: float, delta: float) -> np.ndarray:
    """
    Laser noise seen by the cavity: diag(1 + S_RIN, 1 + S_PN) rotated by the carrier angle θ_δ, tan θ_δ = -δ
    """
    if s_rin < 0 or s_pn < 0:
        raise InvalidParameter("s_rin/s_pn", (s_rin, s_pn), "noise PSDs must be non-negative")
    theta = math.atan(-delta)
    c, s = math.cos(theta), math.sin(theta)
    rotation = np.array([[c, -s], [s, c]])
    return rotation @ np.diag([1.0 + s_rin, 1.0 + s_pn]) @ rotation.T


def __hermitian_part__(matrix: np.ndarray, f: float) -> np.ndarray:
    asymmetry = np.max(np.abs(matrix - matrix.conj().T))
    if asymmetry > HERMITICITY_TOLERANCE * max(1.0, np.max(np.abs(matrix))):
        raise ConsistencyError(f"Non-hermitian covariance matrix (asymmetry {asymmetry:.3g})", f)
    real = np.real(matrix)
    return 0.5 * (real + real.T)


def __propagate__(tf: np.ndarray, covariance: np.ndarray) -> np.ndarray:
    return tf @ covariance @ tf.conj().T


def __mix_with_vacuum__(matrix: np.ndarray, mode_matching: float, vacuum: bool) -> np.ndarray:
    mixed = mode_matching * matrix
    if vacuum:
        mixed = mixed + (1.0 - mode_matching) * np.eye(matrix.shape[0])
    return mixed


def source_covariances(tfs: Sequence[PortTF], s_rin: float, s_pn: float, delta: float, s_f_th: float,
                       port: MeasurementPort, f: float, mode_matching: float = 1.0) -> SourceCovariances:
    """
    Covariance contributed at `port` by every noise source

    Vacuum enters all optical inputs; laser intensity and phase noise enter the laser input
    in excess of vacuum; the thermal force has PSD `s_f_th`. A mode-mismatched reflection is
    mixed with vacuum at power ratio `mode_matching`.
    """
    port = MeasurementPort.get(port)
    laser = find_tf(tfs, InputPort.LASER, port)
    quantum = sum(__propagate__(find_tf(tfs, p, port), np.eye(2)) for p in OPTICAL_INPUTS)
    excess_rin = input_laser_covariance(s_rin, 0.0, delta) - np.eye(2)
    excess_pn = input_laser_covariance(0.0, s_pn, delta) - np.eye(2)
    force = find_tf(tfs, InputPort.THERMAL_FORCE, port)
    layers = {
        NoiseSource.QUANTUM: __hermitian_part__(quantum, f),
        NoiseSource.THERMAL: __hermitian_part__(s_f_th * (force @ force.conj().T), f),
        NoiseSource.RIN: __hermitian_part__(__propagate__(laser, excess_rin), f),
        NoiseSource.PN: __hermitian_part__(__propagate__(laser, excess_pn), f),
    }
    if port is MeasurementPort.REFLECTION and mode_matching < 1.0:
        layers = {source: __mix_with_vacuum__(matrix, mode_matching, source is NoiseSource.QUANTUM)
                  for source, matrix in layers.items()}
    return SourceCovariances(port, f, layers)


def port_covariance(tfs: Sequence[PortTF], laser_cov: np.ndarray, s_f_th: float,
                    port: MeasurementPort, f: float, mode_matching: float = 1.0) -> PortCovariance:
    """
    Output covariance σ = Σᵢ Tᵢ σᵢ Tᵢ† over the uncorrelated inputs

    :param tfs: transfer matrices at frequency `f`
    :param laser_cov: covariance of the laser input (see :func:`input_laser_covariance`)
    :param s_f_th: thermal force PSD, N²/Hz
    :param port: the output port
    :param f: the frequency, Hz
    :param mode_matching: power fraction of the reflected light that is mode matched
    :raises ConsistencyError: if the result is not hermitian
    """
    port = MeasurementPort.get(port)
    covariance = __propagate__(find_tf(tfs, InputPort.LASER, port), np.asarray(laser_cov, dtype=float))
    for input_port in (InputPort.TRANS, InputPort.LOSS):
        covariance = covariance + __propagate__(find_tf(tfs, input_port, port), np.eye(2))
    force = find_tf(tfs, InputPort.THERMAL_FORCE, port)
    covariance = covariance + s_f_th * (force @ force.conj().T)
    matrix = __hermitian_part__(covariance, f)
    if port is MeasurementPort.REFLECTION:
        matrix = __mix_with_vacuum__(matrix, mode_matching, True)
    return PortCovariance(port, f, matrix)


def quadrature_noise(cov: PortCovariance, xi) -> float:
    """
    Noise of the generalised quadrature at angle `xi` (radians, scalar or array);
    values below 1 are squeezed
    """
    m = cov.matrix if isinstance(cov, PortCovariance) else np.asarray(cov)
    xi = np.asarray(xi, dtype=float)
    c, s = np.cos(xi), np.sin(xi)
    noise = c ** 2 * m[0, 0] + s ** 2 * m[1, 1] + s * c * (m[0, 1] + m[1, 0])
    return noise if np.ndim(noise) else float(noise)


def multiport_uncertainty(tfs: Sequence[PortTF], laser_cov: np.ndarray, s_f_th: float, f: float,
                          mode_matching: float = 1.0) -> tuple[np.ndarray, float]:
    """
    Joint covariance of reflection ⊕ transmission (4×4, correlations from the shared inputs)
    and its determinant
    """
    def stacked(input_port: InputPort) -> np.ndarray:
        return np.vstack([find_tf(tfs, input_port, MeasurementPort.REFLECTION),
                          find_tf(tfs, input_port, MeasurementPort.TRANSMISSION)])

    covariance = __propagate__(stacked(InputPort.LASER), np.asarray(laser_cov, dtype=float))
    for input_port in (InputPort.TRANS, InputPort.LOSS):
        covariance = covariance + __propagate__(stacked(input_port), np.eye(2))
    force = stacked(InputPort.THERMAL_FORCE)
    covariance = covariance + s_f_th * (force @ force.conj().T)
    matrix = __hermitian_part__(covariance, f)
    if mode_matching < 1.0:
        # the mismatched part of the reflected beam is replaced by vacuum
        weights = np.array([math.sqrt(mode_matching)] * 2 + [1.0, 1.0])
        matrix = matrix * np.outer(weights, weights)
        matrix[:2, :2] += (1.0 - mode_matching) * np.eye(2)
    return matrix, float(np.linalg.det(matrix))


def engine_covariances(config: CavityConfig, derived: DerivedCavity, osc: Oscillator, noise: NoiseModel,
                       f: float, port: Optional[MeasurementPort] = None,
                       rates: Optional[PortRates] = None) -> SourceCovariances:
    """
    Solve the field equations at `f` and return the per-source covariances of `port`
    (the configured measurement port by default)
    """
    port = MeasurementPort.get(port or config.measurement_port)
    rates = rates or port_rates(config, derived)
    tfs = port_transfer_matrices(build_dynamical_matrix(rates, osc, f))
    s_rin, s_pn = classical_noise_psd(noise.laser, derived.p_in, config.wavelength, f)
    s_rin = s_rin if noise.rin else 0.0
    s_pn = s_pn if noise.pn else 0.0
    s_f_th = float(effective_thermal_force_psd(osc, f)) if noise.thermal else 0.0
    return source_covariances(tfs, s_rin, s_pn, config.detuning, s_f_th, port, f, config.mode_matching)


def compute_spectrum(config: CavityConfig, derived: DerivedCavity, osc: Oscillator, noise: NoiseModel,
                     freqs: Sequence[float], port: Optional[MeasurementPort] = None,
                     workers: Optional[int] = None) -> tuple[list[SourceCovariances], list[float]]:
    """
    Per-source covariances over a frequency grid, evaluated in parallel

    :return: the covariances of the solved frequencies (in grid order) and the skipped frequencies
    """
    rates = port_rates(config, derived)

    def evaluate(f: float) -> Optional[SourceCovariances]:
        try:
            return engine_covariances(config, derived, osc, noise, f, port, rates)
        except SingularSolveError as e:
            logger.warning("Skipping frequency: %s", e)
            return None

    results = parallel_map(evaluate, [float(f) for f in freqs], workers)
    skipped = [float(f) for f, r in zip(freqs, results) if r is None]
    return [r for r in results if r is not None], skipped
