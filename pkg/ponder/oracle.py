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
Comparisons of the numerical engine with the closed-form results.

The engine is evaluated in the regime where the closed forms hold: a mechanical resonance
far below the measurement frequency, itself far below the optical spring frequency, itself
far below the cavity linewidth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

import ponder.log as logging
from ponder.analytic import (ellipse, ideal_squeeze, perturbation_effects,
                             perturbation_matrix, perturbation_table,
                             perturbed_trans_squeezing, sigma_quantum_port,
                             sigma_with_classical, total_uncertainty)
from ponder.cavity import (CavityConfig, DerivedCavity, LaserNoise, PowerSpec,
                           derive, lambda_params)
from ponder.constants import BOLTZMANN, DEFAULT_WAVELENGTH
from ponder.errors import OracleCheckFailure, PonderError
from ponder.mechanics import (MechMode, Oscillator, mode_susceptibility,
                              thermal_force_psd)
from ponder.models import (ClassicalNoise, DampingKind, MeasurementPort,
                           PowerKind)
from ponder.optomech import spring_frequency
from ponder.quantum import (PortTF, build_dynamical_matrix,
                            multiport_uncertainty, port_rates,
                            port_transfer_matrices, source_covariances)

# set up logging
logger = logging.getLogger(__name__)

# regime of the comparisons
REGIME_TOTAL_LOSS = 0.05
REGIME_F_OS = 1e5
REGIME_F_M = 0.1
REGIME_Q = 1e4


@dataclass(frozen=True)
class OracleCheck:
    name: str
    expected: float
    actual: float
    tolerance: float
    passed: bool
    params: dict = field(default_factory=dict)

    @property
    def error(self) -> float:
        return abs(self.actual - self.expected)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "expected": self.expected,
            "actual": self.actual,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "params": self.params,
        }


@dataclass(frozen=True)
class OracleReport:
    checks: tuple

    @property
    def failures(self) -> list[OracleCheck]:
        return [check for check in self.checks if not check.passed]

    @property
    def passed(self) -> bool:
        return not self.failures

    def raise_for_failures(self) -> None:
        if self.failures:
            raise OracleCheckFailure(self.failures)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "checks": [check.to_dict() for check in self.checks]}


@dataclass(frozen=True)
class Regime:
    """A cavity and oscillator in the regime of the closed forms, with the frequency to probe"""
    config: CavityConfig
    derived: DerivedCavity
    oscillator: Oscillator
    f: float

    def transfer_matrices(self, f: Optional[float] = None) -> list[PortTF]:
        rates = port_rates(self.config, self.derived)
        return port_transfer_matrices(build_dynamical_matrix(rates, self.oscillator, f or self.f))


def regime_configuration(e_refl: float, e_trans: float, delta: float, length: float = 0.01,
                         wavelength: float = DEFAULT_WAVELENGTH, total_loss: float = REGIME_TOTAL_LOSS,
                         f_os: float = REGIME_F_OS, f_m: float = REGIME_F_M) -> Regime:
    """
    Cavity with the given escape efficiencies (the remainder is lost through L₂), and a mirror
    whose mass puts the optical spring at `f_os`; the probe frequency is √(f_m·f_os)
    """
    e_loss = max(0.0, 1.0 - e_refl - e_trans)
    config = CavityConfig(
        length=length,
        t1=e_refl * total_loss,
        t2=e_trans * total_loss,
        detuning=delta,
        power_spec=PowerSpec(PowerKind.DETUNED_CAVITY, 1.0),
        wavelength=wavelength,
        l2=e_loss * total_loss,
    )
    derived = derive(config)
    mass = (spring_frequency(config, derived, 1.0) / f_os) ** 2
    oscillator = Oscillator((MechMode.from_q(f_m, mass, REGIME_Q),))
    return Regime(config, derived, oscillator, math.sqrt(f_m * f_os))


def __relative_error__(actual: np.ndarray, expected: np.ndarray) -> float:
    return float(np.max(np.abs(actual - expected)) / np.max(np.abs(expected)))


def __check__(name: str, expected: float, actual: float, tolerance: float, **params) -> OracleCheck:
    passed = bool(np.isfinite(actual) and abs(actual - expected) <= tolerance)
    if not passed:
        logger.warning("Oracle check %s failed: expected %g, got %g (tolerance %g)", name, expected, actual, tolerance)
    return OracleCheck(name, float(expected), float(actual), float(tolerance), passed, params)


def __guarded__(name: str, tolerance: float, params: dict, compute: Callable[[], tuple[float, float]]) -> OracleCheck:
    try:
        expected, actual = compute()
    except PonderError as e:
        logger.warning("Oracle check %s could not be evaluated: %s", name, e)
        return OracleCheck(name, math.nan, math.nan, tolerance, False, params)
    return __check__(name, expected, actual, tolerance, **params)


def __matrix_check__(name: str, tolerance: float, params: dict,
                     compute: Callable[[], tuple[np.ndarray, np.ndarray]]) -> OracleCheck:
    # relative error of the largest deviating entry, against the largest expected entry
    def compare():
        expected, actual = compute()
        return 0.0, __relative_error__(actual, expected)
    return __guarded__(name, tolerance, params, compare)


def quantum_covariance(regime: Regime, port: MeasurementPort) -> np.ndarray:
    tfs = regime.transfer_matrices()
    return source_covariances(tfs, 0.0, 0.0, regime.config.detuning, 0.0, port, regime.f).total


def classical_covariance(regime: Regime, port: MeasurementPort, lambda_th: float = 0.0,
                         lambda_rin: float = 0.0, lambda_pn: float = 0.0) -> np.ndarray:
    """
    Output covariance of the engine with thermal and laser noise injected at the requested strengths
    """
    config, derived = regime.config, regime.derived
    delta = config.detuning
    unit = lambda_params(derived, config, LaserNoise(), 1.0, regime.f)
    s_f_th = lambda_th / unit.lambda_th
    s_rin = lambda_rin * (1 + delta ** 2)
    s_pn = lambda_pn * (1 + delta ** 2) / delta ** 2
    tfs = regime.transfer_matrices()
    return source_covariances(tfs, s_rin, s_pn, delta, s_f_th, port, regime.f).total


def open_port_checks(rng: np.random.Generator, draws: int, **regime_args) -> list[OracleCheck]:
    checks = []
    for k in range(draws):
        e_t, delta = rng.uniform(0.3, 0.9), rng.uniform(0.3, 1.5)
        e_r = (1.0 - e_t) * rng.uniform(0.5, 1.0)
        params = {"e_trans": e_t, "e_refl": e_r, "delta": delta}

        def compute(e_t=e_t, e_r=e_r, delta=delta):
            regime = regime_configuration(e_r, e_t, delta, **regime_args)
            return sigma_quantum_port(e_t, delta)[0], quantum_covariance(regime, MeasurementPort.TRANSMISSION)
        checks.append(__matrix_check__(f"open_port[{k}]", 0.02, params, compute))
    return checks


def reflection_checks(rng: np.random.Generator, draws: int, **regime_args) -> list[OracleCheck]:
    checks = []
    for k in range(draws):
        e_r, delta = rng.uniform(0.3, 0.9), rng.uniform(0.3, 1.5)
        e_t = (1.0 - e_r) * rng.uniform(0.5, 1.0)
        params = {"e_trans": e_t, "e_refl": e_r, "delta": delta}

        def compute(e_t=e_t, e_r=e_r, delta=delta):
            regime = regime_configuration(e_r, e_t, delta, **regime_args)
            return sigma_quantum_port(e_r, delta)[0], quantum_covariance(regime, MeasurementPort.REFLECTION)
        checks.append(__matrix_check__(f"reflection[{k}]", 0.02, params, compute))
    return checks


def ideal_checks(deltas=(0.3, 0.5, 1.0, 2.0), **regime_args) -> list[OracleCheck]:
    """Nearly lossless transmission: smallest eigenvalue and its quadrature"""
    checks = []
    e_t = 1.0 - 1e-6
    for delta in deltas:
        params = {"delta": delta}
        try:
            regime = regime_configuration(1.0 - e_t, e_t, delta, **regime_args)
            result = ellipse(quantum_covariance(regime, MeasurementPort.TRANSMISSION))
        except PonderError as e:
            logger.warning("Ideal squeezing check at delta=%g could not be evaluated: %s", delta, e)
            checks.append(OracleCheck(f"ideal[{delta:g}].squeezing", math.nan, math.nan, 0.01, False, params))
            continue
        s_ideal, xi_min = ideal_squeeze(delta)
        expected = e_t * s_ideal + 1.0 - e_t
        checks.append(__check__(f"ideal[{delta:g}].squeezing", 1.0, result.s_min / expected, 0.01, **params))
        checks.append(__check__(f"ideal[{delta:g}].angle_deg", math.degrees(xi_min), math.degrees(result.angle),
                                0.2, **params))
    return checks


# port, noise, which input noise carries λ
CLASSICAL_ROWS = (
    (MeasurementPort.TRANSMISSION, ClassicalNoise.THERMAL),
    (MeasurementPort.TRANSMISSION, ClassicalNoise.CLN),
    (MeasurementPort.REFLECTION, ClassicalNoise.RIN),
    (MeasurementPort.REFLECTION, ClassicalNoise.PN),
)


def classical_checks(rng: np.random.Generator, draws: int, **regime_args) -> list[OracleCheck]:
    checks = []
    for port, noise in CLASSICAL_ROWS:
        for k in range(draws):
            e_meas, delta, lam = rng.uniform(0.2, 0.9), rng.uniform(0.2, 2.0), rng.uniform(0.0, 0.1)
            e_other = (1.0 - e_meas) * rng.uniform(0.5, 1.0)
            split = rng.uniform(0.0, 1.0)
            e_refl, e_trans = (e_other, e_meas) if port is MeasurementPort.TRANSMISSION else (e_meas, e_other)
            params = {"e_meas": e_meas, "e_refl": e_refl, "delta": delta, "lambda": lam}

            def compute(port=port, noise=noise, e_meas=e_meas, e_refl=e_refl, e_trans=e_trans, delta=delta,
                        lam=lam, split=split):
                regime = regime_configuration(e_refl, e_trans, delta, **regime_args)
                if noise is ClassicalNoise.THERMAL:
                    actual = classical_covariance(regime, port, lambda_th=lam)
                elif noise is ClassicalNoise.CLN:
                    actual = classical_covariance(regime, port, lambda_rin=split * lam,
                                                  lambda_pn=(1.0 - split) * lam)
                elif noise is ClassicalNoise.RIN:
                    actual = classical_covariance(regime, port, lambda_rin=lam)
                else:
                    actual = classical_covariance(regime, port, lambda_pn=lam)
                return sigma_with_classical(port, noise, e_meas, e_refl, delta, lam), actual
            checks.append(__matrix_check__(f"classical[{port}/{noise}][{k}]", 0.02, params, compute))
    return checks


# port, noise, e_meas, e_refl
PERTURBATION_ROWS = (
    (MeasurementPort.TRANSMISSION, ClassicalNoise.THERMAL, 1.0, 0.0),
    (MeasurementPort.TRANSMISSION, ClassicalNoise.CLN, 0.6, 0.4),
    (MeasurementPort.REFLECTION, ClassicalNoise.THERMAL, 0.6, 0.6),
    (MeasurementPort.REFLECTION, ClassicalNoise.RIN, 1.0, 1.0),
    (MeasurementPort.REFLECTION, ClassicalNoise.PN, 1.0, 1.0),
)


def perturbation_checks(lambdas=(1e-3, 1e-2), xi0: float = math.pi / 8) -> list[OracleCheck]:
    """Tabulated first-order effects against the exact eigen-decomposition of the perturbed covariance"""
    checks = []
    delta = math.tan(2 * xi0)
    for port, noise, e_meas, e_refl in PERTURBATION_ROWS:
        unperturbed = ellipse(sigma_quantum_port(e_meas, delta)[0])
        for lam in lambdas:
            perturbed = ellipse(sigma_with_classical(port, noise, e_meas, e_refl, delta, lam))
            table = perturbation_table(port, noise, e_meas, e_refl, xi0, lam)
            error = max(abs(perturbed.s_min - unperturbed.s_min - table.d_squeeze),
                        abs(perturbed.s_max - unperturbed.s_max - table.d_antisqueeze),
                        abs(perturbed.angle - unperturbed.angle - table.rotation))
            checks.append(__check__(f"perturbation[{port}/{noise}][{lam:g}]", 0.0, error, 5 * lam ** 2,
                                    e_meas=e_meas, e_refl=e_refl, xi0=xi0, **{"lambda": lam}))
    return checks


def __second_order_bounds__(norm: float, gap: float) -> tuple[float, float]:
    # first-order errors of a 2×2 symmetric eigenproblem: (eigenvalues, rotation)
    shifted = gap - 2 * norm
    eigenvalues = norm ** 2 / shifted
    rotation = 2 * norm ** 2 / (gap * shifted) + 1.5 * (norm / shifted) ** 3
    return 2 * eigenvalues + 1e-12, 2 * rotation + 1e-12


def perturbation_effect_checks(rng: np.random.Generator, draws: int) -> list[OracleCheck]:
    """
    General first-order effects (any escape efficiencies, any ξ₀) against the exact
    eigen-decomposition, and the transmitted squeezing with thermal and laser noise together
    """
    checks = []
    for port, noise in CLASSICAL_ROWS:
        for k in range(draws):
            xi0 = rng.uniform(0.15, 0.6)
            e_meas, e_refl = rng.uniform(0.3, 1.0), rng.uniform(0.1, 1.0)
            delta = math.tan(2 * xi0)
            unperturbed = ellipse(sigma_quantum_port(e_meas, delta)[0])
            gap = unperturbed.s_max - unperturbed.s_min
            unit_norm = float(np.linalg.norm(perturbation_matrix(port, noise, e_meas, e_refl, delta, 1.0), 2))
            lam = min(rng.uniform(1e-3, 1e-2), gap / (8 * unit_norm))
            perturbed = ellipse(sigma_with_classical(port, noise, e_meas, e_refl, delta, lam))
            effects = perturbation_effects(port, noise, e_meas, e_refl, xi0, lam)
            value_bound, rotation_bound = __second_order_bounds__(lam * unit_norm, gap)
            params = {"xi0": xi0, "e_meas": e_meas, "e_refl": e_refl, "lambda": lam}
            name = f"perturbation_effects[{port}/{noise}][{k}]"
            checks.append(__check__(f"{name}.squeeze", unperturbed.s_min + effects.d_squeeze,
                                    perturbed.s_min, value_bound, **params))
            checks.append(__check__(f"{name}.antisqueeze", unperturbed.s_max + effects.d_antisqueeze,
                                    perturbed.s_max, value_bound, **params))
            checks.append(__check__(f"{name}.rotation", unperturbed.angle + effects.rotation,
                                    perturbed.angle, rotation_bound, **params))

    port = MeasurementPort.TRANSMISSION
    for k in range(draws):
        xi0 = rng.uniform(0.15, 0.6)
        e_t = rng.uniform(0.3, 1.0)
        e_r = (1.0 - e_t) * rng.uniform(0.0, 1.0)
        delta = math.tan(2 * xi0)
        lambda_th, lambda_rin, lambda_pn = rng.uniform(0.0, 1e-2, size=3)
        sigma_q, _ = sigma_quantum_port(e_t, delta)
        delta_sigma = (perturbation_matrix(port, ClassicalNoise.THERMAL, e_t, e_r, delta, lambda_th)
                       + perturbation_matrix(port, ClassicalNoise.CLN, e_t, e_r, delta, lambda_rin + lambda_pn))
        unperturbed = ellipse(sigma_q)
        gap = unperturbed.s_max - unperturbed.s_min
        norm = float(np.linalg.norm(delta_sigma, 2))
        if not norm < gap / 4:
            logger.debug("Skipping transmitted squeezing draw %d: perturbation too strong", k)
            continue
        exact = ellipse(sigma_q + delta_sigma).s_min
        first_order = perturbed_trans_squeezing(e_t, e_r, delta, lambda_th, lambda_rin, lambda_pn)
        value_bound, _ = __second_order_bounds__(norm, gap)
        checks.append(__check__(f"trans_squeezing[{k}]", first_order, exact, value_bound,
                                xi0=xi0, e_t=e_t, e_r=e_r, lambda_th=lambda_th, lambda_rin=lambda_rin,
                                lambda_pn=lambda_pn))
    return checks


def multiport_checks(losses=(0.0, 0.2, 0.5), deltas=(0.5, 1.0), **regime_args) -> list[OracleCheck]:
    checks = []
    for e_loss in losses:
        for delta in deltas:
            e_port = 0.5 * (1.0 - e_loss)
            params = {"e_loss": e_loss, "delta": delta}

            def compute(e_loss=e_loss, delta=delta, e_port=e_port):
                regime = regime_configuration(e_port, e_port, delta, **regime_args)
                _, det = multiport_uncertainty(regime.transfer_matrices(), np.eye(2), 0.0, regime.f)
                return total_uncertainty(0.0, delta, multiport=True, e_loss=e_loss), det
            checks.append(__guarded__(f"multiport[{e_loss:g}][{delta:g}]", 1e-4, params, compute))
    return checks


def shot_noise_checks(rng: np.random.Generator, draws: int, **regime_args) -> list[OracleCheck]:
    """Amplitude quadrature of the transmitted light stays at shot noise below the optical spring"""
    checks = []
    f_m = regime_args.get("f_m", REGIME_F_M)
    f_os = regime_args.get("f_os", REGIME_F_OS)
    freqs = np.logspace(math.log10(10 * f_m), math.log10(f_os / 100), 5)
    for k in range(draws):
        e_t, delta = rng.uniform(0.3, 0.9), rng.uniform(0.3, 1.5)
        params = {"e_trans": e_t, "delta": delta}

        def compute(e_t=e_t, delta=delta):
            regime = regime_configuration(1.0 - e_t, e_t, delta, **regime_args)
            worst = 1.0
            for f in freqs:
                tfs = regime.transfer_matrices(float(f))
                noise = source_covariances(tfs, 0.0, 0.0, delta, 0.0, MeasurementPort.TRANSMISSION, f).total[0, 0]
                worst = max(worst, noise, key=lambda n: abs(n - 1.0))
            return 1.0, float(worst)
        checks.append(__guarded__(f"shot_noise[{k}]", 1e-3, params, compute))
    return checks


def fdt_checks(temperature: float = 295.0) -> list[OracleCheck]:
    """Thermal displacement of every mode against 4k_BT Im χ / ω"""
    modes = (
        MechMode.from_q(876.0, 50e-9, 16000.0),
        MechMode.from_q(5e3, 20e-9, 1e4),
        MechMode.from_q(12e3, 10e-9, 5e3, DampingKind.VISCOUS),
    )
    freqs = np.logspace(1, 5, 41)
    checks = []
    for k, mode in enumerate(modes):
        chi = mode_susceptibility(mode, freqs)
        displacement = np.abs(chi) ** 2 * thermal_force_psd(mode, temperature, freqs)
        expected = 4 * BOLTZMANN * temperature * np.imag(chi) / (2 * math.pi * freqs)
        error = float(np.max(np.abs(displacement / expected - 1.0)))
        checks.append(__check__(f"fdt[{mode.damping_kind}][{k}]", 0.0, error, 1e-9, freq_hz=mode.freq))
    return checks


def run_oracle_suite(length: float = 0.01, wavelength: float = DEFAULT_WAVELENGTH, seed: int = 0,
                     draws: int = 20, strict: bool = True) -> OracleReport:
    """
    Run every comparison between the numerical engine and the closed forms

    :param length: cavity length of the test configurations, m
    :param wavelength: laser wavelength, m
    :param seed: seed of the randomised draws
    :param draws: number of random configurations per randomised check
    :param strict: raise on any failure
    :raises OracleCheckFailure: if `strict` and any check breaches its tolerance
    """
    rng = np.random.default_rng(seed)
    regime_args = {"length": length, "wavelength": wavelength}
    checks = []
    checks += open_port_checks(rng, draws, **regime_args)
    checks += reflection_checks(rng, draws, **regime_args)
    checks += ideal_checks(**regime_args)
    checks += classical_checks(rng, max(1, draws // 4), **regime_args)
    checks += perturbation_checks()
    checks += perturbation_effect_checks(rng, max(1, draws // 4))
    checks += multiport_checks(**regime_args)
    checks += shot_noise_checks(rng, max(1, draws // 2), **regime_args)
    checks += fdt_checks()
    report = OracleReport(tuple(checks))
    logger.debug("Oracle suite: %d checks, %d failed", len(report.checks), len(report.failures))
    if strict:
        report.raise_for_failures()
    return report
