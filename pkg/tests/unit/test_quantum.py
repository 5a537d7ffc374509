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


import math

import numpy as np
import pytest

from ponder.analytic import sigma_quantum_port, total_uncertainty
from ponder.cavity import NoiseModel, derive
from ponder.errors import InvalidParameter
from ponder.models import InputPort, MeasurementPort, NoiseSource
from ponder.oracle import regime_configuration
from ponder.quantum import (Field, PortRates, build_dynamical_matrix,
                            compute_spectrum, engine_covariances, find_tf,
                            input_laser_covariance, multiport_uncertainty,
                            port_covariance, port_rates,
                            port_transfer_matrices, quadrature_noise,
                            source_covariances)
from tests.shared import baseline_cavity, mirror_oscillator


def __passive_rates__(delta: float = 0.5) -> PortRates:
    # three equal ports, no radiation pressure
    return PortRates(1e6, 1e6, 1e6, 3e6, delta * 3e6, 0.0)


def test_cavity_field_entry():
    rates = PortRates(1.0, 0.0, 0.0, 1.0, 0.5, 0.0)
    dm = build_dynamical_matrix(rates, mirror_oscillator(), 1 / (2 * math.pi))
    assert dm[Field.A, Field.A] == pytest.approx(-0.5 - 1.0j)
    assert dm[Field.AD, Field.AD] == pytest.approx(0.5 - 1.0j)


def test_output_entries():
    config = baseline_cavity()
    dm = build_dynamical_matrix(port_rates(config, derive(config)), mirror_oscillator(), 1e3)
    assert dm[Field.AOUT2, Field.AIN2] == -1
    assert dm[Field.AOUT1, Field.AIN1] == -1


def test_no_coupling_without_radiation_pressure():
    dm = build_dynamical_matrix(__passive_rates__(), mirror_oscillator(), 1e3)
    assert dm[Field.A, Field.X] == 0
    assert dm[Field.FRAD, Field.A] == 0


def test_dynamical_matrix_is_singular_at_dc():
    with pytest.raises(InvalidParameter):
        build_dynamical_matrix(__passive_rates__(), mirror_oscillator(), 0.0)


def test_inconsistent_rates():
    with pytest.raises(InvalidParameter):
        PortRates(1.0, 1.0, 1.0, 2.0, 0.0, 0.0)


def test_port_rates_follow_the_mirrors():
    config = baseline_cavity()
    derived = derive(config)
    rates = port_rates(config, derived)
    assert rates.gamma == pytest.approx(derived.gamma_rad)
    assert rates.detuning == pytest.approx(0.5)
    assert rates.gamma2 / rates.gamma == pytest.approx(derived.escape_trans)


def test_single_open_port_reflects_its_vacuum():
    rates = PortRates(0.0, 1e6, 0.0, 1e6, 0.0, 0.0)
    tfs = port_transfer_matrices(build_dynamical_matrix(rates, mirror_oscillator(), 1.0))
    np.testing.assert_allclose(find_tf(tfs, InputPort.TRANS, MeasurementPort.TRANSMISSION), np.eye(2), atol=1e-4)


def test_every_input_reaches_every_output():
    tfs = port_transfer_matrices(build_dynamical_matrix(__passive_rates__(), mirror_oscillator(), 1e3))
    assert len(tfs) == 8
    assert find_tf(tfs, InputPort.THERMAL_FORCE, MeasurementPort.REFLECTION).shape == (2, 1)
    assert find_tf(tfs, InputPort.LOSS, MeasurementPort.TRANSMISSION).shape == (2, 2)


def test_laser_amplitude_reaches_the_transmitted_phase():
    regime = regime_configuration(0.25, 0.25, 0.5)
    laser = find_tf(regime.transfer_matrices(), InputPort.LASER, MeasurementPort.TRANSMISSION)
    np.testing.assert_allclose(np.abs(laser), [[0.0, 0.0], [1.0, 0.0]], atol=1e-2)


def test_laser_covariance_is_rotated_by_the_carrier():
    np.testing.assert_allclose(input_laser_covariance(0.1, 0.0, 1.0), [[1.05, -0.05], [-0.05, 1.05]], atol=1e-12)


def test_isotropic_laser_noise_is_not_rotated():
    np.testing.assert_allclose(input_laser_covariance(0.3, 0.3, 0.7), 1.3 * np.eye(2), atol=1e-12)


def test_negative_laser_noise_is_rejected():
    with pytest.raises(InvalidParameter):
        input_laser_covariance(-0.1, 0.0, 1.0)


def test_quantum_covariance_of_the_transmitted_port():
    regime = regime_configuration(0.3, 0.595, 0.5)
    cov = port_covariance(regime.transfer_matrices(), np.eye(2), 0.0, MeasurementPort.TRANSMISSION, regime.f)
    expected, _ = sigma_quantum_port(0.595, 0.5)
    assert np.max(np.abs(cov.matrix - expected)) <= 0.02 * np.max(np.abs(expected))


def test_passive_cavity_outputs_vacuum():
    tfs = port_transfer_matrices(build_dynamical_matrix(__passive_rates__(), mirror_oscillator(), 1e3))
    for port in MeasurementPort:
        cov = port_covariance(tfs, np.eye(2), 0.0, port, 1e3)
        np.testing.assert_allclose(cov.matrix, np.eye(2), atol=1e-9)


def test_quadrature_noise_of_simple_matrices():
    assert quadrature_noise(np.eye(2), 0.3) == pytest.approx(1.0)
    squeezed = np.diag([0.5, 2.0])
    assert quadrature_noise(squeezed, 0.0) == pytest.approx(0.5)
    assert quadrature_noise(squeezed, math.pi / 2) == pytest.approx(2.0)


def test_quadrature_noise_over_angles():
    matrix, s_q = sigma_quantum_port(0.595, 0.5)
    angles = np.linspace(0.0, math.pi, 18001, endpoint=False)
    noise = quadrature_noise(matrix, angles)
    assert noise.shape == angles.shape
    assert noise.min() == pytest.approx(0.438, abs=1e-3)
    assert noise.min() == pytest.approx(s_q, rel=1e-6)
    assert math.degrees(angles[np.argmin(noise)]) == pytest.approx(13.28, abs=0.02)


def test_sources_add_up():
    regime = regime_configuration(0.3, 0.6, 0.8)
    covs = source_covariances(regime.transfer_matrices(), 0.2, 0.1, 0.8, 1e-30, MeasurementPort.TRANSMISSION,
                              regime.f)
    laser = input_laser_covariance(0.2, 0.1, 0.8)
    direct = port_covariance(regime.transfer_matrices(), laser, 1e-30, MeasurementPort.TRANSMISSION, regime.f)
    np.testing.assert_allclose(covs.total, direct.matrix, rtol=1e-8, atol=1e-9)
    assert set(covs.layers) == set(NoiseSource)


def test_lossless_multiport_uncertainty():
    regime = regime_configuration(0.5, 0.5, 1.0)
    _, det = multiport_uncertainty(regime.transfer_matrices(), np.eye(2), 0.0, regime.f)
    assert det == pytest.approx(1.0, abs=1e-4)


@pytest.mark.parametrize("e_loss, delta", [(0.5, 1.0), (0.2, 0.5)])
def test_lossy_multiport_uncertainty(e_loss, delta):
    e = (1 - e_loss) / 2
    regime = regime_configuration(e, e, delta)
    matrix, det = multiport_uncertainty(regime.transfer_matrices(), np.eye(2), 0.0, regime.f)
    assert matrix.shape == (4, 4)
    assert det == pytest.approx(total_uncertainty(0.0, delta, multiport=True, e_loss=e_loss), rel=1e-3)


def test_lossy_multiport_example():
    assert total_uncertainty(0.0, 1.0, multiport=True, e_loss=0.5) == pytest.approx(2.0)


def test_engine_covariances_are_physical():
    config = baseline_cavity()
    derived = derive(config)
    osc = mirror_oscillator()
    for f in (100.0, 876.0, 1e4, 1e5):
        covs = engine_covariances(config, derived, osc, NoiseModel(), f)
        quantum = covs.covariance(NoiseSource.QUANTUM)
        assert np.all(quantum.eigenvalues >= -1e-9)
        assert quantum.determinant >= 1 - 1e-6
        assert np.all(covs.covariance().eigenvalues >= -1e-9)


def test_spectrum_keeps_the_grid_order():
    config = baseline_cavity()
    freqs = np.logspace(2, 5, 7)
    covs, skipped = compute_spectrum(config, derive(config), mirror_oscillator(), NoiseModel.quantum_only(),
                                     freqs, workers=3)
    assert skipped == []
    assert [c.freq for c in covs] == pytest.approx(list(freqs))
