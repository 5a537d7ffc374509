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

import ponder.log as logging
from ponder.detection import (HomodyneSetup, apply_homodyne,
                              constant_power_lock, correlation,
                              correlation_from_squeezing, homodyne_angles,
                              homodyne_spectrum, noise_from_correlation)
from ponder.errors import InvalidParameter
from ponder.metrics import SqueezeGrid
from ponder.models import NoiseSource
from tests.shared import synthetic_layers


def test_setup_from_transmission():
    setup = HomodyneSetup.from_transmission(0.9, 1.0, 2.0)
    assert setup.r2 == pytest.approx(0.1)
    assert setup.t == pytest.approx(math.sqrt(0.9))
    assert setup.theta == 0.0


@pytest.mark.parametrize("t2, r2, e_signal, e_lo", [
    (0.5, 0.4, 1.0, 1.0),
    (1.2, -0.2, 1.0, 1.0),
    (0.5, 0.5, -1.0, 1.0),
])
def test_invalid_setup(t2, r2, e_signal, e_lo):
    with pytest.raises(InvalidParameter):
        HomodyneSetup(t2, r2, e_signal, e_lo)


def test_carriers_in_phase():
    setup = HomodyneSetup(0.5, 0.5, 1.0, 1.0)
    assert setup.detected_power == pytest.approx(2.0)
    assert homodyne_angles(setup) == pytest.approx((0.0, 0.0))


def test_carriers_in_quadrature():
    setup = HomodyneSetup(0.5, 0.5, 1.0, 1.0, math.pi / 2)
    assert setup.detected_power == pytest.approx(1.0)
    phi_s, phi_lo = homodyne_angles(setup)
    assert phi_s == pytest.approx(math.pi / 4)
    assert phi_lo == pytest.approx(-math.pi / 4)


def test_strong_local_oscillator_sets_the_quadrature():
    setup = HomodyneSetup.from_transmission(0.9, 1e-3, 10.0, 0.4)
    phi_s, phi_lo = homodyne_angles(setup)
    assert phi_s == pytest.approx(0.4, abs=1e-3)
    assert phi_lo == pytest.approx(0.0, abs=1e-3)


def test_cancelling_carriers():
    setup = HomodyneSetup(0.5, 0.5, 1.0, 1.0, math.pi)
    assert setup.detected_power == pytest.approx(0.0, abs=1e-30)
    with pytest.raises(InvalidParameter):
        homodyne_angles(setup)


def test_homodyne_spectrum():
    assert homodyne_spectrum(0.5, 0.8, 0.2) == pytest.approx(0.6)
    assert homodyne_spectrum(1.0, 0.3, 0.7) == pytest.approx(1.0)
    with pytest.raises(InvalidParameter):
        homodyne_spectrum(-0.1, 0.5, 0.5)


def test_constant_power_lock_reads_the_requested_quadrature():
    e_lo, theta = constant_power_lock(0.9, 1.0, 0.3, 2.0)
    setup = HomodyneSetup.from_transmission(0.9, 1.0, e_lo, theta)
    assert setup.detected_power == pytest.approx(2.0)
    assert homodyne_angles(setup)[0] == pytest.approx(0.3)


def test_constant_power_lock_is_logged():
    try:
        logging.basicConfig("warning", {"ponder.detection": {"level": "debug"}})
        e_lo, theta = constant_power_lock(0.9, 1.0, math.radians(17.5), 2.0)
        homodyne_angles(HomodyneSetup.from_transmission(0.9, 1.0, e_lo, theta))
        report = logging.get_log_report()
        assert "Constant-power lock at phi_s = 17.5°" in report
        assert "Homodyne readout at phi_s = 17.5°" in report
    finally:
        logging.basicConfig("warning", {"ponder.detection": {"level": "warning"}})


def test_constant_power_lock_on_the_signal_carrier():
    # the signal alone already provides the power at φ_S = 0
    e_lo, _ = constant_power_lock(0.5, 2.0, 0.0, 2.0)
    assert e_lo == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("t2, power", [(1.0, 1.0), (0.5, 0.0)])
def test_invalid_lock(t2, power):
    with pytest.raises(InvalidParameter):
        constant_power_lock(t2, 1.0, 0.3, power)


def test_correlation_of_squeezed_light():
    assert correlation(10 ** -0.07) == pytest.approx(-0.080416, abs=1e-6)
    assert correlation(1.0) == 0.0
    assert correlation(3.0) == pytest.approx(0.5)


def test_dark_noise_reduces_the_correlation():
    r_rel = 10 ** -0.07
    assert correlation(r_rel, 1 + r_rel, 1 + r_rel) == pytest.approx(0.5 * correlation(r_rel))


def test_noise_from_correlation():
    r_rel = 10 ** -0.07
    assert noise_from_correlation(correlation(r_rel)) == pytest.approx(r_rel)
    assert noise_from_correlation(0.0) == 1.0


@pytest.mark.parametrize("c", [1.0, -1.0, 1.5])
def test_invalid_correlation(c):
    with pytest.raises(InvalidParameter):
        noise_from_correlation(c)


def test_invalid_correlation_inputs():
    with pytest.raises(InvalidParameter):
        correlation(0.0)
    with pytest.raises(InvalidParameter):
        correlation(0.5, -1.0, 0.0)


def test_correlation_after_the_splitter():
    assert correlation_from_squeezing(1.0, 0.4) == pytest.approx(0.0)
    assert correlation_from_squeezing(0.5, 1.0) == pytest.approx(-1 / 3)
    # the LO vacuum dilutes the squeezing
    assert correlation_from_squeezing(0.5, 0.5) > correlation_from_squeezing(0.5, 0.9)


def test_homodyne_grid():
    freqs = np.array([10.0, 100.0])
    total = np.array([[0.5, 2.0], [1.0, 0.2]])
    grid = SqueezeGrid(freqs, np.array([0.0, math.pi / 2]), synthetic_layers(total))
    seen = apply_homodyne(grid, HomodyneSetup.from_transmission(0.8, 1.0, 1.0))
    np.testing.assert_allclose(seen.total, 0.8 * total + 0.2)
    np.testing.assert_allclose(seen.layer(NoiseSource.THERMAL), 0.0)
    np.testing.assert_array_equal(seen.freqs, freqs)
    np.testing.assert_allclose(grid.total, total)
