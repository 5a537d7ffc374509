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

from ponder.cavity import PowerSpec, derive
from ponder.errors import ConfigurationError, InvalidParameter
from ponder.models import PowerKind, SpringMode
from ponder.optomech import (LoopModel, RationalFilter, SpringResponse,
                             TabulatedResponse, bode, closed_loop_poles,
                             effective_oscillator, loop_margins,
                             modulation_gains, open_loop_gain, optical_spring,
                             oscillator_spring, read_response_csv,
                             spring_frequency, suppression_factor)
from tests.shared import baseline_cavity, mirror_oscillator


def __spring_cavity__(**changes):
    return baseline_cavity(length=0.01, t1=255e-6, t2=250e-6, l2=0.0, detuning=0.35,
                           power_spec=PowerSpec(PowerKind.DETUNED_CAVITY, 0.22), **changes)


def __spring__(omega_os: float, gamma_0: float = 1e6) -> SpringResponse:
    omega_os_squared = math.copysign(omega_os ** 2, omega_os)
    return SpringResponse(k_os=0.0, k_dc=0.0, gamma_plus=complex(gamma_0), gamma_minus=complex(gamma_0),
                          gamma_0=gamma_0, omega_os_squared=omega_os_squared, omega_os=omega_os,
                          gamma_os=2 * omega_os_squared / gamma_0)


def test_spring_frequency_of_the_50ng_mirror():
    config = __spring_cavity__()
    f_os = spring_frequency(config, derive(config), 50e-12)
    assert 130e3 <= f_os <= 160e3


def test_dc_spring_constant():
    config = __spring_cavity__()
    spring = optical_spring(config, derive(config), 0.0)
    k = 2 * math.pi / config.wavelength
    expected = 16 * k * 0.22 * 0.35 / (299792458 * 505e-6 * (1 + 0.35 ** 2))
    assert spring.k_dc == pytest.approx(expected, rel=1e-9)
    assert spring.k_dc > 0


def test_spring_vanishes_on_resonance():
    config = baseline_cavity(detuning=0.0)
    derived = derive(config)
    for mode in SpringMode:
        assert optical_spring(config, derived, 0.0, mode).k_dc == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("mode", list(SpringMode))
def test_spring_is_odd_in_the_detuning(mode):
    plus = baseline_cavity(detuning=0.6)
    minus = baseline_cavity(detuning=-0.6)
    k_plus = optical_spring(plus, derive(plus), 0.0, mode).k_dc
    k_minus = optical_spring(minus, derive(minus), 0.0, mode).k_dc
    assert k_minus == pytest.approx(-k_plus, rel=1e-9)


def test_anti_restoring_spring_has_a_negative_frequency():
    config = baseline_cavity(detuning=-0.5)
    spring = oscillator_spring(config, derive(config), mirror_oscillator())
    assert spring.omega_os < 0
    assert spring.omega_os_squared < 0
    assert spring.f_os == pytest.approx(spring.omega_os / (2 * math.pi))


def test_anti_damping_rate():
    config = baseline_cavity()
    derived = derive(config)
    spring = optical_spring(config, derived, 0.0, mass=50e-12)
    assert spring.gamma_0 == pytest.approx(derived.gamma_rad * (1 + 0.5 ** 2))
    assert spring.gamma_os / spring.omega_os_squared == pytest.approx(2 / spring.gamma_0)


@pytest.mark.parametrize("fraction", [0.0, 0.01, 0.1])
def test_exact_spring_converges_to_the_approximation(fraction):
    config = baseline_cavity()
    derived = derive(config)
    f = fraction * derived.gamma_hwhm
    exact = optical_spring(config, derived, f, SpringMode.EXACT).k_os
    approximate = optical_spring(config, derived, f, SpringMode.APPROXIMATE).k_os
    assert abs(exact - approximate) / abs(approximate) < 10 * config.total_loss


def test_spring_needs_a_positive_mass():
    config = baseline_cavity()
    with pytest.raises(InvalidParameter):
        optical_spring(config, derive(config), 0.0, mass=0.0)


def test_phase_modulation_gain_vanishes_at_dc():
    config = baseline_cavity()
    derived = derive(config)
    g_am, g_pm = modulation_gains(config, derived, 0.0)
    assert g_pm == pytest.approx(0.0, abs=1e-15)
    assert g_am == pytest.approx(4 * config.t1 / config.total_loss ** 2 / (1 + 0.5 ** 2))


def test_amplitude_modulation_gain_rolls_off_at_the_linewidth():
    config = baseline_cavity(detuning=0.0)
    derived = derive(config)
    g_dc, _ = modulation_gains(config, derived, 0.0)
    g_pole, _ = modulation_gains(config, derived, derived.gamma_hwhm)
    assert abs(g_pole) / abs(g_dc) == pytest.approx(1 / math.sqrt(2), rel=1e-9)


def test_exact_modulation_gain_matches_at_low_frequency():
    config = baseline_cavity()
    derived = derive(config)
    exact, _ = modulation_gains(config, derived, 1e3, SpringMode.EXACT)
    approximate, _ = modulation_gains(config, derived, 1e3, SpringMode.APPROXIMATE)
    assert abs(exact - approximate) / abs(approximate) < 10 * config.total_loss


def test_open_loop_gain():
    assert open_loop_gain(2.0, 3.0 - 1.0j) == 6.0 - 2.0j


def test_effective_oscillator_frequency():
    omega_m = 2 * math.pi * 876.0
    effective = effective_oscillator(omega_m, omega_m / 16000, __spring__(2 * math.pi * 145e3))
    assert effective.omega_om / (2 * math.pi) == pytest.approx(math.hypot(876.0, 145e3), rel=1e-12)
    assert effective.omega_om / (2 * math.pi) == pytest.approx(145.0026e3, rel=1e-6)


def test_stable_oscillator_has_left_half_plane_poles():
    omega_m = 2 * math.pi * 876.0
    effective = effective_oscillator(omega_m, 100.0, __spring__(2 * math.pi * 1e3, gamma_0=1e9))
    assert effective.stable
    assert np.all(closed_loop_poles(effective).real < 0)


def test_anti_damped_oscillator_has_a_right_half_plane_pole():
    omega_m = 2 * math.pi * 876.0
    spring = __spring__(2 * math.pi * 145e3, gamma_0=1e6)
    effective = effective_oscillator(omega_m, omega_m / 16000, spring)
    assert effective.gamma_om < 0
    assert not effective.stable
    assert np.any(closed_loop_poles(effective).real > 0)


def test_anti_restoring_oscillator():
    omega_m = 2 * math.pi * 876.0
    effective = effective_oscillator(omega_m, 1.0, __spring__(-2 * math.pi * 10e3))
    assert effective.anti_restoring
    assert effective.omega_om < 0
    omega_om, gamma_om = effective
    assert gamma_om == effective.gamma_om


def test_suppression_of_the_ambient_motion():
    omega_os = 2 * math.pi * 75e3
    omega_m = 2 * math.pi * 288.0
    assert suppression_factor(omega_os, omega_m, omega_m / 1e4, 0.0) == pytest.approx((75e3 / 288.0) ** 2)
    assert suppression_factor(omega_os, omega_m, omega_m / 1e4, 1.0) >= 5e4
    assert suppression_factor(0.0, omega_m, omega_m / 1e4, 1.0) == 0.0


def test_suppression_rejects_negative_frequencies():
    with pytest.raises(InvalidParameter):
        suppression_factor(1.0, 1.0, 1.0, -1.0)


def __first_order_loop__() -> LoopModel:
    return LoopModel(lambda f: np.ones_like(np.asarray(f, dtype=float)), RationalFilter(10.0, (), (1e3,)))


def test_margins_of_a_first_order_loop():
    report = loop_margins(__first_order_loop__(), np.logspace(1, 6, 501))
    assert len(report.unity_gain_crossings) == 1
    assert report.unity_gain_crossings[0] == pytest.approx(1e3 * math.sqrt(99), rel=1e-3)
    assert report.phase_margins[0] == pytest.approx(180 - math.degrees(math.atan(math.sqrt(99))), abs=0.1)
    assert report.gain_margin_db is None
    assert report.stable


def test_margins_below_unity_gain():
    loop = LoopModel(lambda f: 0.5 * np.ones_like(np.asarray(f, dtype=float)))
    report = loop_margins(loop, np.logspace(1, 3, 101))
    assert report.unity_gain_crossings == []
    assert report.stable


def test_negative_feedback_sign_is_unstable():
    loop = LoopModel(lambda f: -2.0 * np.ones_like(np.asarray(f, dtype=float)))
    report = loop_margins(loop, np.logspace(1, 3, 101))
    assert report.gain_margin_db == pytest.approx(-20 * math.log10(2))
    assert not report.stable
    assert report.to_dict()["stable"] is False


@pytest.mark.parametrize("grid", [np.logspace(1, 6, 10), np.array([10.0, 5.0] + [1.0] * 100)])
def test_margins_reject_unusable_grids(grid):
    with pytest.raises(InvalidParameter):
        loop_margins(__first_order_loop__(), grid)


def test_bode_rows():
    rows = bode(__first_order_loop__(), np.logspace(1, 5, 5))
    assert len(rows) == 5
    assert rows[0].open_loop_mag_db == pytest.approx(20.0, abs=1e-3)
    assert rows[-1].plant_mag_db == pytest.approx(0.0)
    assert rows[-1].filter_phase_deg == pytest.approx(-math.degrees(math.atan(100.0)))


def test_rational_filter_rejects_zero_corners():
    with pytest.raises(InvalidParameter):
        RationalFilter(1.0, (0.0,))


def test_tabulated_response_interpolates_in_log_frequency():
    response = TabulatedResponse(np.array([10.0, 1000.0]), np.array([1.0 + 1.0j, 3.0 - 1.0j]))
    assert response(100.0) == pytest.approx(2.0 + 0.0j)
    with pytest.raises(InvalidParameter):
        response(1e4)


def test_measured_plant(tmp_path):
    f = np.logspace(1, 6, 501)
    g = 10 / (1 + 1j * f / 1e3)
    path = tmp_path / "plant.csv"
    path.write_text("f_hz,re,im\n" + "".join(f"{a!r},{b.real!r},{b.imag!r}\n" for a, b in zip(f.tolist(), g.tolist())))
    report = loop_margins(LoopModel(read_response_csv(path)), f)
    assert report.unity_gain_crossings[0] == pytest.approx(1e3 * math.sqrt(99), rel=1e-3)


def test_unsorted_measured_plant(tmp_path):
    path = tmp_path / "plant.csv"
    path.write_text("f_hz,re,im\n100.0,1.0,0.0\n10.0,1.0,0.0\n")
    with pytest.raises(ConfigurationError):
        read_response_csv(path)
