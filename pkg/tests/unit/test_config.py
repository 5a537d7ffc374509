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


import copy
import math
import os

import pytest

from ponder.config import LockConfig, parse_config, parse_config_data
from ponder.errors import ConfigurationError
from ponder.models import (DampingKind, Measurement, MeasurementPort,
                           Objective, PowerKind)

CAVITY = {
    "cavity": {
        "length_m": 1e-4,
        "t1": 5e-5,
        "t2": 2.5e-4,
        "l2": 1.2e-4,
        "detuning": 0.5,
        "power": {"kind": "detuned_cavity", "watts": 0.4},
    }
}


def __document__(**tables) -> dict:
    data = copy.deepcopy(CAVITY)
    for name, value in tables.items():
        if name.startswith("cavity_"):
            key = name[len("cavity_"):]
            if value is None:
                del data["cavity"][key]
            else:
                data["cavity"][key] = value
        else:
            data[name] = value
    return data


def __key_path_of__(data: dict, base_dir=None) -> str:
    with pytest.raises(ConfigurationError) as e:
        parse_config_data(data, base_dir)
    return e.value.key_path


def test_minimal_configuration(minimal_config):
    config = parse_config(minimal_config)
    assert config.cavity.length == 1e-4
    assert config.cavity.l1 == 0.0
    assert config.cavity.wavelength == pytest.approx(1064e-9)
    assert config.cavity.power_spec.kind is PowerKind.DETUNED_CAVITY
    assert config.cavity.measurement_port is MeasurementPort.TRANSMISSION
    assert config.oscillator is None
    assert config.measurement is Measurement.DIRECT
    assert config.noise.thermal and config.noise.rin and config.noise.pn
    assert config.grid.points == 400
    assert config.grid.angle_points == 180
    assert config.lock is None and config.sweep is None


def test_baseline_configuration(baseline_config):
    config = parse_config(baseline_config)
    mode = config.require_oscillator().fundamental
    assert mode.freq == 876.0
    assert mode.modal_mass == 5e-11
    assert mode.loss_factor == pytest.approx(1 / 16000)
    assert config.oscillator.temperature == 295.0
    assert len(config.grid.frequencies()) == 30
    assert len(config.grid.angles()) == 36


def test_oscillator_is_required_when_asked(minimal_config):
    with pytest.raises(ConfigurationError) as e:
        parse_config(minimal_config).require_oscillator()
    assert e.value.key_path == "oscillator"


def test_modes_from_csv(config_path):
    config = parse_config(os.path.join(config_path, "modes_csv.toml"))
    modes = config.oscillator.modes
    assert [m.freq for m in modes] == [876.0, 5000.0, 12000.0]
    assert modes[1].loss_factor == pytest.approx(1 / 5000)
    assert modes[2].loss_factor == pytest.approx(1 / 20000)


def test_unsorted_modes_csv(config_path):
    with pytest.raises(ConfigurationError) as e:
        parse_config(os.path.join(config_path, "unsorted_modes.toml"))
    assert e.value.row == 3


def test_lossy_mirrors(config_path):
    with pytest.raises(ConfigurationError) as e:
        parse_config(os.path.join(config_path, "lossy.toml"))
    assert e.value.key_path == "cavity.t1, cavity.t2, cavity.l1, cavity.l2"


def test_sweep_configuration(sweep_config):
    sweep = parse_config(sweep_config).sweep
    assert sweep.axes == {"t2": (2.5e-4, 1e-4)}
    assert sweep.cap == 10
    assert sweep.objective is Objective.MIN_N_MIN


def test_lock_configuration(lock_config):
    lock = parse_config(lock_config).lock
    assert lock.plant == "mechanics"
    assert lock.points_per_decade == 50
    freqs = lock.frequencies()
    assert freqs[0] == pytest.approx(10.0)
    assert freqs[-1] == pytest.approx(1e5)
    assert len(freqs) == 201


def test_cantilever_configuration(cantilever_config):
    config = parse_config(cantilever_config)
    assert config.geometry.length_l == 2.5e-4
    assert len(config.mode_shapes) == 1
    assert config.mode_shapes[0].path.name == "piston.csv"
    assert config.beam.waist_radius == 1e-5
    assert config.beam.center_x == 0.0


def test_missing_file(tmp_path):
    with pytest.raises(ConfigurationError):
        parse_config(tmp_path / "missing.toml")


def test_invalid_toml(tmp_path):
    path = tmp_path / "broken.toml"
    path.write_text("[cavity\nlength_m = ", encoding="utf-8")
    with pytest.raises(ConfigurationError):
        parse_config(path)


def test_missing_cavity():
    assert __key_path_of__({}) == "cavity"


@pytest.mark.parametrize("key", ["length_m", "t1", "t2", "detuning"])
def test_missing_cavity_key(key):
    assert __key_path_of__(__document__(**{f"cavity_{key}": None})) == f"cavity.{key}"


def test_missing_power():
    assert __key_path_of__(__document__(cavity_power=None)) == "cavity.power"


@pytest.mark.parametrize("changes, key_path", [
    ({"cavity_length_m": -1e-4}, "cavity.length_m"),
    ({"cavity_t1": "50 ppm"}, "cavity.t1"),
    ({"cavity_t1": True}, "cavity.t1"),
    ({"cavity_detuning": math.inf}, "cavity.detuning"),
    ({"cavity_mode_matching": 1.5}, "cavity.mode_matching"),
    ({"cavity_measurement_port": "sideways"}, "cavity.measurement_port"),
    ({"cavity_power": {"kind": "detuned_cavity", "watts": -1.0}}, "cavity.power.watts"),
    ({"cavity_power": {"kind": "peak", "watts": 1.0}}, "cavity.power.kind"),
])
def test_invalid_cavity(changes, key_path):
    assert __key_path_of__(__document__(**changes)) == key_path


def test_mirror_sum():
    assert __key_path_of__(__document__(cavity_t1=0.6, cavity_t2=0.5)) == \
        "cavity.t1, cavity.t2, cavity.l1, cavity.l2"


def test_unsupported_schema_version():
    data = __document__(schema_version=2)
    assert __key_path_of__(data) == "schema_version"


def test_noise_switches():
    config = parse_config_data(__document__(noise={"thermal": False, "pn": False},
                                            laser={"rin_asd": 2e-8}))
    assert not config.noise.thermal
    assert config.noise.rin
    assert not config.noise.pn
    assert config.laser.rin_asd == 2e-8
    assert config.laser.freq_noise_exponent == 2.0


def test_invalid_laser():
    assert __key_path_of__(__document__(laser={"rin_asd": -1.0})) == "laser.rin_asd"


def test_oscillator_modes():
    config = parse_config_data(__document__(oscillator={
        "damping": "viscous",
        "modes": [{"freq_hz": 5000.0, "modal_mass_kg": 1e-10},
                  {"freq_hz": 876.0, "modal_mass_kg": 5e-11, "q": 16000.0, "damping": "structural"}],
    }))
    modes = config.oscillator.modes
    assert [m.freq for m in modes] == [876.0, 5000.0]
    assert modes[0].damping_kind is DampingKind.STRUCTURAL
    assert modes[1].damping_kind is DampingKind.VISCOUS
    assert modes[1].loss_factor == pytest.approx(1 / 20000)
    assert config.oscillator.temperature == 295.0


@pytest.mark.parametrize("oscillator, key_path", [
    ({"modes": [{"freq_hz": 876.0}]}, "oscillator.modes[0].modal_mass_kg"),
    ({"modes": [{"freq_hz": 876.0, "modal_mass_kg": 5e-11, "q": 0.5}]}, "oscillator.modes[0].q"),
    ({}, "oscillator.csv, oscillator.modes"),
    ({"csv": "missing.csv"}, "oscillator.csv"),
    ({"modes": [{"freq_hz": 876.0, "modal_mass_kg": 5e-11}], "q_overrides": [{"index": 3, "q": 100.0}]},
     "oscillator.q_overrides"),
    ({"modes": [{"freq_hz": 876.0, "modal_mass_kg": 5e-11}], "q_overrides": [{"index": 0, "q": -1.0}]},
     "oscillator.q_overrides[0].q"),
])
def test_invalid_oscillator(oscillator, key_path, tmp_path):
    assert __key_path_of__(__document__(oscillator=oscillator), tmp_path) == key_path


@pytest.mark.parametrize("grid, key_path", [
    ({"f_min_hz": 0.0}, "grid.f_min_hz"),
    ({"f_min_hz": 1e3, "f_max_hz": 1e2}, "grid.f_min_hz, grid.f_max_hz"),
    ({"points": 1}, "grid.points"),
    ({"points": 10.5}, "grid.points"),
    ({"angle_points": 0}, "grid.angle_points"),
    ({"f_cap_hz": -1.0}, "grid.f_cap_hz"),
])
def test_invalid_grid(grid, key_path):
    assert __key_path_of__(__document__(grid=grid)) == key_path


def test_homodyne_detection():
    config = parse_config_data(__document__(detection={"measurement": "homodyne", "t2": 0.9, "e_lo": 3.0,
                                                       "theta_deg": 90.0}))
    assert config.measurement is Measurement.HOMODYNE
    assert config.homodyne.r2 == pytest.approx(0.1)
    assert config.homodyne.theta == pytest.approx(math.pi / 2)
    assert config.homodyne.e_signal == 1.0


def test_direct_detection_ignores_the_splitter():
    config = parse_config_data(__document__(detection={"measurement": "direct"}))
    assert config.homodyne is None


def test_invalid_homodyne_splitter():
    data = __document__(detection={"measurement": "homodyne", "t2": 0.5, "r2": 0.4})
    assert __key_path_of__(data) == "detection.t2, detection.r2"


@pytest.mark.parametrize("lock, key_path", [
    ({"plant": "laser"}, "lock.plant"),
    ({"f_min_hz": 1e3, "f_max_hz": 1e2}, "lock.f_min_hz, lock.f_max_hz"),
    ({"points_per_decade": 10}, "lock.points_per_decade"),
    ({"zeros_hz": [1.0, "a"]}, "lock.zeros_hz"),
    ({"plant_csv": "missing.csv"}, "lock.plant_csv"),
])
def test_invalid_lock(lock, key_path, tmp_path):
    assert __key_path_of__(__document__(lock=lock), tmp_path) == key_path


def test_lock_defaults():
    lock = parse_config_data(__document__(lock={"zeros_hz": [10.0], "poles_hz": [1.0, 1e4]})).lock
    assert lock == LockConfig(zeros_hz=(10.0,), poles_hz=(1.0, 1e4))
    assert len(lock.frequencies()) == 501


def test_missing_geometry_key():
    data = __document__(geometry={"length_m": 2.5e-4, "radius_m": 6e-5})
    assert __key_path_of__(data) == "geometry.width_m"


def test_invalid_geometry():
    data = __document__(geometry={"length_m": -2.5e-4, "radius_m": 6e-5, "width_m": 1.5e-5})
    assert __key_path_of__(data) == "geometry.length_m"


def test_mode_shapes_need_a_beam(cantilever_config):
    with pytest.raises(ConfigurationError) as e:
        parse_config_data({**__document__(), "mode_shapes": [{"csv": "piston.csv", "volume_norm_kg": 1e-11}]},
                          os.path.join(os.path.dirname(cantilever_config), "..", "shapes"))
    assert e.value.key_path == "beam"


@pytest.mark.parametrize("sweep, key_path", [
    ({"axes": {"length": [1e-4]}}, "sweep.axes.length"),
    ({"axes": {"t2": []}}, "sweep.axes.t2"),
    ({"axes": {"t2": [1e-4]}, "cap": 0}, "sweep.cap"),
    ({"axes": {"t2": [1e-4]}, "objective": "fastest"}, "sweep.objective"),
    ({"axes": {"t2": [1e-4]}, "f_cap_ratio": 0.0}, "sweep.f_cap_ratio"),
    ({"cap": 10}, "sweep.axes"),
])
def test_invalid_sweep(sweep, key_path):
    assert __key_path_of__(__document__(sweep=sweep)) == key_path
