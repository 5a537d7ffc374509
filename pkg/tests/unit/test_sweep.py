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


import numpy as np
import pytest

from ponder import sweep
from ponder.cavity import NoiseModel
from ponder.errors import InvalidParameter, SweepCapExceeded
from ponder.events import EventType, Publisher, Subscriber
from ponder.metrics import SqueezeSummary, default_angles
from ponder.models import Objective, PowerKind
from ponder.sweep import (SWEEP_HEADER, SweepRow, SweepSpec, configure,
                          rows_to_csv, run_sweep, select_optimum)
from tests.shared import baseline_cavity, mirror_oscillator


class EventCollector(Subscriber):

    def __init__(self):
        super().__init__("collector")
        self.events = []

    def update(self, event):
        self.events.append(event)


def __spec__(axes, **kwargs) -> SweepSpec:
    return SweepSpec(axes, baseline_cavity(), mirror_oscillator(), noise=NoiseModel.quantum_only(),
                     freqs=np.logspace(2, 5, 16), angles=default_angles(18), **kwargs)


def __row__(index, t1=50e-6, t2=250e-6, detuning=0.5, error=None, **summary) -> SweepRow:
    params = {"t1": t1, "t2": t2, "detuning": detuning}
    if error:
        return SweepRow(index, params, error=error)
    return SweepRow(index, params, summary=SqueezeSummary(**summary))


def test_axes_in_canonical_order():
    spec = __spec__({"detuning": [1.0, 0.5], "t1": [60e-6, 50e-6]})
    assert list(spec.axes) == ["t1", "detuning"]
    assert spec.axes["detuning"] == (0.5, 1.0)
    assert spec.size == 4
    assert list(spec.configurations())[1] == {"t1": 50e-6, "detuning": 1.0}


@pytest.mark.parametrize("axes", [{"length": [1e-4]}, {"t2": [1e-4, 1e-4]}, {"t1": []}])
def test_invalid_axes(axes):
    with pytest.raises(InvalidParameter):
        __spec__(axes)


def test_invalid_objective():
    with pytest.raises(InvalidParameter):
        __spec__({}, objective="max_n_min")


def test_configure_power():
    config = configure(baseline_cavity(), {"power": 0.2, "t2": 1e-4})
    assert config.power_spec.watts == 0.2
    assert config.power_spec.kind is PowerKind.DETUNED_CAVITY
    assert config.t2 == 1e-4


def test_sweep_without_axes_is_a_single_configuration():
    rows = run_sweep(__spec__({}))
    assert len(rows) == 1
    row = rows[0]
    assert row.index == 0
    assert not row.failed
    assert row.gamma_hwhm > 0
    assert row.value("t2") == 250e-6
    assert row.value("power") == 0.4


def test_sweep_cap():
    with pytest.raises(SweepCapExceeded) as e:
        run_sweep(__spec__({"t2": [1e-4, 2e-4, 3e-4]}, cap=2))
    assert e.value.size == 3
    assert e.value.cap == 2
    assert e.value.key_path == "sweep.cap"


def test_failed_configuration_gives_an_error_row():
    rows = run_sweep(__spec__({"t1": [50e-6, 0.9999]}))
    assert [row.index for row in rows] == [0, 1]
    assert not rows[0].failed
    assert rows[1].failed
    assert "t1+t2+l1+l2" in rows[1].error
    assert select_optimum(rows) is rows[0]
    assert rows_to_csv(rows).splitlines()[3].split(",")[-1] != ""


@pytest.mark.parametrize("error", [np.linalg.LinAlgError("singular matrix"), FloatingPointError("overflow"),
                                   ValueError("math domain error"), ZeroDivisionError("float division")])
def test_numerical_failure_gives_an_error_row(monkeypatch, error):
    spring = sweep.oscillator_spring

    def failing_spring(config, derived, osc):
        if config.t2 == 1e-4:
            raise error
        return spring(config, derived, osc)

    monkeypatch.setattr(sweep, "oscillator_spring", failing_spring)
    rows = run_sweep(__spec__({"t2": [1e-4, 2.5e-4, 4e-4]}), workers=2)
    assert [row.index for row in rows] == [0, 1, 2]
    assert rows[0].failed
    assert rows[0].error.startswith(type(error).__name__)
    assert not rows[1].failed and not rows[2].failed
    assert rows[1].summary is not None
    assert select_optimum(rows).index in (1, 2)


def test_sweep_is_deterministic():
    spec = __spec__({"t2": [1e-4, 2.5e-4], "detuning": [0.5, 1.0]})
    serial = rows_to_csv(run_sweep(spec, workers=1))
    parallel = rows_to_csv(run_sweep(spec, workers=4))
    assert serial == parallel
    lines = serial.splitlines()
    assert lines[1] == ",".join(SWEEP_HEADER)
    assert len(lines) == 2 + 4


def test_sweep_events():
    publisher = Publisher()
    collector = EventCollector()
    publisher.add_subscriber(collector)
    rows = run_sweep(__spec__({"t2": [1e-4, 2.5e-4]}), workers=2, publisher=publisher)
    types = [event.event_type for event in collector.events]
    assert types[0] is EventType.SWEEP_START
    assert types[-1] is EventType.SWEEP_END
    assert types.count(EventType.CONFIGURATION_END) == 2
    assert collector.events[0].total == 2
    assert collector.events[-1].payload == rows
    assert sorted(e.index for e in collector.events if e.event_type is EventType.CONFIGURATION_END) == [0, 1]


def test_deepest_squeezing_wins():
    rows = [__row__(0, present=True, n_min=0.6), __row__(1, present=True, n_min=0.4), __row__(2, present=False)]
    assert select_optimum(rows).index == 1


def test_largest_area_wins():
    rows = [__row__(0, present=True, n_min=0.4, area_db_decades=1.0),
            __row__(1, present=True, n_min=0.6, area_db_decades=2.5)]
    assert select_optimum(rows, Objective.MAX_AREA_DB_HZ).index == 1


def test_lowest_band_start_wins():
    rows = [__row__(0, present=True, n_min=0.5, f_low=None),
            __row__(1, present=True, n_min=0.5, f_low=300.0),
            __row__(2, present=True, n_min=0.5, f_low=200.0)]
    assert select_optimum(rows, "min_f_low").index == 2


def test_ties_prefer_weaker_mirrors_and_smaller_detuning():
    summary = {"present": True, "n_min": 0.5}
    assert select_optimum([__row__(0, t2=3e-4, **summary), __row__(1, t2=2e-4, **summary)]).index == 1
    assert select_optimum([__row__(0, t1=6e-5, **summary), __row__(1, t1=5e-5, **summary)]).index == 1
    assert select_optimum([__row__(0, detuning=-1.0, **summary), __row__(1, detuning=0.7, **summary)]).index == 1


def test_no_successful_configuration():
    with pytest.raises(InvalidParameter):
        select_optimum([__row__(0, error="boom"), __row__(1, error="boom")])
