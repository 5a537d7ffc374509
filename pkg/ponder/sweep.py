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
Grid search over cavity parameters.

Every configuration of the Cartesian product of the axes is evaluated independently;
rows come back in the lexicographic order of the axis indices, with the axes taken in
the canonical order of :data:`ponder.constants.SWEEP_AXES`.
"""

from __future__ import annotations

import dataclasses
import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

import ponder.log as logging
from ponder.cavity import CavityConfig, NoiseModel, PowerSpec, derive
from ponder.constants import (DEFAULT_F_CAP_RATIO, DEFAULT_SWEEP_CAP,
                              SWEEP_AXES)
from ponder.detection import HomodyneSetup, apply_homodyne
from ponder.errors import InvalidParameter, PonderError, SweepCapExceeded
from ponder.events import EventType, Publisher, SweepEvent
from ponder.mechanics import Oscillator
from ponder.metrics import (SqueezeSummary, build_grid, default_angles,
                            default_f_cap, default_frequencies,
                            extract_summary)
from ponder.models import Objective
from ponder.optomech import oscillator_spring
from ponder.utils import get_config, parallel_map, to_csv

# set up logging
logger = logging.getLogger(__name__)

SWEEP_HEADER = ("index", "t1", "t2", "l2", "detuning", "mode_matching", "power_w", "present", "n_min",
                "n_min_db", "best_angle_deg", "best_freq_hz", "f_low_hz", "f_high_hz", "area_db_decades",
                "gamma_hwhm_hz", "f_os_hz", "error")


@dataclass(frozen=True)
class SweepSpec:
    #: axis name -> values; names from SWEEP_AXES
    axes: dict
    config: CavityConfig
    oscillator: Oscillator
    noise: NoiseModel = field(default_factory=NoiseModel)
    freqs: np.ndarray = field(default_factory=default_frequencies)
    angles: np.ndarray = field(default_factory=default_angles)
    #: the summary searches f ≤ |f_OS| / f_cap_ratio
    f_cap_ratio: float = DEFAULT_F_CAP_RATIO
    objective: Objective = Objective.MIN_N_MIN
    cap: int = field(default_factory=lambda: int(get_config("sweep_cap", DEFAULT_SWEEP_CAP)))
    homodyne: Optional[HomodyneSetup] = None

    def __post_init__(self):
        axes = {}
        for name, values in self.axes.items():
            if name not in SWEEP_AXES:
                raise InvalidParameter("axes", name, f"unknown sweep axis; expected one of {list(SWEEP_AXES)}")
            values = tuple(sorted(float(v) for v in values))
            if not values:
                raise InvalidParameter(f"axes.{name}", values, "an axis needs at least one value")
            if len(set(values)) != len(values):
                raise InvalidParameter(f"axes.{name}", values, "axis values must be distinct")
            axes[name] = values
        # canonical order, independent of how the axes were given
        object.__setattr__(self, "axes", {name: axes[name] for name in SWEEP_AXES if name in axes})
        object.__setattr__(self, "objective", Objective.get(self.objective))
        if not self.f_cap_ratio > 0:
            raise InvalidParameter("f_cap_ratio", self.f_cap_ratio, "must be positive")

    @property
    def size(self) -> int:
        return math.prod(len(values) for values in self.axes.values())

    def configurations(self):
        """Parameter assignments of the sweep, in row order"""
        names = list(self.axes)
        for values in itertools.product(*self.axes.values()):
            yield dict(zip(names, values))


@dataclass(frozen=True)
class SweepRow:
    index: int
    #: swept parameter values
    params: dict
    config: Optional[CavityConfig] = None
    summary: Optional[SqueezeSummary] = None
    gamma_hwhm: Optional[float] = None
    f_os: Optional[float] = None
    error: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.error is not None

    def value(self, name: str) -> Optional[float]:
        """Value of a cavity parameter for this row (swept or fixed)"""
        if name in self.params:
            return self.params[name]
        if self.config is None:
            return None
        if name == "power":
            return self.config.power_spec.watts
        return getattr(self.config, name)

    def as_row(self) -> list:
        summary = self.summary or SqueezeSummary(present=False)
        values = summary.to_dict()
        return [self.index] + [self.value(name) for name in SWEEP_AXES] + [
            summary.present, values["n_min"], values["n_min_db"], values["best_angle_deg"],
            values["best_freq_hz"], values["f_low_hz"], values["f_high_hz"],
            summary.area_db_decades if summary.present else 0.0,
            self.gamma_hwhm, self.f_os, self.error,
        ]


def configure(template: CavityConfig, params: dict) -> CavityConfig:
    """Apply a parameter assignment to the fixed configuration"""
    changes = {name: value for name, value in params.items() if name != "power"}
    if "power" in params:
        changes["power_spec"] = PowerSpec(template.power_spec.kind, params["power"])
    return dataclasses.replace(template, **changes)


def evaluate(spec: SweepSpec, index: int, params: dict) -> SweepRow:
    """Summary of one configuration; failures give an error row"""
    config = None
    try:
        config = configure(spec.config, params)
        derived = derive(config)
        grid = build_grid(config, spec.oscillator, spec.noise, spec.freqs, spec.angles, workers=1)
        if spec.homodyne is not None:
            grid = apply_homodyne(grid, spec.homodyne)
        f_cap = default_f_cap(config, derived, spec.oscillator, spec.f_cap_ratio)
        if f_cap is not None:
            f_cap = max(f_cap, float(grid.freqs[0]))
        summary = extract_summary(grid, f_cap)
        f_os = oscillator_spring(config, derived, spec.oscillator).f_os
        return SweepRow(index, params, config, summary, derived.gamma_hwhm, f_os)
    except PonderError as e:
        logger.warning("Configuration %d %s failed: %s", index, params, e)
        return SweepRow(index, params, config, error=str(e))
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as e:
        logger.warning("Configuration %d %s failed numerically: %r", index, params, e)
        if logger.isEnabledFor(logging.DEBUG):
            logger.exception(e)
        return SweepRow(index, params, config, error=f"{type(e).__name__}: {e}")


def run_sweep(spec: SweepSpec, workers: Optional[int] = None,
              publisher: Optional[Publisher] = None) -> list[SweepRow]:
    """
    Evaluate every configuration of the sweep

    :param spec: the sweep
    :param workers: worker threads (capped by PONDER_THREADS)
    :param publisher: receives start, per-configuration and end events
    :raises SweepCapExceeded: if the sweep has more configurations than `spec.cap`
    """
    size = spec.size
    if size > spec.cap:
        raise SweepCapExceeded(size, spec.cap)
    logger.debug("Sweep of %d configurations over %s", size, list(spec.axes))
    if publisher:
        publisher.notify(SweepEvent(EventType.SWEEP_START, size))

    def run(item: tuple[int, dict]) -> SweepRow:
        index, params = item
        row = evaluate(spec, index, params)
        if publisher:
            publisher.notify(SweepEvent(EventType.CONFIGURATION_END, size, index, row))
        return row

    rows = parallel_map(run, list(enumerate(spec.configurations())), workers)
    if publisher:
        publisher.notify(SweepEvent(EventType.SWEEP_END, size, payload=rows))
    failed = sum(1 for row in rows if row.failed)
    if failed:
        logger.warning("%d of %d configurations failed", failed, size)
    return rows


def __objective_key__(row: SweepRow, objective: Objective) -> float:
    summary = row.summary
    if objective is Objective.MIN_N_MIN:
        return summary.n_min if summary.present else math.inf
    if objective is Objective.MAX_AREA_DB_HZ:
        return -summary.area_db_decades
    return summary.f_low if summary.present and summary.f_low is not None else math.inf


def select_optimum(rows: Sequence[SweepRow], objective: Objective = Objective.MIN_N_MIN) -> SweepRow:
    """
    Best row for `objective`; ties go to the smaller t2, then the smaller t1, then
    the smaller |detuning|

    :raises InvalidParameter: if every row failed
    """
    objective = Objective.get(objective)
    candidates = [row for row in rows if not row.failed]
    if not candidates:
        raise InvalidParameter("rows", len(rows), "no successful configuration to choose from")
    return min(candidates, key=lambda row: (__objective_key__(row, objective), row.value("t2"),
                                            row.value("t1"), abs(row.value("detuning"))))


def rows_to_csv(rows: Sequence[SweepRow]) -> str:
    return to_csv("sweep", SWEEP_HEADER, (row.as_row() for row in rows))
