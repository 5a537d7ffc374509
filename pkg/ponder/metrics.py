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

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import trapezoid

import ponder.log as logging
from ponder.cavity import CavityConfig, DerivedCavity, NoiseModel, derive
from ponder.constants import (DEFAULT_ANGLE_POINTS, DEFAULT_F_CAP_RATIO,
                              DEFAULT_F_MAX, DEFAULT_F_MIN,
                              DEFAULT_FREQUENCY_POINTS)
from ponder.errors import InvalidParameter, NumericalError
from ponder.mechanics import Oscillator
from ponder.models import MeasurementPort, NoiseSource
from ponder.optomech import oscillator_spring
from ponder.quantum import compute_spectrum, quadrature_noise
from ponder.utils import to_csv

# set up logging
logger = logging.getLogger(__name__)

SPECTRUM_HEADER = ("f_hz", "angle_deg", "quantum", "thermal", "rin", "pn", "total")
BUDGET_HEADER = ("f_hz", "quantum", "thermal", "rin", "pn", "total")


@dataclass(frozen=True)
class SqueezeGrid:
    """
    Noise relative to shot noise over quadrature angles × frequencies, per noise source
    """
    freqs: np.ndarray
    #: quadrature angles, rad, in [0, π)
    angles: np.ndarray
    #: source -> array of shape (len(angles), len(freqs))
    layers: dict
    port: MeasurementPort = MeasurementPort.TRANSMISSION
    #: frequencies dropped because the system could not be solved there
    skipped: tuple = ()

    @property
    def total(self) -> np.ndarray:
        return sum(self.layers[source] for source in NoiseSource)

    def layer(self, source: NoiseSource) -> np.ndarray:
        return self.layers[NoiseSource.get(source)]

    def to_db(self) -> dict:
        """Every layer and the total in dB (10·log₁₀)"""
        with np.errstate(divide="ignore"):
            result = {source: 10 * np.log10(layer) for source, layer in self.layers.items()}
            result["total"] = 10 * np.log10(self.total)
        return result

    def angle_index(self, angle: float) -> int:
        """Index of `angle` (rad) in the grid"""
        matches = np.flatnonzero(np.isclose(self.angles, angle, rtol=0.0, atol=1e-9))
        if len(matches) == 0:
            raise InvalidParameter("angle", angle, "not an angle of the grid")
        return int(matches[0])


@dataclass(frozen=True)
class SqueezeSummary:
    present: bool
    n_min: Optional[float] = None
    #: rad
    best_angle: Optional[float] = None
    best_freq: Optional[float] = None
    f_low: Optional[float] = None
    f_high: Optional[float] = None
    #: ∫ max(0, -10 log₁₀ N) d(log₁₀ f) at the best angle, dB·decades
    area_db_decades: float = 0.0

    @property
    def n_min_db(self) -> Optional[float]:
        return None if self.n_min is None else 10 * math.log10(self.n_min)

    def to_dict(self) -> dict:
        return {
            "present": self.present,
            "n_min": self.n_min,
            "n_min_db": self.n_min_db,
            "best_angle_deg": None if self.best_angle is None else math.degrees(self.best_angle),
            "best_freq_hz": self.best_freq,
            "f_low_hz": self.f_low,
            "f_high_hz": self.f_high,
            "area_db_decades": self.area_db_decades,
        }


@dataclass(frozen=True)
class BudgetRow:
    f: float
    layers: dict = field(default_factory=dict)
    total: float = 0.0

    def as_row(self) -> list:
        return [self.f] + [self.layers[source] for source in NoiseSource] + [self.total]


def default_frequencies(f_min: float = DEFAULT_F_MIN, f_max: float = DEFAULT_F_MAX,
                        points: int = DEFAULT_FREQUENCY_POINTS) -> np.ndarray:
    if not 0 < f_min < f_max:
        raise InvalidParameter("f_min/f_max", (f_min, f_max), "expected 0 < f_min < f_max")
    if points < 2:
        raise InvalidParameter("points", points, "at least two frequencies are needed")
    return np.logspace(math.log10(f_min), math.log10(f_max), int(points))


def default_angles(points: int = DEFAULT_ANGLE_POINTS) -> np.ndarray:
    if points < 1:
        raise InvalidParameter("angle_points", points, "must be positive")
    return np.linspace(0.0, math.pi, int(points), endpoint=False)


def default_f_cap(config: CavityConfig, derived: DerivedCavity, osc: Oscillator,
                  ratio: float = DEFAULT_F_CAP_RATIO) -> Optional[float]:
    """Upper frequency of the summary search, |f_OS| / ratio"""
    f_os = oscillator_spring(config, derived, osc).f_os
    if not f_os:
        return None
    return abs(f_os) / ratio


def __check_grid__(freqs: np.ndarray, angles: np.ndarray) -> None:
    if freqs.ndim != 1 or len(freqs) == 0:
        raise InvalidParameter("freqs", freqs.shape, "expected a non-empty 1-D grid")
    if np.any(freqs <= 0):
        raise InvalidParameter("freqs", float(np.min(freqs)), "frequencies must be positive")
    if np.any(np.diff(freqs) <= 0):
        raise InvalidParameter("freqs", None, "frequencies must be strictly increasing")
    if angles.ndim != 1 or len(angles) == 0:
        raise InvalidParameter("angles", angles.shape, "expected a non-empty 1-D grid")
    if np.any(angles < 0) or np.any(angles >= math.pi):
        raise InvalidParameter("angles", None, "angles must lie in [0, π)")


def build_grid(config: CavityConfig, osc: Oscillator, noises: NoiseModel, freqs: Sequence[float],
               angles: Sequence[float], workers: Optional[int] = None,
               port: Optional[MeasurementPort] = None) -> SqueezeGrid:
    """
    Evaluate the noise of every quadrature angle at every frequency, one layer per source

    Every layer comes from the same solve of the field equations with only that source
    driving the outputs; the grid is the same for any number of workers.

    :raises InvalidParameter: on an invalid grid
    :raises NumericalError: if no frequency of the grid can be solved
    """
    freqs = np.asarray(freqs, dtype=float)
    angles = np.asarray(angles, dtype=float)
    __check_grid__(freqs, angles)
    port = MeasurementPort.get(port or config.measurement_port)
    derived = derive(config)

    covariances, skipped = compute_spectrum(config, derived, osc, noises, freqs, port, workers)
    if not covariances:
        raise NumericalError("The optomechanical system could not be solved at any frequency", float(freqs[0]))
    if skipped:
        logger.warning("%d frequencies skipped: %s", len(skipped), skipped)

    solved = np.array([c.freq for c in covariances])
    layers = {}
    for source in NoiseSource:
        layer = np.column_stack([quadrature_noise(c.covariance(source), angles) for c in covariances])
        layers[source] = np.maximum(layer.reshape(len(angles), len(solved)), 0.0)
    return SqueezeGrid(solved, angles, layers, port, tuple(skipped))


def __crossing__(freqs: np.ndarray, total: np.ndarray, k: int) -> float:
    # total crosses 1 between k and k+1, linear in (log f, total)
    x0, x1 = math.log10(freqs[k]), math.log10(freqs[k + 1])
    y0, y1 = total[k], total[k + 1]
    return 10 ** (x0 + (1.0 - y0) * (x1 - x0) / (y1 - y0))


def area_db_decades(freqs: np.ndarray, noise: np.ndarray) -> float:
    """Squeezing area ∫ max(0, -10 log₁₀ N) d(log₁₀ f), dB·decades"""
    if len(freqs) < 2:
        return 0.0
    squeezing = np.maximum(0.0, -10 * np.log10(noise))
    return float(trapezoid(squeezing, np.log10(freqs)))


def extract_summary(grid: SqueezeGrid, f_cap: Optional[float] = None) -> SqueezeSummary:
    """
    Squeezing figures of merit, with the minimum searched among frequencies up to `f_cap`

    Ties go to the lower angle, then the lower frequency. The band edges and the area
    are taken over the whole spectrum at the best angle; an edge that lies outside the
    grid is reported as None.
    """
    freqs = grid.freqs
    if f_cap is None or f_cap > freqs[-1]:
        if f_cap is not None:
            logger.warning("f_cap = %g Hz lies above the grid; using %g Hz", f_cap, freqs[-1])
        f_cap = freqs[-1]
    if f_cap < freqs[0]:
        raise InvalidParameter("f_cap", f_cap, f"lies below the grid (f_min = {freqs[0]:g} Hz)")

    mask = freqs <= f_cap
    capped_freqs = freqs[mask]
    total = grid.total[:, mask]
    flat = int(np.argmin(total))
    i, j = np.unravel_index(flat, total.shape)
    n_min = float(total[i, j])
    if not n_min < 1.0:
        return SqueezeSummary(present=False)

    row = grid.total[i]
    below = np.flatnonzero(row < 1.0)
    first, last = int(below[0]), int(below[-1])
    f_low = __crossing__(freqs, row, first - 1) if first > 0 else None
    f_high = __crossing__(freqs, row, last) if last < len(row) - 1 else None
    summary = SqueezeSummary(
        present=True,
        n_min=n_min,
        best_angle=float(grid.angles[i]),
        best_freq=float(capped_freqs[j]),
        f_low=f_low,
        f_high=f_high,
        area_db_decades=area_db_decades(freqs, row),
    )
    logger.debug("Summary: %r", summary)
    return summary


def noise_budget(grid: SqueezeGrid, angle: float) -> list[BudgetRow]:
    """Per-source noise at one quadrature angle (rad) of the grid"""
    i = grid.angle_index(angle)
    rows = []
    for j, f in enumerate(grid.freqs):
        layers = {source: float(grid.layers[source][i, j]) for source in NoiseSource}
        rows.append(BudgetRow(float(f), layers, sum(layers.values())))
    return rows


def spectrum_to_csv(grid: SqueezeGrid) -> str:
    """Long-format table: one row per (frequency, angle)"""
    total = grid.total

    def rows():
        for j, f in enumerate(grid.freqs):
            for i, angle in enumerate(grid.angles):
                yield ([f, math.degrees(angle)] + [grid.layers[source][i, j] for source in NoiseSource]
                       + [total[i, j]])
    return to_csv("spectrum", SPECTRUM_HEADER, rows())


def budget_to_csv(rows: Sequence[BudgetRow]) -> str:
    return to_csv("budget", BUDGET_HEADER, (row.as_row() for row in rows))
