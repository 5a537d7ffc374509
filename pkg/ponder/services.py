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
from pathlib import Path
from typing import Optional, Union

import numpy as np

import ponder.log as logging
from ponder.cavity import derive, exact_finesse, exact_linewidth, lambda_params
from ponder.config import RunConfig, parse_config
from ponder.constants import SCHEMA_VERSION
from ponder.detection import apply_homodyne, homodyne_angles
from ponder.errors import ConfigurationError
from ponder.events import Publisher, Subscriber
from ponder.mechanics import (analytic_modes, effective_thermal_force_psd,
                              modal_mass, susceptibility)
from ponder.metrics import (BudgetRow, SqueezeGrid, SqueezeSummary,
                            build_grid, default_f_cap, extract_summary,
                            noise_budget)
from ponder.models import Measurement
from ponder.optomech import (BodeRow, LoopModel, MarginReport, RationalFilter,
                             bode, loop_margins, optomechanical_open_loop,
                             oscillator_spring, read_response_csv,
                             suppressed_plant)
from ponder.oracle import OracleReport, run_oracle_suite
from ponder.sweep import SweepRow, SweepSpec, run_sweep, select_optimum
from ponder.utils import to_csv

# set up logging
logger = logging.getLogger(__name__)

BODE_HEADER = ("f_hz", "plant_mag_db", "plant_phase_deg", "filter_mag_db", "filter_phase_deg",
               "open_loop_mag_db", "open_loop_phase_deg")


def load(config: Union[str, Path, RunConfig]) -> RunConfig:
    if isinstance(config, RunConfig):
        return config
    return parse_config(config)


def derive_quantities(config: Union[str, Path, RunConfig]) -> dict:
    """Derived cavity quantities, plus the optical spring when an oscillator is configured"""
    run = load(config)
    cavity = run.cavity
    derived = derive(cavity)
    result = {
        "schema_version": SCHEMA_VERSION,
        "cavity": cavity.to_dict(),
        "derived": derived.to_dict(),
        "exact": {
            "gamma_hwhm_hz": exact_linewidth(cavity),
            "finesse": exact_finesse(cavity),
        },
    }
    if run.oscillator is not None:
        spring = oscillator_spring(cavity, derived, run.oscillator)
        result["spring"] = {
            "k_dc": spring.k_dc,
            "f_os_hz": spring.f_os,
            "gamma_os": spring.gamma_os,
            "anti_restoring": spring.k_dc < 0,
        }
        # noise strengths at the geometric mean of the fundamental and spring frequencies
        f_probe = math.sqrt(run.oscillator.fundamental.freq * abs(spring.f_os)) if spring.f_os else \
            run.oscillator.fundamental.freq
        s_f_th = float(effective_thermal_force_psd(run.oscillator, f_probe))
        params = lambda_params(derived, cavity, run.laser, s_f_th, f_probe)
        result["lambda"] = {"f_hz": f_probe, **params.__dict__}
    if run.homodyne is not None:
        phi_s, phi_lo = homodyne_angles(run.homodyne)
        result["homodyne"] = {"phi_s_deg": math.degrees(phi_s), "phi_lo_deg": math.degrees(phi_lo),
                              "detected_power_w": run.homodyne.detected_power}
    return result


def compute_grid(config: Union[str, Path, RunConfig], workers: Optional[int] = None) -> SqueezeGrid:
    """Noise grid of the configured measurement, homodyne readout included"""
    run = load(config)
    grid = build_grid(run.cavity, run.require_oscillator(), run.noise, run.grid.frequencies(),
                      run.grid.angles(), workers=workers)
    if run.measurement is Measurement.HOMODYNE and run.homodyne is not None:
        grid = apply_homodyne(grid, run.homodyne)
    return grid


def summary_cap(run: RunConfig, grid: SqueezeGrid) -> Optional[float]:
    """Upper frequency of the summary: the configured cap, or |f_OS|/3 clamped to the grid"""
    if run.grid.f_cap is not None:
        return run.grid.f_cap
    f_cap = default_f_cap(run.cavity, derive(run.cavity), run.require_oscillator())
    return None if f_cap is None else max(f_cap, float(grid.freqs[0]))


def compute_summary(config: Union[str, Path, RunConfig], workers: Optional[int] = None,
                    grid: Optional[SqueezeGrid] = None) -> tuple[SqueezeSummary, Optional[float]]:
    """
    Squeezing summary of the configuration and the frequency cap it was searched under
    """
    run = load(config)
    grid = grid or compute_grid(run, workers)
    f_cap = summary_cap(run, grid)
    return extract_summary(grid, f_cap), f_cap


def nearest_angle(grid: SqueezeGrid, angle: float) -> float:
    """The grid angle closest to `angle` (rad), taken modulo π"""
    angle = angle % math.pi
    distance = np.abs(grid.angles - angle)
    distance = np.minimum(distance, math.pi - distance)
    nearest = float(grid.angles[int(np.argmin(distance))])
    if abs(nearest - angle) > 1e-9:
        logger.warning("Using the grid angle %.6g° instead of %.6g°", math.degrees(nearest), math.degrees(angle))
    return nearest


def compute_budget(config: Union[str, Path, RunConfig], angle_deg: Optional[float] = None,
                   workers: Optional[int] = None) -> tuple[float, list[BudgetRow]]:
    """
    Per-source noise at one quadrature; the best squeezing angle by default (0° when there is no squeezing)

    :return: the angle used (rad) and the rows
    """
    run = load(config)
    grid = compute_grid(run, workers)
    if angle_deg is None:
        summary, _ = compute_summary(run, grid=grid)
        angle = summary.best_angle if summary.present else 0.0
    else:
        angle = math.radians(angle_deg)
    angle = nearest_angle(grid, angle)
    return angle, noise_budget(grid, angle)


def sweep_spec(config: Union[str, Path, RunConfig]) -> SweepSpec:
    run = load(config)
    if run.sweep is None:
        raise ConfigurationError("A [sweep] table is required", "sweep")
    return SweepSpec(
        axes=run.sweep.axes,
        config=run.cavity,
        oscillator=run.require_oscillator(),
        noise=run.noise,
        freqs=run.grid.frequencies(),
        angles=run.grid.angles(),
        f_cap_ratio=run.sweep.f_cap_ratio,
        objective=run.sweep.objective,
        cap=run.sweep.cap,
        homodyne=run.homodyne if run.measurement is Measurement.HOMODYNE else None,
    )


def sweep(config: Union[str, Path, RunConfig], workers: Optional[int] = None,
          subscribers: Optional[list[Subscriber]] = None) -> tuple[list[SweepRow], Optional[SweepRow]]:
    """
    Run the configured sweep

    :return: the rows and the optimum for the configured objective (None if every row failed)
    """
    spec = sweep_spec(config)
    publisher = None
    if subscribers:
        publisher = Publisher()
        for subscriber in subscribers:
            publisher.add_subscriber(subscriber)
    rows = run_sweep(spec, workers, publisher)
    if all(row.failed for row in rows):
        logger.warning("Every configuration of the sweep failed")
        return rows, None
    optimum = select_optimum(rows, spec.objective)
    logger.debug("Optimum: %r", optimum)
    return rows, optimum


def lock_model(config: Union[str, Path, RunConfig]) -> LoopModel:
    """
    Loop of the configured lock: a measured plant, or the mechanics (χ), the mechanics
    stiffened by the optical spring (χ/(1 + χK_OS)) or the optomechanical loop itself (χK_OS)
    """
    run = load(config)
    if run.lock is None:
        raise ConfigurationError("A [lock] table is required", "lock")
    lock = run.lock
    loop_filter = RationalFilter(lock.gain, lock.zeros_hz, lock.poles_hz)
    if lock.plant_csv is not None:
        return LoopModel(read_response_csv(lock.plant_csv), loop_filter, lock.plant_csv.name)

    osc = run.require_oscillator()
    cavity = run.cavity
    open_loop = optomechanical_open_loop(cavity, derive(cavity), osc)
    if lock.plant == "mechanics":
        def plant(f):
            return susceptibility(osc, f)
    elif lock.plant == "optical_spring":
        suppressed = suppressed_plant(open_loop)

        def plant(f):
            return susceptibility(osc, f) * suppressed(f)
    else:
        plant = open_loop
    return LoopModel(plant, loop_filter, lock.plant)


def lock_analysis(config: Union[str, Path, RunConfig]) -> tuple[MarginReport, list[BodeRow]]:
    run = load(config)
    loop = lock_model(run)
    freqs = run.lock.frequencies()
    return loop_margins(loop, freqs), bode(loop, freqs)


def bode_to_csv(rows: list[BodeRow]) -> str:
    return to_csv("bode", BODE_HEADER, ([row.f, row.plant_mag_db, row.plant_phase_deg, row.filter_mag_db,
                                         row.filter_phase_deg, row.open_loop_mag_db, row.open_loop_phase_deg]
                                        for row in rows))


def mechanical_modes(config: Union[str, Path, RunConfig]) -> dict:
    """Closed-form cantilever modes and modal masses of the sampled mode shapes"""
    run = load(config)
    if run.geometry is None and not run.mode_shapes:
        raise ConfigurationError("A [geometry] table or [[mode_shapes]] entries are required", "geometry")
    result = {"schema_version": SCHEMA_VERSION}
    if run.geometry is not None:
        result["analytic_modes"] = [
            {"kind": mode.kind, "order": mode.order, "freq_hz": mode.freq} for mode in analytic_modes(run.geometry)
        ]
    if run.mode_shapes:
        masses = []
        for item in run.mode_shapes:
            mass = modal_mass(item.shape, run.beam)
            masses.append({"csv": item.path, "lwd": mass.lwd, "modal_mass_kg": mass.mass,
                           "unbounded": mass.unbounded})
        result["modal_masses"] = masses
    return result


def oracle_check(config: Union[str, Path, RunConfig, None] = None, seed: int = 0,
                 draws: int = 20) -> OracleReport:
    """
    Compare the numerical engine with the closed forms, at the cavity length and
    wavelength of `config` when given; the report is returned even when checks fail
    """
    kwargs = {}
    if config is not None:
        run = load(config)
        kwargs = {"length": run.cavity.length, "wavelength": run.cavity.wavelength}
    return run_oracle_suite(seed=seed, draws=draws, strict=False, **kwargs)
