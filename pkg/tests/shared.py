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
Library of shared builders for the ponder tests
"""

import dataclasses
from collections.abc import Collection
from pathlib import Path
from typing import Optional, TypeVar

import numpy as np

from ponder import log as logging
from ponder.cavity import CavityConfig, PowerSpec
from ponder.mechanics import MechMode, Oscillator
from ponder.models import NoiseSource, PowerKind

logger = logging.getLogger(__name__)


T = TypeVar("T")


def first(c: Collection[T]) -> T:
    return next(iter(c))


def baseline_cavity(**changes) -> CavityConfig:
    """
    100 µm cavity, T1 = 50 ppm, T2 = 250 ppm, L2 = 120 ppm, δ = 0.5,
    with 0.4 W circulating at the working point
    """
    config = CavityConfig(
        length=1e-4,
        t1=50e-6,
        t2=250e-6,
        l2=120e-6,
        detuning=0.5,
        power_spec=PowerSpec(PowerKind.DETUNED_CAVITY, 0.4),
    )
    return dataclasses.replace(config, **changes) if changes else config


def mirror_oscillator(freq: float = 876.0, mass: float = 50e-12, q: float = 16000.0,
                      temperature: float = 295.0) -> Oscillator:
    """Single-mode 50 ng mirror"""
    return Oscillator((MechMode.from_q(freq, mass, q),), temperature)


def synthetic_layers(total: np.ndarray, source: NoiseSource = NoiseSource.QUANTUM) -> dict:
    """Per-source layers putting all of `total` in `source`"""
    total = np.atleast_2d(np.asarray(total, dtype=float))
    return {s: (total if s is source else np.zeros_like(total)) for s in NoiseSource}


def write_mode_shape(path: Path, xs: np.ndarray, ys: np.ndarray, psi, comment: Optional[str] = None) -> Path:
    """Sample `psi(x, y)` on the grid xs × ys and write it as a mode shape CSV"""
    lines = [f"# {comment}"] if comment else []
    lines.append("x_m,y_m,psi_z")
    for x in xs:
        for y in ys:
            lines.append(f"{float(x)!r},{float(y)!r},{float(psi(x, y))!r}")
    path.write_text("\n".join(lines) + "\n")
    return path
