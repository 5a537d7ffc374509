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
Enumerations shared by the ponder modules, plus the JSON encoder used for every
machine-readable output.
"""

from __future__ import annotations

import enum
import json
from dataclasses import asdict, is_dataclass
from pathlib import Path

import enum_tools
import numpy as np

from ponder.errors import InvalidParameter


class _NamedEnum(enum.Enum):

    @classmethod
    def get(cls, name: str | _NamedEnum):
        """
        Look up a member by value (``"transmission"``) or name (``"TRANSMISSION"``)

        :raises InvalidParameter: if no member matches
        """
        if isinstance(name, cls):
            return name
        key = str(name).strip()
        for member in cls:
            if member.value == key.lower() or member.name == key.upper():
                return member
        raise InvalidParameter(cls.__name__, name, f"expected one of {[m.value for m in cls]}")

    def __str__(self) -> str:
        return self.value


@enum.unique
@enum_tools.documentation.document_enum
class MeasurementPort(_NamedEnum):
    """
    Output port of the cavity where the squeezed light is measured
    """

    #: light transmitted through the end (micro-)mirror
    TRANSMISSION = "transmission"
    #: light reflected off the input mirror
    REFLECTION = "reflection"


@enum.unique
@enum_tools.documentation.document_enum
class PowerKind(_NamedEnum):
    """
    Interpretation of the power figure of a cavity configuration
    """

    #: power incident on the input mirror
    INPUT = "input"
    #: intracavity power the cavity would hold on resonance with the same input
    RESONANT_CAVITY = "resonant_cavity"
    #: intracavity power at the configured detuning
    DETUNED_CAVITY = "detuned_cavity"


@enum.unique
@enum_tools.documentation.document_enum
class DampingKind(_NamedEnum):
    """
    Mechanical loss model of a mode
    """

    #: frequency-independent loss angle
    STRUCTURAL = "structural"
    #: velocity-proportional damping
    VISCOUS = "viscous"


@enum.unique
@enum_tools.documentation.document_enum
class NoiseSource(_NamedEnum):
    """
    Independent noise contributions of the output quadrature noise
    """

    #: vacuum fluctuations entering every open port
    QUANTUM = "quantum"
    #: thermal force on the mechanical oscillator
    THERMAL = "thermal"
    #: laser relative intensity noise
    RIN = "rin"
    #: laser phase (frequency) noise
    PN = "pn"


@enum.unique
@enum_tools.documentation.document_enum
class ClassicalNoise(_NamedEnum):
    """
    Classical noise families of the closed-form covariance perturbations
    """

    THERMAL = "thermal"
    #: combined laser noise, transmission only
    CLN = "cln"
    #: intensity noise, reflection only
    RIN = "rin"
    #: phase noise, reflection only
    PN = "pn"


@enum.unique
@enum_tools.documentation.document_enum
class SpringMode(_NamedEnum):
    """
    Precision of the cavity response formulas
    """

    #: exact round-trip expressions
    EXACT = "exact"
    #: lowest order in the round-trip loss
    APPROXIMATE = "approximate"


@enum.unique
@enum_tools.documentation.document_enum
class InputPort(_NamedEnum):
    """
    Inputs of the optomechanical system
    """

    #: laser (input mirror)
    LASER = "laser"
    #: vacuum through the end mirror
    TRANS = "trans"
    #: vacuum through the lumped loss
    LOSS = "loss"
    #: thermal force on the mirror
    THERMAL_FORCE = "thermal_force"


@enum.unique
@enum_tools.documentation.document_enum
class ModeKind(_NamedEnum):
    """
    Labels of the closed-form cantilever modes
    """

    FUND_Z = "fund_z"
    FUND_Y = "fund_y"
    TORSION = "torsion"
    BEND_Z = "bend_z"
    BEND_Y = "bend_y"


@enum.unique
@enum_tools.documentation.document_enum
class Objective(_NamedEnum):
    """
    Figure of merit used to pick the best configuration of a sweep
    """

    #: deepest squeezing
    MIN_N_MIN = "min_n_min"
    #: largest squeezing area in dB x decades
    MAX_AREA_DB_HZ = "max_area_db_hz"
    #: lowest squeezing start frequency
    MIN_F_LOW = "min_f_low"


@enum.unique
@enum_tools.documentation.document_enum
class Measurement(_NamedEnum):
    """
    Readout of the measurement port
    """

    #: the port quadratures are read directly
    DIRECT = "direct"
    #: single-photodiode homodyne with a local oscillator
    HOMODYNE = "homodyne"


class CustomEncoder(json.JSONEncoder):
    def default(self, obj):
        if isinstance(obj, enum.Enum):
            return obj.value
        if isinstance(obj, Path):
            return str(obj)
        if isinstance(obj, np.integer):
            return int(obj)
        if isinstance(obj, np.floating):
            return float(obj)
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        if isinstance(obj, complex):
            return {"re": obj.real, "im": obj.imag}
        if is_dataclass(obj):
            return asdict(obj)
        return super().default(obj)


def to_json(data: dict) -> str:
    """Serialise a result dictionary deterministically"""
    return json.dumps(data, indent=2, sort_keys=True, cls=CustomEncoder)
