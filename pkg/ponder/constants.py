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

import typing

import scipy.constants as const

# Define the physical constants (SI)
SPEED_OF_LIGHT = const.c
HBAR = const.hbar
PLANCK = const.h
BOLTZMANN = const.k

# Define the version of every file format written by ponder
SCHEMA_VERSION = 1

# Define the default laser wavelength (Nd:YAG)
DEFAULT_WAVELENGTH = 1064e-9

# Define the default laser noise: RIN amplitude spectral density and
# the coefficient/exponent of the free-running frequency noise law A / f^n
DEFAULT_RIN_ASD = 1e-8
DEFAULT_FREQ_NOISE_COEFF = 1e8
DEFAULT_FREQ_NOISE_EXPONENT = 2.0

# Define the default oscillator parameters
DEFAULT_TEMPERATURE = 295.0
DEFAULT_Q = 20000.0

# Define the default grids
DEFAULT_FREQUENCY_POINTS = 400
DEFAULT_ANGLE_POINTS = 180
DEFAULT_F_MIN = 10.0
DEFAULT_F_MAX = 1e6

# Define the default ratio between the optical spring frequency and the squeezing search cap
DEFAULT_F_CAP_RATIO = 3.0

# Define the minimum density of a frequency grid used for loop margins
MIN_POINTS_PER_DECADE = 50

# Define the maximum number of configurations of a sweep
DEFAULT_SWEEP_CAP = 1_000_000

# Define the threshold above which first-order noise formulas are flagged
PERTURBATION_WARNING_LEVEL = 0.3

# Define the CLI exit codes
EXIT_OK = 0
EXIT_VALIDATION_ERROR = 1
EXIT_NUMERICAL_ERROR = 2
EXIT_ORACLE_FAILURE = 3

# Define the environment variable capping the number of worker threads
THREADS_ENV_VAR = "PONDER_THREADS"

# Define the sweepable cavity parameters, in canonical order
SWEEP_AXES_TYPES = typing.Literal["t1", "t2", "l2", "detuning", "mode_matching", "power"]
SWEEP_AXES = typing.get_args(SWEEP_AXES_TYPES)

# Define the CSV float format (17 significant digits)
CSV_FLOAT_FORMAT = "%.17e"
