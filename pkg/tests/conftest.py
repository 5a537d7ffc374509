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


import os

from click.testing import CliRunner
from pytest import fixture

import ponder.log as logging

# set up logging
logging.basicConfig(
    level="warning",
    modules_config={
        # "ponder.quantum": {"level": logging.DEBUG}
    }
)

CURRENT_PATH = os.path.dirname(os.path.realpath(__file__))

# test data paths
TEST_DATA_PATH = os.path.abspath(os.path.join(CURRENT_PATH, "data"))
CONFIG_PATH = os.path.join(TEST_DATA_PATH, "config")


@fixture
def cli_runner() -> CliRunner:
    return CliRunner()


@fixture
def config_path():
    return CONFIG_PATH


@fixture
def minimal_config(config_path):
    return os.path.join(config_path, "minimal.toml")


@fixture
def baseline_config(config_path):
    return os.path.join(config_path, "baseline.toml")


@fixture
def sweep_config(config_path):
    return os.path.join(config_path, "sweep.toml")


@fixture
def lock_config(config_path):
    return os.path.join(config_path, "lock.toml")


@fixture
def cantilever_config(config_path):
    return os.path.join(config_path, "cantilever.toml")


@fixture
def modes_path():
    return os.path.join(TEST_DATA_PATH, "modes")


@fixture(params=[0.3, 0.5, 1.0, 2.0])
def detuning(request):
    return request.param
