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
from typing import Optional

import ponder.log as logging
from ponder import services
from ponder.cli.commands.errors import handle_error
from ponder.cli.main import cli, click
from ponder.cli.utils import config_option, emit, output_option, workers_option
from ponder.metrics import budget_to_csv

# set up logging
logger = logging.getLogger(__name__)


@cli.command("budget")
@config_option()
@click.option(
    "-a",
    "--angle-deg",
    type=click.FLOAT,
    default=None,
    help="Quadrature angle in degrees (default: the angle of best squeezing)",
)
@output_option()
@workers_option
@click.pass_context
def budget(ctx, config_path: str, angle_deg: Optional[float] = None, output: Optional[str] = None,
           workers: Optional[int] = None):
    """
    [magenta]ponder:[/magenta] Per-source noise budget at one quadrature (CSV)
    """
    console = ctx.obj['console']
    try:
        angle, rows = services.compute_budget(config_path, angle_deg, workers)
        logger.debug("Budget at %.6g deg", math.degrees(angle))
        emit(budget_to_csv(rows), output)
    except Exception as e:
        handle_error(e, console)
