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


from typing import Optional

import ponder.log as logging
from ponder import services
from ponder.cli.commands.errors import handle_error
from ponder.cli.main import cli, click
from ponder.cli.utils import config_option, emit, output_option, workers_option
from ponder.metrics import spectrum_to_csv

# set up logging
logger = logging.getLogger(__name__)


@cli.command("spectrum")
@config_option()
@output_option()
@workers_option
@click.pass_context
def spectrum(ctx, config_path: str, output: Optional[str] = None, workers: Optional[int] = None):
    """
    [magenta]ponder:[/magenta] Compute the quadrature noise over the frequency and angle grid (CSV)
    """
    console = ctx.obj['console']
    try:
        grid = services.compute_grid(config_path, workers)
        emit(spectrum_to_csv(grid), output)
    except Exception as e:
        handle_error(e, console)
