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

from rich.padding import Padding

import ponder.log as logging
from ponder import services
from ponder.cli.commands.errors import handle_error
from ponder.cli.main import cli, click
from ponder.cli.utils import (config_option, emit, format_option,
                              get_app_header_rule, key_value_table,
                              output_option, workers_option)
from ponder.constants import SCHEMA_VERSION
from ponder.models import to_json

# set up logging
logger = logging.getLogger(__name__)


@cli.command("summary")
@config_option()
@format_option
@output_option()
@workers_option
@click.pass_context
def summary(ctx, config_path: str, output_format: str = "json", output: Optional[str] = None,
            workers: Optional[int] = None):
    """
    [magenta]ponder:[/magenta] Squeezing figures of merit: depth, angle, band and area
    """
    console = ctx.obj['console']
    try:
        grid = services.compute_grid(config_path, workers)
        result, f_cap = services.compute_summary(config_path, grid=grid)
        values = {"schema_version": SCHEMA_VERSION, "f_cap_hz": f_cap, "skipped_hz": list(grid.skipped),
                  **result.to_dict()}
        if output_format == "json":
            emit(to_json(values) + "\n", output)
            return
        console.print(get_app_header_rule())
        values.pop("skipped_hz")
        caption = None if result.present else "[yellow]No squeezing below the frequency cap[/yellow]"
        console.print(Padding(key_value_table("Squeezing summary", values, caption), (0, 1)))
    except Exception as e:
        handle_error(e, console)
