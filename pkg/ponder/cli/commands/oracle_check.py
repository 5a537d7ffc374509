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
from rich.table import Table

import ponder.log as logging
from ponder import services
from ponder.cli.commands.errors import handle_error
from ponder.cli.main import cli, click
from ponder.cli.utils import (emit, format_number, format_option,
                              get_app_header_rule, output_option)
from ponder.constants import SCHEMA_VERSION
from ponder.models import to_json
from ponder.oracle import OracleReport

# set up logging
logger = logging.getLogger(__name__)


def __report_table__(report: OracleReport) -> Table:
    table = Table(show_header=True,
                  title="   Oracle checks",
                  title_style="italic bold cyan",
                  title_justify="left",
                  header_style="bold cyan",
                  border_style="bright_black")
    table.add_column("Check", style="magenta bold")
    table.add_column("Expected", justify="right")
    table.add_column("Actual", justify="right")
    table.add_column("Tolerance", justify="right")
    table.add_column("Result", justify="center")
    for check in report.checks:
        result = "[green]PASSED[/green]" if check.passed else "[red]FAILED[/red]"
        table.add_row(check.name, format_number(check.expected), format_number(check.actual),
                      format_number(check.tolerance), result)
    return table


@cli.command("oracle-check")
@click.option(
    "-c",
    "--config",
    "config_path",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="Run configuration; only the cavity length and wavelength are used",
)
@click.option("--seed", type=click.INT, default=0, show_default=True, help="Seed of the random draws")
@click.option("--draws", type=click.IntRange(min=1), default=20, show_default=True,
              help="Random configurations per randomised check")
@format_option
@output_option()
@click.pass_context
def oracle_check(ctx, config_path: Optional[str] = None, seed: int = 0, draws: int = 20,
                 output_format: str = "json", output: Optional[str] = None):
    """
    [magenta]ponder:[/magenta] Compare the numerical engine with the closed-form limits
    """
    console = ctx.obj['console']
    try:
        report = services.oracle_check(config_path, seed=seed, draws=draws)
        if output_format == "json":
            emit(to_json({"schema_version": SCHEMA_VERSION, **report.to_dict()}) + "\n", output)
        else:
            console.print(get_app_header_rule())
            console.print(Padding(__report_table__(report), (0, 1)))
        report.raise_for_failures()
    except Exception as e:
        handle_error(e, console)
