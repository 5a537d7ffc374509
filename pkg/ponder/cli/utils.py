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

import rich_click as click
from rich.console import Console as BaseConsole
from rich.padding import Padding
from rich.rule import Rule
from rich.table import Table

from ponder import log as logging
from ponder.utils import get_version, write_text

# set up logging
logger = logging.getLogger(__name__)


def get_app_header_rule() -> Padding:
    return Padding(Rule(f"\n[bold][cyan]Ponder[/cyan] (ver. [magenta]{get_version()}[/magenta])[/bold]",
                        style="bold cyan"), (1, 2))


def format_number(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def key_value_table(title: str, values: dict, caption: Optional[str] = None) -> Table:
    """Two-column table of a flat dictionary"""
    table = Table(show_header=True,
                  title=f"   {title}",
                  title_style="italic bold cyan",
                  title_justify="left",
                  header_style="bold cyan",
                  border_style="bright_black",
                  caption_style="italic bold",
                  caption=caption)
    table.add_column("Quantity", style="magenta bold")
    table.add_column("Value", style="white", justify="right")
    for key, value in values.items():
        table.add_row(key, format_number(value))
    return table


class Console(BaseConsole):
    """Rich console that can be disabled."""

    def __init__(self, *args, disabled: bool = False, **kwargs):
        super().__init__(*args, **kwargs)
        self.disabled = disabled

    def print(self, *args, **kwargs):
        if not self.disabled:
            super().print(*args, **kwargs)


def emit(text: str, output: Optional[str] = None) -> None:
    """Write machine-readable output to `output`, or verbatim to stdout"""
    if output:
        write_text(text, output)
    else:
        click.echo(text, nl=False)


def config_option(*aliases: str):
    return click.option(
        "-c",
        "--config",
        *aliases,
        "config_path",
        type=click.Path(exists=True, dir_okay=False),
        required=True,
        help="Run configuration (TOML)",
    )


def output_option(*aliases: str, help: str = "Output file (default: stdout)"):
    return click.option(
        "-o",
        "--output",
        *aliases,
        "output",
        type=click.Path(dir_okay=False, writable=True),
        default=None,
        help=help,
    )


workers_option = click.option(
    "-w",
    "--workers",
    type=click.IntRange(min=1),
    default=None,
    help="Worker threads (capped by PONDER_THREADS)",
)

format_option = click.option(
    "-f",
    "--output-format",
    type=click.Choice(["json", "text"], case_sensitive=False),
    default="json",
    show_default=True,
    help="Output format",
)
