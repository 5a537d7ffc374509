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


import sys

import rich_click as click

import ponder.log as logging
from ponder.cli.utils import Console
from ponder.constants import EXIT_VALIDATION_ERROR
from ponder.utils import get_version

# set up logging
logger = logging.getLogger(__name__)

__all__ = ["cli", "click"]


class PonderGroup(click.RichGroup):
    """Command group reporting usage errors (unknown commands, bad options) with the validation exit code"""

    def main(self, *args, standalone_mode: bool = True, **kwargs):
        if not standalone_mode:
            return super().main(*args, standalone_mode=False, **kwargs)
        try:
            return super().main(*args, standalone_mode=False, **kwargs)
        except click.exceptions.UsageError as e:
            e.show()
            sys.exit(EXIT_VALIDATION_ERROR)
        except click.exceptions.ClickException as e:
            e.show()
            sys.exit(e.exit_code)
        except click.exceptions.Abort:
            click.echo("Aborted!", err=True)
            sys.exit(EXIT_VALIDATION_ERROR)


@click.group(cls=PonderGroup, invoke_without_command=True)
@click.rich_config(help_config=click.RichHelpConfiguration(use_rich_markup=True))
@click.option(
    '--debug',
    is_flag=True,
    help="Enable debug logging",
    default=False
)
@click.option(
    '-v',
    '--version',
    is_flag=True,
    help="Show the version of the ponder package",
    default=False
)
@click.option(
    '-y',
    '--no-interactive',
    is_flag=True,
    help="Disable interactive output (progress bars)",
    default=False
)
@click.option(
    '--disable-color',
    is_flag=True,
    help="Disable colored console output",
    default=False
)
@click.pass_context
def cli(ctx: click.Context, debug: bool, version: bool, disable_color: bool, no_interactive: bool):
    ctx.ensure_object(dict)

    # determine if the console is interactive
    interactive = sys.stdout.isatty() and not no_interactive

    console = Console(no_color=disable_color or not interactive)
    # pass the console to subcommands through the click context
    ctx.obj['console'] = console
    ctx.obj['interactive'] = interactive

    # If the version flag is set, print the version and exit
    if version:
        console.print(f"[bold]ponder [cyan]{get_version()}[/cyan][/bold]")
        sys.exit(0)
    # Set the log level
    logging.basicConfig(level=logging.DEBUG if debug else logging.WARNING)
    if ctx.invoked_subcommand is None:
        click.echo(ctx.get_help())
    else:
        logger.debug("Command invoked: %s", ctx.invoked_subcommand)


if __name__ == "__main__":
    cli()
