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
import textwrap

from rich.console import Console

import ponder.log as logging
from ponder.constants import (EXIT_NUMERICAL_ERROR, EXIT_ORACLE_FAILURE,
                              EXIT_VALIDATION_ERROR)
from ponder.errors import (ConfigurationError, InvalidParameter,
                           NumericalError, OracleCheckFailure,
                           SweepCapExceeded)

# Create a logger for this module
logger = logging.getLogger(__name__)


def exit_code(e: Exception) -> int:
    if isinstance(e, OracleCheckFailure):
        return EXIT_ORACLE_FAILURE
    if isinstance(e, (InvalidParameter, ConfigurationError)):
        return EXIT_VALIDATION_ERROR
    return EXIT_NUMERICAL_ERROR


def handle_error(e: Exception, console: Console) -> None:
    if isinstance(e, SweepCapExceeded):
        error_message = f"""
        The sweep has [red]{e.size}[/red] configurations, more than the cap of {e.cap}.
        Reduce the axes or raise [cyan bold]cap[/cyan bold] in the [cyan bold]\\[sweep][/cyan bold] table.
        """
    elif isinstance(e, ConfigurationError):
        error_message = f"""Invalid configuration: [red bold]{e.message}[/red bold]"""
        if e.key_path:
            error_message += f"\n        Key: [cyan bold]{e.key_path}[/cyan bold]"
        if e.row is not None:
            error_message += f"\n        Row: [cyan bold]{e.row}[/cyan bold]"
    elif isinstance(e, InvalidParameter):
        error_message = f"""Invalid parameter [red bold]{e.name}[/red bold] = {e.value!r}"""
        if e.message:
            error_message += f": {e.message}"
    elif isinstance(e, OracleCheckFailure):
        names = "\n".join(f"  - {check.name}" for check in e.failures)
        error_message = f"{len(e.failures)} oracle check(s) breached their tolerance:\n{names}"
    elif isinstance(e, NumericalError):
        error_message = f"Numerical failure: [red bold]{e}[/red bold]"
    else:
        error_message = f"\n\n[bold][[red]FAILED[/red]] Unexpected error: {e} !!![/bold]\n"
        console.print(textwrap.indent("This error may be due to a bug.\n"
                                      "Please report it to the issue tracker "
                                      "along with the following stack trace:\n", ' ' * 9))
        console.print_exception()

    if logger.isEnabledFor(logging.DEBUG):
        logger.exception(e)
    console.print(f"\n\n[bold][[red]ERROR[/red]] {error_message}[/bold]\n", style="white")
    sys.exit(exit_code(e))
