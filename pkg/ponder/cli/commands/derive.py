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
                              output_option)
from ponder.models import to_json

# set up logging
logger = logging.getLogger(__name__)


@cli.command("derive")
@config_option()
@format_option
@output_option()
@click.pass_context
def derive(ctx, config_path: str, output_format: str = "json", output: Optional[str] = None):
    """
    [magenta]ponder:[/magenta] Show the quantities derived from the cavity parameters
    """
    console = ctx.obj['console']
    logger.debug("config: %s", config_path)
    try:
        result = services.derive_quantities(config_path)
        if output_format == "json":
            emit(to_json(result) + "\n", output)
            return
        console.print(get_app_header_rule())
        for section in ("derived", "exact", "spring", "lambda", "homodyne"):
            if section in result:
                console.print(Padding(key_value_table(section.capitalize(), result[section]), (0, 1)))
    except Exception as e:
        handle_error(e, console)
