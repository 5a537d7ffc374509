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
from ponder.cli.utils import config_option, emit, output_option
from ponder.constants import SCHEMA_VERSION
from ponder.models import to_json
from ponder.utils import write_text

# set up logging
logger = logging.getLogger(__name__)


@cli.command("lock")
@config_option()
@output_option(help="JSON file of the loop margins (default: stdout)")
@click.option(
    "--bode",
    "bode_path",
    type=click.Path(dir_okay=False, writable=True),
    default=None,
    help="Also write the Bode table of the loop (CSV)",
)
@click.pass_context
def lock(ctx, config_path: str, output: Optional[str] = None, bode_path: Optional[str] = None):
    """
    [magenta]ponder:[/magenta] Stability margins of the lock loop
    """
    console = ctx.obj['console']
    try:
        margins, rows = services.lock_analysis(config_path)
        if not margins.stable:
            logger.warning("The closed loop is not stable")
        emit(to_json({"schema_version": SCHEMA_VERSION, **margins.to_dict()}) + "\n", output)
        if bode_path:
            write_text(services.bode_to_csv(rows), bode_path)
    except Exception as e:
        handle_error(e, console)
