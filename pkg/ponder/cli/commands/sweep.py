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

from rich.console import Console
from rich.padding import Padding
from rich.progress import BarColumn, Progress, TextColumn, TimeElapsedColumn

import ponder.log as logging
from ponder import services
from ponder.cli.commands.errors import handle_error
from ponder.cli.main import cli, click
from ponder.cli.utils import (config_option, emit, get_app_header_rule,
                              key_value_table, output_option, workers_option)
from ponder.events import Event, EventType, Subscriber, SweepEvent
from ponder.sweep import SweepRow, rows_to_csv

# set up logging
logger = logging.getLogger(__name__)


class SweepProgressMonitor(Subscriber):

    CONFIGURATIONS = "Configurations"

    def __init__(self, console: Console):
        self.__progress = Progress(
            TextColumn("[progress.description]{task.description}"),
            BarColumn(),
            TextColumn("{task.completed}/{task.total}"),
            TimeElapsedColumn(),
            console=console,
            expand=True)
        self.__task = None
        self.failed = 0
        super().__init__("SweepProgressMonitor")

    @property
    def progress(self) -> Progress:
        return self.__progress

    def start(self):
        self.progress.start()

    def stop(self):
        self.progress.stop()

    def update(self, event: Event):
        if not isinstance(event, SweepEvent):
            return
        if event.event_type == EventType.SWEEP_START:
            self.__task = self.progress.add_task(self.CONFIGURATIONS, total=event.total)
        elif event.event_type == EventType.CONFIGURATION_END:
            if isinstance(event.payload, SweepRow) and event.payload.failed:
                self.failed += 1
            if self.__task is not None:
                self.progress.update(task_id=self.__task, advance=1)


def __optimum_values__(optimum: SweepRow) -> dict:
    summary = optimum.summary.to_dict() if optimum.summary else {}
    return {"index": optimum.index, **optimum.params, **summary}


@cli.command("sweep")
@config_option("--spec")
@output_option("--out", help="CSV file of the sweep rows (default: stdout)")
@workers_option
@click.pass_context
def sweep(ctx, config_path: str, output: Optional[str] = None, workers: Optional[int] = None):
    """
    [magenta]ponder:[/magenta] Sweep the cavity parameters and rank the configurations (CSV)
    """
    console = ctx.obj['console']
    interactive = ctx.obj.get('interactive', False)
    try:
        # progress and the optimum are shown only when stdout is free of CSV
        monitor = SweepProgressMonitor(console) if interactive and output else None
        if monitor:
            monitor.start()
        try:
            rows, optimum = services.sweep(config_path, workers, [monitor] if monitor else None)
        finally:
            if monitor:
                monitor.stop()
        emit(rows_to_csv(rows), output)
        if output:
            console.print(get_app_header_rule())
            failed = sum(1 for row in rows if row.failed)
            if optimum is None:
                console.print(Padding("[yellow]No configuration of the sweep could be evaluated[/yellow]", (0, 2)))
            else:
                caption = f"{len(rows)} configurations, {failed} failed"
                console.print(Padding(key_value_table("Optimum", __optimum_values__(optimum), caption), (0, 1)))
    except Exception as e:
        handle_error(e, console)
