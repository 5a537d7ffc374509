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

"""
Logging facade for the ponder package.

Loggers are created lazily through :func:`getLogger` and share a single in-memory stream.
The buffered records are emitted on stderr as a "Log Report" when the process exits,
so that tables written on stdout by the CLI are never interleaved with log lines.
"""

import atexit
import sys
import threading
from io import StringIO
from logging import (CRITICAL, DEBUG, ERROR, INFO, WARNING, Logger,
                     StreamHandler, basicConfig as logging_basicConfig)
from typing import Optional, Union

import colorlog
from rich.console import Console
from rich.padding import Padding
from rich.rule import Rule
from rich.text import Text

__module__ = sys.modules[__name__]

LOG_COLORS = {
    'DEBUG': 'cyan',
    'INFO': 'green',
    'WARNING': 'yellow',
    'ERROR': 'red',
    'CRITICAL': 'red,bg_white',
}


def get_log_format(level: int) -> str:
    """Get the log format for the given level"""
    if level == DEBUG:
        return '%(log_color)s%(levelname)s%(reset)s:%(yellow)s%(name)s::%(funcName)s%(reset)s '\
            '@ %(light_green)sline: %(lineno)s%(reset)s - %(light_black)s%(message)s%(reset)s'
    return '[%(log_color)s%(asctime)s%(reset)s] %(levelname)s in %(yellow)s%(module)s%(reset)s: '\
        '%(light_white)s%(message)s%(reset)s'


def parse_level(level: Union[int, str, None], default: int = WARNING) -> int:
    """
    Convert a level name (e.g., "debug") or number to a logging level

    :param level: the level name or number
    :param default: the level returned when `level` is None or unknown
    :return: the numeric logging level
    """
    if level is None:
        return default
    if isinstance(level, int):
        return level
    return getattr(__module__, str(level).upper(), default)


DEFAULT_SETTINGS = {
    'enabled': True,
    'level': WARNING,
}

# serialises access to the module state below; re-entrant because
# basicConfig reconfigures loggers while holding it
_lock = threading.RLock()

# loggers created so far, by name
__loggers__: dict[str, Logger] = {}

# global settings plus per-module overrides keyed by logger name
__settings__: dict = DEFAULT_SETTINGS.copy()

# one handler per logger
__handlers__: dict[str, StreamHandler] = {}

# buffered log records
__log_stream__ = StringIO()


def __print_log_report__():
    contents = __log_stream__.getvalue()
    if not contents:
        return
    console = Console(stderr=True)
    console.print(Padding(Rule("[bold cyan]Log Report[/bold cyan]", style="bold cyan"), (1, 0, 1, 0)))
    console.print(Padding(Text(contents), (0, 1)))
    console.print(Rule("", style="bold cyan"))
    __log_stream__.close()


atexit.register(__print_log_report__)


def __module_settings__(name: str) -> dict:
    settings = dict(DEFAULT_SETTINGS)
    settings['level'] = __settings__.get('level', WARNING)
    settings['enabled'] = __settings__.get('enabled', True)
    # the closest configured ancestor wins: "ponder.quantum" applies to "ponder.quantum.x"
    parts = name.split('.')
    for i in range(1, len(parts) + 1):
        override = __settings__.get('.'.join(parts[:i]))
        if isinstance(override, dict):
            settings.update(override)
    settings['level'] = parse_level(settings.get('level'))
    return settings


def __setup_logger__(logger: Logger):
    settings = __module_settings__(logger.name)
    level = settings['level']

    logger.propagate = False
    logger.setLevel(level)

    handler = __handlers__.get(logger.name)
    if handler is None:
        handler = StreamHandler(__log_stream__)
        __handlers__[logger.name] = handler
        logger.addHandler(handler)
    handler.setLevel(level)
    handler.setFormatter(colorlog.ColoredFormatter(get_log_format(level), log_colors=LOG_COLORS))

    logger.disabled = not settings['enabled']


def __create_logger__(name: str) -> Logger:
    if not isinstance(name, str):
        raise TypeError('A logger name must be a string')
    with _lock:
        logger = __loggers__.get(name)
        if logger is None:
            logger = colorlog.getLogger(name)
            __setup_logger__(logger)
            __loggers__[name] = logger
        return logger


def basicConfig(level: Union[int, str], modules_config: Optional[dict] = None):
    """
    Set the default level and the per-module settings of the ponder loggers

    :param level: the default level (number or name)
    :param modules_config: optional mapping `logger name -> {"level": ..., "enabled": ...}`
    """
    with _lock:
        # loggers of third-party modules only report errors
        logging_basicConfig(level=ERROR)

        __settings__['level'] = parse_level(level)
        if modules_config:
            __settings__.update(modules_config)

        for logger in __loggers__.values():
            __setup_logger__(logger)


def getLogger(name: str) -> "LoggerProxy":
    return LoggerProxy(name)


def get_log_report() -> str:
    """Return the records buffered so far"""
    with _lock:
        return __log_stream__.getvalue() if not __log_stream__.closed else ""


class LoggerProxy:

    """Proxy that creates the underlying logger on first use"""

    def __init__(self, name: str):
        self.name = name
        self._instance: Optional[Logger] = None

    def _initialize(self):
        with _lock:
            if self._instance is None:
                self._instance = __create_logger__(self.name)

    def __getattr__(self, name):
        self._initialize()
        return getattr(self._instance, name)


__export__ = [CRITICAL, DEBUG, ERROR, INFO, WARNING, Logger]
