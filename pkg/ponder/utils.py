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

from __future__ import annotations

import csv
import io
import numbers
import os
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Callable, Iterable, Optional, Sequence, TypeVar

import toml

import ponder.log as logging

from . import constants

# current directory
CURRENT_DIR = os.path.dirname(os.path.realpath(__file__))

# set up logging
logger = logging.getLogger(__name__)

# Read the pyproject.toml file
config = toml.load(Path(CURRENT_DIR).parent / "pyproject.toml")

T = TypeVar("T")
R = TypeVar("R")


def run_git_command(command: list[str]) -> Optional[str]:
    """
    Run a git command and return the output

    :param command: The git command
    :return: The output of the command
    """
    import subprocess

    try:
        return subprocess.check_output(command, stderr=subprocess.DEVNULL, cwd=CURRENT_DIR).decode().strip()
    except Exception as e:
        if logger.isEnabledFor(logging.DEBUG):
            logger.debug(e)
        return None


def get_version() -> str:
    """
    Get the version of the package: the declared version, plus the short
    commit hash when running from a git checkout with a newer commit

    :return: The version of the package
    """
    declared_version = config["tool"]["poetry"]["version"]
    commit = run_git_command(['git', 'rev-parse', '--short', 'HEAD'])
    if not commit:
        return declared_version
    tags = run_git_command(['git', 'tag', '--points-at', commit])
    if tags:
        return declared_version
    return f"{declared_version}+{commit}"


def get_config(property: Optional[str] = None, default: Any = None) -> Any:
    """
    Get the ponder settings declared in the `[tool.ponder]` table of pyproject.toml

    :param property: The property name
    :param default: The value returned when the property is not set
    :return: The property value, or the whole table when `property` is None
    """
    settings = config.get("tool", {}).get("ponder", {})
    if not property:
        return settings
    return settings.get(property, default)


def get_worker_count(requested: Optional[int] = None) -> int:
    """
    Resolve the number of worker threads

    The value of the `PONDER_THREADS` environment variable caps the requested number;
    without a request the cap (or the CPU count) is used.

    :param requested: The number of workers requested by the caller
    :return: The number of workers, at least 1
    """
    cap = None
    raw = os.environ.get(constants.THREADS_ENV_VAR)
    if raw:
        try:
            cap = max(1, int(raw))
        except ValueError:
            logger.warning("Ignoring invalid %s=%r", constants.THREADS_ENV_VAR, raw)
    workers = requested if requested else (cap or os.cpu_count() or 1)
    if cap is not None:
        workers = min(workers, cap)
    return max(1, int(workers))


def parallel_map(func: Callable[[T], R], items: Iterable[T], workers: Optional[int] = None) -> list[R]:
    """
    Apply `func` to every item, preserving the order of the input

    :param func: The function to apply
    :param items: The inputs
    :param workers: The number of worker threads (see :func:`get_worker_count`)
    :return: The list of results, in input order
    """
    items = list(items)
    workers = min(get_worker_count(workers), max(1, len(items)))
    if workers == 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(func, items))


def format_value(value: Any) -> str:
    """
    Format a value for CSV output: floats with 17 significant digits,
    booleans as `true`/`false`, None as an empty field
    """
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, numbers.Integral):
        return str(int(value))
    if isinstance(value, (int, float)) or hasattr(value, "dtype"):
        return constants.CSV_FLOAT_FORMAT % float(value)
    return str(value)


def to_csv(kind: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """
    Render rows as CSV text preceded by a versioned comment line

    :param kind: The kind of table (e.g. "spectrum")
    :param header: The column names
    :param rows: The data rows
    :return: The CSV text
    """
    buffer = io.StringIO()
    buffer.write(f"# ponder {kind} schema_version={constants.SCHEMA_VERSION}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    return buffer.getvalue()


def write_text(text: str, path: Optional[Path | str] = None) -> Optional[Path]:
    """
    Write text to `path`; return None when no path is given

    :param text: The text to write
    :param path: The target file
    """
    if path is None:
        return None
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(text)
    logger.debug("Written %s", path)
    return path
