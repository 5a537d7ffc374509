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

from typing import Any, Optional, Sequence


class PonderError(Exception):
    pass


class InvalidParameter(PonderError):
    """Raised when an argument violates the precondition of an operation."""

    def __init__(self, name: str, value: Any = None, message: Optional[str] = None):
        self._name = name
        self._value = value
        self._message = message

    @property
    def name(self) -> str:
        """The name of the offending parameter."""
        return self._name

    @property
    def value(self) -> Any:
        """The rejected value."""
        return self._value

    @property
    def message(self) -> Optional[str]:
        """The reason of the rejection."""
        return self._message

    def __str__(self) -> str:
        msg = f"Invalid value for {self._name!r}: {self._value!r}"
        if self._message:
            msg += f" ({self._message})"
        return msg

    def __repr__(self):
        return f"InvalidParameter({self._name!r}, {self._value!r}, {self._message!r})"


class ConfigurationError(PonderError):
    """Raised when a configuration file cannot be parsed or validated."""

    def __init__(self, message: str, key_path: Optional[str] = None, row: Optional[int] = None):
        self._message = message
        self._key_path = key_path
        self._row = row

    @property
    def message(self) -> str:
        """The error message."""
        return self._message

    @property
    def key_path(self) -> Optional[str]:
        """The dotted path of the offending key(s), e.g. ``cavity.t1``."""
        return self._key_path

    @property
    def row(self) -> Optional[int]:
        """The 1-based data row of the offending CSV record, if any."""
        return self._row

    def __str__(self) -> str:
        location = ""
        if self._key_path:
            location = f"[{self._key_path}] "
        if self._row is not None:
            location += f"(row {self._row}) "
        return f"{location}{self._message}"

    def __repr__(self):
        return f"ConfigurationError({self._message!r}, {self._key_path!r}, {self._row!r})"


class SweepCapExceeded(ConfigurationError):
    """Raised when a sweep specification expands to too many configurations."""

    def __init__(self, size: int, cap: int):
        super().__init__(f"The sweep expands to {size} configurations, above the cap of {cap}", "sweep.cap")
        self._size = size
        self._cap = cap

    @property
    def size(self) -> int:
        """The number of configurations requested."""
        return self._size

    @property
    def cap(self) -> int:
        """The maximum number of configurations allowed."""
        return self._cap

    def __repr__(self):
        return f"SweepCapExceeded({self._size!r}, {self._cap!r})"


class NumericalError(PonderError):
    """Raised when a computation produces a non-finite or otherwise unusable result."""

    def __init__(self, message: str, freq: Optional[float] = None):
        self._message = message
        self._freq = freq

    @property
    def message(self) -> str:
        """The error message."""
        return self._message

    @property
    def freq(self) -> Optional[float]:
        """The frequency (Hz) at which the failure happened, if any."""
        return self._freq

    def __str__(self) -> str:
        if self._freq is not None:
            return f"{self._message} at f = {self._freq:.6g} Hz"
        return self._message

    def __repr__(self):
        return f"{self.__class__.__name__}({self._message!r}, {self._freq!r})"


class SingularSolveError(NumericalError):
    """Raised when the field equations cannot be solved at a frequency."""

    def __init__(self, freq: float, message: str = "Singular optomechanical system"):
        super().__init__(message, freq)


class ConsistencyError(NumericalError):
    """Raised when an internal consistency check on a result fails."""


class OracleCheckFailure(PonderError):
    """Raised when one or more analytic-vs-numeric comparisons exceed their tolerance."""

    def __init__(self, failures: Sequence[Any]):
        self._failures = list(failures)

    @property
    def failures(self) -> list:
        """The failed checks."""
        return self._failures

    def __str__(self) -> str:
        names = ", ".join(str(getattr(f, "name", f)) for f in self._failures)
        return f"{len(self._failures)} oracle check(s) failed: {names}"

    def __repr__(self):
        return f"OracleCheckFailure({self._failures!r})"
