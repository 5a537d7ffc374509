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

import enum
import threading
from abc import ABC, abstractmethod
from functools import total_ordering
from typing import Any, Optional, Union

import enum_tools


@enum.unique
@enum_tools.documentation.document_enum
@total_ordering
class EventType(enum.Enum):
    """ Event types """

    #: Sweep start
    SWEEP_START = 0
    #: Sweep end
    SWEEP_END = 1
    #: A configuration has been evaluated
    CONFIGURATION_END = 2

    def __lt__(self, other):
        if self.__class__ is other.__class__:
            return self.value < other.value
        return NotImplemented


class Event:
    """
    Base class for representing events
    """

    def __init__(self, event_type: EventType, message: Optional[str] = None, payload: Any = None):
        """
        Initialize the event.

        :param event_type: the event type
        :type event_type: EventType

        :param message: the message
        :type message: Optional[str]

        :param payload: the object the event refers to (e.g. a sweep row)
        """
        self.event_type = event_type
        self.message = message
        self.payload = payload


class SweepEvent(Event):
    """Event raised while a sweep is running"""

    def __init__(self, event_type: EventType, total: int, index: Optional[int] = None,
                 payload: Any = None, message: Optional[str] = None):
        super().__init__(event_type, message, payload)
        self._total = total
        self._index = index

    @property
    def total(self) -> int:
        """The number of configurations of the sweep"""
        return self._total

    @property
    def index(self) -> Optional[int]:
        """The position of the configuration in the sweep order"""
        return self._index


class Subscriber(ABC):

    """
    Subscriber interface.
    Objects that want to be notified of the progress of long computations
    should implement this interface.
    """

    def __init__(self, name):
        self.name = name

    @abstractmethod
    def update(self, event: Event):
        """
        Update the subscriber with the event

        :param event: the event
        :type event: Event
        """
        pass


class Publisher:
    """
    Notifies subscribers; events may be published from worker threads,
    so notifications are serialised
    """

    def __init__(self):
        self.__subscribers = []
        self.__lock = threading.Lock()

    def add_subscriber(self, subscriber: Subscriber):
        if subscriber not in self.__subscribers:
            self.__subscribers.append(subscriber)

    def notify(self, event: Union[Event, EventType]):
        if isinstance(event, EventType):
            event = Event(event)
        with self.__lock:
            for subscriber in self.__subscribers:
                subscriber.update(event)
