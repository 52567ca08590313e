"""Multi-server FIFO delay queue used to model processing time.

A queue has ``servers`` parallel servers. When an item reaches a free
server its service time is computed; the item is handed to the dequeue
callback once that time has elapsed. Two ways of building the service time
function cover the common cases:

* :func:`make_input_delay` - the delay depends only on the item; the work is
  done later in the dequeue callback.
* :func:`make_processing_delay` - the work is done when service starts, its
  result is stored on the item and the delay depends on that result.
"""

from __future__ import annotations

from collections import deque
from typing import Any, Callable

from ccnsim.engine import Simulator


class DelayQueue:
    def __init__(
        self,
        sim: Simulator,
        servers: int,
        service_time: Callable[[Any], int],
        on_dequeue: Callable[[Any], None],
        node: str | None = None,
    ):
        if servers < 1:
            raise ValueError("a delay queue needs at least one server")
        self.sim = sim
        self.servers = servers
        self.service_time = service_time
        self.on_dequeue = on_dequeue
        self.node = node
        self.waiting: deque = deque()
        self.busy = 0
        self.served = 0

    def push(self, item: Any) -> None:
        if item is None:
            raise ValueError("cannot queue None")
        if self.busy < self.servers and not self.waiting:
            self._start(item)
        else:
            self.waiting.append(item)

    def _start(self, item: Any) -> None:
        duration = self.service_time(item)
        if duration < 0:
            raise ValueError(f"negative service time {duration}")
        self.busy += 1
        self.sim.schedule(duration, self._depart, item, node=self.node)

    def _depart(self, item: Any) -> None:
        self.busy -= 1
        self.served += 1
        self.on_dequeue(item)
        # Pull after the callback: anything it pushed went behind the waiters.
        while self.waiting and self.busy < self.servers:
            self._start(self.waiting.popleft())

    def __len__(self) -> int:
        return len(self.waiting) + self.busy


def make_input_delay(fn: Callable[[Any], int]) -> Callable[[Any], int]:
    return fn


def make_processing_delay(process: Callable[[Any], tuple[Any, int]]) -> Callable[[Any], int]:
    """Wrap ``process(item) -> (result, delay)``; the result lands on ``item.result``."""

    def service_time(item: Any) -> int:
        result, delay = process(item)
        item.result = result
        return delay

    return service_time


def constant(delay: int) -> Callable[[Any], int]:
    return lambda item: delay


def linear(base: int, per_unit: int, measure: Callable[[Any], int]) -> Callable[[Any], int]:
    return lambda item: base + per_unit * measure(item)
