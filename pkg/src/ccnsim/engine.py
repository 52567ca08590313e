"""Discrete-event core: virtual clock, event queue, point-to-point links.

Time is integer nanoseconds. Events at equal times fire in the order they
were scheduled, so a run is fully determined by its inputs and seed.
"""

from __future__ import annotations

import hashlib
import heapq
import logging
import random
from collections import Counter
from dataclasses import dataclass, field
from itertools import count
from typing import Any, Callable, TextIO

from ccnsim.units import S

log = logging.getLogger(__name__)


class SimulationError(RuntimeError):
    """An event action raised; carries the failing event's time and node."""

    def __init__(self, time: int, node: str | None, cause: BaseException):
        super().__init__(f"simulation aborted at t={time}ns node={node}: {cause!r}")
        self.time = time
        self.node = node
        self.cause = cause


class Event:
    __slots__ = ("time", "fn", "args", "node", "cancelled")

    def __init__(self, time: int, fn: Callable, args: tuple, node: str | None):
        self.time = time
        self.fn = fn
        self.args = args
        self.node = node
        self.cancelled = False

    def cancel(self) -> None:
        self.cancelled = True


def stream_seed(seed: int, entity: str) -> int:
    """Stable per-entity seed so adding entities never perturbs others."""
    digest = hashlib.sha256(f"{seed}:{entity}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def substream(seed: int, entity: str) -> random.Random:
    return random.Random(stream_seed(seed, entity))


class Simulator:
    def __init__(self, trace: bool = False, log_file: TextIO | None = None):
        self.now = 0
        self._queue: list[tuple[int, int, Event]] = []
        self._seq = count()
        self.events_processed = 0
        # The event-log hash is always maintained; ``trace`` only asks for the
        # text log, which needs ``log_file``.
        self.trace = trace or log_file is not None
        self._hash = hashlib.sha256()
        self._log_file = log_file
        self._running = False

    def schedule(self, delay: int, fn: Callable, *args: Any, node: str | None = None) -> Event:
        if delay < 0:
            raise ValueError(f"negative delay {delay}")
        return self.schedule_at(self.now + delay, fn, *args, node=node)

    def schedule_at(self, time: int, fn: Callable, *args: Any, node: str | None = None) -> Event:
        if time < self.now:
            raise ValueError(f"cannot schedule at {time} before now={self.now}")
        ev = Event(time, fn, args, node)
        heapq.heappush(self._queue, (time, next(self._seq), ev))
        return ev

    def run(self, until: int) -> int:
        """Fire events with time <= ``until``; leave the clock at ``until``."""
        queue = self._queue
        pop = heapq.heappop
        self._running = True
        fired = 0
        try:
            while queue and queue[0][0] <= until:
                time, _, ev = pop(queue)
                if ev.cancelled:
                    continue
                self.now = time
                self._record(ev)
                try:
                    ev.fn(*ev.args)
                except SimulationError:
                    raise
                except Exception as exc:
                    raise SimulationError(time, ev.node, exc) from exc
                fired += 1
        finally:
            self._running = False
            self.events_processed += fired
        if until > self.now:
            self.now = until
        return fired

    def pending(self) -> int:
        return sum(1 for _, _, ev in self._queue if not ev.cancelled)

    def _record(self, ev: Event) -> None:
        fn = ev.fn
        kind = getattr(fn, "__qualname__", type(fn).__name__)
        line = f"{ev.time} {ev.node or '-'} {kind}\n"
        self._hash.update(line.encode())
        if self._log_file is not None:
            self._log_file.write(line)

    @property
    def event_log_hash(self) -> str:
        return self._hash.hexdigest()


@dataclass
class LinkStats:
    sent: int = 0
    delivered: int = 0
    lost: int = 0
    discarded: int = 0
    bytes_sent: int = 0


class Link:
    """Full-duplex point-to-point link.

    Each direction serializes one packet at a time, so an idle link delivers
    a packet at ``send time + bits / bandwidth + delay``; back-to-back
    packets queue behind each other in FIFO order.
    """

    def __init__(
        self,
        sim: Simulator,
        link_id: int,
        a: str,
        b: str,
        delay: int,
        bandwidth: int,
        loss: float = 0.0,
        rng: random.Random | None = None,
    ):
        if delay < 0:
            raise ValueError("link delay must be >= 0")
        if bandwidth <= 0:
            raise ValueError("link bandwidth must be positive")
        if not 0.0 <= loss <= 1.0:
            raise ValueError("loss rate must be in [0, 1]")
        self.sim = sim
        self.link_id = link_id
        self.a, self.b = a, b
        self.delay = delay
        self.bandwidth = bandwidth
        self.loss = loss
        self.rng = rng or random.Random(link_id)
        self.stats = LinkStats()
        self._busy_until = {a: 0, b: 0}
        self._receivers: dict[str, Callable[[bytes, str], None]] = {}

    @property
    def endpoints(self) -> tuple[str, str]:
        return self.a, self.b

    def peer(self, node_id: str) -> str:
        if node_id == self.a:
            return self.b
        if node_id == self.b:
            return self.a
        raise KeyError(f"{node_id} is not on link {self.link_id}")

    def attach(self, node_id: str, receive: Callable[[bytes, str], None]) -> None:
        self.peer(node_id)
        self._receivers[node_id] = receive

    def transmission_time(self, size: int) -> int:
        bits = size * 8
        return (bits * S + self.bandwidth // 2) // self.bandwidth

    def send(self, sender: str, data: bytes) -> None:
        dest = self.peer(sender)
        self.stats.sent += 1
        self.stats.bytes_sent += len(data)
        start = max(self.sim.now, self._busy_until[sender])
        done = start + self.transmission_time(len(data))
        self._busy_until[sender] = done
        if self.rng.random() < self.loss:
            self.stats.lost += 1
            return
        self.sim.schedule_at(done + self.delay, self._deliver, dest, data, sender, node=dest)

    def _deliver(self, dest: str, data: bytes, sender: str) -> None:
        self.stats.delivered += 1
        receive = self._receivers.get(dest)
        if receive is not None:
            receive(data, sender)

    def finish(self) -> None:
        self.stats.discarded = self.stats.sent - self.stats.delivered - self.stats.lost


@dataclass
class SimNode:
    """One simulated node and its installed protocol stack."""

    node_id: str
    sim: Simulator
    rng: random.Random
    counters: Counter = field(default_factory=Counter)
    l3: Any = None
    forwarder: Any = None
    routing: Any = None
    apps: list = field(default_factory=list)
    links: list[Link] = field(default_factory=list)


class Network:
    """Nodes and links of one simulation run."""

    def __init__(self, seed: int = 1, trace: bool = False, log_file: TextIO | None = None):
        self.seed = seed
        self.sim = Simulator(trace=trace, log_file=log_file)
        self.nodes: dict[str, SimNode] = {}
        self.links: list[Link] = []
        self._link_index: dict[frozenset, Link] = {}

    def add_node(self, node_id: str) -> SimNode:
        if node_id in self.nodes:
            raise ValueError(f"duplicate node {node_id!r}")
        node = SimNode(node_id, self.sim, substream(self.seed, f"node:{node_id}"))
        self.nodes[node_id] = node
        return node

    def add_link(self, a: str, b: str, delay: int, bandwidth: int, loss: float = 0.0) -> Link:
        if a == b:
            raise ValueError(f"self-loop on {a!r}")
        for n in (a, b):
            if n not in self.nodes:
                raise KeyError(f"unknown node {n!r}")
        key = frozenset((a, b))
        if key in self._link_index:
            raise ValueError(f"duplicate link {a}-{b}")
        link_id = len(self.links)
        link = Link(self.sim, link_id, a, b, delay, bandwidth, loss,
                    substream(self.seed, f"link:{a}-{b}"))
        self.links.append(link)
        self._link_index[key] = link
        self.nodes[a].links.append(link)
        self.nodes[b].links.append(link)
        return link

    def link_between(self, a: str, b: str) -> Link:
        try:
            return self._link_index[frozenset((a, b))]
        except KeyError:
            raise KeyError(f"no link between {a!r} and {b!r}") from None

    def _resolve(self, link: int | Link | tuple[str, str]) -> Link:
        if isinstance(link, Link):
            return link
        if isinstance(link, tuple):
            return self.link_between(*link)
        if not 0 <= link < len(self.links):
            raise KeyError(f"unknown link {link}")
        return self.links[link]

    def fail_link(self, link: int | Link | tuple[str, str], at: int) -> None:
        """Set the link to 100% loss in both directions from ``at``."""
        self.set_link_loss(link, 1.0, at)

    def restore_link(self, link: int | Link | tuple[str, str], at: int, loss: float = 0.0) -> None:
        self.set_link_loss(link, loss, at)

    def set_link_loss(self, link: int | Link | tuple[str, str], loss: float, at: int) -> None:
        target = self._resolve(link)

        def apply() -> None:
            log.debug("link %s loss -> %s at %d", target.link_id, loss, self.sim.now)
            target.loss = loss

        self.sim.schedule_at(at, apply)

    def run(self, until: int) -> int:
        fired = self.sim.run(until)
        for link in self.links:
            link.finish()
        return fired
