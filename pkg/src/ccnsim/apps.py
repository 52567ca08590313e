"""Consumer and producer applications sharing a content repository."""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field

from ccnsim.engine import Event, SimNode
from ccnsim.message import Packet, make_content_object, make_interest
from ccnsim.name import Name
from ccnsim.portal import MessagePortal, create_portal
from ccnsim.units import MS, S

OBJECT_PREFIX = "obj"


class ContentRepository:
    """``object_count`` objects of ``payload_size`` bytes under ``prefix``.

    One instance can back any number of producers and consumers; objects are
    generated on demand so nothing is duplicated per node.
    """

    def __init__(self, prefix: Name, payload_size: int, object_count: int):
        if object_count < 1:
            raise ValueError("a repository needs at least one object")
        if payload_size < 0:
            raise ValueError("payload size must be >= 0")
        self.prefix = prefix
        self.payload_size = payload_size
        self.object_count = object_count
        self.payload = bytes(payload_size)
        self._depth = len(prefix)

    def name(self, index: int) -> Name:
        return self.prefix.append(f"{OBJECT_PREFIX}{index}")

    def names(self) -> list[Name]:
        return [self.name(i) for i in range(self.object_count)]

    def get_random_name(self, rng: random.Random) -> Name:
        return self.name(rng.randrange(self.object_count))

    def index_of(self, name: Name) -> int | None:
        if len(name) != self._depth + 1 or not self.prefix.is_prefix_of(name):
            return None
        value = name.segments[-1].value
        if not value.startswith(OBJECT_PREFIX.encode()):
            return None
        digits = value[len(OBJECT_PREFIX):]
        if not digits.isdigit() or (len(digits) > 1 and digits[:1] == b"0"):
            return None
        index = int(digits)
        return index if index < self.object_count else None

    def __contains__(self, name: Name) -> bool:
        return self.index_of(name) is not None

    def make_object(self, name: Name) -> Packet:
        return make_content_object(name, self.payload)


class Producer:
    """Anchors the repository prefix and answers Interests for its objects."""

    def __init__(self, node: SimNode, repo: ContentRepository, start_time: int = 0):
        self.node = node
        self.repo = repo
        self.start_time = start_time
        self.portal: MessagePortal | None = None
        self.interests_received = 0
        self.objects_sent = 0
        self.unknown_names = 0
        node.apps.append(self)
        node.sim.schedule_at(start_time, self.start, node=node.node_id)

    def start(self) -> None:
        self.portal = create_portal(self.node)
        self.portal.register_anchor(self.repo.prefix)
        self.portal.set_recv_callback(self._on_receive)

    def stop(self) -> None:
        if self.portal is not None:
            self.portal.close()

    def _on_receive(self, portal: MessagePortal) -> None:
        while (packet := portal.recv()) is not None:
            if not packet.is_interest:
                continue
            self.interests_received += 1
            if packet.name in self.repo:
                portal.send(self.repo.make_object(packet.name))
                self.objects_sent += 1
            else:
                self.unknown_names += 1


@dataclass
class ConsumerConfig:
    request_interval: int = 5 * MS
    start_time: int = 2 * S
    stop_time: int = 12 * S
    timeout: int = 4 * S

    def __post_init__(self):
        if self.start_time >= self.stop_time:
            raise ValueError("consumer start time must precede stop time")
        if self.request_interval <= 0:
            raise ValueError("request interval must be positive")


@dataclass
class ConsumerStats:
    interests_sent: int = 0
    objects_received: int = 0
    timeouts: int = 0
    latency_samples: list[int] = field(default_factory=list)
    latency_names: list[Name] = field(default_factory=list)


class Consumer:
    """Requests uniformly random repository names at a fixed rate.

    No retransmission: an Interest unanswered after ``timeout`` is counted
    as a timeout and forgotten.
    """

    def __init__(self, node: SimNode, repo: ContentRepository,
                 config: ConsumerConfig | None = None, rng: random.Random | None = None):
        self.node = node
        self.repo = repo
        self.config = config or ConsumerConfig()
        self.rng = rng or random.Random(node.rng.getrandbits(64))
        self.stats = ConsumerStats()
        self.portal: MessagePortal | None = None
        self._outstanding: dict[Name, deque[tuple[int, Event]]] = {}
        node.apps.append(self)
        node.sim.schedule_at(self.config.start_time, self.start, node=node.node_id)

    @property
    def outstanding(self) -> int:
        return sum(len(q) for q in self._outstanding.values())

    def start(self) -> None:
        self.portal = create_portal(self.node)
        self.portal.set_recv_callback(self._on_receive)
        self.tick()

    def tick(self) -> None:
        sim = self.node.sim
        now = sim.now
        if now >= self.config.stop_time:
            return
        name = self.repo.get_random_name(self.rng)
        self.portal.send(make_interest(name))
        self.stats.interests_sent += 1
        timer = sim.schedule(self.config.timeout, self._expire, name, now, node=self.node.node_id)
        self._outstanding.setdefault(name, deque()).append((now, timer))
        sim.schedule(self.config.request_interval, self.tick, node=self.node.node_id)

    def _expire(self, name: Name, sent: int) -> None:
        queue = self._outstanding.get(name)
        if not queue:
            return
        for i, (t, _) in enumerate(queue):
            if t == sent:
                del queue[i]
                break
        if not queue:
            del self._outstanding[name]
        self.stats.timeouts += 1

    def _on_receive(self, portal: MessagePortal) -> None:
        now = self.node.sim.now
        while (packet := portal.recv()) is not None:
            if packet.is_interest:
                continue
            queue = self._outstanding.pop(packet.name, None)
            if not queue:
                continue
            for sent, timer in queue:
                timer.cancel()
                self.stats.objects_received += 1
                self.stats.latency_samples.append(now - sent)
                self.stats.latency_names.append(packet.name)
