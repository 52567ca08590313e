"""PIT, FIB and Content Store, each with a standard implementation and factory.

The tables themselves are plain data structures; their processing delays
are applied by the forwarder through :class:`~ccnsim.delayq.DelayQueue`
using the delay functions defined here.
"""

from __future__ import annotations

import heapq
import logging
from collections import Counter, OrderedDict
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

from ccnsim.message import ContentObject, Interest
from ccnsim.metrics import count_complexity
from ccnsim.name import Name
from ccnsim.units import NS, S, US

log = logging.getLogger(__name__)


@dataclass
class TableConfig:
    pit_lifetime: int = 4 * S
    cs_capacity: int = 100
    pit_delay_base: int = 1 * US
    pit_delay_per_byte: int = 50 * NS
    fib_delay_base: int = 1 * US
    fib_delay_per_probe: int = 1 * US
    cs_miss_delay: int = 1 * US
    cs_hit_base: int = 1 * US
    cs_hit_per_byte: int = 10 * NS


class PitVerdict(Enum):
    FORWARD = "forward"
    AGGREGATE = "aggregate"
    DUPLICATE = "duplicate"


@dataclass
class PitEntry:
    name: Name
    ingress: set[int]
    expiry: int


class StandardPit:
    """Exact-name pending Interest table with eager expiry."""

    def __init__(self, lifetime: int = 4 * S, counters: Counter | None = None):
        self.lifetime = lifetime
        self.counters = counters if counters is not None else Counter()
        self._entries: dict[Name, PitEntry] = {}
        self._expiries: list[tuple[int, int, Name]] = []
        self._tiebreak = 0

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, name: Name) -> bool:
        return name in self._entries

    def entry(self, name: Name) -> PitEntry | None:
        return self._entries.get(name)

    def _purge(self, now: int) -> None:
        heap = self._expiries
        while heap and heap[0][0] <= now:
            expiry, _, name = heapq.heappop(heap)
            entry = self._entries.get(name)
            if entry is not None and entry.expiry <= now:
                del self._entries[name]
                self.counters["pitExpired"] += 1

    def _arm(self, entry: PitEntry) -> None:
        self._tiebreak += 1
        heapq.heappush(self._expiries, (entry.expiry, self._tiebreak, entry.name))

    def receive_interest(self, interest: Interest, ingress: int, now: int) -> PitVerdict:
        self._purge(now)
        count_complexity(self.counters, 1)
        entry = self._entries.get(interest.name)
        if entry is None:
            entry = PitEntry(interest.name, {ingress}, now + self.lifetime)
            self._entries[interest.name] = entry
            self._arm(entry)
            return PitVerdict.FORWARD
        if ingress in entry.ingress:
            entry.expiry = now + self.lifetime
            self._arm(entry)
            return PitVerdict.DUPLICATE
        entry.ingress.add(ingress)
        return PitVerdict.AGGREGATE

    def satisfy(self, obj: ContentObject, now: int) -> set[int]:
        self._purge(now)
        count_complexity(self.counters, 1)
        entry = self._entries.pop(obj.name, None)
        return set(entry.ingress) if entry is not None else set()

    def remove(self, name: Name) -> None:
        self._entries.pop(name, None)


@dataclass
class FibResult:
    next_hops: set[int]
    lookup_count: int


class StandardFib:
    """Hash map keyed by full prefix, probed longest-first."""

    def __init__(self, counters: Counter | None = None):
        self.counters = counters if counters is not None else Counter()
        self._routes: dict[Name, set[int]] = {}

    def __len__(self) -> int:
        return len(self._routes)

    def add_route(self, prefix: Name, conn: int) -> None:
        self._routes.setdefault(prefix, set()).add(conn)

    def remove_route(self, prefix: Name, conn: int) -> None:
        hops = self._routes.get(prefix)
        if hops is None or conn not in hops:
            log.debug("remove of absent route %s -> %s ignored", prefix, conn)
            return
        hops.discard(conn)
        if not hops:
            del self._routes[prefix]

    def next_hops(self, prefix: Name) -> set[int]:
        return set(self._routes.get(prefix, ()))

    def routes(self) -> dict[Name, set[int]]:
        return {p: set(h) for p, h in sorted(self._routes.items())}

    def lookup(self, name: Name) -> FibResult:
        segments = name.segments
        routes = self._routes
        probes = 0
        for length in range(len(segments), -1, -1):
            probes += 1
            hops = routes.get(Name(segments[:length]))
            if hops:
                count_complexity(self.counters, probes)
                return FibResult(set(hops), probes)
        count_complexity(self.counters, probes)
        return FibResult(set(), probes)


class LruContentStore:
    def __init__(self, capacity: int = 100, counters: Counter | None = None):
        if capacity < 0:
            raise ValueError("content store capacity must be >= 0")
        self.capacity = capacity
        self.counters = counters if counters is not None else Counter()
        self._objects: OrderedDict[Name, ContentObject] = OrderedDict()

    def __len__(self) -> int:
        return len(self._objects)

    def names(self) -> list[Name]:
        """Cached names, least recently used first."""
        return list(self._objects)

    def lookup(self, interest: Interest, now: int = 0) -> ContentObject | None:
        obj = self._objects.get(interest.name)
        if obj is not None:
            self._objects.move_to_end(interest.name)
        return obj

    def insert(self, obj: ContentObject, now: int = 0) -> None:
        if self.capacity == 0:
            return
        self._objects[obj.name] = obj
        self._objects.move_to_end(obj.name)
        while len(self._objects) > self.capacity:
            evicted, _ = self._objects.popitem(last=False)
            self.counters["csEvictions"] += 1


# Delay functions. Each takes the table config and returns the service-time
# contribution for one item.

def pit_delay(config: TableConfig, name: Name) -> int:
    return config.pit_delay_base + config.pit_delay_per_byte * name.byte_length()


def fib_delay(config: TableConfig, lookup_count: int) -> int:
    return config.fib_delay_base + config.fib_delay_per_probe * lookup_count


def cs_delay(config: TableConfig, hit: ContentObject | None) -> int:
    if hit is None:
        return config.cs_miss_delay
    return config.cs_hit_base + config.cs_hit_per_byte * len(hit.payload)


@dataclass
class TableFactories:
    """Construction-time substitution points for the three tables."""

    pit: Callable[[TableConfig, Counter], StandardPit] = field(
        default=lambda cfg, counters: StandardPit(cfg.pit_lifetime, counters)
    )
    fib: Callable[[TableConfig, Counter], StandardFib] = field(
        default=lambda cfg, counters: StandardFib(counters)
    )
    cs: Callable[[TableConfig, Counter], LruContentStore] = field(
        default=lambda cfg, counters: LruContentStore(cfg.cs_capacity, counters)
    )
