"""Standard CCNx forwarder: route_input / route_output over PIT, FIB and CS.

Each table sits behind its own single-server delay queue and the stages
run in sequence, so a verdict is ready ``sum of traversed table delays``
after the packet arrived (plus any queueing behind earlier packets).
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable

from ccnsim.delayq import DelayQueue, make_input_delay, make_processing_delay
from ccnsim.engine import Simulator
from ccnsim.message import ContentObject, Packet
from ccnsim.name import Name
from ccnsim.tables import (
    PitVerdict,
    TableConfig,
    TableFactories,
    cs_delay,
    fib_delay,
    pit_delay,
)

log = logging.getLogger(__name__)


@dataclass
class ForwardVerdict:
    egress: set[int] = field(default_factory=set)
    local_delivery: ContentObject | None = None


VerdictCallback = Callable[[Packet, int, ForwardVerdict], None]


class _Job:
    __slots__ = ("packet", "ingress", "callback", "result")

    def __init__(self, packet: Packet, ingress: int, callback: VerdictCallback):
        self.packet = packet
        self.ingress = ingress
        self.callback = callback
        self.result = None


class StandardForwarder:
    def __init__(
        self,
        sim: Simulator,
        config: TableConfig | None = None,
        counters: Counter | None = None,
        factories: TableFactories | None = None,
        is_local: Callable[[int], bool] = lambda conn: False,
        node: str | None = None,
    ):
        self.sim = sim
        self.config = config or TableConfig()
        self.counters = counters if counters is not None else Counter()
        factories = factories or TableFactories()
        self.pit = factories.pit(self.config, self.counters)
        self.fib = factories.fib(self.config, self.counters)
        self.cs = factories.cs(self.config, self.counters)
        self.is_local = is_local
        self.node = node
        cfg = self.config
        self.cs_queue = DelayQueue(
            sim, 1, make_processing_delay(self._cs_process), self._after_cs, node
        )
        self.pit_queue = DelayQueue(
            sim, 1, make_input_delay(lambda job: pit_delay(cfg, job.packet.name)),
            self._after_pit, node,
        )
        self.fib_queue = DelayQueue(
            sim, 1, make_processing_delay(self._fib_process), self._after_fib, node
        )

    # --- entry points ---------------------------------------------------

    def route_input(self, packet: Packet, ingress: int, callback: VerdictCallback) -> None:
        """Packet received from a network device."""
        if packet.is_interest and packet.hop_limit > 0:
            packet = packet.with_hop_limit(packet.hop_limit - 1)
        self._start(packet, ingress, callback)

    def route_output(self, packet: Packet, ingress: int, callback: VerdictCallback) -> None:
        """Packet sent by a layer-4 protocol on connection ``ingress``."""
        self._start(packet, ingress, callback)

    def _start(self, packet: Packet, ingress: int, callback: VerdictCallback) -> None:
        job = _Job(packet, ingress, callback)
        if packet.is_interest:
            self.cs_queue.push(job)
        else:
            self.pit_queue.push(job)

    def add_route(self, prefix: Name, conn: int) -> None:
        self.fib.add_route(prefix, conn)

    def remove_route(self, prefix: Name, conn: int) -> None:
        self.fib.remove_route(prefix, conn)

    # --- pipeline stages -------------------------------------------------

    def _cs_process(self, job: _Job) -> tuple[ContentObject | None, int]:
        hit = self.cs.lookup(job.packet.message, self.sim.now)
        return hit, cs_delay(self.config, hit)

    def _after_cs(self, job: _Job) -> None:
        if job.result is not None:
            self.counters["csHits"] += 1
            job.callback(job.packet, job.ingress, ForwardVerdict(set(), job.result))
            return
        self.counters["csMisses"] += 1
        self.pit_queue.push(job)

    def _after_pit(self, job: _Job) -> None:
        packet, now = job.packet, self.sim.now
        if packet.is_interest:
            verdict = self.pit.receive_interest(packet.message, job.ingress, now)
            if verdict is PitVerdict.FORWARD:
                self.fib_queue.push(job)
                return
            if verdict is PitVerdict.AGGREGATE:
                self.counters["interestsAggregated"] += 1
            else:
                self.counters["interestsDuplicate"] += 1
            job.callback(packet, job.ingress, ForwardVerdict())
            return
        pending = self.pit.satisfy(packet.message, now)
        if not pending:
            self.counters["drops"] += 1
            self.counters["unsolicitedObjects"] += 1
            job.callback(packet, job.ingress, ForwardVerdict())
            return
        egress = pending - {job.ingress}
        self.cs.insert(packet.message, now)
        self.counters["objectsForwarded"] += 1
        job.callback(packet, job.ingress, ForwardVerdict(egress))

    def _fib_process(self, job: _Job):
        result = self.fib.lookup(job.packet.name)
        return result, fib_delay(self.config, result.lookup_count)

    def _after_fib(self, job: _Job) -> None:
        packet = job.packet
        egress = job.result.next_hops - {job.ingress}
        if packet.hop_limit == 0:
            egress = {c for c in egress if self.is_local(c)}
        if not egress:
            self.pit.remove(packet.name)
            self.counters["drops"] += 1
            self.counters["noRoute"] += 1
        else:
            self.counters["interestsForwarded"] += 1
        job.callback(packet, job.ingress, ForwardVerdict(egress))
