"""Name Flooding Protocol: distance-vector routing over CCNx names.

Every ``(prefix, anchorName)`` pair is routed independently. Anchors
advertise ``(prefix, anchorName, anchorPrefixSeqnum, 0)`` periodically; each
hop adds its link cost. A node keeps, per pair, the best sequence number and
distance it has seen plus the set of equal-cost predecessors, and installs
FIB next hops toward those predecessors.

Routing messages ride in the payload of 1-hop Interests and double as
hellos. Payload layout (big-endian)::

    routerName(32) | messageSeqnum(4) | advCount(2) | withdrawCount(2)
    adv      := prefix name TLV | anchorName(32) | seqnum(4) | distance(2)
    withdraw := prefix name TLV | anchorName(32) | seqnum(4)
"""

from __future__ import annotations

import hashlib
import logging
import struct
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

from ccnsim.codec import T_NAME, DecodeError, NameCodec, tlv
from ccnsim.engine import SimNode
from ccnsim.message import make_interest
from ccnsim.metrics import count_complexity
from ccnsim.name import Name
from ccnsim.portal import MessagePortal, create_portal
from ccnsim.units import MS, S

log = logging.getLogger(__name__)

NAME_LENGTH = 32
MAX_DISTANCE = 0xFFFF
MAX_PAYLOAD = 60_000

_HEAD = struct.Struct(">32sIHH")
_ADV_TAIL = struct.Struct(">32sIH")
_WD_TAIL = struct.Struct(">32sI")
_NAMES = NameCodec()


def router_name_for(node_id: str) -> bytes:
    return hashlib.sha256(f"router:{node_id}".encode()).digest()


def anchor_name_for(node_id: str) -> bytes:
    return hashlib.sha256(f"anchor:{node_id}".encode()).digest()


@dataclass
class NfpConfig:
    hello_interval: int = 1 * S
    advertisement_interval: int = 10 * S
    neighbor_timeout: int | None = None
    route_timeout_factor: int = 3
    jitter: int = 100 * MS
    link_cost: int = 1
    prefix: str = "ccnx:/name=nfp"

    @property
    def dead_after(self) -> int:
        return self.neighbor_timeout_ns

    @property
    def neighbor_timeout_ns(self) -> int:
        if self.neighbor_timeout is not None:
            return self.neighbor_timeout
        return 3 * self.hello_interval

    @property
    def route_lifetime(self) -> int:
        return self.route_timeout_factor * self.advertisement_interval


@dataclass(frozen=True)
class Advertisement:
    prefix: Name
    anchor: bytes
    seqnum: int
    distance: int


@dataclass(frozen=True)
class Withdraw:
    prefix: Name
    anchor: bytes
    seqnum: int


@dataclass
class NfpMessage:
    router_name: bytes
    seqnum: int
    advertisements: list[Advertisement] = field(default_factory=list)
    withdraws: list[Withdraw] = field(default_factory=list)

    def encode(self) -> bytes:
        parts = [_HEAD.pack(self.router_name, self.seqnum,
                            len(self.advertisements), len(self.withdraws))]
        for adv in self.advertisements:
            parts.append(tlv(T_NAME, _NAMES.encode(adv.prefix)))
            parts.append(_ADV_TAIL.pack(adv.anchor, adv.seqnum, min(adv.distance, MAX_DISTANCE)))
        for wd in self.withdraws:
            parts.append(tlv(T_NAME, _NAMES.encode(wd.prefix)))
            parts.append(_WD_TAIL.pack(wd.anchor, wd.seqnum))
        return b"".join(parts)

    @classmethod
    def decode(cls, data: bytes) -> NfpMessage:
        if len(data) < _HEAD.size:
            raise DecodeError("truncated routing message header", len(data))
        router, seq, n_adv, n_wd = _HEAD.unpack_from(data)
        pos = _HEAD.size
        advs, wds = [], []
        for i in range(n_adv + n_wd):
            prefix, pos = _read_name(data, pos)
            tail = _ADV_TAIL if i < n_adv else _WD_TAIL
            if len(data) - pos < tail.size:
                raise DecodeError("truncated routing record", pos)
            fields = tail.unpack_from(data, pos)
            pos += tail.size
            if i < n_adv:
                advs.append(Advertisement(prefix, *fields))
            else:
                wds.append(Withdraw(prefix, *fields))
        if pos != len(data):
            raise DecodeError("trailing bytes in routing message", pos)
        return cls(router, seq, advs, wds)


def _read_name(data: bytes, pos: int) -> tuple[Name, int]:
    if len(data) - pos < 4:
        raise DecodeError("truncated prefix TLV", pos)
    t, length = struct.unpack_from(">HH", data, pos)
    if t != T_NAME or length > len(data) - pos - 4:
        raise DecodeError("bad prefix TLV", pos)
    try:
        name = _NAMES.decode(data[pos + 4 : pos + 4 + length])
    except DecodeError as exc:
        raise exc.shifted(pos + 4) from None
    return name, pos + 4 + length


class Feasibility(Enum):
    INFEASIBLE = "infeasible"
    EQUAL = "equal"
    STRICTLY_BETTER = "strictly_better"


class NeighborState(Enum):
    UP = "UP"
    DOWN = "DOWN"
    DEAD = "DEAD"


@dataclass
class NeighborEntry:
    router_name: bytes
    conn_id: int
    state: NeighborState
    last_heard: int
    last_seqnum: int


@dataclass
class PrefixTableEntry:
    prefix: Name
    anchor: bytes
    best_seqnum: int
    best_distance: int | None
    predecessors: set[bytes]
    expiry: int

    @property
    def reachable(self) -> bool:
        return bool(self.predecessors)


def is_feasible(entry: PrefixTableEntry | None, adv: Advertisement) -> Feasibility:
    """Classify ``adv`` (distance already including the link cost)."""
    if entry is None or adv.seqnum > entry.best_seqnum:
        return Feasibility.STRICTLY_BETTER
    if adv.seqnum < entry.best_seqnum:
        return Feasibility.INFEASIBLE
    if entry.best_distance is None or adv.distance < entry.best_distance:
        return Feasibility.STRICTLY_BETTER
    if adv.distance == entry.best_distance:
        return Feasibility.EQUAL
    return Feasibility.INFEASIBLE


Key = tuple[Name, bytes]


class NfpRouting:
    def __init__(self, node: SimNode, config: NfpConfig | None = None):
        self.node = node
        self.sim = node.sim
        self.config = config or NfpConfig()
        self.counters = node.counters
        self.rng = node.rng
        self.router_name = router_name_for(node.node_id)
        self.anchor_name = anchor_name_for(node.node_id)
        self.prefix = Name.parse(self.config.prefix)
        self.neighbors: dict[bytes, NeighborEntry] = {}
        self.table: dict[Key, PrefixTableEntry] = {}
        self.anchored: dict[Name, int] = {}
        self.neighbor_log: list[tuple[int, bytes, NeighborState]] = []
        self.prefix_log: list[tuple[int, Name, bytes, bool]] = []
        self.portal: MessagePortal | None = None
        self._anchor_seq: dict[Name, int] = {}
        self._by_prefix: dict[Name, set[bytes]] = {}
        self._installed: dict[Name, set[int]] = {}
        self._pending: dict[Key, None] = {}
        self._pending_own: dict[Name, bool] = {}
        self._flush_event = None
        self._seqnum = 0
        self._running = False

    # --- lifecycle -----------------------------------------------------------

    def start(self) -> None:
        self.portal = create_portal(self.node)
        self.portal.register_prefix(self.prefix)
        self.portal.set_recv_callback(self._on_receive)
        self._running = True
        now = self.sim.now
        hello = self.config.hello_interval
        adv = self.config.advertisement_interval
        self.sim.schedule_at(-(-now // hello) * hello, self._hello_tick, node=self.node.node_id)
        self.sim.schedule_at(-(-now // adv) * adv, self._advertise_tick, node=self.node.node_id)

    def stop(self) -> None:
        self._running = False

    def _tick(self, units: int = 1) -> None:
        count_complexity(self.counters, units)

    # --- anchors -------------------------------------------------------------

    def anchor_added(self, prefix: Name) -> None:
        self._anchor_seq[prefix] = self._anchor_seq.get(prefix, 0) + 1
        self.anchored[prefix] = self._anchor_seq[prefix]
        self._queue_own(prefix, True)

    def anchor_removed(self, prefix: Name) -> None:
        if self.anchored.pop(prefix, None) is None:
            return
        self._anchor_seq[prefix] += 1
        self._queue_own(prefix, False)

    # --- timers --------------------------------------------------------------

    def _hello_tick(self) -> None:
        if not self._running:
            return
        self._tick()
        now = self.sim.now
        self.neighbor_timeout(now)
        self.route_timeout(now)
        self._send([], [])
        self.sim.schedule(self.config.hello_interval, self._hello_tick, node=self.node.node_id)

    def _advertise_tick(self) -> None:
        if not self._running:
            return
        self._tick()
        self.advertise_timer(self.sim.now)
        self.sim.schedule(self.config.advertisement_interval, self._advertise_tick,
                          node=self.node.node_id)

    def advertise_timer(self, now: int) -> None:
        advs = []
        for prefix in sorted(self.anchored):
            self._tick()
            self._anchor_seq[prefix] += 1
            self.anchored[prefix] = self._anchor_seq[prefix]
            advs.append(Advertisement(prefix, self.anchor_name, self.anchored[prefix], 0))
        for key in sorted(self.table):
            self._tick()
            entry = self.table[key]
            if entry.reachable:
                advs.append(Advertisement(entry.prefix, entry.anchor,
                                          entry.best_seqnum, entry.best_distance))
        self._send(advs, [])

    def neighbor_timeout(self, now: int) -> None:
        timeout = self.config.neighbor_timeout_ns
        for router in sorted(self.neighbors):
            self._tick()
            nb = self.neighbors[router]
            silent = now - nb.last_heard
            if nb.state is NeighborState.UP and silent > timeout:
                self._neighbor_down(nb)
            elif nb.state is NeighborState.DOWN and silent > timeout + self.config.dead_after:
                self._tick()
                nb.state = NeighborState.DEAD
                self.neighbor_log.append((now, router, NeighborState.DEAD))
                del self.neighbors[router]

    def route_timeout(self, now: int) -> None:
        for key in sorted(self.table):
            self._tick()
            entry = self.table[key]
            if entry.reachable and now >= entry.expiry:
                self._tick()
                # Keep best_distance: it stays the feasible distance for this
                # seqnum, so stale copies elsewhere cannot form a loop.
                entry.predecessors.clear()
                self._prefix_state_changed(entry, False)
                self._sync_fib(entry.prefix)

    # --- receive path ----------------------------------------------------------

    def _on_receive(self, portal: MessagePortal) -> None:
        while (item := portal.recv_from()) is not None:
            packet, ingress = item
            try:
                msg = NfpMessage.decode(packet.message.payload)
            except DecodeError:
                self.counters["malformedRoutingMessages"] += 1
                continue
            self.receive_message(msg, ingress, self.sim.now)

    def receive_message(self, msg: NfpMessage, ingress: int, now: int) -> bool:
        if not self._running:
            return False
        self._tick()
        nb = self.neighbors.get(msg.router_name)
        if nb is not None and msg.seqnum <= nb.last_seqnum:
            self.counters["staleMessages"] += 1
            return False
        if nb is None:
            nb = NeighborEntry(msg.router_name, ingress, NeighborState.UP, now, msg.seqnum)
            self.neighbors[msg.router_name] = nb
            self.neighbor_log.append((now, msg.router_name, NeighborState.UP))
        else:
            if nb.state is not NeighborState.UP:
                nb.state = NeighborState.UP
                self.neighbor_log.append((now, msg.router_name, NeighborState.UP))
            nb.conn_id = ingress
            nb.last_heard = now
            nb.last_seqnum = msg.seqnum
        self.counters["messagesReceived"] += 1
        self.counters["advsReceived"] += len(msg.advertisements)
        self.counters["withdrawsReceived"] += len(msg.withdraws)
        for adv in msg.advertisements:
            self._tick()
            self._receive_advertisement(adv, msg.router_name, now)
        for wd in msg.withdraws:
            self._tick()
            self._receive_withdraw(wd, msg.router_name, now)
        return True

    def _receive_advertisement(self, adv: Advertisement, sender: bytes, now: int) -> None:
        if adv.anchor == self.anchor_name:
            return
        key = (adv.prefix, adv.anchor)
        self._tick()
        entry = self.table.get(key)
        adv = Advertisement(adv.prefix, adv.anchor, adv.seqnum, adv.distance + self.config.link_cost)
        verdict = is_feasible(entry, adv)
        if verdict is Feasibility.INFEASIBLE:
            return
        self._tick()
        expiry = now + self.config.route_lifetime
        if verdict is Feasibility.EQUAL:
            revived = not entry.reachable
            entry.predecessors.add(sender)
            entry.expiry = expiry
            if revived:
                self._prefix_state_changed(entry, True)
                self._queue_flood(key)
            self._sync_fib(adv.prefix)
            return
        if entry is None:
            entry = PrefixTableEntry(adv.prefix, adv.anchor, adv.seqnum, adv.distance, set(), expiry)
            self.table[key] = entry
            self._by_prefix.setdefault(adv.prefix, set()).add(adv.anchor)
        was_reachable = entry.reachable
        entry.best_seqnum = adv.seqnum
        entry.best_distance = adv.distance
        entry.predecessors = {sender}
        entry.expiry = expiry
        if not was_reachable:
            self._prefix_state_changed(entry, True)
        self._sync_fib(adv.prefix)
        self._queue_flood(key)

    def _receive_withdraw(self, wd: Withdraw, sender: bytes, now: int) -> None:
        if wd.anchor == self.anchor_name:
            return
        key = (wd.prefix, wd.anchor)
        self._tick()
        entry = self.table.get(key)
        if entry is None or wd.seqnum <= entry.best_seqnum or sender not in entry.predecessors:
            return
        self._tick()
        entry.predecessors.discard(sender)
        if not entry.predecessors:
            entry.best_seqnum = wd.seqnum
            entry.best_distance = None
            self._prefix_state_changed(entry, False)
            self._queue_flood(key)
        self._sync_fib(wd.prefix)

    # --- state changes ---------------------------------------------------------

    def _neighbor_down(self, nb: NeighborEntry) -> None:
        self._tick()
        now = self.sim.now
        nb.state = NeighborState.DOWN
        self.neighbor_log.append((now, nb.router_name, NeighborState.DOWN))
        touched = set()
        for key in sorted(self.table):
            self._tick()
            entry = self.table[key]
            if nb.router_name not in entry.predecessors:
                continue
            entry.predecessors.discard(nb.router_name)
            touched.add(entry.prefix)
            if not entry.predecessors:
                # A withdraw must carry a newer seqnum to be feasible downstream.
                entry.best_seqnum += 1
                entry.best_distance = None
                self._prefix_state_changed(entry, False)
                self._queue_flood(key)
        for prefix in sorted(touched):
            self._sync_fib(prefix)

    def _prefix_state_changed(self, entry: PrefixTableEntry, reachable: bool) -> None:
        self._tick()
        self.prefix_log.append((self.sim.now, entry.prefix, entry.anchor, reachable))

    def _sync_fib(self, prefix: Name) -> None:
        desired = set()
        for anchor in sorted(self._by_prefix.get(prefix, ())):
            for router in self.table[(prefix, anchor)].predecessors:
                self._tick()
                nb = self.neighbors.get(router)
                if nb is not None and nb.state is NeighborState.UP:
                    desired.add(nb.conn_id)
        installed = self._installed.setdefault(prefix, set())
        fwd = self.node.forwarder
        for conn in sorted(desired - installed):
            fwd.add_route(prefix, conn)
        for conn in sorted(installed - desired):
            fwd.remove_route(prefix, conn)
        self._installed[prefix] = desired

    # --- send path -----------------------------------------------------------

    def _queue_flood(self, key: Key) -> None:
        self._pending[key] = None
        self._arm_flush()

    def _queue_own(self, prefix: Name, advertise: bool) -> None:
        self._pending_own[prefix] = advertise
        self._arm_flush()

    def _arm_flush(self) -> None:
        if self._flush_event is None:
            delay = self.rng.randint(0, self.config.jitter)
            self._flush_event = self.sim.schedule(delay, self._flush, node=self.node.node_id)

    def _flush(self) -> None:
        self._flush_event = None
        if not self._running:
            return
        self._tick()
        advs: list[Advertisement] = []
        wds: list[Withdraw] = []
        for prefix, advertise in sorted(self._pending_own.items()):
            self._tick()
            seq = self._anchor_seq[prefix]
            if advertise and prefix in self.anchored:
                advs.append(Advertisement(prefix, self.anchor_name, seq, 0))
            elif not advertise:
                wds.append(Withdraw(prefix, self.anchor_name, seq))
        for key in sorted(self._pending):
            self._tick()
            entry = self.table[key]
            if entry.reachable:
                advs.append(Advertisement(entry.prefix, entry.anchor,
                                          entry.best_seqnum, entry.best_distance))
            else:
                wds.append(Withdraw(entry.prefix, entry.anchor, entry.best_seqnum))
        self._pending.clear()
        self._pending_own.clear()
        if advs or wds:
            self._send(advs, wds)

    def _send(self, advs: list[Advertisement], wds: list[Withdraw]) -> None:
        for chunk_advs, chunk_wds in _chunks(advs, wds):
            self._seqnum += 1
            msg = NfpMessage(self.router_name, self._seqnum, chunk_advs, chunk_wds)
            name = self.prefix.append(self.router_name).append(struct.pack(">I", self._seqnum))
            packet = make_interest(name, msg.encode(), hop_limit=1)
            for conn in self.node.l3.broadcast_connections():
                self.portal.send_to(packet, conn)
            self.counters["messagesSent"] += 1
            self.counters["advsSent"] += len(chunk_advs)
            self.counters["withdrawsSent"] += len(chunk_wds)
            if not chunk_advs and not chunk_wds:
                self.counters["hellosSent"] += 1

    # --- inspection ------------------------------------------------------------

    def neighbor_state(self, router_name: bytes) -> NeighborState | None:
        nb = self.neighbors.get(router_name)
        return nb.state if nb is not None else None

    def routes(self) -> dict[Key, PrefixTableEntry]:
        return {k: v for k, v in self.table.items() if v.reachable}


def _record_size(record: Advertisement | Withdraw) -> int:
    tail = _ADV_TAIL.size if isinstance(record, Advertisement) else _WD_TAIL.size
    return 4 + record.prefix.byte_length() + tail


def _chunks(advs: list[Advertisement], wds: list[Withdraw]) -> Iterable[tuple[list, list]]:
    if not advs and not wds:
        yield [], []
        return
    cur_a: list = []
    cur_w: list = []
    size = _HEAD.size
    for rec in [*advs, *wds]:
        rsize = _record_size(rec)
        if (cur_a or cur_w) and size + rsize > MAX_PAYLOAD:
            yield cur_a, cur_w
            cur_a, cur_w, size = [], [], _HEAD.size
        (cur_a if isinstance(rec, Advertisement) else cur_w).append(rec)
        size += rsize
    yield cur_a, cur_w
