"""Per-node layer 3: interfaces, the connection table and packet dispatch.

Everything entering layer 3 (from a device or from a portal) passes through
one fixed-delay input queue before it is handed to the forwarder or sent
directly on a connection.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Any

from ccnsim.codec import DecodeError, PacketCodec
from ccnsim.delayq import DelayQueue, constant
from ccnsim.engine import Link, SimNode
from ccnsim.forwarder import ForwardVerdict
from ccnsim.message import Packet, make_content_object
from ccnsim.name import Name
from ccnsim.units import US

if TYPE_CHECKING:
    from ccnsim.portal import MessagePortal

log = logging.getLogger(__name__)


class ConnectionKind(Enum):
    DEVICE = "device"
    L4 = "l4"
    BROADCAST = "broadcast"


@dataclass
class Connection:
    conn_id: int
    kind: ConnectionKind
    interface: int | None = None
    peer: str | None = None
    portal: Any = None


@dataclass
class L3Interface:
    interface_id: int
    link: Link
    peer: str
    up: bool = True
    forwarding_enabled: bool = True


@dataclass
class _Dispatch:
    packet: Packet
    conn: int
    mode: str  # "device", "l4" or "direct"
    target: int | None = None


@dataclass
class Layer3:
    node: SimNode
    forwarder: Any
    codec: PacketCodec = field(default_factory=PacketCodec)
    dispatch_delay: int = 1 * US

    def __post_init__(self):
        self.sim = self.node.sim
        self.node_id = self.node.node_id
        self.counters = self.node.counters
        self.interfaces: dict[int, L3Interface] = {}
        self.connections: dict[int, Connection] = {}
        self.routing = None
        self.portal_factories: dict[str, type] = {}
        self._next_conn = 1
        self._device_conns: dict[tuple[int, str], int] = {}
        self._broadcast: dict[int, int] = {}
        self._prefixes: dict[Name, set[int]] = {}
        self._anchors: dict[Name, set[int]] = {}
        self.forwarder.is_local = self.is_local
        self.queue = DelayQueue(
            self.sim, 1, constant(self.dispatch_delay), self._dispatch, self.node_id
        )

    # --- interfaces and connections --------------------------------------

    def add_interface(self, link: Link) -> L3Interface:
        iface_id = len(self.interfaces)
        iface = L3Interface(iface_id, link, link.peer(self.node_id))
        self.interfaces[iface_id] = iface
        link.attach(self.node_id, lambda data, sender: self.receive_from_device(data, iface_id, sender))
        return iface

    def set_interface_up(self, iface_id: int, up: bool) -> None:
        self.interfaces[iface_id].up = up

    def _new_connection(self, kind: ConnectionKind, **kw) -> Connection:
        conn = Connection(self._next_conn, kind, **kw)
        self._next_conn += 1
        self.connections[conn.conn_id] = conn
        return conn

    def device_connection(self, iface_id: int, peer: str) -> int:
        key = (iface_id, peer)
        conn_id = self._device_conns.get(key)
        if conn_id is None:
            conn_id = self._new_connection(ConnectionKind.DEVICE, interface=iface_id, peer=peer).conn_id
            self._device_conns[key] = conn_id
        return conn_id

    def connection_for_peer(self, peer: str) -> int:
        for iface in self.interfaces.values():
            if iface.peer == peer:
                return self.device_connection(iface.interface_id, peer)
        raise KeyError(f"{self.node_id} has no interface toward {peer!r}")

    def broadcast_connection(self, iface_id: int) -> int:
        conn_id = self._broadcast.get(iface_id)
        if conn_id is None:
            if iface_id not in self.interfaces:
                raise KeyError(f"no interface {iface_id}")
            conn_id = self._new_connection(ConnectionKind.BROADCAST, interface=iface_id).conn_id
            self._broadcast[iface_id] = conn_id
        return conn_id

    def broadcast_connections(self) -> list[int]:
        return [self.broadcast_connection(i) for i in sorted(self.interfaces)]

    def add_portal(self, portal: MessagePortal) -> int:
        return self._new_connection(ConnectionKind.L4, portal=portal).conn_id

    def remove_portal(self, conn_id: int) -> None:
        for prefix in [p for p, conns in self._anchors.items() if conn_id in conns]:
            self.unregister_anchor(prefix, conn_id)
        for prefix in [p for p, conns in self._prefixes.items() if conn_id in conns]:
            self.unregister_prefix(prefix, conn_id)
        self.connections.pop(conn_id, None)

    def is_local(self, conn_id: int) -> bool:
        conn = self.connections.get(conn_id)
        return conn is not None and conn.kind is ConnectionKind.L4

    # --- prefixes and anchors --------------------------------------------

    def register_prefix(self, prefix: Name, conn_id: int) -> bool:
        conns = self._prefixes.setdefault(prefix, set())
        if conn_id not in conns:
            conns.add(conn_id)
            self.forwarder.add_route(prefix, conn_id)
        return True

    def unregister_prefix(self, prefix: Name, conn_id: int) -> bool:
        conns = self._prefixes.get(prefix)
        if not conns or conn_id not in conns:
            return False
        conns.discard(conn_id)
        if not conns:
            del self._prefixes[prefix]
        self.forwarder.remove_route(prefix, conn_id)
        return True

    def register_anchor(self, prefix: Name, conn_id: int) -> bool:
        self.register_prefix(prefix, conn_id)
        conns = self._anchors.setdefault(prefix, set())
        first = not conns
        conns.add(conn_id)
        if first:
            if self.routing is None:
                log.warning("%s: anchor %s registered with no routing protocol", self.node_id, prefix)
            else:
                self.routing.anchor_added(prefix)
        return True

    def unregister_anchor(self, prefix: Name, conn_id: int) -> bool:
        conns = self._anchors.get(prefix)
        if not conns or conn_id not in conns:
            return False
        conns.discard(conn_id)
        if not conns:
            del self._anchors[prefix]
            if self.routing is not None:
                self.routing.anchor_removed(prefix)
        return self.unregister_prefix(prefix, conn_id)

    def anchored_prefixes(self) -> list[Name]:
        return sorted(self._anchors)

    # --- packet flow -------------------------------------------------------

    def receive_from_device(self, data: bytes, iface_id: int, peer: str) -> None:
        iface = self.interfaces[iface_id]
        if not iface.up:
            self.counters["downInterfaceDrops"] += 1
            return
        self.counters["packetsReceived"] += 1
        try:
            packet = self.codec.decode(data)
        except DecodeError as exc:
            self.counters["malformedPackets"] += 1
            log.debug("%s: malformed packet from %s: %s", self.node_id, peer, exc)
            return
        conn_id = self.device_connection(iface_id, peer)
        self.queue.push(_Dispatch(packet, conn_id, "device"))

    def send_from_portal(self, packet: Packet, conn_id: int) -> None:
        self.queue.push(_Dispatch(packet, conn_id, "l4"))

    def send_direct(self, packet: Packet, from_conn: int, target: int) -> bool:
        if target not in self.connections:
            self.counters["unknownConnection"] += 1
            return False
        self.queue.push(_Dispatch(packet, from_conn, "direct", target))
        return True

    def _dispatch(self, item: _Dispatch) -> None:
        if item.mode == "device":
            self.forwarder.route_input(item.packet, item.conn, self._on_verdict)
        elif item.mode == "l4":
            self.forwarder.route_output(item.packet, item.conn, self._on_verdict)
        else:
            self.transmit(item.packet, item.target, item.conn)

    def _on_verdict(self, packet: Packet, ingress: int, verdict: ForwardVerdict) -> None:
        if verdict.local_delivery is not None:
            self.transmit(make_content_object(verdict.local_delivery.name,
                                              verdict.local_delivery.payload), ingress, ingress)
        encoded = None
        for conn_id in sorted(verdict.egress):
            conn = self.connections.get(conn_id)
            if conn is None:
                continue
            if conn.kind is ConnectionKind.L4:
                conn.portal.deliver(packet, ingress)
            else:
                if encoded is None:
                    encoded = self.codec.encode(packet)
                self._send_on_device(conn, encoded)

    def transmit(self, packet: Packet, conn_id: int, ingress: int) -> None:
        conn = self.connections.get(conn_id)
        if conn is None:
            self.counters["unknownConnection"] += 1
            return
        if conn.kind is ConnectionKind.L4:
            conn.portal.deliver(packet, ingress)
        else:
            self._send_on_device(conn, self.codec.encode(packet))

    def _send_on_device(self, conn: Connection, data: bytes) -> None:
        iface = self.interfaces[conn.interface]
        if not iface.up:
            self.counters["downInterfaceDrops"] += 1
            return
        self.counters["packetsSent"] += 1
        iface.link.send(self.node_id, data)
