"""Layer-4 message portal: 1-for-1 Interest/Content Object passing."""

from __future__ import annotations

from collections import deque
from typing import Callable

from ccnsim.engine import SimNode
from ccnsim.message import Packet
from ccnsim.name import Name


class PortalError(RuntimeError):
    pass


class MessagePortal:
    """Send/receive endpoint bound to one layer-4 connection."""

    def __init__(self, node: SimNode):
        if node.l3 is None:
            raise PortalError(f"no CCNx stack installed on {node.node_id}")
        self.node = node
        self.l3 = node.l3
        self.queue: deque[tuple[Packet, int]] = deque()
        self.callback: Callable[[MessagePortal], None] | None = None
        self.is_open = True
        self.conn_id = self.l3.add_portal(self)
        self.delivered = 0

    def send(self, packet: Packet) -> bool:
        if not self.is_open:
            return False
        self.l3.send_from_portal(packet, self.conn_id)
        return True

    def send_to(self, packet: Packet, conn_id: int) -> bool:
        """Bypass the FIB and transmit on one connection."""
        if not self.is_open:
            return False
        return self.l3.send_direct(packet, self.conn_id, conn_id)

    def recv(self) -> Packet | None:
        item = self.recv_from()
        return item[0] if item is not None else None

    def recv_from(self) -> tuple[Packet, int] | None:
        return self.queue.popleft() if self.queue else None

    def set_recv_callback(self, fn: Callable[[MessagePortal], None] | None) -> None:
        self.callback = fn

    def deliver(self, packet: Packet, ingress: int) -> None:
        if not self.is_open:
            return
        self.queue.append((packet, ingress))
        self.delivered += 1
        if self.callback is not None:
            self.node.sim.schedule(0, self._notify, node=self.node.node_id)

    def _notify(self) -> None:
        if self.callback is not None:
            self.callback(self)

    def register_prefix(self, prefix: Name) -> bool:
        return self.is_open and self.l3.register_prefix(prefix, self.conn_id)

    def unregister_prefix(self, prefix: Name) -> bool:
        return self.l3.unregister_prefix(prefix, self.conn_id)

    def register_anchor(self, prefix: Name) -> bool:
        return self.is_open and self.l3.register_anchor(prefix, self.conn_id)

    def unregister_anchor(self, prefix: Name) -> bool:
        return self.l3.unregister_anchor(prefix, self.conn_id)

    def close(self) -> None:
        if self.is_open:
            self.is_open = False
            self.l3.remove_portal(self.conn_id)


PORTAL_TYPES: dict[str, type] = {"message": MessagePortal}


def create_portal(node: SimNode, portal_type: str = "message") -> MessagePortal:
    factories = node.l3.portal_factories if node.l3 is not None else PORTAL_TYPES
    cls = factories.get(portal_type)
    if cls is None:
        raise PortalError(f"unknown portal type {portal_type!r}")
    return cls(node)
