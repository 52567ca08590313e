"""Install a CCNx stack on simulated nodes.

Components are chosen at construction time through factories, so a
scenario can swap the forwarder, the tables or the routing protocol
without touching the rest of the stack.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from ccnsim.codec import PacketCodec
from ccnsim.engine import Network, SimNode
from ccnsim.forwarder import StandardForwarder
from ccnsim.layer3 import Layer3
from ccnsim.nfp import NfpConfig, NfpRouting
from ccnsim.portal import PORTAL_TYPES
from ccnsim.tables import TableConfig, TableFactories
from ccnsim.units import US


def _standard_forwarder(node: SimNode, tables: TableConfig, factories: TableFactories):
    return StandardForwarder(node.sim, tables, node.counters, factories, node=node.node_id)


def _nfp(node: SimNode, config: NfpConfig) -> NfpRouting:
    return NfpRouting(node, config)


@dataclass
class StackHelper:
    tables: TableConfig = field(default_factory=TableConfig)
    table_factories: TableFactories = field(default_factory=TableFactories)
    forwarder_factory: Callable = _standard_forwarder
    nfp: NfpConfig | None = None
    routing_factory: Callable = _nfp
    codec: PacketCodec = field(default_factory=PacketCodec)
    l3_delay: int = 1 * US
    portal_types: dict[str, type] = field(default_factory=lambda: dict(PORTAL_TYPES))

    def install(self, node: SimNode) -> SimNode:
        if node.l3 is not None:
            raise ValueError(f"stack already installed on {node.node_id}")
        node.forwarder = self.forwarder_factory(node, self.tables, self.table_factories)
        node.l3 = Layer3(node, node.forwarder, self.codec, self.l3_delay)
        node.l3.portal_factories = dict(self.portal_types)
        for link in node.links:
            node.l3.add_interface(link)
        if self.nfp is not None:
            node.routing = self.routing_factory(node, self.nfp)
            node.l3.routing = node.routing
            node.routing.start()
        return node

    def install_all(self, network: Network) -> None:
        for node_id in sorted(network.nodes):
            self.install(network.nodes[node_id])
