from __future__ import annotations

import pytest

from ccnsim.engine import Network
from ccnsim.harness import Topology, TopologyLink
from ccnsim.nfp import NfpConfig
from ccnsim.stack import StackHelper
from ccnsim.tables import TableConfig
from ccnsim.units import MS


def chain_topology(n: int, delay: int = 1 * MS, bandwidth: int = 10_000_000) -> Topology:
    nodes = [chr(ord("a") + i) for i in range(n)]
    topo = Topology(nodes=list(nodes))
    for x, y in zip(nodes, nodes[1:]):
        topo.links.append(TopologyLink(x, y, delay, bandwidth))
    return topo


def build_network(edges, nfp: NfpConfig | None = None, tables: TableConfig | None = None,
                  seed: int = 1, delay: int = 1 * MS, bandwidth: int = 10_000_000) -> Network:
    net = Network(seed=seed)
    for a, b in edges:
        for n in (a, b):
            if n not in net.nodes:
                net.add_node(n)
    for a, b in edges:
        net.add_link(a, b, delay, bandwidth)
    StackHelper(tables=tables or TableConfig(), nfp=nfp).install_all(net)
    return net


@pytest.fixture
def chain3():
    return build_network([("a", "b"), ("b", "c")], tables=TableConfig(cs_capacity=0))


def random_connected_edges(rng, n: int, extra: float = 0.5) -> list[tuple[str, str]]:
    """Random spanning tree plus about ``extra * n`` chords."""
    names = [f"n{i}" for i in range(n)]
    edges = set()
    for i in range(1, n):
        edges.add((names[rng.randrange(i)], names[i]))
    target = len(edges) + int(extra * n)
    attempts = 0
    while len(edges) < target and attempts < 10 * n:
        attempts += 1
        a, b = rng.sample(names, 2)
        if (a, b) not in edges and (b, a) not in edges:
            edges.add((a, b))
    return sorted(edges)


def adjacency(edges) -> dict[str, set[str]]:
    adj: dict[str, set[str]] = {}
    for a, b in edges:
        adj.setdefault(a, set()).add(b)
        adj.setdefault(b, set()).add(a)
    return adj


# --- acceptance reporting ------------------------------------------------------
# Each acceptance test records (passed, detail); one line per criterion is
# printed at the end of the session.

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def record():
    def _record(number: int, passed: bool, detail: str) -> bool:
        ACCEPTANCE[number] = (passed, detail)
        print(f"criterion {number}: {'PASS' if passed else 'FAIL'} {detail}")
        return passed

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
