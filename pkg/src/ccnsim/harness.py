"""Topology and scenario loading, experiment runs and CSV output.

Topology files are line oriented::

    # comment
    node a
    node b
    link a b 1ms 10Mbps [loss]

Scenario configs are flat ``key = value`` files with namespaced keys, for
example ``nfp.helloInterval = 1s``. See :data:`CONFIG_KEYS`.
"""

from __future__ import annotations

import csv
import io
import logging
import statistics
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable

from ccnsim.apps import Consumer, ConsumerConfig, ContentRepository, Producer
from ccnsim.engine import Network, SimulationError, stream_seed, substream
from ccnsim.metrics import COMPLEXITY, count_complexity
from ccnsim.name import Name, NameParseError
from ccnsim.nfp import NfpConfig
from ccnsim.stack import StackHelper
from ccnsim.tables import TableConfig
from ccnsim.units import S, US, parse_duration, parse_rate

__all__ = [
    "ConfigError",
    "ExperimentReport",
    "ScenarioConfig",
    "SimulationReport",
    "Topology",
    "TopologyError",
    "build_scenario",
    "count_complexity",
    "install_static_route",
    "load_config",
    "load_topology",
    "run_experiment",
    "run_simulation",
]

log = logging.getLogger(__name__)

CSV_COLUMNS = ["seed", "phase", "advsSent", "withdrawsSent", "hellosSent",
               "complexity", "packets", "drops", "csHits"]
_METRIC_KEYS = {
    "advsSent": "advsSent",
    "withdrawsSent": "withdrawsSent",
    "hellosSent": "hellosSent",
    "complexity": COMPLEXITY,
    "packets": "packetsSent",
    "drops": "drops",
    "csHits": "csHits",
}


class TopologyError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


class ConfigError(ValueError):
    pass


@dataclass
class TopologyLink:
    a: str
    b: str
    delay: int
    bandwidth: int
    loss: float = 0.0


@dataclass
class Topology:
    nodes: list[str] = field(default_factory=list)
    links: list[TopologyLink] = field(default_factory=list)

    def adjacency(self) -> dict[str, set[str]]:
        adj = {n: set() for n in self.nodes}
        for link in self.links:
            adj[link.a].add(link.b)
            adj[link.b].add(link.a)
        return adj

    def is_connected(self) -> bool:
        if not self.nodes:
            return True
        adj = self.adjacency()
        seen = {self.nodes[0]}
        stack = [self.nodes[0]]
        while stack:
            for nxt in adj[stack.pop()]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return len(seen) == len(self.nodes)

    def to_text(self) -> str:
        lines = [f"node {n}" for n in self.nodes]
        for l in self.links:
            line = f"link {l.a} {l.b} {l.delay}ns {l.bandwidth}bps"
            if l.loss:
                line += f" {l.loss}"
            lines.append(line)
        return "\n".join(lines) + "\n"


def parse_topology(text: str) -> Topology:
    topo = Topology()
    known: set[str] = set()
    pairs: set[frozenset] = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        words = line.split()
        kind = words[0]
        if kind == "node":
            if len(words) != 2:
                raise TopologyError("expected 'node <id>'", lineno)
            if words[1] in known:
                raise TopologyError(f"duplicate node {words[1]!r}", lineno)
            known.add(words[1])
            topo.nodes.append(words[1])
        elif kind == "link":
            if len(words) not in (5, 6):
                raise TopologyError("expected 'link <a> <b> <delay> <bandwidth> [loss]'", lineno)
            a, b = words[1], words[2]
            for n in (a, b):
                if n not in known:
                    raise TopologyError(f"unknown node {n!r}", lineno)
            if a == b:
                raise TopologyError(f"self-loop on {a!r}", lineno)
            pair = frozenset((a, b))
            if pair in pairs:
                raise TopologyError(f"duplicate link {a}-{b}", lineno)
            pairs.add(pair)
            try:
                delay = parse_duration(words[3])
                bandwidth = parse_rate(words[4])
                loss = float(words[5]) if len(words) == 6 else 0.0
            except ValueError as exc:
                raise TopologyError(str(exc), lineno) from None
            if not 0.0 <= loss <= 1.0:
                raise TopologyError(f"loss {loss} outside [0, 1]", lineno)
            topo.links.append(TopologyLink(a, b, delay, bandwidth, loss))
        else:
            raise TopologyError(f"unknown directive {kind!r}", lineno)
    if not topo.nodes:
        log.warning("empty topology")
    elif not topo.is_connected():
        log.warning("topology is disconnected")
    return topo


def load_topology(path: str | Path) -> Topology:
    return parse_topology(Path(path).read_text())


@dataclass
class ScenarioConfig:
    seed: int = 1
    stop_time: int = 50 * S
    repetitions: int = 1
    nfp_enabled: bool = True
    nfp: NfpConfig = field(default_factory=NfpConfig)
    tables: TableConfig = field(default_factory=TableConfig)
    l3_delay: int = 1 * US
    payload_size: int = 124
    object_count: int = 1000
    anchor_count: int = 0
    prefix_count: int = 0
    replicas: int = 1
    producers: dict[str, list[str]] = field(default_factory=dict)
    consumer_count: int = 0
    consumers: list[tuple[str, str]] = field(default_factory=list)
    consumer: ConsumerConfig = field(default_factory=ConsumerConfig)
    static_routes: list[tuple[str, str, str]] = field(default_factory=list)
    failures: list[tuple[int, str, str]] = field(default_factory=list)
    random_failures: list[int] = field(default_factory=list)
    restores: list[tuple[int, str, str]] = field(default_factory=list)

    def validate(self) -> None:
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        durations = [self.stop_time, self.l3_delay, self.nfp.hello_interval,
                     self.nfp.advertisement_interval, self.nfp.jitter,
                     *(t for t, _, _ in self.failures), *self.random_failures,
                     *(t for t, _, _ in self.restores)]
        if any(d < 0 for d in durations):
            raise ConfigError("durations must be >= 0")
        if self.anchor_count and self.replicas > self.anchor_count:
            raise ConfigError("replicas cannot exceed anchors.count")
        if self.prefix_count and not self.anchor_count:
            raise ConfigError("anchors.prefixes needs anchors.count")


def _bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _set_nfp(attr: str, conv: Callable) -> Callable:
    return lambda cfg, v: setattr(cfg.nfp, attr, conv(v))


def _set_tables(attr: str, conv: Callable) -> Callable:
    return lambda cfg, v: setattr(cfg.tables, attr, conv(v))


def _set_consumer(attr: str) -> Callable:
    return lambda cfg, v: setattr(cfg, "consumer", replace(cfg.consumer, **{attr: parse_duration(v)}))


def _set(attr: str, conv: Callable) -> Callable:
    return lambda cfg, v: setattr(cfg, attr, conv(v))


CONFIG_KEYS: dict[str, Callable[[ScenarioConfig, str], None]] = {
    "seed": _set("seed", int),
    "stopTime": _set("stop_time", parse_duration),
    "repetitions": _set("repetitions", int),
    "nfp.enabled": _set("nfp_enabled", _bool),
    "nfp.helloInterval": _set_nfp("hello_interval", parse_duration),
    "nfp.advertisementInterval": _set_nfp("advertisement_interval", parse_duration),
    "nfp.neighborTimeout": _set_nfp("neighbor_timeout", parse_duration),
    "nfp.routeTimeoutFactor": _set_nfp("route_timeout_factor", int),
    "nfp.jitter": _set_nfp("jitter", parse_duration),
    "nfp.linkCost": _set_nfp("link_cost", int),
    "pit.lifetime": _set_tables("pit_lifetime", parse_duration),
    "cs.capacity": _set_tables("cs_capacity", int),
    "delay.l3": _set("l3_delay", parse_duration),
    "delay.pitBase": _set_tables("pit_delay_base", parse_duration),
    "delay.pitPerByte": _set_tables("pit_delay_per_byte", parse_duration),
    "delay.fibBase": _set_tables("fib_delay_base", parse_duration),
    "delay.fibPerProbe": _set_tables("fib_delay_per_probe", parse_duration),
    "delay.csMiss": _set_tables("cs_miss_delay", parse_duration),
    "delay.csHitBase": _set_tables("cs_hit_base", parse_duration),
    "delay.csHitPerByte": _set_tables("cs_hit_per_byte", parse_duration),
    "repo.payloadSize": _set("payload_size", int),
    "repo.objectCount": _set("object_count", int),
    "anchors.count": _set("anchor_count", int),
    "anchors.prefixes": _set("prefix_count", int),
    "anchors.replicas": _set("replicas", int),
    "consumers.count": _set("consumer_count", int),
    "consumers.interval": _set_consumer("request_interval"),
    "consumers.start": _set_consumer("start_time"),
    "consumers.stop": _set_consumer("stop_time"),
    "consumers.timeout": _set_consumer("timeout"),
}


def _apply_indexed(cfg: ScenarioConfig, key: str, value: str) -> bool:
    group, _, suffix = key.partition(".")
    words = value.split()
    if group == "producer" and suffix:
        cfg.producers.setdefault(suffix, []).extend(words)
    elif group == "consumer" and suffix:
        cfg.consumers.extend((suffix, uri) for uri in words)
    elif group == "route" and suffix:
        if len(words) != 3:
            raise ValueError("expected '<node> <prefix> <neighbor>'")
        cfg.static_routes.append((words[0], words[1], words[2]))
    elif group in ("failure", "restore") and suffix:
        if group == "failure" and suffix.startswith("random"):
            cfg.random_failures.append(parse_duration(value))
            return True
        if len(words) != 3:
            raise ValueError("expected '<time> <a> <b>'")
        entry = (parse_duration(words[0]), words[1], words[2])
        (cfg.failures if group == "failure" else cfg.restores).append(entry)
    else:
        return False
    return True


def parse_config(text: str, base: ScenarioConfig | None = None) -> ScenarioConfig:
    cfg = base or ScenarioConfig()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        try:
            setter = CONFIG_KEYS.get(key)
            if setter is not None:
                setter(cfg, value)
            elif not _apply_indexed(cfg, key, value):
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
        except ConfigError:
            raise
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"line {lineno}: {key}: {exc}") from None
    cfg.validate()
    return cfg


def load_config(path: str | Path) -> ScenarioConfig:
    return parse_config(Path(path).read_text())


@dataclass
class Scenario:
    network: Network
    config: ScenarioConfig
    repos: dict[Name, ContentRepository]
    producers: list[Producer]
    consumers: list[Consumer]
    failed_links: list[tuple[int, str, str]]


def _name(uri: str) -> Name:
    try:
        return Name.parse(uri)
    except NameParseError as exc:
        raise ConfigError(str(exc)) from None


def install_static_route(scenario: Scenario | Network, node_id: str, prefix: Name | str,
                         neighbor_id: str) -> None:
    """Point ``prefix`` on ``node_id`` at the connection facing ``neighbor_id``."""
    net = scenario.network if isinstance(scenario, Scenario) else scenario
    if isinstance(prefix, str):
        prefix = _name(prefix)
    node = net.nodes.get(node_id)
    if node is None or neighbor_id not in net.nodes:
        raise ConfigError(f"unknown node in static route {node_id} -> {neighbor_id}")
    try:
        conn = node.l3.connection_for_peer(neighbor_id)
    except KeyError:
        raise ConfigError(f"{node_id} and {neighbor_id} are not adjacent") from None
    node.forwarder.add_route(prefix, conn)


def build_scenario(topology: Topology, config: ScenarioConfig, seed: int | None = None,
                   trace: bool = False, log_file=None) -> Scenario:
    seed = config.seed if seed is None else seed
    net = Network(seed=seed, trace=trace, log_file=log_file)
    for node_id in topology.nodes:
        net.add_node(node_id)
    for link in topology.links:
        net.add_link(link.a, link.b, link.delay, link.bandwidth, link.loss)
    helper = StackHelper(
        tables=config.tables,
        nfp=config.nfp if config.nfp_enabled else None,
        l3_delay=config.l3_delay,
    )
    helper.install_all(net)
    rng = substream(seed, "scenario")
    nodes = sorted(net.nodes)

    placements: dict[str, list[str]] = {n: list(p) for n, p in config.producers.items()}
    random_prefixes: list[str] = []
    if config.anchor_count:
        if config.anchor_count > len(nodes):
            raise ConfigError("anchors.count exceeds node count")
        anchors = sorted(rng.sample(nodes, config.anchor_count))
        for i in range(config.prefix_count):
            uri = f"ccnx:/name=prefix{i}"
            random_prefixes.append(uri)
            for node_id in sorted(rng.sample(anchors, config.replicas)):
                placements.setdefault(node_id, []).append(uri)

    repos: dict[Name, ContentRepository] = {}

    def repo_for(uri: str) -> ContentRepository:
        prefix = _name(uri)
        if prefix not in repos:
            repos[prefix] = ContentRepository(prefix, config.payload_size, config.object_count)
        return repos[prefix]

    producers = []
    for node_id in sorted(placements):
        if node_id not in net.nodes:
            raise ConfigError(f"producer on unknown node {node_id!r}")
        for uri in placements[node_id]:
            producers.append(Producer(net.nodes[node_id], repo_for(uri)))

    consumer_specs = list(config.consumers)
    if config.consumer_count:
        choices = random_prefixes or sorted({u for p in placements.values() for u in p})
        if not choices:
            raise ConfigError("consumers.count needs at least one producer prefix")
        for _ in range(config.consumer_count):
            consumer_specs.append((rng.choice(nodes), rng.choice(choices)))
    consumers = []
    for i, (node_id, uri) in enumerate(consumer_specs):
        if node_id not in net.nodes:
            raise ConfigError(f"consumer on unknown node {node_id!r}")
        crng = substream(seed, f"consumer:{i}:{node_id}")
        consumers.append(Consumer(net.nodes[node_id], repo_for(uri), config.consumer, crng))

    for node_id, uri, neighbor in config.static_routes:
        install_static_route(net, node_id, uri, neighbor)

    failed = []
    for at, a, b in config.failures:
        try:
            net.fail_link((a, b), at)
        except KeyError as exc:
            raise ConfigError(str(exc)) from None
        failed.append((at, a, b))
    for at in config.random_failures:
        if not net.links:
            raise ConfigError("random failure on a topology without links")
        link = net.links[rng.randrange(len(net.links))]
        net.fail_link(link, at)
        failed.append((at, link.a, link.b))
    for at, a, b in config.restores:
        try:
            net.restore_link((a, b), at)
        except KeyError as exc:
            raise ConfigError(str(exc)) from None
    return Scenario(net, config, repos, producers, consumers, failed)


@dataclass
class PhaseMetrics:
    phase: str
    start: int
    end: int
    metrics: dict[str, int]


@dataclass
class SimulationReport:
    seed: int
    end_time: int
    events: int
    event_log_hash: str
    totals: dict[str, int]
    per_node: dict[str, dict[str, int]]
    links: dict[str, int]
    consumers: dict[str, int]
    latency_samples: list[int]
    phases: list[PhaseMetrics]
    neighbor_events: list[tuple[int, str, str, str]]
    failed_links: list[tuple[int, str, str]]


def _totals(net: Network) -> Counter:
    total = Counter()
    for node in net.nodes.values():
        total.update(node.counters)
    return total


def _phase_metrics(counters: Counter) -> dict[str, int]:
    return {col: counters.get(key, 0) for col, key in _METRIC_KEYS.items()}


def run_simulation(topology: Topology, config: ScenarioConfig, seed: int | None = None,
                   trace: bool = False, log_file=None) -> SimulationReport:
    seed = config.seed if seed is None else seed
    scenario = build_scenario(topology, config, seed, trace=trace, log_file=log_file)
    net = scenario.network
    stop = config.stop_time

    boundaries = sorted({t for t, _, _ in scenario.failed_links if 0 < t < stop})
    # Phases are half-open windows [start, end): stop just short of each
    # boundary so events stamped exactly at it fall into the next phase.
    snapshots: dict[int, Counter] = {0: Counter()}
    for t in boundaries + [stop]:
        net.run(t - 1)
        snapshots[t] = _totals(net)

    edges = [0] + boundaries + [stop]
    phases = []
    for i, (start, end) in enumerate(zip(edges, edges[1:])):
        delta = snapshots[end] - snapshots[start]
        label = "pre" if i == 0 else f"post{i}" if len(boundaries) > 1 else "post"
        if not boundaries:
            label = "all"
        phases.append(PhaseMetrics(label, start, end, _phase_metrics(delta)))

    names = {}
    from ccnsim.nfp import router_name_for

    for node_id in net.nodes:
        names[router_name_for(node_id)] = node_id
    neighbor_events = []
    for node_id in sorted(net.nodes):
        routing = net.nodes[node_id].routing
        if routing is None:
            continue
        for t, router, state in routing.neighbor_log:
            neighbor_events.append((t, node_id, names.get(router, router.hex()), state.value))

    links = Counter()
    for link in net.links:
        links["sent"] += link.stats.sent
        links["delivered"] += link.stats.delivered
        links["lost"] += link.stats.lost
        links["discarded"] += link.stats.discarded
    consumers = Counter()
    samples: list[int] = []
    for c in scenario.consumers:
        consumers["interestsSent"] += c.stats.interests_sent
        consumers["objectsReceived"] += c.stats.objects_received
        consumers["timeouts"] += c.stats.timeouts
        consumers["outstanding"] += c.outstanding
        samples.extend(c.stats.latency_samples)

    return SimulationReport(
        seed=seed,
        end_time=stop,
        events=net.sim.events_processed,
        event_log_hash=net.sim.event_log_hash,
        totals=dict(sorted(_totals(net).items())),
        per_node={n: dict(sorted(net.nodes[n].counters.items())) for n in sorted(net.nodes)},
        links=dict(links),
        consumers=dict(consumers),
        latency_samples=samples,
        phases=phases,
        neighbor_events=neighbor_events,
        failed_links=scenario.failed_links,
    )


@dataclass
class RepetitionResult:
    index: int
    seed: int
    report: SimulationReport | None = None
    error: str | None = None


@dataclass
class ExperimentReport:
    repetitions: list[RepetitionResult]

    @property
    def failed(self) -> list[RepetitionResult]:
        return [r for r in self.repetitions if r.report is None]

    def rows(self) -> list[dict[str, object]]:
        rows: list[dict[str, object]] = []
        for rep in self.repetitions:
            if rep.report is None:
                rows.append({"seed": rep.seed, "phase": "failed",
                             **{c: "" for c in CSV_COLUMNS[2:]}})
                continue
            for phase in rep.report.phases:
                rows.append({"seed": rep.seed, "phase": phase.phase, **phase.metrics})
        return rows

    def aggregates(self) -> list[dict[str, object]]:
        by_phase: dict[str, list[dict[str, int]]] = {}
        for rep in self.repetitions:
            if rep.report is None:
                continue
            for phase in rep.report.phases:
                by_phase.setdefault(phase.phase, []).append(phase.metrics)
        out = []
        for phase, samples in by_phase.items():
            mean = {c: statistics.fmean(s[c] for s in samples) for c in CSV_COLUMNS[2:]}
            std = {c: statistics.pstdev(s[c] for s in samples) if len(samples) > 1 else 0.0
                   for c in CSV_COLUMNS[2:]}
            out.append({"seed": "mean", "phase": phase, **{c: f"{v:.6g}" for c, v in mean.items()}})
            out.append({"seed": "stddev", "phase": phase, **{c: f"{v:.6g}" for c, v in std.items()}})
        return out

    def to_csv(self, deterministic: bool = False) -> str:
        buf = io.StringIO()
        if not deterministic:
            buf.write(f"# ccnsim results generated {datetime.now(timezone.utc).isoformat()}\n")
        writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(self.rows())
        writer.writerows(self.aggregates())
        return buf.getvalue()

    def write_csv(self, path: str | Path, deterministic: bool = False) -> Path:
        path = Path(path)
        path.write_text(self.to_csv(deterministic))
        return path


def repetition_seed(seed: int, index: int) -> int:
    return stream_seed(seed, f"rep:{index}") & 0xFFFFFFFF


def _run_one(args: tuple[int, int, Topology, ScenarioConfig]) -> RepetitionResult:
    index, seed, topology, config = args
    try:
        return RepetitionResult(index, seed, run_simulation(topology, config, seed))
    except SimulationError as exc:
        log.error("repetition %d (seed %d) aborted: %s", index, seed, exc)
        return RepetitionResult(index, seed, error=str(exc))


def run_experiment(topology: Topology, config: ScenarioConfig, workers: int = 1) -> ExperimentReport:
    config.validate()
    jobs = [(i, repetition_seed(config.seed, i), topology, config) for i in range(config.repetitions)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(job) for job in jobs]
    results.sort(key=lambda r: r.index)
    return ExperimentReport(results)
