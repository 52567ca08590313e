import random

import pytest

from ccnsim.delayq import DelayQueue, constant, linear, make_input_delay, make_processing_delay
from ccnsim.engine import SimulationError, Simulator
from ccnsim.units import US

from oracles import fifo_departures


class Item:
    def __init__(self, label, service=0):
        self.label = label
        self.service = service
        self.result = None


def run_queue(servers, arrivals):
    sim = Simulator()
    out = {}
    calls = []

    def service(item):
        calls.append((item.label, sim.now))
        return item.service

    q = DelayQueue(sim, servers, service, lambda it: out.__setitem__(it.label, sim.now))
    for i, (t, s) in enumerate(arrivals):
        sim.schedule_at(t, q.push, Item(i, s))
    sim.run(10**12)
    return [out[i] for i in range(len(arrivals))], calls


def test_single_server_constant():
    sim, out = Simulator(), []
    q = DelayQueue(sim, 1, constant(2 * US), lambda it: out.append((it, sim.now)))
    q.push("A")
    q.push("B")
    sim.run(10 * US)
    assert out == [("A", 2 * US), ("B", 4 * US)]


def test_two_servers_parallel():
    sim, out = Simulator(), []
    q = DelayQueue(sim, 2, constant(2 * US), lambda it: out.append((it, sim.now)))
    q.push("A")
    q.push("B")
    sim.run(10 * US)
    assert out == [("A", 2 * US), ("B", 2 * US)]


def test_zero_service_defers_to_later_event():
    sim, seen = Simulator(), []
    q = DelayQueue(sim, 1, constant(0), lambda it: seen.append(it))

    def act():
        q.push("x")
        seen.append("after push")

    sim.schedule(5, act)
    sim.run(5)
    assert seen == ["after push", "x"]


def test_service_time_evaluated_at_start():
    _, calls = run_queue(1, [(0, 10), (1, 10), (2, 10)])
    assert calls == [(0, 0), (1, 10), (2, 20)]


def test_negative_service_aborts():
    sim = Simulator()
    q = DelayQueue(sim, 1, constant(-1), lambda it: None)
    sim.schedule(0, q.push, "x")
    with pytest.raises(SimulationError):
        sim.run(5)


@pytest.mark.parametrize("servers", [1, 2, 4])
def test_matches_fifo_oracle(servers):
    rng = random.Random(servers)
    for _ in range(50):
        t, arrivals = 0, []
        for _ in range(rng.randint(1, 40)):
            t += rng.choice([0, 0, rng.randrange(20)])
            arrivals.append((t, rng.randrange(0, 30)))
        got, _ = run_queue(servers, arrivals)
        assert got == fifo_departures(arrivals, servers)


def test_busy_never_exceeds_servers():
    sim = Simulator()
    peaks = []
    q = DelayQueue(sim, 3, constant(7), lambda it: peaks.append(q.busy))
    for i in range(20):
        sim.schedule_at(i, q.push, i)
    sim.run(1000)
    assert max(peaks) <= 3 and q.served == 20


def test_delay_builders():
    assert make_input_delay(constant(2 * US))("x") == 2 * US
    assert linear(1000, 50, len)(b"abcd") == 1200
    item = Item("i")
    fn = make_processing_delay(lambda it: ({7}, 1000 + 1000 * 2))
    assert fn(item) == 3000 and item.result == {7}
