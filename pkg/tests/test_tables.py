import random

from hypothesis import given, strategies as st

from ccnsim.message import make_content_object, make_interest
from ccnsim.name import Name, NameSegment, parse_uri
from ccnsim.tables import (
    LruContentStore,
    PitVerdict,
    StandardFib,
    StandardPit,
    TableConfig,
    cs_delay,
    fib_delay,
    pit_delay,
)
from ccnsim.units import S, US

from oracles import LruOracle, longest_match

A = parse_uri("ccnx:/name=a")


def interest(uri):
    return make_interest(parse_uri(uri)).message


def obj(uri, payload=b""):
    return make_content_object(parse_uri(uri), payload).message


def test_pit_verdicts():
    pit = StandardPit()
    assert pit.receive_interest(interest("ccnx:/name=a"), 3, 0) is PitVerdict.FORWARD
    assert pit.receive_interest(interest("ccnx:/name=a"), 5, 1) is PitVerdict.AGGREGATE
    assert pit.entry(A).ingress == {3, 5}
    assert pit.receive_interest(interest("ccnx:/name=a"), 3, 2) is PitVerdict.DUPLICATE


def test_pit_satisfy():
    pit = StandardPit()
    pit.receive_interest(interest("ccnx:/name=a"), 3, 0)
    pit.receive_interest(interest("ccnx:/name=a"), 5, 0)
    assert pit.satisfy(obj("ccnx:/name=a"), 1) == {3, 5}
    assert A not in pit
    assert pit.satisfy(obj("ccnx:/name=a"), 2) == set()


def test_pit_eager_expiry():
    pit = StandardPit(lifetime=4 * S)
    pit.receive_interest(interest("ccnx:/name=a"), 3, 0)
    assert pit.satisfy(obj("ccnx:/name=a"), 4 * S) == set()


def test_pit_duplicate_refreshes_lifetime():
    pit = StandardPit(lifetime=4 * S)
    pit.receive_interest(interest("ccnx:/name=a"), 3, 0)
    pit.receive_interest(interest("ccnx:/name=a"), 3, 3 * S)
    assert pit.satisfy(obj("ccnx:/name=a"), 5 * S) == {3}


def test_pit_one_entry_per_name():
    pit, rng = StandardPit(), random.Random(2)
    for _ in range(300):
        pit.receive_interest(interest(f"ccnx:/name=n{rng.randrange(10)}"), rng.randrange(4), 0)
    assert len(pit) <= 10


def test_fib_add_remove():
    fib = StandardFib()
    fib.add_route(A, 1)
    fib.add_route(A, 2)
    assert fib.next_hops(A) == {1, 2}
    fib.remove_route(A, 1)
    assert fib.next_hops(A) == {2}
    fib.remove_route(A, 2)
    assert len(fib) == 0
    fib.remove_route(parse_uri("ccnx:/name=b"), 9)
    assert len(fib) == 0


def test_fib_lookup_examples():
    fib = StandardFib()
    fib.add_route(parse_uri("ccnx:/name=a"), 1)
    fib.add_route(parse_uri("ccnx:/name=a/name=b"), 2)
    r = fib.lookup(parse_uri("ccnx:/name=a/name=b/name=c"))
    assert (r.next_hops, r.lookup_count) == ({2}, 2)
    r = StandardFib().lookup(parse_uri("ccnx:/name=x"))
    assert (r.next_hops, r.lookup_count) == (set(), 2)
    fib = StandardFib()
    fib.add_route(Name(()), 7)
    assert fib.lookup(parse_uri("ccnx:/name=anything")).next_hops == {7}


def _random_name(rng, max_len=5):
    return Name(tuple(NameSegment(1, bytes([97 + rng.randrange(3)])) for _ in range(rng.randint(0, max_len))))


def test_fib_matches_brute_force():
    rng = random.Random(7)
    for size in (1, 10, 100, 1000):
        fib, routes = StandardFib(), {}
        for _ in range(size):
            p, c = _random_name(rng, 6), rng.randrange(8)
            fib.add_route(p, c)
            routes.setdefault(p, set()).add(c)
        for _ in range(200):
            name = _random_name(rng, 7)
            r = fib.lookup(name)
            assert (r.next_hops, r.lookup_count) == longest_match(routes, name)


def test_fib_lookup_count_nonincreasing_with_match_length():
    name = parse_uri("ccnx:/name=a/name=b/name=c/name=d")
    counts = []
    for k in range(len(name) + 1):
        fib = StandardFib()
        fib.add_route(name.prefix(k), 1)
        counts.append(fib.lookup(name).lookup_count)
    assert counts == sorted(counts, reverse=True)


def test_cs_basic():
    cs = LruContentStore(2)
    assert cs.lookup(interest("ccnx:/name=a")) is None
    cs.insert(obj("ccnx:/name=a", b"1"))
    cs.insert(obj("ccnx:/name=a", b"2"))
    assert len(cs) == 1 and cs.lookup(interest("ccnx:/name=a")).payload == b"2"


def test_cs_lru_example():
    cs = LruContentStore(2)
    cs.insert(obj("ccnx:/name=a"))
    cs.insert(obj("ccnx:/name=b"))
    cs.lookup(interest("ccnx:/name=a"))
    cs.insert(obj("ccnx:/name=c"))
    assert cs.lookup(interest("ccnx:/name=b")) is None
    assert [n.to_uri() for n in cs.names()] == ["ccnx:/name=a", "ccnx:/name=c"]


def test_cs_capacity_zero():
    cs = LruContentStore(0)
    cs.insert(obj("ccnx:/name=a"))
    assert len(cs) == 0


@given(st.integers(0, 5), st.lists(st.tuples(st.booleans(), st.integers(0, 8)), max_size=80))
def test_cs_matches_lru_oracle(capacity, ops):
    cs, oracle = LruContentStore(capacity), LruOracle(capacity)
    for is_insert, k in ops:
        uri = f"ccnx:/name=k{k}"
        if is_insert:
            cs.insert(obj(uri))
            oracle.insert(parse_uri(uri))
        else:
            assert (cs.lookup(interest(uri)) is not None) == oracle.touch(parse_uri(uri))
        assert cs.names() == oracle.order


def test_cs_full_hit_ratio_when_catalog_fits():
    cs = LruContentStore(50)
    for i in range(50):
        cs.insert(obj(f"ccnx:/name=o{i}"))
    assert all(cs.lookup(interest(f"ccnx:/name=o{i}")) for i in range(50))


def test_delay_defaults():
    cfg = TableConfig()
    assert pit_delay(cfg, parse_uri("ccnx:/name=prefix")) == 1 * US + 500
    assert fib_delay(cfg, 3) == 4 * US
    assert cs_delay(cfg, None) == 1 * US
    assert cs_delay(cfg, obj("ccnx:/name=a", bytes(124))) == 1 * US + 1240
