import pytest
from hypothesis import given, strategies as st

from ccnsim.name import Name, NameParseError, NameSegment, byte_length, is_prefix_of, parse_uri


def seg(v):
    return NameSegment(1, v.encode() if isinstance(v, str) else v)


def test_parse_single_segment():
    assert parse_uri("ccnx:/name=prefix") == Name((seg("prefix"),))


def test_parse_empty_name():
    assert len(parse_uri("ccnx:/")) == 0


def test_parse_two_segments():
    assert parse_uri("ccnx:/name=a/name=b") == Name((seg("a"), seg("b")))


def test_unknown_keyword_reports_index():
    with pytest.raises(NameParseError) as info:
        parse_uri("ccnx:/name=a/chunk=3")
    assert info.value.segment_index == 1


def test_bad_scheme():
    with pytest.raises(NameParseError):
        parse_uri("http://x")


def test_percent_decoding_binary_segment():
    raw = bytes(range(32))
    name = Name((seg(raw),))
    assert parse_uri(name.to_uri()) == name


def test_prefix_examples():
    a, ab, ax = parse_uri("ccnx:/name=a"), parse_uri("ccnx:/name=a/name=b"), parse_uri("ccnx:/name=a/name=x")
    assert is_prefix_of(Name(()), parse_uri("ccnx:/name=anything"))
    assert is_prefix_of(a, ab)
    assert not is_prefix_of(ax, ab)


def test_byte_length_examples():
    assert byte_length(Name(())) == 0
    assert byte_length(parse_uri("ccnx:/name=prefix")) == 10
    assert byte_length(parse_uri("ccnx:/name=a/name=b")) == 10


values = st.binary(min_size=0, max_size=12)
names = st.lists(values, max_size=5).map(lambda vs: Name(tuple(seg(v) for v in vs)))


@given(names)
def test_uri_roundtrip(name):
    assert parse_uri(name.to_uri()) == name


@given(names, names)
def test_byte_length_additive(a, b):
    assert byte_length(a + b) == byte_length(a) + byte_length(b)


@given(names, names, names)
def test_prefix_order_properties(a, b, c):
    assert is_prefix_of(a, a)
    if is_prefix_of(a, b) and is_prefix_of(b, c):
        assert is_prefix_of(a, c)
    if is_prefix_of(a, b) and is_prefix_of(b, a):
        assert a == b
    assert is_prefix_of(a, a + b)


@given(names, names)
def test_ordering_is_total_and_consistent(a, b):
    assert (a < b) + (b < a) + (a == b) == 1
