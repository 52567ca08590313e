"""CCNx names: ordered, typed segments with URI text form.

Only the ``name=`` segment keyword (segment type 1) is supported. Segment
values are raw bytes; the URI form percent-encodes anything outside the
printable ASCII range as well as ``/``, ``%`` and ``=``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable
from urllib.parse import unquote_to_bytes

SCHEME = "ccnx:/"
SEGMENT_NAME = 1
SEGMENT_HEADER = 4
MAX_SEGMENT_VALUE = 0xFFFF

_KEYWORDS = {"name": SEGMENT_NAME}
_TYPE_KEYWORDS = {v: k for k, v in _KEYWORDS.items()}
_ESCAPED = frozenset(b"/%=")


class NameParseError(ValueError):
    """A URI could not be parsed into a Name."""

    def __init__(self, message: str, segment_index: int | None = None):
        super().__init__(message)
        self.segment_index = segment_index


@dataclass(frozen=True, order=True, slots=True)
class NameSegment:
    type: int
    value: bytes

    def __post_init__(self):
        if self.type not in _TYPE_KEYWORDS:
            raise ValueError(f"unregistered segment type {self.type}")
        if len(self.value) > MAX_SEGMENT_VALUE:
            raise ValueError(f"segment value too long ({len(self.value)} bytes)")

    @classmethod
    def of(cls, value: bytes | str) -> NameSegment:
        if isinstance(value, str):
            value = value.encode()
        return cls(SEGMENT_NAME, value)

    def to_uri(self) -> str:
        encoded = "".join(
            chr(b) if 0x21 <= b <= 0x7E and b not in _ESCAPED else f"%{b:02X}"
            for b in self.value
        )
        return f"{_TYPE_KEYWORDS[self.type]}={encoded}"


@dataclass(frozen=True, order=True, slots=True)
class Name:
    """An immutable CCNx name.

    Ordering is lexicographic over ``(type, value)`` pairs, which gives the
    deterministic iteration order used by every table.
    """

    segments: tuple[NameSegment, ...] = ()

    @classmethod
    def parse(cls, uri: str) -> Name:
        if not uri.startswith(SCHEME):
            raise NameParseError(f"expected scheme {SCHEME!r}: {uri!r}")
        rest = uri[len(SCHEME):]
        if not rest:
            return cls()
        segments = []
        for index, part in enumerate(rest.split("/")):
            if not part:
                raise NameParseError(f"empty segment at index {index} in {uri!r}", index)
            keyword, sep, token = part.partition("=")
            if not sep:
                keyword, token = "name", part
            seg_type = _KEYWORDS.get(keyword)
            if seg_type is None:
                raise NameParseError(
                    f"unknown segment keyword {keyword!r} at index {index} in {uri!r}", index
                )
            try:
                value = unquote_to_bytes(token)
                segments.append(NameSegment(seg_type, value))
            except ValueError as exc:
                raise NameParseError(f"bad segment at index {index}: {exc}", index) from exc
        return cls(tuple(segments))

    @classmethod
    def from_values(cls, values: Iterable[bytes | str]) -> Name:
        return cls(tuple(NameSegment.of(v) for v in values))

    def to_uri(self) -> str:
        return SCHEME + "/".join(seg.to_uri() for seg in self.segments)

    def __str__(self) -> str:
        return self.to_uri()

    def __len__(self) -> int:
        return len(self.segments)

    def __bool__(self) -> bool:
        return bool(self.segments)

    def is_prefix_of(self, other: Name) -> bool:
        n = len(self.segments)
        return n <= len(other.segments) and other.segments[:n] == self.segments

    def prefix(self, length: int) -> Name:
        return Name(self.segments[:length])

    def append(self, value: bytes | str) -> Name:
        return Name(self.segments + (NameSegment.of(value),))

    def __add__(self, other: Name) -> Name:
        return Name(self.segments + other.segments)

    def byte_length(self) -> int:
        """Encoded length of the name TLV body."""
        return sum(SEGMENT_HEADER + len(seg.value) for seg in self.segments)


def parse_uri(uri: str) -> Name:
    return Name.parse(uri)


def is_prefix_of(prefix: Name, other: Name) -> bool:
    return prefix.is_prefix_of(other)


def byte_length(name: Name) -> int:
    return name.byte_length()
