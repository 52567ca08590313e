"""Interest and Content Object messages and the packet envelope."""

from __future__ import annotations

from dataclasses import dataclass, replace

from ccnsim.name import Name

MAX_TLV_VALUE = 0xFFFF
DEFAULT_HOP_LIMIT = 255
RESTRICTION_LENGTH = 32


class MessageError(ValueError):
    pass


def _check_name(name: Name) -> None:
    if not isinstance(name, Name) or not name.segments:
        raise MessageError("message name must have at least one segment")


def _check_payload(payload: bytes) -> None:
    if len(payload) > MAX_TLV_VALUE:
        raise MessageError(f"payload of {len(payload)} bytes exceeds one TLV ({MAX_TLV_VALUE})")


@dataclass(frozen=True, slots=True)
class Interest:
    name: Name
    payload: bytes = b""
    key_id_restriction: bytes | None = None
    hash_restriction: bytes | None = None

    def __post_init__(self):
        _check_name(self.name)
        _check_payload(self.payload)
        for r in (self.key_id_restriction, self.hash_restriction):
            if r is not None and len(r) != RESTRICTION_LENGTH:
                raise MessageError(f"restriction must be {RESTRICTION_LENGTH} bytes")


@dataclass(frozen=True, slots=True)
class ContentObject:
    name: Name
    payload: bytes = b""

    def __post_init__(self):
        _check_name(self.name)
        _check_payload(self.payload)


@dataclass(frozen=True, slots=True)
class Packet:
    """A message plus its fixed-header state.

    ``hop_limit`` is meaningful for Interests only; Content Objects carry 0.
    ``opaque`` holds message-level TLVs without a field mapping as
    ``(type, raw value)`` pairs, so unknown extensions survive a relay.
    """

    message: Interest | ContentObject
    hop_limit: int = 0
    opaque: tuple[tuple[int, bytes], ...] = ()

    def __post_init__(self):
        if not 0 <= self.hop_limit <= 255:
            raise MessageError(f"hop limit {self.hop_limit} out of range")

    @property
    def is_interest(self) -> bool:
        return isinstance(self.message, Interest)

    @property
    def name(self) -> Name:
        return self.message.name

    def with_hop_limit(self, hop_limit: int) -> Packet:
        return replace(self, hop_limit=hop_limit)


def make_interest(name: Name, payload: bytes = b"", hop_limit: int = DEFAULT_HOP_LIMIT) -> Packet:
    if not 1 <= hop_limit <= 255:
        raise MessageError(f"hop limit {hop_limit} must be in [1, 255]")
    return Packet(Interest(name, payload), hop_limit)


def make_content_object(name: Name, payload: bytes = b"") -> Packet:
    return Packet(ContentObject(name, payload), 0)


def satisfies(obj: ContentObject, interest: Interest) -> bool:
    # Restrictions are carried but not enforced.
    return obj.name == interest.name
