"""TLV wire format for CCNx packets.

Layout (big-endian throughout)::

    fixed header (8 bytes)
      version u8 = 1 | packet type u8 (0 Interest, 1 Content Object)
      packet length u16 (whole packet) | hop limit u8 | reserved u8 | flags u8
      header length u8 = 8
    message TLV  (type 1 Interest, type 2 Content Object)
      name TLV (type 0) -> name segment TLVs (type 1)
      payload TLV (type 1), omitted when empty
      key id restriction (type 2), object hash restriction (type 3); Interest only

Sub-codecs are looked up by their TLV nesting path, written like an OID:
``.1.0`` is the name inside an Interest, ``.2.1`` the payload inside a
Content Object. Replacing an entry in a :class:`CodecRegistry` changes how
that one field is encoded and decoded.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Any, Iterator, Protocol

from ccnsim.message import ContentObject, Interest, MessageError, Packet
from ccnsim.name import SEGMENT_NAME, Name, NameSegment

VERSION = 1
HEADER_LENGTH = 8
TLV_HEADER = 4
MAX_LENGTH = 0xFFFF
MAX_DEPTH = 8

PT_INTEREST = 0
PT_CONTENT_OBJECT = 1

T_INTEREST = 1
T_CONTENT_OBJECT = 2
T_NAME = 0
T_PAYLOAD = 1
T_KEYID_RESTRICTION = 2
T_HASH_RESTRICTION = 3
T_NAME_SEGMENT = SEGMENT_NAME

_HEADER = struct.Struct(">BBHBBBB")
_TL = struct.Struct(">HH")

_MESSAGE_TYPES = {T_INTEREST: PT_INTEREST, T_CONTENT_OBJECT: PT_CONTENT_OBJECT}
_FIELDS = {
    T_INTEREST: {
        T_NAME: "name",
        T_PAYLOAD: "payload",
        T_KEYID_RESTRICTION: "key_id_restriction",
        T_HASH_RESTRICTION: "hash_restriction",
    },
    T_CONTENT_OBJECT: {T_NAME: "name", T_PAYLOAD: "payload"},
}
_LABELS = {
    (T_INTEREST,): "Interest",
    (T_CONTENT_OBJECT,): "ContentObject",
    (T_INTEREST, T_NAME): "Name",
    (T_CONTENT_OBJECT, T_NAME): "Name",
    (T_INTEREST, T_PAYLOAD): "Payload",
    (T_CONTENT_OBJECT, T_PAYLOAD): "Payload",
    (T_INTEREST, T_KEYID_RESTRICTION): "KeyIdRestriction",
    (T_INTEREST, T_HASH_RESTRICTION): "ObjectHashRestriction",
}


class EncodeError(ValueError):
    pass


class DecodeError(ValueError):
    """Malformed input. ``offset`` is the byte position of the fault."""

    def __init__(self, message: str, offset: int = 0):
        super().__init__(f"{message} (at byte {offset})")
        self.reason = message
        self.offset = offset

    def shifted(self, base: int) -> DecodeError:
        return DecodeError(self.reason, self.offset + base)


class SubCodec(Protocol):
    def encode(self, value: Any) -> bytes: ...

    def decode(self, data: bytes) -> Any: ...


def tlv(tlv_type: int, value: bytes) -> bytes:
    if len(value) > MAX_LENGTH:
        raise EncodeError(f"TLV type {tlv_type} body of {len(value)} bytes exceeds {MAX_LENGTH}")
    return _TL.pack(tlv_type, len(value)) + value


def iter_tlvs(data: bytes, base: int = 0) -> Iterator[tuple[int, int, bytes]]:
    """Yield ``(type, offset, value)`` for a flat run of TLVs."""
    pos = 0
    end = len(data)
    while pos < end:
        if end - pos < TLV_HEADER:
            raise DecodeError("truncated TLV header", base + pos)
        t, length = _TL.unpack_from(data, pos)
        if length > end - pos - TLV_HEADER:
            raise DecodeError(
                f"TLV type {t} declares length {length} with {end - pos - TLV_HEADER} bytes remaining",
                base + pos,
            )
        yield t, base + pos, data[pos + TLV_HEADER : pos + TLV_HEADER + length]
        pos += TLV_HEADER + length


class NameCodec:
    def encode(self, name: Name) -> bytes:
        return b"".join(tlv(seg.type, seg.value) for seg in name.segments)

    def decode(self, data: bytes) -> Name:
        segments = []
        for t, offset, value in iter_tlvs(data):
            if t != T_NAME_SEGMENT:
                raise DecodeError(f"unsupported name segment type {t}", offset)
            segments.append(NameSegment(t, value))
        return Name(tuple(segments))


class BytesCodec:
    def encode(self, value: bytes) -> bytes:
        return bytes(value)

    def decode(self, data: bytes) -> bytes:
        return bytes(data)


def parse_path(path: str | tuple[int, ...]) -> tuple[int, ...]:
    """``".1.0"`` -> ``(1, 0)``."""
    if isinstance(path, tuple):
        parts = path
    else:
        if not path.startswith("."):
            raise ValueError(f"codec path must start with '.': {path!r}")
        parts = tuple(int(p) for p in path[1:].split("."))
    if not parts or any(not 0 <= p <= MAX_LENGTH for p in parts):
        raise ValueError(f"invalid codec path {path!r}")
    return parts


def format_path(path: tuple[int, ...]) -> str:
    return "".join(f".{p}" for p in path)


class CodecRegistry:
    """Exact-path map from TLV nesting paths to sub-codecs.

    Registries are treated as immutable: :meth:`register` returns a copy.
    """

    def __init__(self, codecs: dict[tuple[int, ...], SubCodec] | None = None):
        if codecs is None:
            name, raw = NameCodec(), BytesCodec()
            codecs = {
                (T_INTEREST, T_NAME): name,
                (T_CONTENT_OBJECT, T_NAME): name,
                (T_INTEREST, T_PAYLOAD): raw,
                (T_CONTENT_OBJECT, T_PAYLOAD): raw,
                (T_INTEREST, T_KEYID_RESTRICTION): raw,
                (T_INTEREST, T_HASH_RESTRICTION): raw,
            }
        self._codecs = dict(codecs)

    def register(self, path: str | tuple[int, ...], codec: SubCodec) -> CodecRegistry:
        codecs = dict(self._codecs)
        codecs[parse_path(path)] = codec
        return CodecRegistry(codecs)

    def lookup(self, path: str | tuple[int, ...]) -> SubCodec | None:
        return self._codecs.get(parse_path(path))

    def paths(self) -> list[str]:
        return [format_path(p) for p in sorted(self._codecs)]


def register_codec(registry: CodecRegistry, path: str, codec: SubCodec) -> CodecRegistry:
    return registry.register(path, codec)


class PacketCodec:
    def __init__(self, registry: CodecRegistry | None = None):
        self.registry = registry or CodecRegistry()

    def encode(self, packet: Packet) -> bytes:
        msg = packet.message
        if isinstance(msg, Interest):
            top, ptype, hop = T_INTEREST, PT_INTEREST, packet.hop_limit
        else:
            top, ptype, hop = T_CONTENT_OBJECT, PT_CONTENT_OBJECT, 0
        fields = []
        for t, attr in _FIELDS[top].items():
            value = getattr(msg, attr)
            if value is None or (attr == "payload" and not value):
                continue
            codec = self.registry.lookup((top, t))
            if codec is None:
                raise EncodeError(f"no codec registered for {format_path((top, t))}")
            fields.append(tlv(t, codec.encode(value)))
        for t, raw in packet.opaque:
            fields.append(tlv(t, raw))
        body = tlv(top, b"".join(fields))
        total = HEADER_LENGTH + len(body)
        if total > MAX_LENGTH:
            raise EncodeError(f"packet length {total} exceeds {MAX_LENGTH}")
        return _HEADER.pack(VERSION, ptype, total, hop, 0, 0, HEADER_LENGTH) + body

    def decode(self, data: bytes, warnings: list[str] | None = None) -> Packet:
        data = bytes(data)
        ptype, hop, top, offset, body = _split_packet(data)
        values: dict[str, Any] = {}
        opaque: list[tuple[int, bytes]] = []
        known = _FIELDS[top]
        for t, field_offset, value in iter_tlvs(body, offset):
            path = (top, t)
            codec = self.registry.lookup(path)
            if codec is None:
                if warnings is not None:
                    warnings.append(f"opaque TLV {format_path(path)} at byte {field_offset}")
                opaque.append((t, value))
                continue
            try:
                decoded = codec.decode(value)
            except DecodeError as exc:
                raise exc.shifted(field_offset + TLV_HEADER) from None
            attr = known.get(t)
            if attr is None:
                if warnings is not None:
                    warnings.append(f"opaque TLV {format_path(path)} at byte {field_offset}")
                opaque.append((t, value))
                continue
            if attr in values:
                raise DecodeError(f"duplicate {_LABELS[path]} TLV", field_offset)
            values[attr] = decoded
        name = values.pop("name", None)
        if not isinstance(name, Name):
            raise DecodeError("message has no name", offset - TLV_HEADER)
        try:
            if top == T_INTEREST:
                return Packet(Interest(name, **values), hop, tuple(opaque))
            return Packet(ContentObject(name, **values), 0, tuple(opaque))
        except (MessageError, TypeError) as exc:
            raise DecodeError(f"invalid message: {exc}", offset - TLV_HEADER) from None


def _split_packet(data: bytes) -> tuple[int, int, int, int, bytes]:
    """Validate the fixed header and top-level TLV.

    Returns packet type, hop limit, message TLV type, the absolute offset of
    the message body, and the body bytes.
    """
    if len(data) < HEADER_LENGTH:
        raise DecodeError("truncated fixed header", len(data))
    version, ptype, length, hop, _reserved, _flags, hlen = _HEADER.unpack_from(data)
    if version != VERSION:
        raise DecodeError(f"unsupported version {version}", 0)
    if ptype not in (PT_INTEREST, PT_CONTENT_OBJECT):
        raise DecodeError(f"unsupported packet type {ptype}", 1)
    if length != len(data):
        raise DecodeError(f"packet length field {length} but {len(data)} bytes present", 2)
    if hlen < HEADER_LENGTH or hlen > length:
        raise DecodeError(f"bad header length {hlen}", 7)
    if length - hlen < TLV_HEADER:
        raise DecodeError("truncated message TLV", hlen)
    top, mlen = _TL.unpack_from(data, hlen)
    if top not in _MESSAGE_TYPES:
        raise DecodeError(f"unknown top-level TLV type {top}", hlen)
    if _MESSAGE_TYPES[top] != ptype:
        raise DecodeError("message TLV does not match packet type", hlen)
    start = hlen + TLV_HEADER
    if mlen > length - start:
        raise DecodeError(
            f"TLV type {top} declares length {mlen} with {length - start} bytes remaining", hlen
        )
    if start + mlen != length:
        raise DecodeError("trailing bytes after message TLV", start + mlen)
    return ptype, hop, top, start, data[start : start + mlen]


_default = PacketCodec()


def encode(packet: Packet) -> bytes:
    return _default.encode(packet)


def decode(data: bytes, warnings: list[str] | None = None) -> Packet:
    return _default.decode(data, warnings)


@dataclass
class TlvNode:
    path: tuple[int, ...]
    offset: int
    value: bytes
    children: list[TlvNode]


def _tree(data: bytes, base: int, parent: tuple[int, ...]) -> list[TlvNode]:
    if len(parent) >= MAX_DEPTH:
        raise DecodeError("TLV nesting deeper than 8", base)
    nodes = []
    for t, offset, value in iter_tlvs(data, base):
        path = parent + (t,)
        children: list[TlvNode] = []
        if len(path) == 1 or path[1:] == (T_NAME,):
            children = _tree(value, offset + TLV_HEADER, path)
        nodes.append(TlvNode(path, offset, value, children))
    return nodes


def dump(data: bytes) -> str:
    """Render a packet as an indented TLV tree."""
    data = bytes(data)
    ptype, hop, top, start, body = _split_packet(data)
    version, _, length, _, _, _, hlen = _HEADER.unpack_from(data)
    kind = "Interest" if ptype == PT_INTEREST else "ContentObject"
    lines = [
        f"fixed header: version={version} type={kind} length={length} "
        f"hop_limit={hop} header_length={hlen}"
    ]

    def show(node: TlvNode, depth: int) -> None:
        label = _LABELS.get(node.path)
        if label is None and len(node.path) == 3 and node.path[1] == T_NAME:
            label = "NameSegment"
        label = label or "unknown"
        text = f"{'  ' * depth}{format_path(node.path)} {label} ({len(node.value)} bytes)"
        if not node.children:
            preview = node.value[:32]
            text += " " + preview.hex(" ")
            if preview and all(0x20 <= b < 0x7F for b in preview):
                text += f" {preview.decode()!r}"
            if len(node.value) > 32:
                text += " ..."
        lines.append(text)
        for child in node.children:
            show(child, depth + 1)

    for node in _tree(data[hlen:], hlen, ()):
        show(node, 0)
    return "\n".join(lines)
