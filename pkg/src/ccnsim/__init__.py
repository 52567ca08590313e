"""Deterministic discrete-event simulator for CCNx 1.0 networks."""

from ccnsim.name import Name, NameSegment, NameParseError
from ccnsim.message import ContentObject, Interest, Packet, make_content_object, make_interest

__all__ = [
    "ContentObject",
    "Interest",
    "Name",
    "NameParseError",
    "NameSegment",
    "Packet",
    "make_content_object",
    "make_interest",
]

__version__ = "0.1.0"
