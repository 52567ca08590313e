"""Integer-nanosecond time and text parsing for durations and rates."""

from __future__ import annotations

import re

NS = 1
US = 1_000
MS = 1_000_000
S = 1_000_000_000

_TIME_UNITS = {"ns": NS, "us": US, "ms": MS, "s": S, "min": 60 * S}
_RATE_UNITS = {"bps": 1, "kbps": 10**3, "mbps": 10**6, "gbps": 10**9}

_QUANTITY = re.compile(r"^\s*([0-9]+(?:\.[0-9]*)?|\.[0-9]+)\s*([A-Za-z]*)\s*$")


def _split(text: str) -> tuple[str, str]:
    m = _QUANTITY.match(text)
    if not m:
        raise ValueError(f"not a quantity: {text!r}")
    return m.group(1), m.group(2)


def _scale(number: str, factor: int) -> int:
    # Exact decimal scaling, no float rounding.
    if "." in number:
        whole, frac = number.split(".")
        whole = whole or "0"
        value = int(whole) * factor + int(frac or "0") * factor // 10 ** len(frac)
        if int(frac or "0") * factor % 10 ** len(frac):
            raise ValueError(f"{number} is not representable at this resolution")
        return value
    return int(number) * factor


def parse_duration(text: str) -> int:
    """Parse ``"1ms"``, ``"2.5s"``, ``"300us"`` into integer nanoseconds.

    A bare number is taken as seconds.
    """
    number, unit = _split(text)
    unit = unit.lower() or "s"
    if unit not in _TIME_UNITS:
        raise ValueError(f"unknown time unit {unit!r} in {text!r}")
    return _scale(number, _TIME_UNITS[unit])


def parse_rate(text: str) -> int:
    """Parse ``"10Mbps"`` into bits per second."""
    number, unit = _split(text)
    unit = unit.lower() or "bps"
    if unit not in _RATE_UNITS:
        raise ValueError(f"unknown rate unit {unit!r} in {text!r}")
    rate = _scale(number, _RATE_UNITS[unit])
    if rate <= 0:
        raise ValueError(f"rate must be positive: {text!r}")
    return rate


def format_duration(ns: int) -> str:
    for unit, factor in (("s", S), ("ms", MS), ("us", US)):
        if ns % factor == 0 and ns != 0:
            return f"{ns // factor}{unit}"
    return f"{ns}ns"
