"""Integer interval unions and IPv4/port span parsing.

IntervalSet is the canonical representation for IP and port constraints:
inclusive spans, sorted, disjoint, and non-adjacent.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

IPV4_MAX = 2**32 - 1
PORT_MAX = 65535


def ip_to_int(text: str) -> int:
    parts = text.split(".")
    if len(parts) != 4:
        raise ValueError(f"invalid IPv4 address: {text!r}")
    value = 0
    for p in parts:
        if not p.isdigit():
            raise ValueError(f"invalid IPv4 address: {text!r}")
        octet = int(p)
        if octet > 255:
            raise ValueError(f"invalid IPv4 address: {text!r}")
        value = (value << 8) | octet
    return value


def int_to_ip(value: int) -> str:
    return ".".join(str((value >> shift) & 0xFF) for shift in (24, 16, 8, 0))


@dataclass(frozen=True)
class IntervalSet:
    """Union of inclusive [lo, hi] integer spans in normal form."""

    spans: tuple[tuple[int, int], ...] = ()

    @classmethod
    def from_spans(cls, spans: Iterable[tuple[int, int]]) -> "IntervalSet":
        cleaned = sorted((lo, hi) for lo, hi in spans if lo <= hi)
        merged: list[tuple[int, int]] = []
        for lo, hi in cleaned:
            if merged and lo <= merged[-1][1] + 1:
                merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
            else:
                merged.append((lo, hi))
        return cls(tuple(merged))

    @classmethod
    def single(cls, value: int) -> "IntervalSet":
        return cls(((value, value),))

    @classmethod
    def span(cls, lo: int, hi: int) -> "IntervalSet":
        if lo > hi:
            return cls(())
        return cls(((lo, hi),))

    def is_empty(self) -> bool:
        return not self.spans

    def min_value(self) -> int:
        if not self.spans:
            raise ValueError("empty interval set has no minimum")
        return self.spans[0][0]

    def count(self) -> int:
        return sum(hi - lo + 1 for lo, hi in self.spans)

    def contains(self, value: int) -> bool:
        for lo, hi in self.spans:
            if lo <= value <= hi:
                return True
            if value < lo:
                return False
        return False

    def intersect(self, other: "IntervalSet") -> "IntervalSet":
        out: list[tuple[int, int]] = []
        i = j = 0
        a, b = self.spans, other.spans
        while i < len(a) and j < len(b):
            lo = max(a[i][0], b[j][0])
            hi = min(a[i][1], b[j][1])
            if lo <= hi:
                out.append((lo, hi))
            if a[i][1] < b[j][1]:
                i += 1
            else:
                j += 1
        return IntervalSet(tuple(out))

    def union(self, other: "IntervalSet") -> "IntervalSet":
        return IntervalSet.from_spans(self.spans + other.spans)

    def subtract(self, other: "IntervalSet") -> "IntervalSet":
        out: list[tuple[int, int]] = []
        for lo, hi in self.spans:
            pieces = [(lo, hi)]
            for olo, ohi in other.spans:
                next_pieces: list[tuple[int, int]] = []
                for plo, phi in pieces:
                    if ohi < plo or olo > phi:
                        next_pieces.append((plo, phi))
                        continue
                    if plo < olo:
                        next_pieces.append((plo, olo - 1))
                    if phi > ohi:
                        next_pieces.append((ohi + 1, phi))
                pieces = next_pieces
                if not pieces:
                    break
            out.extend(pieces)
        return IntervalSet.from_spans(out)

    def complement(self, universe: "IntervalSet") -> "IntervalSet":
        return universe.subtract(self)

    def values(self) -> Iterator[int]:
        for lo, hi in self.spans:
            yield from range(lo, hi + 1)


FULL_IPV4 = IntervalSet.span(0, IPV4_MAX)
FULL_PORTS = IntervalSet.span(0, PORT_MAX)


def parse_ip_span(text: str) -> tuple[int, int]:
    """One address, a CIDR block, or a dotted-quad range "a-b"."""
    text = text.strip()
    if "/" in text:
        base, _, prefix = text.partition("/")
        bits = int(prefix)
        if not 0 <= bits <= 32:
            raise ValueError(f"invalid CIDR prefix: {text!r}")
        lo = ip_to_int(base)
        size = 1 << (32 - bits)
        lo = (lo // size) * size
        return lo, lo + size - 1
    if "-" in text:
        a, _, b = text.partition("-")
        lo, hi = ip_to_int(a.strip()), ip_to_int(b.strip())
        if lo > hi:
            raise ValueError(f"reversed IPv4 range: {text!r}")
        return lo, hi
    v = ip_to_int(text)
    return v, v


def parse_ip_set(terms: Iterable[str]) -> IntervalSet:
    return IntervalSet.from_spans(parse_ip_span(t) for t in terms)


def parse_port_span(text) -> tuple[int, int]:
    if isinstance(text, int):
        lo = hi = text
    else:
        text = str(text).strip()
        if "-" in text:
            a, _, b = text.partition("-")
            lo, hi = int(a), int(b)
        else:
            lo = hi = int(text)
    if lo > hi:
        raise ValueError(f"reversed port range: {text!r}")
    if not (0 <= lo <= PORT_MAX and 0 <= hi <= PORT_MAX):
        raise ValueError(f"port out of range: {text!r}")
    return lo, hi


def parse_port_set(terms) -> IntervalSet:
    if isinstance(terms, (int, str)):
        terms = [terms]
    return IntervalSet.from_spans(parse_port_span(t) for t in terms)
