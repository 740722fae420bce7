"""Ownership model of a plain Chord ring, used as the balance baseline.

Each member owns the wrapped id range ``(predecessor, own id]``. There are no
virtual nodes, fingers or maintenance traffic; only ownership is modelled.
"""

from __future__ import annotations

import bisect
import hashlib
from fractions import Fraction
from operator import sub

from .errors import StateError


def ring_id(node: int, seed: int, bits: int, attempt: int = 0) -> int:
    data = f"{seed}/{node}/{attempt}".encode()
    h = hashlib.blake2b(data, digest_size=8, person=b"bdcat-chord")
    return int.from_bytes(h.digest(), "big") >> (64 - bits)


class ChordRing:
    def __init__(self, bits: int = 32):
        self.bits = bits
        self.size = 1 << bits
        self.ids: list[int] = []
        self.owner: dict[int, int] = {}
        self.id_of: dict[int, int] = {}

    def __len__(self) -> int:
        return len(self.ids)

    def add(self, node: int, rid: int) -> None:
        if node in self.id_of:
            raise StateError(f"node {node} already on the ring")
        if rid in self.owner:
            raise StateError(f"ring id {rid} already taken")
        bisect.insort(self.ids, rid)
        self.owner[rid] = node
        self.id_of[node] = rid

    def remove(self, node: int) -> None:
        rid = self.id_of.pop(node, None)
        if rid is None:
            raise StateError(f"node {node} is not on the ring")
        del self.owner[rid]
        del self.ids[bisect.bisect_left(self.ids, rid)]

    def owned(self, node: int) -> int:
        """Number of ring ids owned by ``node``."""
        rid = self.id_of[node]
        i = bisect.bisect_left(self.ids, rid)
        pred = self.ids[i - 1]  # wraps to the last id for i == 0
        return (rid - pred) % self.size or self.size

    def max_gap(self) -> int:
        ids = self.ids
        if len(ids) == 1:
            return self.size
        wrap = ids[0] + self.size - ids[-1]
        return max(wrap, max(map(sub, ids[1:], ids[:-1])))


def chord_join(ring: ChordRing, node: int, seed: int) -> ChordRing:
    """Add ``node`` at a seeded pseudo-random id, re-drawing on collision."""
    attempt = 0
    rid = ring_id(node, seed, ring.bits)
    while rid in ring.owner:
        attempt += 1
        rid = ring_id(node, seed, ring.bits, attempt)
    ring.add(node, rid)
    return ring


def chord_leave(ring: ChordRing, node: int) -> ChordRing:
    ring.remove(node)
    return ring


def chord_imbalance(ring: ChordRing) -> tuple[Fraction, Fraction]:
    """``(mean F, max F)`` with ``F(v) = owned fraction * member count``."""
    n = len(ring)
    if n == 0:
        raise StateError("empty ring")
    owned = sum(ring.owned(v) for v in ring.id_of)
    mean = Fraction(owned * n, ring.size * n)
    return mean, Fraction(ring.max_gap() * n, ring.size)
