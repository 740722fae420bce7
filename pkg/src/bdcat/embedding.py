"""Interval-vector coordinates, content addresses and exact address masses.

A node coordinate is a tuple of :class:`Interval` (integer ranges inside
``[0, 2**b)``); the root holds the empty tuple. A content address is a tuple
of exactly ``L`` integers. Two vectors match at position ``i`` when one
element contains the other, and their distance is the tree-path analogue of
prefix embedding: ``D(x1) + D(x2) - 2 * cil(x1, x2)``.

Address masses are exact: the mass of a node is an integer count of
addresses out of ``2**(b*L)``.
"""

from __future__ import annotations

import hashlib
from math import ldexp
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Union

from .errors import (
    CapacityError,
    DepthError,
    EmbeddingViolation,
    GreedyViolation,
    ParameterError,
    ParseError,
)

HASH_NAME = "blake2b-64"


class Interval(NamedTuple):
    """The integer set ``{lo, ..., hi - 1}``."""

    lo: int
    hi: int

    @property
    def size(self) -> int:
        return self.hi - self.lo

    def __str__(self) -> str:
        return f"[{self.lo},{self.hi})"


Coordinate = tuple[Interval, ...]
Address = tuple[int, ...]
Element = Union[Interval, int]


@dataclass(frozen=True)
class EmbeddingParams:
    b: int = 32
    L: int = 32
    hash_key: bytes = b"bdcat"

    def __post_init__(self):
        if not 1 <= self.L <= self.b <= 64:
            raise ParameterError(f"need 1 <= L <= b <= 64, got b={self.b}, L={self.L}")

    @property
    def space(self) -> int:
        return 1 << self.b

    @property
    def mass_bits(self) -> int:
        return self.b * self.L

    @property
    def total(self) -> int:
        """Number of addresses, the denominator of every mass."""
        return 1 << (self.b * self.L)

    @property
    def delta(self) -> Fraction:
        """Additive slack ``(L + 1) / 2**b`` of the static balance bound."""
        return Fraction(self.L + 1, self.space)


@dataclass(frozen=True, order=True)
class AddressMass:
    """Exact fraction ``numerator / 2**bits`` of the address space."""

    numerator: int
    bits: int

    def as_fraction(self) -> Fraction:
        return Fraction(self.numerator, 1 << self.bits)

    def __float__(self) -> float:
        return ratio_to_float(self.numerator, self.bits)

    def __add__(self, other: AddressMass) -> AddressMass:
        if self.bits != other.bits:
            return NotImplemented
        return AddressMass(self.numerator + other.numerator, self.bits)


def ratio_to_float(numerator: int, bits: int) -> float:
    """``numerator / 2**bits`` without overflowing the float range."""
    shift = max(0, numerator.bit_length() - 64)
    return ldexp(numerator >> shift, shift - bits)


# -- metric -----------------------------------------------------------------


def _bounds(e: Element) -> tuple[int, int]:
    if isinstance(e, Interval):
        return e
    if isinstance(e, int):
        return e, e + 1
    lo, hi = e
    return lo, hi


def sub(e1: Element, e2: Element) -> bool:
    """True iff one element is a subset of the other (ints are singletons)."""
    l1, h1 = _bounds(e1)
    l2, h2 = _bounds(e2)
    if l1 >= h1 or l2 >= h2:
        return True
    return (l2 <= l1 and h1 <= h2) or (l1 <= l2 and h2 <= h1)


def cil(x1: Sequence[Element], x2: Sequence[Element]) -> int:
    """Length of the longest prefix on which every element pair is nested."""
    j = 0
    for a, b in zip(x1, x2):
        if not sub(a, b):
            break
        j += 1
    return j


def cil_address(x: Coordinate, address: Address) -> int:
    """Fast path of :func:`cil` for a coordinate against a content address."""
    j = 0
    for (lo, hi), a in zip(x, address):
        if not lo <= a < hi:
            break
        j += 1
    return j


def distance(x1: Sequence[Element], x2: Sequence[Element]) -> int:
    return len(x1) + len(x2) - 2 * cil(x1, x2)


def address_distance(x: Coordinate, address: Address) -> int:
    return len(x) + len(address) - 2 * cil_address(x, address)


# -- content addressing -----------------------------------------------------


def content_address(content_id: bytes, params: EmbeddingParams) -> Address:
    """``L`` keyed hashes of ``content_id`` salted with 1..L, truncated to b bits."""
    if isinstance(content_id, str):
        content_id = content_id.encode()
    mask = params.space - 1
    out = []
    for i in range(1, params.L + 1):
        h = hashlib.blake2b(content_id + b"\x00" + i.to_bytes(4, "big"),
                            key=params.hash_key, digest_size=8)
        out.append(int.from_bytes(h.digest(), "big") & mask)
    return tuple(out)


# -- embedding --------------------------------------------------------------


def _split(kids, weights, total, lo, width, prefix, out, stack, L):
    ol = 0
    for c, w in zip(kids, weights):
        nxt = ol + w
        a = lo + ol * width // total
        z = lo + nxt * width // total
        if a == z:
            raise CapacityError(f"empty interval for node {c}: width {width} too small")
        coord = prefix + (Interval(a, z),)
        out[c] = coord
        stack.append((c, coord))
        ol = nxt


def _embed_below(children, sizes, stack, out, L, space):
    while stack:
        x, px = stack.pop()
        kids = children[x]
        if not kids:
            continue
        if len(px) >= L:
            raise DepthError(f"node {x} at depth {len(px)} cannot have children with L={L}")
        # zero-weight subtrees still need a routable interval
        weights = [sizes[c] or 1 for c in kids]
        total = sizes[x] - sum(sizes[c] for c in kids) + sum(weights)
        _split(kids, weights, total, 0, space, px, out, stack, L)


def embed_subtree(
    children: Mapping[int, Sequence[int]],
    sizes: Mapping[int, int],
    u: int,
    prefix: Coordinate,
    params: EmbeddingParams,
) -> dict[int, Coordinate]:
    """Assign coordinates to every proper descendant of ``u``.

    Each node splits ``[0, 2**b)`` among its children in child order, child
    ``i`` getting ``[floor(ol*2^b/|V|), floor(next*2^b/|V|))`` where ``ol`` and
    ``next`` are cumulative subtree sizes. ``sizes[x]`` is ``|V_x|`` counting
    ``x`` itself. ``u`` keeps ``prefix``; the returned map excludes it.

    The number of messages this costs is ``len(result)``.
    """
    if len(prefix) > params.L:
        raise DepthError(f"prefix of length {len(prefix)} exceeds L={params.L}")
    out: dict[int, Coordinate] = {}
    _embed_below(children, sizes, [(u, tuple(prefix))], out, params.L, params.space)
    return out


def embed_group(
    children: Mapping[int, Sequence[int]],
    sizes: Mapping[int, int],
    group: Sequence[int],
    lo: int,
    hi: int,
    prefix: Coordinate,
    params: EmbeddingParams,
) -> dict[int, Coordinate]:
    """Re-embed sibling subtrees by redistributing the range ``[lo, hi)``.

    ``prefix`` is the common parent's coordinate. Used by the virtual binary
    tree variant to rebalance a subset of a node's children.
    """
    if len(prefix) >= params.L:
        raise DepthError(f"group below depth {len(prefix)} exceeds L={params.L}")
    weights = [sizes[c] or 1 for c in group]
    out: dict[int, Coordinate] = {}
    stack: list = []
    _split(group, weights, sum(weights), lo, hi - lo, tuple(prefix), out, stack, params.L)
    _embed_below(children, sizes, stack, out, params.L, params.space)
    return out


def assign_preliminary_child_interval(
    sibling_coords: Sequence[Coordinate], params: EmbeddingParams
) -> Interval:
    """Interval ``[max, (max + 2^b) / 2)`` above all existing children.

    ``sibling_coords`` are the coordinates of the parent's current children.
    """
    top = max((c[-1].hi for c in sibling_coords), default=0)
    iv = Interval(top, (top + params.space) // 2)
    if iv.size <= 0:
        raise CapacityError(f"no residual space above {top}")
    return iv


# -- masses -----------------------------------------------------------------


def prefix_mass(x: Coordinate, params: EmbeddingParams) -> int:
    """Number of addresses whose first ``D(x)`` elements fall inside ``x``.

    This is the total mass of the subtree rooted at the node holding ``x``.
    """
    d = len(x)
    if d > params.L:
        raise DepthError(f"coordinate of length {d} exceeds L={params.L}")
    m = 1 << (params.b * (params.L - d))
    for lo, hi in x:
        m *= hi - lo
    return m


def residual_start(child_coords: Sequence[Coordinate]) -> int:
    """Smallest integer above every child's last interval (0 without children)."""
    return max((c[-1].hi for c in child_coords), default=0)


def address_mass(
    children: Mapping[int, Sequence[int]],
    coords: Mapping[int, Coordinate],
    v: int,
    params: EmbeddingParams,
) -> AddressMass:
    """Exact fraction of all addresses whose unique closest node is ``v``.

    A node owns its prefix region minus the regions of its children. When
    the children tile ``[0, z_m)`` this equals
    ``prod(|x_i| / 2^b) * (2^b - z_m) / 2^b``.
    """
    m = prefix_mass(coords[v], params)
    for c in children[v]:
        m -= prefix_mass(coords[c], params)
    return AddressMass(m, params.mass_bits)


def closest_node_bruteforce(coords: Mapping[int, Coordinate], address: Address) -> int:
    """Unique argmin of the distance to ``address``; raises if it is shared."""
    best = None
    best_d = None
    tie = False
    for v, x in coords.items():
        d = address_distance(x, address)
        if best_d is None or d < best_d:
            best, best_d, tie = v, d, False
        elif d == best_d:
            tie = True
    if best is None:
        raise EmbeddingViolation("no coordinates given")
    if tie:
        raise EmbeddingViolation(f"closest node to {address} is not unique")
    return best


def greedy_route(graph, coords: Mapping[int, Coordinate], start: int, address: Address,
                 verify: bool = True) -> tuple[int, int]:
    """Forward to the closest strictly-closer neighbor until none exists.

    ``coords`` must hold exactly the online nodes of ``start``'s component.
    Ties among equally close neighbors go to the lowest node id. Returns
    ``(terminal, hops)``.
    """
    u = start
    d = address_distance(coords[u], address)
    hops = 0
    while True:
        best = None
        best_d = d
        for w in graph.neighbors(u):
            x = coords.get(w)
            if x is None:
                continue
            dw = address_distance(x, address)
            if dw < best_d or (dw == best_d and best is not None and w < best):
                best, best_d = w, dw
        if best is None:
            break
        u, d = best, best_d
        hops += 1
    if verify:
        target = closest_node_bruteforce(coords, address)
        if target != u:
            raise GreedyViolation(f"greedy routing from {start} ended at {u}, closest is {target}")
    return u, hops


# -- debug dump -------------------------------------------------------------


def dump_coordinates(coords: Mapping[int, Coordinate]) -> str:
    """One line per node: ``nodeId level [lo,hi)[lo,hi)...``."""
    lines = []
    for v in sorted(coords):
        x = coords[v]
        lines.append(f"{v} {len(x)} " + "".join(str(iv) for iv in x))
    return "\n".join(lines) + ("\n" if lines else "")


def parse_coordinates(text: str) -> dict[int, Coordinate]:
    out: dict[int, Coordinate] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split(maxsplit=2)
        try:
            v, level = int(parts[0]), int(parts[1])
            body = parts[2] if len(parts) > 2 else ""
            ivs = []
            for chunk in body.split(")")[:-1]:
                lo, hi = chunk.lstrip("[").split(",")
                ivs.append(Interval(int(lo), int(hi)))
        except (ValueError, IndexError):
            raise ParseError(f"bad coordinate line {raw!r}", lineno) from None
        if len(ivs) != level:
            raise ParseError(f"level {level} but {len(ivs)} intervals", lineno)
        out[v] = tuple(ivs)
    return out
