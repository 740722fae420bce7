"""Static undirected graphs, synthetic generators and edge-list ingestion.

A :class:`Graph` never changes after construction. Which nodes are online is
simulation state and is layered on top through :class:`OnlineView`.
"""

from __future__ import annotations

import random
from collections.abc import Iterable, Iterator
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, ParseError


@dataclass(frozen=True)
class Graph:
    """Bidirectional simple graph over dense node ids ``0..n-1``.

    ``adjacency[u]`` is the sorted tuple of neighbors of ``u``.
    """

    adjacency: tuple[tuple[int, ...], ...]

    @property
    def n(self) -> int:
        return len(self.adjacency)

    def neighbors(self, u: int) -> tuple[int, ...]:
        return self.adjacency[u]

    def degree(self, u: int) -> int:
        return len(self.adjacency[u])

    @property
    def num_edges(self) -> int:
        return sum(len(a) for a in self.adjacency) // 2

    def edges(self) -> Iterator[tuple[int, int]]:
        for u, nbrs in enumerate(self.adjacency):
            for v in nbrs:
                if u < v:
                    yield u, v

    def has_edge(self, u: int, v: int) -> bool:
        nbrs = self.adjacency[u]
        # binary search on the sorted tuple
        lo, hi = 0, len(nbrs)
        while lo < hi:
            mid = (lo + hi) // 2
            if nbrs[mid] < v:
                lo = mid + 1
            else:
                hi = mid
        return lo < len(nbrs) and nbrs[lo] == v

    @property
    def average_degree(self) -> float:
        return 2 * self.num_edges / self.n if self.n else 0.0

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> Graph:
        """Build a graph, symmetrizing and dropping self-loops and duplicates."""
        adj: list[set[int]] = [set() for _ in range(n)]
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise ParameterError(f"edge ({u}, {v}) outside [0, {n})")
            if u == v:
                continue
            adj[u].add(v)
            adj[v].add(u)
        return cls(tuple(tuple(sorted(a)) for a in adj))


class OnlineView:
    """Read-only view of the subgraph induced by an online node set.

    Node ids are those of the underlying graph; offline nodes simply have no
    neighbors and are not members.
    """

    def __init__(self, graph: Graph, online: Iterable[int]):
        self.graph = graph
        self.online = frozenset(online)
        for u in self.online:
            if not 0 <= u < graph.n:
                raise ParameterError(f"node {u} not in graph")

    def __contains__(self, u: int) -> bool:
        return u in self.online

    def neighbors(self, u: int) -> tuple[int, ...]:
        if u not in self.online:
            return ()
        return tuple(v for v in self.graph.adjacency[u] if v in self.online)

    def edges(self) -> Iterator[tuple[int, int]]:
        for u, v in self.graph.edges():
            if u in self.online and v in self.online:
                yield u, v


def induced_online_subgraph(graph: Graph, online: Iterable[int]) -> OnlineView:
    return OnlineView(graph, online)


def generate_erdos_renyi(n: int, avg_degree: float, seed: int) -> Graph:
    """G(n, p) with ``p = avg_degree / (n - 1)``."""
    if n < 2:
        raise ParameterError("Erdos-Renyi needs n >= 2")
    p = avg_degree / (n - 1)
    if not 0 < p <= 1:
        raise ParameterError(f"edge probability {p} outside (0, 1]")
    rng = np.random.default_rng(seed)
    adj: list[list[int]] = [[] for _ in range(n)]
    for u in range(n - 1):
        hits = np.flatnonzero(rng.random(n - u - 1) < p) + (u + 1)
        for v in hits.tolist():
            adj[u].append(v)
            adj[v].append(u)
    return Graph(tuple(tuple(sorted(a)) for a in adj))


def generate_barabasi_albert(n: int, m: int, seed: int) -> Graph:
    """Preferential attachment grown from an ``m``-clique.

    Each arriving node links to ``m`` distinct existing nodes drawn with
    probability proportional to their degree.
    """
    if m < 1:
        raise ParameterError("Barabasi-Albert needs m >= 1")
    if m >= n:
        raise ParameterError(f"Barabasi-Albert needs n > m (got n={n}, m={m})")
    rng = random.Random(seed)
    edges: list[tuple[int, int]] = []
    # each endpoint occurrence is one ticket in the degree-proportional urn
    urn: list[int] = []
    for u in range(m):
        for v in range(u + 1, m):
            edges.append((u, v))
            urn.extend((u, v))
    for new in range(m, n):
        targets: set[int] = set()
        if not urn:
            # m == 1: the seed clique is a single isolated node
            targets.add(0)
        while len(targets) < m:
            targets.add(urn[rng.randrange(len(urn))])
        for t in sorted(targets):
            edges.append((new, t))
            urn.extend((new, t))
    return Graph.from_edges(n, edges)


def parse_edge_list(lines: Iterable[str] | str) -> Graph:
    """Read ``u v`` lines; ``#`` comments and blank lines are skipped.

    A single-id line declares a (possibly isolated) node. Ids are compacted
    to ``0..n-1`` in ascending order of the original ids.
    """
    if isinstance(lines, str):
        lines = lines.splitlines()
    pairs: list[tuple[int, int]] = []
    ids: set[int] = set()
    for lineno, raw in enumerate(lines, start=1):
        text = raw.strip()
        if not text or text.startswith("#"):
            continue
        tokens = text.split()
        if len(tokens) > 2:
            raise ParseError(f"expected 'u v', got {len(tokens)} tokens", lineno)
        try:
            nums = [int(t) for t in tokens]
        except ValueError:
            raise ParseError(f"non-integer token in {text!r}", lineno) from None
        if any(x < 0 for x in nums):
            raise ParseError("negative node id", lineno)
        ids.update(nums)
        if len(nums) == 2:
            pairs.append((nums[0], nums[1]))
    index = {orig: i for i, orig in enumerate(sorted(ids))}
    return Graph.from_edges(len(index), ((index[u], index[v]) for u, v in pairs))


def connected_components(view: OnlineView) -> list[list[int]]:
    """Components of the online subgraph, each sorted, ordered by smallest id."""
    seen: set[int] = set()
    comps = []
    for start in sorted(view.online):
        if start in seen:
            continue
        seen.add(start)
        comp = [start]
        stack = [start]
        while stack:
            u = stack.pop()
            for w in view.neighbors(u):
                if w not in seen:
                    seen.add(w)
                    comp.append(w)
                    stack.append(w)
        comps.append(sorted(comp))
    return comps
