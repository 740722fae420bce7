"""Minimal-depth rooted spanning forest over the online subgraph.

Each component is rooted at its highest-priority node (Perlman-style
election). Trees are rebuilt by BFS when components form or merge; single
joins and the re-joins after a departure attach greedily to the neighbor with
the lowest level, so depth can drift above the BFS optimum between rebuilds.
``strict_min_depth=True`` rebuilds every touched component after each event.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import NamedTuple

from .errors import ConsistencyError, StateError
from .graph import Graph, OnlineView, connected_components


class TreeTicket(NamedTuple):
    node: int
    priority: int


def draw_tickets(n: int, seed: int) -> list[int]:
    """Distinct random 64-bit priorities, indexed by node id."""
    rng = random.Random(seed)
    seen: set[int] = set()
    out = []
    for _ in range(n):
        p = rng.getrandbits(64)
        while p in seen:
            p = rng.getrandbits(64)
        seen.add(p)
        out.append(p)
    return out


@dataclass
class JoinOutcome:
    node: int
    parent: int | None
    # root of a component rebuilt from scratch by this event, if any
    rebuilt: int | None = None
    changed: set[int] = field(default_factory=set)
    # nodes that were not in the rebuilt root's previous component
    absorbed: set[int] = field(default_factory=set)


@dataclass
class DepartureOutcome:
    node: int
    parent: int | None
    former_root: int
    detached: list[int] = field(default_factory=list)
    # (node, new parent) in processing order
    rejoins: list[tuple[int, int]] = field(default_factory=list)
    rebuilt: list[int] = field(default_factory=list)
    former_level: int = 0


class SpanningForest:
    """Rooted trees over every connected component of the online subgraph."""

    def __init__(self, graph: Graph, priority: list[int], strict_min_depth: bool = False):
        self.graph = graph
        self.priority = priority
        self.strict_min_depth = strict_min_depth
        self.online: set[int] = set()
        self.parent: dict[int, int | None] = {}
        self.children: dict[int, list[int]] = {}
        self.level: dict[int, int] = {}
        self.root_of: dict[int, int] = {}
        self.members: dict[int, set[int]] = {}

    # -- construction -------------------------------------------------------

    @classmethod
    def build(cls, graph: Graph, online, priority: list[int],
              strict_min_depth: bool = False) -> SpanningForest:
        forest = cls(graph, priority, strict_min_depth)
        forest.online = set(online)
        for comp in connected_components(OnlineView(graph, forest.online)):
            forest._build_component(comp)
        return forest

    def _build_component(self, nodes, previous: dict[int, list[int]] | None = None) -> int:
        """BFS tree from the max-priority node; parent = best-priority neighbor one level up.

        Children are ordered by descending priority, except that children a
        node already had in ``previous`` keep their relative order in front.
        """
        nodes = set(nodes)
        prio = self.priority
        adj = self.graph.adjacency
        root = max(nodes, key=prio.__getitem__)
        level = {root: 0}
        frontier = [root]
        order = [root]
        while frontier:
            nxt = []
            for u in frontier:
                for w in adj[u]:
                    if w in nodes and w not in level:
                        level[w] = level[u] + 1
                        nxt.append(w)
            order.extend(nxt)
            frontier = nxt
        if len(level) != len(nodes):
            raise ConsistencyError("component passed to rebuild is not connected")
        for u in nodes:
            self.children[u] = []
            self.root_of[u] = root
            self.level[u] = level[u]
        self.parent[root] = None
        for u in order[1:]:
            lu = level[u] - 1
            p = max((w for w in adj[u] if w in nodes and level[w] == lu), key=prio.__getitem__)
            self.parent[u] = p
            self.children[p].append(u)
        for u in nodes:
            kids = self.children[u]
            if len(kids) > 1:
                kids.sort(key=prio.__getitem__, reverse=True)
                if previous and previous.get(u):
                    rank = {c: i for i, c in enumerate(previous[u])}
                    kids.sort(key=lambda c: rank.get(c, len(rank)))
        self.members[root] = nodes
        return root

    # -- queries ------------------------------------------------------------

    def roots(self) -> list[int]:
        return sorted(self.members)

    def component_size(self, root: int) -> int:
        return len(self.members[root])

    def depth(self, root: int) -> int:
        lv = self.level
        return max(lv[u] for u in self.members[root])

    def subtree(self, u: int) -> list[int]:
        """Nodes of the subtree rooted at ``u`` in preorder (``u`` first)."""
        out = [u]
        stack = list(reversed(self.children[u]))
        ch = self.children
        while stack:
            x = stack.pop()
            out.append(x)
            stack.extend(reversed(ch[x]))
        return out

    def path_to_root(self, u: int) -> list[int]:
        path = [u]
        p = self.parent[u]
        while p is not None:
            path.append(p)
            p = self.parent[p]
        return path

    def _snapshot(self, nodes) -> dict[int, tuple[int | None, int]]:
        return {u: (self.parent.get(u), self.level.get(u, -1)) for u in nodes}

    def _attach(self, v: int, p: int) -> None:
        self.parent[v] = p
        self.children[v] = []
        self.children[p].append(v)
        self.level[v] = self.level[p] + 1
        root = self.root_of[p]
        self.root_of[v] = root
        self.members[root].add(v)

    def _best_parent(self, v: int) -> int | None:
        best = None
        best_key = None
        prio = self.priority
        lv = self.level
        for w in self.graph.adjacency[v]:
            if w in self.root_of:
                key = (lv[w], -prio[w])
                if best_key is None or key < best_key:
                    best, best_key = w, key
        return best

    def _forget(self, u: int) -> None:
        self.parent.pop(u, None)
        self.children.pop(u, None)
        self.level.pop(u, None)
        self.root_of.pop(u, None)

    # -- churn --------------------------------------------------------------

    def handle_join(self, v: int) -> JoinOutcome:
        if v in self.online:
            raise StateError(f"node {v} is already online")
        self.online.add(v)
        nbrs = [w for w in self.graph.adjacency[v] if w in self.root_of]
        if not nbrs:
            self.parent[v] = None
            self.children[v] = []
            self.level[v] = 0
            self.root_of[v] = v
            self.members[v] = {v}
            return JoinOutcome(v, None, rebuilt=v, changed={v}, absorbed={v})
        roots = {self.root_of[w] for w in nbrs}
        top = max(roots, key=self.priority.__getitem__)
        if len(roots) > 1 or self.priority[v] > self.priority[top] or self.strict_min_depth:
            nodes = {v}
            old = {}
            for r in roots:
                old[r] = self.members.pop(r)
                nodes |= old[r]
            before = self._snapshot(nodes)
            previous = {u: self.children[u] for u in nodes if u in self.children}
            root = self._build_component(nodes, previous)
            changed = {u for u in nodes if before[u] != (self.parent[u], self.level[u])}
            absorbed = nodes - old.get(root, set())
            return JoinOutcome(v, self.parent[v], rebuilt=root, changed=changed,
                               absorbed=absorbed)
        p = self._best_parent(v)
        self._attach(v, p)
        return JoinOutcome(v, p, changed={v})

    def handle_departure(self, v: int) -> DepartureOutcome:
        if v not in self.online:
            raise StateError(f"node {v} is not online")
        p = self.parent[v]
        root = self.root_of[v]
        prio = self.priority
        former_level = {u: self.level[u] for u in self.subtree(v)}
        sub = [u for u in former_level if u != v]
        out = DepartureOutcome(v, p, root, former_level=former_level[v])
        comp = self.members[root]

        self.online.discard(v)
        if p is not None:
            self.children[p].remove(v)
        comp.discard(v)
        self._forget(v)
        for u in sub:
            comp.discard(u)
            self._forget(u)
        if p is None:
            del self.members[root]
        sub.sort(key=lambda u: (former_level[u], -prio[u]))
        out.detached = list(sub)

        if self.strict_min_depth:
            rest = set(sub)
            if p is not None:
                rest |= self.members.pop(root)
                for u in rest:
                    self._forget(u)
            for nodes in connected_components(OnlineView(self.graph, rest)):
                out.rebuilt.append(self._build_component(nodes))
            return out

        pending = sub
        progress = True
        while pending and progress:
            progress = False
            left = []
            for x in pending:
                y = self._best_parent(x)
                if y is None:
                    left.append(x)
                else:
                    self._attach(x, y)
                    out.rejoins.append((x, y))
                    progress = True
            pending = left
        if pending:
            for nodes in connected_components(OnlineView(self.graph, pending)):
                out.rebuilt.append(self._build_component(nodes))
        return out

    # -- verification -------------------------------------------------------

    def validate(self, require_min_depth: bool = False) -> None:
        """Raise :class:`ConsistencyError` if any structural invariant fails."""
        g = self.graph
        view = OnlineView(g, self.online)
        comps = connected_components(view)
        if sorted(sorted(m) for m in self.members.values()) != sorted(comps):
            raise ConsistencyError("tree components differ from graph components")
        for root, nodes in self.members.items():
            if self.parent[root] is not None or self.level[root] != 0:
                raise ConsistencyError(f"root {root} has a parent")
            if root != max(nodes, key=self.priority.__getitem__):
                raise ConsistencyError(f"root {root} is not the max-priority node")
            for u in nodes:
                if self.root_of[u] != root:
                    raise ConsistencyError(f"node {u} has wrong component tag")
                p = self.parent[u]
                if p is not None:
                    if not g.has_edge(u, p):
                        raise ConsistencyError(f"tree edge {u}-{p} not in graph")
                    if self.level[u] != self.level[p] + 1 or u not in self.children[p]:
                        raise ConsistencyError(f"level/parent mismatch at {u}")
                for c in self.children[u]:
                    if self.parent[c] != u:
                        raise ConsistencyError(f"child list mismatch at {u}")
        if set(self.root_of) != self.online:
            raise ConsistencyError("online set differs from forest members")
        if require_min_depth:
            for root in self.members:
                dist = {root: 0}
                frontier = [root]
                while frontier:
                    nxt = []
                    for u in frontier:
                        for w in view.neighbors(u):
                            if w not in dist:
                                dist[w] = dist[u] + 1
                                nxt.append(w)
                    frontier = nxt
                for u in self.members[root]:
                    if self.level[u] != dist[u]:
                        raise ConsistencyError(f"node {u} is not at minimal depth")
