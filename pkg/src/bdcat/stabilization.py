"""Stabilization of the balanced embedding under node churn.

Every node tracks its subtree size ``|V_u|``, the sizes reported by its
children, the total address mass ``cont(V_u)`` of its subtree and the
component-wide size estimate ``n_est``. After a change in its subtree a node
re-embeds locally when

    n_est * g * cont(V_u) / |V_u| <= g * (1 + c + level(u))

and otherwise asks its parent. The root re-embeds the whole tree (and
broadcasts a fresh estimate) when a request reaches it or when the component
size leaves ``[n_est / g, n_est * g]``.

Masses are integers out of ``2**(b*L)``; ``cont(V_u)`` is exactly the mass of
the prefix region of ``u``'s coordinate, so a local re-embedding never
changes it.

Root decisions are deferred until the whole event (a departure plus all
re-joins of the departed node's descendants) has been processed, so the
root never reacts to a transiently low size.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction

from .embedding import (
    AddressMass,
    Coordinate,
    EmbeddingParams,
    assign_preliminary_child_interval,
    embed_group,
    embed_subtree,
    prefix_mass,
)
from .errors import CapacityError, ConsistencyError, ParameterError
from .forest import DepartureOutcome, JoinOutcome, SpanningForest

CATEGORIES = ("update", "embed", "broadcast", "rejoin")


@dataclass(frozen=True)
class StabParams:
    c: int = 1
    g: Fraction = Fraction(2)
    simple_join: bool = False
    virtual_tree: bool = False
    obfuscated_counts: bool = False
    q: float = 0.0

    def __post_init__(self):
        # floats like 1.001 are taken at their decimal value
        if not isinstance(self.g, Fraction):
            object.__setattr__(self, "g", Fraction(str(self.g)))
        if self.g <= 1:
            raise ParameterError(f"g must exceed 1, got {self.g}")
        if self.c < 0:
            raise ParameterError(f"c must be >= 0, got {self.c}")
        if not 0 <= self.q < 0.5:
            raise ParameterError(f"q must lie in [0, 0.5), got {self.q}")


@dataclass
class StabOutcome:
    update: int = 0
    embed: int = 0
    broadcast: int = 0
    rejoin: int = 0
    # nodes that re-embedded (a full subtree or a virtual group below them)
    reembedded: list[int] = field(default_factory=list)
    escalated_to_root: bool = False

    @property
    def total(self) -> int:
        return self.update + self.embed + self.broadcast + self.rejoin

    @property
    def reembedded_root(self) -> int | None:
        return self.reembedded[-1] if self.reembedded else None


def draw_obfuscated_count(node: int, q: float, seed: int) -> int:
    """Fixed per-node count: 0 or 2 with probability ``q`` each, else 1."""
    x = random.Random(f"obfuscate/{seed}/{node}").random()
    if x < q:
        return 0
    if x < 2 * q:
        return 2
    return 1


def _leaf_ids(k: int) -> list[int]:
    """Heap ids of the leaves of a left-complete binary tree, left to right."""
    if k == 1:
        return [1]
    top = 1 << ((2 * k - 1).bit_length() - 1)
    return list(range(top, 2 * k)) + list(range(k, top))


def _leaf_depth(index: int, k: int) -> int:
    if k == 1:
        return 1
    return _leaf_ids(k)[index].bit_length() - 1


class Stabilizer:
    """Protocol state of every online node plus the re-embedding logic.

    The stabilizer mirrors the forest's child lists in ``kids`` because it
    processes re-joins one at a time after the forest has already placed all
    of them.
    """

    def __init__(self, forest: SpanningForest, emb: EmbeddingParams,
                 params: StabParams, seed: int = 0):
        self.forest = forest
        self.emb = emb
        self.params = params
        self.seed = seed
        n = forest.graph.n
        if params.obfuscated_counts:
            self.self_count = [draw_obfuscated_count(v, params.q, seed) for v in range(n)]
        else:
            self.self_count = [1] * n
        self.coords: dict[int, Coordinate] = {}
        self.cont: dict[int, int] = {}
        self.mass: dict[int, int] = {}
        self.kids: dict[int, list[int]] = {}
        self.csize: dict[int, dict[int, int]] = {}
        self.size: dict[int, int] = {}
        self.n_est: dict[int, int] = {}
        self._requests: dict[int, bool] = {}
        self._dirty: set[int] = set()
        # roots whose whole tree was embedded with the current sizes in this event
        self._fresh: set[int] = set()

    # -- setup --------------------------------------------------------------

    def initialize(self) -> StabOutcome:
        out = StabOutcome()
        for root in self.forest.roots():
            self.init_component(root, out, count_sizes=False)
        return out

    def init_component(self, root: int, out: StabOutcome, count_sizes: bool = True) -> None:
        """Fresh size aggregation, root embedding and estimate broadcast."""
        order = self._aggregate(root)
        if count_sizes:
            out.update += len(order) - 1
        self._set_coord(root, ())
        self._dirty.add(root)
        self.n_est[root] = self.size[root]
        self._reembed(root, out)
        out.broadcast += self.broadcast_estimate(root)

    def _aggregate(self, root: int) -> list[int]:
        """Copy child lists from the forest and recompute every subtree size."""
        f = self.forest
        order = f.subtree(root)
        for u in order:
            self.kids[u] = list(f.children[u])
        for u in reversed(order):
            cs = {c: self.size[c] for c in self.kids[u]}
            self.csize[u] = cs
            self.size[u] = self.self_count[u] + sum(cs.values())
        return order

    def replace_subtrees(self, root: int, absorbed: set[int], out: StabOutcome) -> None:
        """Re-embed after a rebuild that kept ``root`` and its old coordinates.

        The smallest subtree containing every changed child list and every
        attachment point of an absorbed node is treated as a replaced subtree
        ``T_u``: ``u`` re-embeds if the criterion holds, otherwise the request
        climbs toward the root as in :meth:`stabilize`.
        """
        f = self.forest
        old_parent = {}
        old_size = {}
        dirty = []
        for q in f.subtree(root):
            if q in absorbed:
                continue
            old_size[q] = self.size[q]
            for c in self.kids[q]:
                old_parent[c] = q
            if self.kids[q] != f.children[q]:
                dirty.append(q)
        for x in absorbed:
            p = f.parent[x]
            if p not in absorbed:
                dirty.append(p)
        self._touch(root)
        order = self._aggregate(root)
        # a node reports its size when it has a new parent or a new subtree size
        out.update += sum(1 for x in order[1:]
                          if old_parent.get(x) != f.parent[x] or old_size.get(x) != self.size[x])
        u = self._common_ancestor(dirty)
        while f.parent[u] is not None and not self.criterion(u):
            u = f.parent[u]
        if f.parent[u] is None:
            self._root_request(root, False)
            out.escalated_to_root = True
        else:
            self._reembed(u, out)
            self._root_request(root, True)

    def _common_ancestor(self, nodes) -> int:
        f = self.forest
        paths = [f.path_to_root(x)[::-1] for x in nodes]
        shortest = min(paths, key=len)
        lca = shortest[0]
        for i, x in enumerate(shortest):
            if any(p[i] != x for p in paths):
                break
            lca = x
        return lca

    # -- primitives ---------------------------------------------------------

    def _set_coord(self, v: int, x: Coordinate) -> None:
        self.coords[v] = x
        self.cont[v] = prefix_mass(x, self.emb)
        self._dirty.add(v)

    def _touch(self, u: int) -> None:
        self._fresh.discard(self.forest.root_of.get(u))

    def _reembed(self, u: int, out: StabOutcome) -> None:
        if self.forest.parent[u] is None:
            self._fresh.add(u)
        else:
            self._touch(u)
        assigned = embed_subtree(self.kids, self.size, u, self.coords[u], self.emb)
        for x, coord in assigned.items():
            self._set_coord(x, coord)
        self._dirty.add(u)
        out.embed += len(assigned)
        out.reembedded.append(u)

    def broadcast_estimate(self, root: int) -> int:
        return len(self.forest.members[root]) - 1

    def virtual_level(self, u: int) -> int:
        """Depth of ``u`` once every child list is expanded to a binary tree."""
        f = self.forest
        vl = 0
        p = f.parent[u]
        while p is not None:
            kids = self.kids[p]
            vl += _leaf_depth(kids.index(u), len(kids))
            u, p = p, f.parent[p]
        return vl

    def _level(self, u: int) -> int:
        if self.params.virtual_tree:
            return self.virtual_level(u)
        return self.forest.level[u]

    def _holds(self, cont: int, size: int, level: int, root: int) -> bool:
        # n_est*g*cont/size <= g*(1+c+level), with g cancelled and cont scaled by 2^(bL)
        return self.n_est[root] * cont <= (1 + self.params.c + level) * size * self.emb.total

    def criterion(self, u: int) -> bool:
        return self._holds(self.cont[u], self.size[u], self._level(u), self.forest.root_of[u])

    def _root_request(self, root: int, b: bool) -> None:
        self._requests[root] = self._requests.get(root, True) and b

    # -- Algorithm S(A) -----------------------------------------------------

    def stabilize(self, u: int, v: int, new_size: int | None, b: bool,
                  out: StabOutcome | None = None, escalated: bool = False) -> StabOutcome:
        """Process an updated child size at ``u`` and walk toward the root.

        ``new_size=None`` removes child ``v``. ``escalated`` marks a request
        relayed from below (as opposed to the first node noticing a change);
        only such requests may be served by virtual-tree group rebalancing.
        """
        if out is None:
            out = StabOutcome()
        parent = self.forest.parent
        while True:
            cs = self.csize[u]
            if new_size is None:
                cs.pop(v, None)
            else:
                cs[v] = new_size
            self.size[u] = self.self_count[u] + sum(cs.values())
            p = parent[u]
            if p is None:
                self._root_request(u, b)
                if not b:
                    out.escalated_to_root = True
                return out
            if not b:
                done = False
                if escalated and self.params.virtual_tree:
                    done = self.virtual_rebalance(u, v, out)
                if not done and self.criterion(u):
                    self._reembed(u, out)
                    done = True
                b = done
            out.update += 1
            u, v, new_size, escalated = p, u, self.size[u], not b

    def virtual_rebalance(self, u: int, child: int, out: StabOutcome) -> bool:
        """Try to rebalance only a group of ``u``'s children.

        Children are the leaves of a left-complete binary tree. Starting at
        the requesting child's virtual parent, each virtual node tests the
        re-embedding criterion on the union of its leaves' ranges at its
        virtual level; the first one that passes redistributes that range.
        The virtual root (``u`` itself) is left to the ordinary test.
        """
        kids = self.kids[u]
        k = len(kids)
        if k < 3:
            # with two or fewer leaves the only internal node is u itself
            return False
        leaves = _leaf_ids(k)
        h = leaves[kids.index(child)] >> 1
        base = self.virtual_level(u)
        space = self.emb.space
        root = self.forest.root_of[u]
        while h > 1:
            hd = h.bit_length() - 1
            group = [c for c, lid in zip(kids, leaves)
                     if lid >> (lid.bit_length() - 1 - hd) == h]
            lo = self.coords[group[0]][-1].lo
            hi = self.coords[group[-1]][-1].hi
            gsize = sum(self.csize[u][c] for c in group)
            gcont = self.cont[u] // space * (hi - lo)
            if self._holds(gcont, gsize, base + hd, root):
                try:
                    assigned = embed_group(self.kids, self.size, group, lo, hi,
                                           self.coords[u], self.emb)
                except CapacityError:
                    assigned = None
                if assigned is not None:
                    self._touch(u)
                    for x, coord in assigned.items():
                        self._set_coord(x, coord)
                    self._dirty.add(u)
                    out.embed += len(assigned)
                    out.reembedded.append(u)
                    return True
            h >>= 1
        return False

    def finish_event(self, out: StabOutcome) -> None:
        """Root-side decisions, taken once all messages of an event arrived."""
        g = self.params.g
        for root, b in sorted(self._requests.items()):
            if root not in self.forest.members or self.forest.parent.get(root, 0) is not None:
                continue
            n = self.size[root]
            est = self.n_est[root]
            if not b or n * g < est or n > est * g:
                self.n_est[root] = n
                # a root that just embedded the final tree sends only the estimate
                if root not in self._fresh:
                    self._reembed(root, out)
                out.broadcast += self.broadcast_estimate(root)
        self._requests.clear()
        self._fresh.clear()

    # -- churn entry points -------------------------------------------------

    def _attach_state(self, v: int, p: int) -> None:
        self._touch(p)
        self.kids[v] = []
        self.csize[v] = {}
        self.size[v] = self.self_count[v]
        self.kids[p].append(v)
        self._dirty.add(p)

    def _join(self, v: int, p: int, out: StabOutcome) -> None:
        self._attach_state(v, p)
        self.csize[p][v] = self.size[v]
        self.size[p] = self.self_count[p] + sum(self.csize[p].values())
        placed = False
        if self.params.simple_join:
            siblings = [self.coords[c] for c in self.kids[p] if c != v]
            try:
                iv = assign_preliminary_child_interval(siblings, self.emb)
            except CapacityError:
                pass
            else:
                if len(self.coords[p]) < self.emb.L:
                    self._set_coord(v, self.coords[p] + (iv,))
                    out.embed += 1
                    placed = True
        if not placed:
            self._reembed(p, out)
        self.stabilize(p, v, self.size[v], True, out)

    def on_join(self, v: int, parent: int, out: StabOutcome | None = None) -> StabOutcome:
        """Newly attached leaf ``v`` under ``parent``; a complete event."""
        if out is None:
            out = StabOutcome()
        self._join(v, parent, out)
        self.finish_event(out)
        return out

    def handle_join(self, v: int, outcome: JoinOutcome) -> StabOutcome:
        out = StabOutcome()
        r = outcome.rebuilt
        if r is not None:
            self._drop_stale_roots()
            if r in outcome.absorbed:
                self.init_component(r, out)
            else:
                self.replace_subtrees(r, outcome.absorbed, out)
                self.finish_event(out)
            return out
        return self.on_join(v, outcome.parent, out)

    def _drop_stale_roots(self) -> None:
        for r in [r for r in self.n_est if r not in self.forest.members]:
            del self.n_est[r]

    def _forget(self, u: int) -> None:
        for d in (self.coords, self.cont, self.mass, self.kids, self.csize, self.size):
            d.pop(u, None)
        self._dirty.discard(u)

    def parent_still_balanced(self, p: int) -> bool:
        """Whether ``p`` can absorb a departed child's region without re-embedding.

        Only ``p``'s own mass grows when a child subtree leaves, so the
        allocation stays balanced iff ``n_est * g * mu(B(p)) <= f(p)``.
        """
        own = self.cont[p] - sum(self.cont[c] for c in self.kids[p])
        return self._holds(own, 1, self._level(p), self.forest.root_of[p])

    def on_departure(self, v: int, outcome: DepartureOutcome) -> StabOutcome:
        """Departure of ``v``: parent update, re-joins, new components, root check."""
        out = StabOutcome()
        self._forget(v)
        for u in outcome.detached:
            self._forget(u)
        p = outcome.parent
        if p is not None and self.forest.root_of.get(p) not in outcome.rebuilt:
            self._touch(p)
            self.kids[p].remove(v)
            self._dirty.add(p)
            self.stabilize(p, v, None, self.parent_still_balanced(p), out)
            rej = StabOutcome()
            for x, y in outcome.rejoins:
                self._join(x, y, rej)
            out.rejoin += rej.total
            out.reembedded.extend(rej.reembedded)
        self._drop_stale_roots()
        for r in outcome.rebuilt:
            for u in self.forest.members[r]:
                self._forget(u)
            self.init_component(r, out)
        self.finish_event(out)
        return out

    # -- measurement --------------------------------------------------------

    def refresh_masses(self) -> None:
        cont = self.cont
        for u in self._dirty:
            if u in cont:
                m = cont[u]
                for c in self.kids[u]:
                    m -= cont[c]
                self.mass[u] = m
        self._dirty.clear()

    def address_mass(self, v: int) -> AddressMass:
        self.refresh_masses()
        return AddressMass(self.mass[v], self.emb.mass_bits)

    def component_mass(self, root: int) -> int:
        self.refresh_masses()
        return sum(self.mass[u] for u in self.forest.members[root])

    def virtual_depth(self, root: int) -> int:
        f = self.forest
        best = 0
        stack = [(root, 0)]
        while stack:
            u, d = stack.pop()
            best = max(best, d)
            kids = self.kids[u]
            k = len(kids)
            if k:
                depths = [1] * k if k == 1 else [lid.bit_length() - 1 for lid in _leaf_ids(k)]
                stack.extend((c, d + dc) for c, dc in zip(kids, depths))
        return best

    def check(self) -> None:
        """Compare every cached quantity with a from-scratch recomputation."""
        f = self.forest
        emb = self.emb
        self.refresh_masses()
        for root, nodes in f.members.items():
            if self.coords[root] != ():
                raise ConsistencyError(f"root {root} has a non-empty coordinate")
            total = 0
            for u in nodes:
                if self.kids[u] != f.children[u]:
                    raise ConsistencyError(f"child lists of {u} diverged from the forest")
                expect = self.self_count[u] + sum(self.size[c] for c in self.kids[u])
                if self.size[u] != expect:
                    raise ConsistencyError(f"|V_{u}| cached {self.size[u]}, actual {expect}")
                if self.csize[u] != {c: self.size[c] for c in self.kids[u]}:
                    raise ConsistencyError(f"child sizes at {u} are stale")
                x = self.coords[u]
                if self.cont[u] != prefix_mass(x, emb):
                    raise ConsistencyError(f"cont({u}) stale")
                prev_hi = 0
                for c in self.kids[u]:
                    xc = self.coords[c]
                    if xc[:-1] != x:
                        raise ConsistencyError(f"coordinate of {c} does not extend its parent's")
                    lo, hi = xc[-1]
                    if not prev_hi <= lo < hi <= emb.space:
                        raise ConsistencyError(f"child interval of {c} overlaps or is empty")
                    prev_hi = hi
                m = self.cont[u] - sum(self.cont[c] for c in self.kids[u])
                if m != self.mass[u] or m < 0:
                    raise ConsistencyError(f"mass of {u} stale or negative")
                total += m
            if total != emb.total:
                raise ConsistencyError(f"masses of component {root} sum to {total}/{emb.total}")
            g = self.params.g
            n, est = self.size[root], self.n_est[root]
            if n * g < est or n > est * g:
                raise ConsistencyError(f"estimate {est} out of range for size {n}")
