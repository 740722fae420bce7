import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from bdcat.embedding import (
    AddressMass,
    EmbeddingParams,
    Interval,
    address_distance,
    address_mass,
    assign_preliminary_child_interval,
    cil,
    closest_node_bruteforce,
    content_address,
    distance,
    dump_coordinates,
    embed_subtree,
    greedy_route,
    parse_coordinates,
    prefix_mass,
    ratio_to_float,
    sub,
)
from bdcat.errors import (
    CapacityError,
    DepthError,
    EmbeddingViolation,
    GreedyViolation,
    ParameterError,
    ParseError,
)
from bdcat.graph import Graph

R, U, V, W = 0, 1, 2, 3
FOUR_KIDS = {R: [U, V], U: [W], V: [], W: []}
FOUR_SIZES = {R: 4, U: 2, V: 1, W: 1}
B4L2 = EmbeddingParams(b=4, L=2)


def four_node():
    coords = {R: ()}
    coords.update(embed_subtree(FOUR_KIDS, FOUR_SIZES, R, (), B4L2))
    return coords


def sizes_of(children, root):
    sizes = {}

    def rec(u):
        sizes[u] = 1 + sum(rec(c) for c in children[u])
        return sizes[u]

    rec(root)
    return sizes


def test_four_node_intervals():
    coords = four_node()
    assert coords[U] == (Interval(0, 8),)
    assert coords[V] == (Interval(8, 12),)
    assert coords[W] == (Interval(0, 8), Interval(0, 8))


def test_three_node_floor_split():
    kids = {0: [1, 2], 1: [], 2: []}
    coords = embed_subtree(kids, {0: 3, 1: 1, 2: 1}, 0, (), EmbeddingParams(4, 4))
    assert coords == {1: (Interval(0, 5),), 2: (Interval(5, 10),)}


def test_singleton_embedding_is_empty():
    assert embed_subtree({0: []}, {0: 1}, 0, (), B4L2) == {}


def test_capacity_and_depth_errors():
    kids = {0: list(range(1, 21)), **{i: [] for i in range(1, 21)}}
    with pytest.raises(CapacityError):
        embed_subtree(kids, sizes_of(kids, 0), 0, (), EmbeddingParams(4, 4))
    chain = {0: [1], 1: [2], 2: [3], 3: []}
    with pytest.raises(DepthError):
        embed_subtree(chain, sizes_of(chain, 0), 0, (), EmbeddingParams(4, 2))
    with pytest.raises(ParameterError):
        EmbeddingParams(b=8, L=9)


def test_cil_and_distance_examples():
    addr = (3, 9)
    assert cil((Interval(0, 8),), addr) == 1
    assert cil((Interval(0, 8), Interval(0, 8)), addr) == 1
    assert cil((), addr) == 0
    assert distance((Interval(0, 8),), addr) == 1
    assert distance((Interval(0, 8), Interval(0, 8)), addr) == 2
    x = (Interval(0, 8), Interval(2, 3))
    assert distance(x, x) == 0
    assert sub(Interval(0, 8), Interval(2, 4)) and not sub(Interval(0, 8), Interval(6, 10))


def test_closest_node_examples():
    coords = four_node()
    assert [address_distance(coords[x], (3, 9)) for x in (R, U, W, V)] == [2, 1, 2, 3]
    assert closest_node_bruteforce(coords, (3, 9)) == U
    assert closest_node_bruteforce(coords, (13, 0)) == R
    assert closest_node_bruteforce({5: ()}, (1, 1)) == 5
    with pytest.raises(EmbeddingViolation):
        closest_node_bruteforce({1: (Interval(0, 8),), 2: (Interval(0, 8),)}, (1, 1))


def test_greedy_route_examples():
    coords = four_node()
    tree = Graph.from_edges(4, [(R, U), (R, V), (U, W)])
    assert greedy_route(tree, coords, V, (3, 9)) == (U, 2)
    assert greedy_route(tree, coords, U, (3, 9)) == (U, 0)
    assert greedy_route(tree, coords, W, (3, 9)) == (U, 1)


def test_greedy_route_detects_dead_end():
    # the tree edge r-u is missing, so routing from v gets stuck at r
    coords = four_node()
    path = Graph.from_edges(4, [(R, V), (U, W)])
    with pytest.raises(GreedyViolation):
        greedy_route(path, coords, V, (3, 9))


def test_four_node_masses_and_bruteforce():
    coords = four_node()
    masses = {x: address_mass(FOUR_KIDS, coords, x, B4L2) for x in coords}
    assert all(m.as_fraction() == Fraction(1, 4) for m in masses.values())
    counts = dict.fromkeys(coords, 0)
    for addr in itertools.product(range(16), repeat=2):
        counts[closest_node_bruteforce(coords, addr)] += 1
    assert counts == {x: 64 for x in coords}


def test_mass_edge_cases():
    p = EmbeddingParams(4, 2)
    assert address_mass({0: []}, {0: ()}, 0, p).as_fraction() == 1
    full = {0: [1, 2], 1: [], 2: []}
    coords = {0: (), 1: (Interval(0, 8),), 2: (Interval(8, 16),)}
    assert address_mass(full, coords, 0, p).numerator == 0
    # depth L: nothing below, the prefix product alone
    deep = {0: (), 1: (Interval(0, 8),), 2: (Interval(0, 8), Interval(0, 4))}
    kids = {0: [1], 1: [2], 2: []}
    assert address_mass(kids, deep, 2, p).as_fraction() == Fraction(8 * 4, 256)
    with pytest.raises(DepthError):
        prefix_mass((Interval(0, 1),) * 3, p)


def test_preliminary_interval():
    coords = four_node()
    assert assign_preliminary_child_interval([coords[U], coords[V]], B4L2) == Interval(12, 14)
    assert assign_preliminary_child_interval([], B4L2) == Interval(0, 8)
    with pytest.raises(CapacityError):
        assign_preliminary_child_interval([(Interval(0, 15),)], B4L2)


def test_address_mass_float_and_sum():
    m = AddressMass(3, 2) + AddressMass(1, 2)
    assert m.as_fraction() == 1 and float(m) == 1.0
    assert ratio_to_float(1 << 2000, 2001) == 0.5


def test_content_address_shape_and_determinism():
    p = EmbeddingParams(b=32, L=4)
    a = content_address(b"file-1", p)
    assert len(a) == 4 and a == content_address(b"file-1", p)
    assert a != content_address(b"file-2", p)
    assert content_address(b"file-1", EmbeddingParams(32, 4, hash_key=b"other")) != a
    assert all(0 <= x < 2**32 for x in a)


def test_content_address_uniform():
    p = EmbeddingParams(b=16, L=4)
    buckets = [[0] * 256 for _ in range(4)]
    for i in range(100_000):
        for j, x in enumerate(content_address(i.to_bytes(4, "big"), p)):
            buckets[j][x >> 8] += 1
    for counts in buckets:
        assert stats.chisquare(counts).pvalue > 0.01


def test_dump_roundtrip_and_errors():
    coords = four_node()
    text = dump_coordinates(coords)
    assert text.splitlines()[3] == "3 2 [0,8)[0,8)"
    assert parse_coordinates(text) == coords
    with pytest.raises(ParseError) as err:
        parse_coordinates("0 0\n1 2 [0,8)")
    assert err.value.line == 2


# -- random trees -------------------------------------------------------------


def random_tree(rng, n, max_depth):
    """Random parent pointers with depth <= max_depth; children in id order."""
    level = {0: 0}
    children = {0: []}
    for v in range(1, n):
        p = rng.choice([u for u in range(v) if level[u] < max_depth])
        level[v] = level[p] + 1
        children[v] = []
        children[p].append(v)
    return children, level


trees = st.builds(lambda seed, n: random_tree(random.Random(seed), n, 3),
                  st.integers(0, 10**9), st.integers(1, 12))


@settings(max_examples=60, deadline=None)
@given(trees)
def test_mass_formula_matches_bruteforce(tree):
    children, _ = tree
    p = EmbeddingParams(b=4, L=4)
    coords = {0: ()}
    coords.update(embed_subtree(children, sizes_of(children, 0), 0, (), p))
    counts = dict.fromkeys(coords, 0)
    for addr in itertools.product(range(16), repeat=4):
        counts[closest_node_bruteforce(coords, addr)] += 1
    for v in coords:
        assert address_mass(children, coords, v, p).numerator == counts[v]


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**9), st.integers(1, 200))
def test_static_balance_bound(seed, n):
    rng = random.Random(seed)
    children, _ = random_tree(rng, n, 32)
    p = EmbeddingParams(32, 32)
    coords = {0: ()}
    coords.update(embed_subtree(children, sizes_of(children, 0), 0, (), p))
    bound = Fraction(1, n) + p.delta
    total = 0
    for v in coords:
        m = address_mass(children, coords, v, p).as_fraction()
        assert m <= bound
        total += m
    assert total == 1


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**9), st.integers(2, 40))
def test_greedy_matches_bruteforce_on_random_graphs(seed, n):
    rng = random.Random(seed)
    children, _ = random_tree(rng, n, 8)
    edges = [(u, c) for u in children for c in children[u]]
    edges += [(rng.randrange(n), rng.randrange(n)) for _ in range(n)]
    g = Graph.from_edges(n, edges)
    p = EmbeddingParams(16, 8)
    coords = {0: ()}
    coords.update(embed_subtree(children, sizes_of(children, 0), 0, (), p))
    for _ in range(50):
        addr = tuple(rng.randrange(p.space) for _ in range(p.L))
        greedy_route(g, coords, rng.randrange(n), addr)


@given(st.lists(st.tuples(st.integers(0, 20), st.integers(1, 20)), max_size=5),
       st.lists(st.tuples(st.integers(0, 20), st.integers(1, 20)), max_size=5))
def test_distance_symmetric(a, b):
    x = tuple(Interval(lo, lo + w) for lo, w in a)
    y = tuple(Interval(lo, lo + w) for lo, w in b)
    assert distance(x, y) == distance(y, x) >= 0
    assert distance(x, x) == 0
