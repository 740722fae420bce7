import heapq
import math
import random

import pytest

from bdcat.churn import (
    DEPARTURE,
    JOIN,
    ChurnDistributions,
    ChurnProcess,
    Constant,
    Exponential,
    LogNormal,
    Weibull,
    default_distributions,
    init_states,
    load_trace,
)
from bdcat.errors import ParameterError, ParseError


def test_online_probability_formula():
    d = ChurnDistributions(Exponential(1.0), Exponential(3.0))
    assert d.p_online == 0.25
    assert default_distributions().p_online == pytest.approx(0.4)


def test_distribution_means():
    rng = random.Random(1)
    for dist in (Exponential(2.0), LogNormal.from_mean(1.5, 1.0), Weibull(0.7, 3.0)):
        xs = [dist.sample(rng) for _ in range(200_000)]
        assert sum(xs) / len(xs) == pytest.approx(dist.mean, rel=0.03)
    with pytest.raises(ParameterError):
        Exponential(0)
    with pytest.raises(ParameterError):
        LogNormal(0.0, 0.0)


def test_residual_time_of_constant_session():
    class Half:
        def random(self):
            return 0.5

    d = ChurnDistributions(Constant(3.0), Constant(1.0))
    online, events = init_states(1, d, Half())
    assert online == {0}
    assert events[0].time == 1.5 and events[0].kind == DEPARTURE


def test_toggle_scheduling():
    d = ChurnDistributions(Constant(3.0), Constant(2.0))
    proc = ChurnProcess(1, d, seed=0)
    first = proc.next_event()
    second = proc.next_event()
    assert second.kind != first.kind
    gap = 2.0 if first.kind == DEPARTURE else 3.0
    assert second.time == pytest.approx(first.time + gap)


def test_equal_times_break_by_node_id():
    d = ChurnDistributions(Constant(1.0), Constant(1.0))
    proc = ChurnProcess(5, d, seed=0)
    proc.queue = [(1.0, v, JOIN) for v in (3, 1, 4)]
    heapq.heapify(proc.queue)
    assert [proc.next_event().node for _ in range(3)] == [1, 3, 4]


def test_same_seed_same_sequence():
    a = ChurnProcess(500, default_distributions(), seed=4)
    b = ChurnProcess(500, default_distributions(), seed=4)
    assert a.initial_online == b.initial_online
    assert [a.next_event() for _ in range(2000)] == [b.next_event() for _ in range(2000)]


def test_initial_online_count_band():
    proc = ChurnProcess(9222, default_distributions(), seed=0)
    sigma = math.sqrt(9222 * 0.4 * 0.6)
    assert abs(len(proc.online) - 9222 * 0.4) <= 3 * sigma
    assert 3500 <= len(proc.online) <= 4100


def test_long_run_online_fraction():
    d = ChurnDistributions(Exponential(1.0), Exponential(1.5))
    proc = ChurnProcess(2000, d, seed=1)
    fractions = []
    for i in range(100_000):
        proc.next_event()
        if i % 1000 == 999:
            fractions.append(len(proc.online) / 2000)
    mean = sum(fractions) / len(fractions)
    # binomial spread of one snapshot, averaged over 100 nearly independent ones
    sigma = math.sqrt(0.4 * 0.6 / 2000)
    assert abs(mean - 0.4) <= 3 * sigma


def test_online_set_tracks_events():
    proc = ChurnProcess(300, default_distributions(), seed=2)
    online = set(proc.online)
    for _ in range(3000):
        ev = proc.next_event()
        if ev.kind == JOIN:
            assert ev.node not in online
            online.add(ev.node)
        else:
            assert ev.node in online
            online.remove(ev.node)
    assert online == proc.online


def test_trace_loading():
    d = load_trace("1.0 3.0\n")
    assert d.p_online == 0.25
    d = load_trace("# hours\n1 2\n3 4\n")
    rng = random.Random(0)
    draws = [d.session.sample(rng) for _ in range(4000)]
    assert set(draws) == {1.0, 3.0}
    assert draws.count(1.0) / 4000 == pytest.approx(0.5, abs=0.03)
    for bad in ("", "1.0 -2\n", "1 2 3\n", "a b\n"):
        with pytest.raises(ParseError):
            load_trace(bad)
