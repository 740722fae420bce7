"""Session/intersession churn and the global join/departure event queue."""

from __future__ import annotations

import heapq
import math
import random
from dataclasses import dataclass
from typing import NamedTuple, Protocol

from .errors import ParameterError, ParseError

JOIN = "join"
DEPARTURE = "departure"


class Distribution(Protocol):
    def sample(self, rng: random.Random) -> float: ...

    @property
    def mean(self) -> float: ...


@dataclass(frozen=True)
class Exponential:
    mean: float

    def __post_init__(self):
        if not self.mean > 0:
            raise ParameterError("exponential mean must be positive")

    def sample(self, rng: random.Random) -> float:
        return rng.expovariate(1.0 / self.mean)


@dataclass(frozen=True)
class LogNormal:
    mu: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ParameterError("lognormal sigma must be positive")

    @classmethod
    def from_mean(cls, mean: float, sigma: float) -> LogNormal:
        if not mean > 0:
            raise ParameterError("lognormal mean must be positive")
        return cls(math.log(mean) - sigma * sigma / 2, sigma)

    @property
    def mean(self) -> float:
        return math.exp(self.mu + self.sigma ** 2 / 2)

    def sample(self, rng: random.Random) -> float:
        return rng.lognormvariate(self.mu, self.sigma)


@dataclass(frozen=True)
class Weibull:
    shape: float
    scale: float

    def __post_init__(self):
        if not (self.shape > 0 and self.scale > 0):
            raise ParameterError("Weibull shape and scale must be positive")

    @property
    def mean(self) -> float:
        return self.scale * math.gamma(1 + 1 / self.shape)

    def sample(self, rng: random.Random) -> float:
        return rng.weibullvariate(self.scale, self.shape)


@dataclass(frozen=True)
class Constant:
    value: float

    def __post_init__(self):
        if not self.value > 0:
            raise ParameterError("constant length must be positive")

    @property
    def mean(self) -> float:
        return self.value

    def sample(self, rng: random.Random) -> float:
        return self.value


@dataclass(frozen=True)
class Empirical:
    """Uniform draws with replacement from measured lengths."""

    values: tuple[float, ...]

    def __post_init__(self):
        if not self.values:
            raise ParameterError("empirical distribution needs samples")
        if any(not v > 0 for v in self.values):
            raise ParameterError("empirical lengths must be positive")

    @property
    def mean(self) -> float:
        return sum(self.values) / len(self.values)

    def sample(self, rng: random.Random) -> float:
        return self.values[rng.randrange(len(self.values))]


@dataclass(frozen=True)
class ChurnDistributions:
    session: Distribution
    intersession: Distribution

    @property
    def p_online(self) -> float:
        s, i = self.session.mean, self.intersession.mean
        return s / (s + i)


def default_distributions() -> ChurnDistributions:
    """Placeholder heavy-tailed churn: mean session 1h, intersession 1.5h (40% online)."""
    return ChurnDistributions(LogNormal.from_mean(1.0, 1.0), LogNormal.from_mean(1.5, 1.0))


def load_trace(text: str) -> ChurnDistributions:
    """Two positive columns per line: session hours, intersession hours."""
    sessions, inters = [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError("expected 'session intersession'", lineno)
        try:
            s, i = float(parts[0]), float(parts[1])
        except ValueError:
            raise ParseError(f"non-numeric value in {line!r}", lineno) from None
        if not (s > 0 and i > 0) or math.isinf(s) or math.isinf(i):
            raise ParseError("lengths must be positive and finite", lineno)
        sessions.append(s)
        inters.append(i)
    if not sessions:
        raise ParseError("trace contains no samples")
    return ChurnDistributions(Empirical(tuple(sessions)), Empirical(tuple(inters)))


class ChurnEvent(NamedTuple):
    time: float
    node: int
    kind: str


def init_states(n: int, dists: ChurnDistributions, rng: random.Random
                ) -> tuple[set[int], list[ChurnEvent]]:
    """Online set and each node's first toggle.

    A node is online with probability ``E(L_S) / (E(L_S) + E(L_I))`` and is
    placed at a uniformly random point of a freshly drawn session (or
    intersession, if offline).
    """
    p = dists.p_online
    online: set[int] = set()
    events = []
    for v in range(n):
        if rng.random() < p:
            online.add(v)
            events.append(ChurnEvent(dists.session.sample(rng) * rng.random(), v, DEPARTURE))
        else:
            events.append(ChurnEvent(dists.intersession.sample(rng) * rng.random(), v, JOIN))
    return online, events


class ChurnProcess:
    """Deterministic event stream for ``n`` nodes given a seed."""

    def __init__(self, n: int, dists: ChurnDistributions, seed: int):
        self.dists = dists
        self.rng = random.Random(f"churn/{seed}")
        self.online, events = init_states(n, dists, self.rng)
        self.initial_online = frozenset(self.online)
        self.queue = [(e.time, e.node, e.kind) for e in events]
        heapq.heapify(self.queue)
        self.now = 0.0

    def next_event(self) -> ChurnEvent:
        """Pop the earliest event (ties: lower node id) and schedule its toggle."""
        t, v, kind = heapq.heappop(self.queue)
        self.now = t
        if kind == JOIN:
            self.online.add(v)
            nxt = ChurnEvent(t + self.dists.session.sample(self.rng), v, DEPARTURE)
        else:
            self.online.discard(v)
            nxt = ChurnEvent(t + self.dists.intersession.sample(self.rng), v, JOIN)
        heapq.heappush(self.queue, tuple(nxt))
        return ChurnEvent(t, v, kind)
