"""One simulation run: setup, churn loop, message accounting, imbalance.

Per event the forest is updated first, then the stabilization protocol runs,
then the step is measured. ``baseline_cost`` is what a full re-embedding of
the affected component would have cost: informing the root (the event
node's level) plus one coordinate per other component member.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path

from .chord import ChordRing, chord_join, chord_leave
from .churn import (
    DEPARTURE,
    JOIN,
    ChurnDistributions,
    ChurnProcess,
    Constant,
    Exponential,
    LogNormal,
    Weibull,
    default_distributions,
    load_trace,
)
from .embedding import HASH_NAME, EmbeddingParams, ratio_to_float
from .errors import BdcatError, ConfigError
from .forest import SpanningForest, draw_tickets
from .graph import Graph, generate_barabasi_albert, generate_erdos_renyi, parse_edge_list
from .stabilization import StabParams, Stabilizer

log = logging.getLogger(__name__)

STEP_COLUMNS = (
    "step", "kind", "msgs_update", "msgs_embed", "msgs_broadcast", "msgs_rejoin",
    "baseline_cost", "components", "max_depth", "maxF_num", "maxF_den",
)


@dataclass(frozen=True)
class TopologySpec:
    kind: str = "ba"  # ba | er | edgelist
    n: int = 1000
    m: int = 5
    avg_degree: float = 10.58
    path: str | None = None
    seed: int = 0

    def build(self) -> Graph:
        return _build_graph(self)


@lru_cache(maxsize=8)
def _build_graph(spec: TopologySpec) -> Graph:
    if spec.kind == "ba":
        return generate_barabasi_albert(spec.n, spec.m, spec.seed)
    if spec.kind == "er":
        return generate_erdos_renyi(spec.n, spec.avg_degree, spec.seed)
    if spec.kind == "edgelist":
        if not spec.path:
            raise ConfigError("edge-list topology needs a path", "topology.path")
        return parse_edge_list(Path(spec.path).read_text(encoding="utf-8"))
    raise ConfigError(f"unknown topology kind {spec.kind!r}", "topology.kind")


@dataclass(frozen=True)
class DistSpec:
    kind: str = "lognormal"  # exponential | lognormal | weibull | constant
    mean: float = 1.0
    sigma: float = 1.0
    shape: float = 1.0

    def build(self):
        if self.kind == "exponential":
            return Exponential(self.mean)
        if self.kind == "lognormal":
            return LogNormal.from_mean(self.mean, self.sigma)
        if self.kind == "weibull":
            return Weibull(self.shape, self.mean / math.gamma(1 + 1 / self.shape))
        if self.kind == "constant":
            return Constant(self.mean)
        raise ConfigError(f"unknown distribution {self.kind!r}", "churn")


@dataclass(frozen=True)
class ChurnSpec:
    session: DistSpec = DistSpec(mean=1.0)
    intersession: DistSpec = DistSpec(mean=1.5)
    trace: str | None = None

    def build(self) -> ChurnDistributions:
        if self.trace:
            return load_trace(Path(self.trace).read_text(encoding="utf-8"))
        return ChurnDistributions(self.session.build(), self.intersession.build())


@dataclass(frozen=True)
class SimConfig:
    topology: TopologySpec = TopologySpec()
    churn: ChurnSpec = ChurnSpec()
    b: int = 32
    L: int = 32
    c: int = 1
    g: float = 2.0
    simple_join: bool = False
    virtual_tree: bool = False
    obfuscated_counts: bool = False
    q: float = 0.25
    events: int = 100_000
    seed: int = 0
    strict_min_depth: bool = False
    check_invariants: bool = False
    chord: bool = True

    @property
    def variant(self) -> str:
        if self.virtual_tree:
            return "virtual_tree"
        if self.simple_join:
            return "simple_join"
        return "original"

    def to_dict(self) -> dict:
        return asdict(self)

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class StepRecord:
    step: int
    kind: str
    msgs_update: int
    msgs_embed: int
    msgs_broadcast: int
    msgs_rejoin: int
    baseline_cost: int
    components: int
    max_depth: int
    maxF: Fraction
    depths: dict[int, int] = field(default_factory=dict, repr=False)
    chord_maxF: Fraction | None = None
    safety_ok: bool = True

    @property
    def cost(self) -> int:
        return self.msgs_update + self.msgs_embed + self.msgs_broadcast + self.msgs_rejoin

    def row(self) -> list:
        return [self.step, self.kind, self.msgs_update, self.msgs_embed, self.msgs_broadcast,
                self.msgs_rejoin, self.baseline_cost, self.components, self.max_depth,
                self.maxF.numerator, self.maxF.denominator]


@dataclass
class RunSummary:
    seed: int
    config: dict
    config_hash: str
    events: int
    mean_cost: float
    mean_baseline: float
    cost_ratio: float
    mean_F: float
    max_F: float
    cost_percentiles: dict[str, float]
    F_percentiles: dict[str, float]
    chord_mean_F: float | None
    chord_max_F: float | None
    safety_violations: int
    mean_depth: float
    max_depth: int
    mean_online: float
    hash_function: str = HASH_NAME

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


@dataclass
class RunResult:
    summary: RunSummary
    steps: list[StepRecord]

    def steps_csv(self) -> str:
        return steps_to_csv(self.steps)


def steps_to_csv(steps) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(STEP_COLUMNS)
    for s in steps:
        w.writerow(s.row())
    return buf.getvalue()


def baseline_full_reembed_cost(level: int, component_size: int) -> int:
    """Messages to tell the root about the event and re-embed the whole tree."""
    return level + component_size - 1


def imbalance_snapshot(stab: Stabilizer) -> tuple[Fraction, Fraction]:
    """``(mean F over online nodes, max F)`` with ``F = mass * component size``."""
    stab.refresh_masses()
    mass = stab.mass
    total_f = 0
    best = 0
    online = 0
    for nodes in stab.forest.members.values():
        k = len(nodes)
        ms = [mass[u] for u in nodes]
        total_f += sum(ms) * k
        best = max(best, max(ms) * k)
        online += k
    den = stab.emb.total
    return Fraction(total_f, den * online), Fraction(best, den)


def _percentiles(values) -> dict[str, float]:
    if not values:
        return {}
    xs = sorted(values)
    out = {}
    for p in (50, 90, 99):
        idx = min(len(xs) - 1, max(0, math.ceil(p / 100 * len(xs)) - 1))
        out[f"p{p}"] = float(xs[idx])
    return out


class Simulation:
    """Mutable state of a single run; drive it with :meth:`step`."""

    def __init__(self, config: SimConfig):
        self.config = config
        self.graph = config.topology.build()
        n = self.graph.n
        self.emb = EmbeddingParams(config.b, config.L)
        self.params = StabParams(config.c, config.g, config.simple_join, config.virtual_tree,
                                 config.obfuscated_counts, config.q)
        self.churn = ChurnProcess(n, config.churn.build(), config.seed)
        tickets = draw_tickets(n, hash_seed("tickets", config.seed))
        self.forest = SpanningForest.build(self.graph, self.churn.online, tickets,
                                           config.strict_min_depth)
        self.stab = Stabilizer(self.forest, self.emb, self.params, config.seed)
        self.stab.initialize()
        self.ring: ChordRing | None = None
        self._chord_seed = hash_seed("chord", config.seed)
        if config.chord:
            self.ring = ChordRing(config.b)
            for v in sorted(self.churn.online):
                chord_join(self.ring, v, self._chord_seed)
        self.step_index = 0
        if config.check_invariants:
            self.forest.validate()
            self.stab.check()

    def step(self) -> StepRecord:
        ev = self.churn.next_event()
        v = ev.node
        f = self.forest
        try:
            if ev.kind == JOIN:
                jo = f.handle_join(v)
                out = self.stab.handle_join(v, jo)
                baseline = baseline_full_reembed_cost(f.level[v], len(f.members[f.root_of[v]]))
                if self.ring is not None:
                    chord_join(self.ring, v, self._chord_seed)
            else:
                level = f.level[v]
                size = len(f.members[f.root_of[v]])
                do = f.handle_departure(v)
                out = self.stab.on_departure(v, do)
                baseline = baseline_full_reembed_cost(level, size)
                if self.ring is not None:
                    chord_leave(self.ring, v)
        except BdcatError as exc:
            raise type(exc)(f"step {self.step_index}: {exc}") from exc
        if self.config.check_invariants:
            f.validate(require_min_depth=self.config.strict_min_depth)
            self.stab.check()
        rec = self._measure(ev.kind, out, baseline)
        self.step_index += 1
        return rec

    def _measure(self, kind, out, baseline) -> StepRecord:
        stab = self.stab
        f = self.forest
        stab.refresh_masses()
        mass = stab.mass
        level = f.level
        virtual = self.params.virtual_tree
        g = self.params.g
        c = self.params.c
        space = self.emb.space
        L1 = self.emb.L + 1
        best_num = 0
        depths = {}
        safe = True
        for root, nodes in f.members.items():
            k = len(nodes)
            top = max(map(mass.__getitem__, nodes)) * k
            if top > best_num:
                best_num = top
            d = stab.virtual_depth(root) if virtual else max(map(level.__getitem__, nodes))
            depths[root] = d
            # max F <= g(1+c+depth) + n(L+1)/2^b, exactly
            bound = g * (1 + c + d) + Fraction(k * L1, space)
            if Fraction(top, self.emb.total) > bound:
                safe = False
        rec = StepRecord(
            step=self.step_index, kind=kind, msgs_update=out.update, msgs_embed=out.embed,
            msgs_broadcast=out.broadcast, msgs_rejoin=out.rejoin, baseline_cost=baseline,
            components=len(f.members), max_depth=max(depths.values(), default=0),
            maxF=Fraction(best_num, self.emb.total), depths=depths, safety_ok=safe,
        )
        if self.ring is not None and len(self.ring):
            rec.chord_maxF = Fraction(self.ring.max_gap() * len(self.ring), self.ring.size)
        return rec


def hash_seed(stream: str, seed: int) -> int:
    h = hashlib.blake2b(f"{stream}/{seed}".encode(), digest_size=8)
    return int.from_bytes(h.digest(), "big")


def run_simulation(config: SimConfig, keep_steps: bool = True) -> RunResult:
    sim = Simulation(config)
    steps = []
    costs, baselines, fs, chord_fs, depths, onlines = [], [], [], [], [], []
    violations = 0
    for _ in range(config.events):
        rec = sim.step()
        costs.append(rec.cost)
        baselines.append(rec.baseline_cost)
        fs.append(float(rec.maxF))
        depths.append(rec.max_depth)
        onlines.append(len(sim.forest.online))
        if rec.chord_maxF is not None:
            chord_fs.append(float(rec.chord_maxF))
        if not rec.safety_ok:
            violations += 1
        if keep_steps:
            steps.append(rec)
    summary = summarize(config, costs, baselines, fs, chord_fs, depths, onlines, violations)
    log.info("run seed=%s c=%s g=%s %s: ratio=%.4f meanF=%.3f", config.seed, config.c,
             config.g, config.variant, summary.cost_ratio, summary.mean_F)
    return RunResult(summary, steps)


def summarize(config, costs, baselines, fs, chord_fs, depths, onlines, violations) -> RunSummary:
    n = len(costs)
    mean_cost = sum(costs) / n if n else 0.0
    mean_base = sum(baselines) / n if n else 0.0
    return RunSummary(
        seed=config.seed,
        config=config.to_dict(),
        config_hash=config.config_hash(),
        events=n,
        mean_cost=mean_cost,
        mean_baseline=mean_base,
        cost_ratio=mean_cost / mean_base if mean_base else 0.0,
        mean_F=sum(fs) / n if n else 0.0,
        max_F=max(fs, default=0.0),
        cost_percentiles=_percentiles(costs),
        F_percentiles=_percentiles(fs),
        chord_mean_F=sum(chord_fs) / len(chord_fs) if chord_fs else None,
        chord_max_F=max(chord_fs) if chord_fs else None,
        safety_violations=violations,
        mean_depth=sum(depths) / n if n else 0.0,
        max_depth=max(depths, default=0),
        mean_online=sum(onlines) / n if n else 0.0,
    )
