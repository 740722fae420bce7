"""Sweep configuration: JSON schema, defaults, validation and presets.

A config is a JSON object. Every key is optional except that a topology must
come from somewhere (the default is a 1000-node Barabasi-Albert graph)::

    {
      "topologies": [{"kind": "ba", "n": 1000, "m": 5, "seed": 0}],
      "b": 32, "L": 32,
      "c": [1, 5, 10], "g": [1.01, 2],
      "variants": ["original", "simple_join", "virtual_tree"],
      "q": 0.25,
      "churn": {"session": {"kind": "lognormal", "mean": 1.0, "sigma": 1.0},
                "intersession": {"kind": "lognormal", "mean": 1.5, "sigma": 1.0}},
      "seeds": [0, 1, 2], "events": 100000,
      "output": "results", "workers": 1
    }

``"topology": {...}`` is accepted as shorthand for a one-element list, and
``"preset": "full-sweep"`` starts from the full parameter grid.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace

from .errors import ConfigError
from .sim import ChurnSpec, DistSpec, SimConfig, TopologySpec

VARIANTS = {
    "original": {},
    "simple_join": {"simple_join": True},
    "virtual_tree": {"virtual_tree": True},
    "obfuscated": {"obfuscated_counts": True},
}

G_GRID = (1.001, 1.005, 1.01, 1.1, 1.2, 2.0)


@dataclass(frozen=True)
class SweepConfig:
    topologies: tuple[TopologySpec, ...] = (TopologySpec(),)
    b: int = 32
    L: int = 32
    c: tuple[int, ...] = (1,)
    g: tuple[float, ...] = (2.0,)
    variants: tuple[str, ...] = ("original",)
    q: float = 0.25
    churn: ChurnSpec = ChurnSpec()
    seeds: tuple[int, ...] = (0,)
    events: int = 100_000
    output: str = "results"
    workers: int = 1
    strict_min_depth: bool = False
    chord: bool = True

    def runs(self):
        """Every ``(topology index, SimConfig)`` of the grid, seeds innermost."""
        for ti, topo in enumerate(self.topologies):
            for variant in self.variants:
                for c in self.c:
                    for g in self.g:
                        for seed in self.seeds:
                            yield ti, SimConfig(
                                topology=topo, churn=self.churn, b=self.b, L=self.L,
                                c=c, g=g, q=self.q, events=self.events, seed=seed,
                                strict_min_depth=self.strict_min_depth, chord=self.chord,
                                **VARIANTS[variant],
                            )

    def to_dict(self) -> dict:
        return asdict(self)


PRESETS = {
    "full-sweep": dict(
        topologies=(TopologySpec(kind="ba", n=9222, m=5),),
        c=tuple(range(1, 11)),
        g=G_GRID,
        variants=("original", "simple_join", "virtual_tree"),
        seeds=tuple(range(20)),
        events=100_000,
    ),
    "topologies": dict(
        topologies=(
            TopologySpec(kind="ba", n=9222, m=5),
            TopologySpec(kind="er", n=9222, avg_degree=10.58),
            TopologySpec(kind="er", n=9222, avg_degree=922.2),
        ),
        seeds=tuple(range(20)),
    ),
    "smoke": dict(
        topologies=(TopologySpec(kind="ba", n=200, m=3),),
        c=(1, 5),
        g=(1.1, 2.0),
        seeds=(0, 1),
        events=500,
    ),
}


def _check_keys(data: dict, allowed, path: str) -> None:
    if not isinstance(data, dict):
        raise ConfigError("expected an object", path or "<root>")
    for key in data:
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r}", f"{path}.{key}" if path else key)


def _typed(value, kind, path):
    if kind is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"expected true/false, got {value!r}", path)
        return value
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"expected an integer, got {value!r}", path)
        return value
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"expected a number, got {value!r}", path)
        return float(value)
    if kind is str:
        if not isinstance(value, str):
            raise ConfigError(f"expected a string, got {value!r}", path)
        return value
    raise TypeError(kind)


def _object(cls, data, path, kinds):
    names = {f.name for f in fields(cls)}
    _check_keys(data, names, path)
    values = {}
    for key, value in data.items():
        kind = kinds[key]
        sub = f"{path}.{key}"
        values[key] = value if value is None and kind is str else _typed(value, kind, sub)
    return cls(**values)


def _topology(data, path) -> TopologySpec:
    kinds = dict(kind=str, n=int, m=int, avg_degree=float, path=str, seed=int)
    t = _object(TopologySpec, data, path, kinds)
    if t.kind not in ("ba", "er", "edgelist"):
        raise ConfigError(f"kind must be ba, er or edgelist, got {t.kind!r}", f"{path}.kind")
    if t.kind == "ba" and not 1 <= t.m < t.n:
        raise ConfigError(f"need 1 <= m < n, got m={t.m}, n={t.n}", f"{path}.m")
    if t.kind == "er" and not (t.n >= 2 and 0 < t.avg_degree <= t.n - 1):
        raise ConfigError(f"need 0 < avg_degree <= n-1, got {t.avg_degree}", f"{path}.avg_degree")
    if t.kind == "edgelist" and not t.path:
        raise ConfigError("edge-list topology needs a path", f"{path}.path")
    return t


def _dist(data, path) -> DistSpec:
    d = _object(DistSpec, data, path, dict(kind=str, mean=float, sigma=float, shape=float))
    if d.kind not in ("exponential", "lognormal", "weibull", "constant"):
        raise ConfigError(f"unknown distribution {d.kind!r}", f"{path}.kind")
    for name in ("mean", "sigma", "shape"):
        if not getattr(d, name) > 0:
            raise ConfigError(f"{name} must be positive", f"{path}.{name}")
    return d


def _churn(data, path) -> ChurnSpec:
    _check_keys(data, {"session", "intersession", "trace"}, path)
    base = ChurnSpec()
    return ChurnSpec(
        session=_dist(data["session"], f"{path}.session") if "session" in data else base.session,
        intersession=(_dist(data["intersession"], f"{path}.intersession")
                      if "intersession" in data else base.intersession),
        trace=_typed(data["trace"], str, f"{path}.trace") if data.get("trace") else None,
    )


def _list(data, key, kind):
    value = data[key]
    if not isinstance(value, list):
        value = [value]
    if not value:
        raise ConfigError("list must not be empty", key)
    return tuple(_typed(v, kind, f"{key}[{i}]") for i, v in enumerate(value))


SCALARS = dict(b=int, L=int, q=float, events=int, output=str, workers=int,
               strict_min_depth=bool, chord=bool)
LISTS = dict(c=int, g=float, variants=str, seeds=int)


def parse_config(text: str) -> SweepConfig:
    """Parse and validate a JSON sweep config; errors name the offending field."""
    try:
        data = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg} (line {exc.lineno})", "<root>") from None
    return config_from_dict(data)


def config_from_dict(data: dict) -> SweepConfig:
    allowed = set(SCALARS) | set(LISTS) | {"topology", "topologies", "churn", "preset"}
    _check_keys(data, allowed, "")
    values: dict = {}
    if "preset" in data:
        name = data["preset"]
        if name not in PRESETS:
            raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}", "preset")
        values.update(PRESETS[name])
    if "topology" in data and "topologies" in data:
        raise ConfigError("give either topology or topologies, not both", "topology")
    if "topology" in data:
        values["topologies"] = (_topology(data["topology"], "topology"),)
    if "topologies" in data:
        items = data["topologies"]
        if not isinstance(items, list) or not items:
            raise ConfigError("expected a non-empty list", "topologies")
        values["topologies"] = tuple(_topology(t, f"topologies[{i}]") for i, t in enumerate(items))
    if "churn" in data:
        values["churn"] = _churn(data["churn"], "churn")
    for key, kind in SCALARS.items():
        if key in data:
            values[key] = _typed(data[key], kind, key)
    for key, kind in LISTS.items():
        if key in data:
            values[key] = _list(data, key, kind)
    cfg = SweepConfig(**values)
    validate(cfg)
    return cfg


def validate(cfg: SweepConfig) -> None:
    if not 1 <= cfg.L <= cfg.b <= 64:
        raise ConfigError(f"need 1 <= L <= b <= 64, got b={cfg.b}, L={cfg.L}", "L")
    for i, g in enumerate(cfg.g):
        if not g > 1:
            raise ConfigError(f"g must exceed 1, got {g}", f"g[{i}]")
    for i, c in enumerate(cfg.c):
        if c < 0:
            raise ConfigError(f"c must be >= 0, got {c}", f"c[{i}]")
    for i, v in enumerate(cfg.variants):
        if v not in VARIANTS:
            raise ConfigError(f"unknown variant {v!r}; choose from {sorted(VARIANTS)}",
                              f"variants[{i}]")
    if not 0 <= cfg.q < 0.5:
        raise ConfigError(f"q must lie in [0, 0.5), got {cfg.q}", "q")
    if cfg.events < 1:
        raise ConfigError("events must be positive", "events")
    if cfg.workers < 1:
        raise ConfigError("workers must be positive", "workers")
    if len(set(cfg.seeds)) != len(cfg.seeds):
        raise ConfigError("seeds must be distinct", "seeds")


def with_seeds(cfg: SweepConfig, seeds) -> SweepConfig:
    out = replace(cfg, seeds=tuple(seeds))
    validate(out)
    return out
