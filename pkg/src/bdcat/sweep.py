"""Run a parameter grid and write per-run, aggregate and long-format results."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from scipy import stats

from .config import SweepConfig
from .errors import BdcatError
from .sim import RunSummary, SimConfig, run_simulation

log = logging.getLogger(__name__)

AGGREGATE_COLUMNS = (
    "topology", "variant", "c", "g", "seeds",
    "ratio_mean", "ratio_ci", "meanF_mean", "meanF_ci", "maxF_mean", "maxF_ci",
    "chord_meanF_mean", "chord_meanF_ci", "safety_violations", "config_hash",
)
LONG_COLUMNS = ("topology", "variant", "c", "g", "seed", "metric", "value", "config_hash")
METRICS = ("cost_ratio", "mean_F", "max_F", "chord_mean_F", "mean_cost", "mean_baseline",
           "mean_depth", "mean_online")


class SweepError(BdcatError):
    pass


def t_interval(values, confidence: float = 0.95) -> tuple[float, float]:
    """``(mean, half-width)`` of the Student-t interval; half-width is nan for one value."""
    n = len(values)
    mean = statistics.fmean(values)
    if n < 2:
        return mean, math.nan
    sem = statistics.stdev(values) / math.sqrt(n)
    return mean, float(stats.t.ppf((1 + confidence) / 2, n - 1)) * sem


def combo_hash(cfg: SimConfig) -> str:
    """Hash of a run config with the seed removed, shared by all seeds of a cell."""
    d = cfg.to_dict()
    d.pop("seed")
    return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]


def _label(ti: int, cfg: SimConfig) -> str:
    t = cfg.topology
    name = f"{t.kind}{ti}"
    return f"{name}/{cfg.variant}{'+obf' if cfg.obfuscated_counts else ''}/c={cfg.c}/g={cfg.g}"


def _run_one(cfg: SimConfig) -> RunSummary:
    return run_simulation(cfg, keep_steps=False).summary


@dataclass
class SweepResult:
    summaries: list[tuple[int, SimConfig, RunSummary]]
    aggregate_path: Path
    long_path: Path


def run_sweep(config: SweepConfig, out_dir: str | Path | None = None) -> SweepResult:
    out = Path(out_dir if out_dir is not None else config.output)
    runs_dir = out / "runs"
    runs_dir.mkdir(parents=True, exist_ok=True)
    jobs = list(config.runs())
    log.info("sweep: %d runs into %s", len(jobs), out)
    results: list[RunSummary | BaseException] = []
    if config.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            futures = [pool.submit(_run_one, cfg) for _, cfg in jobs]
            for fut in futures:
                try:
                    results.append(fut.result())
                except Exception as exc:  # reported below with the combination label
                    results.append(exc)
    else:
        for _, cfg in jobs:
            try:
                results.append(_run_one(cfg))
            except Exception as exc:
                results.append(exc)
    failed = [(_label(ti, cfg), cfg.seed, r) for (ti, cfg), r in zip(jobs, results)
              if isinstance(r, BaseException)]
    if failed:
        label, seed, exc = failed[0]
        raise SweepError(f"{len(failed)} run(s) failed; first: {label} seed={seed}: {exc}") from exc

    done = [(ti, cfg, r) for (ti, cfg), r in zip(jobs, results)]
    for ti, cfg, summary in done:
        name = _label(ti, cfg).replace("/", "_").replace("=", "")
        (runs_dir / f"{name}_seed{cfg.seed}.json").write_text(summary.to_json() + "\n")
    agg = out / "aggregate.csv"
    agg.write_text(aggregate_csv(done))
    long = out / "long.csv"
    long.write_text(long_csv(done))
    return SweepResult(done, agg, long)


def _cells(done):
    cells: dict[tuple, list] = {}
    for ti, cfg, summary in done:
        key = (ti, cfg.variant + ("+obf" if cfg.obfuscated_counts else ""), cfg.c, cfg.g)
        cells.setdefault(key, []).append((cfg, summary))
    return cells


def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return repr(float(x))


def aggregate_csv(done) -> str:
    rows = [AGGREGATE_COLUMNS]
    for (ti, variant, c, g), items in _cells(done).items():
        sums = [s for _, s in items]
        cfg = items[0][0]
        row = [f"{cfg.topology.kind}{ti}", variant, c, g, len(sums)]
        for attr in ("cost_ratio", "mean_F", "max_F"):
            row += [_fmt(v) for v in t_interval([getattr(s, attr) for s in sums])]
        chord = [s.chord_mean_F for s in sums if s.chord_mean_F is not None]
        row += [_fmt(v) for v in t_interval(chord)] if chord else ["", ""]
        row += [sum(s.safety_violations for s in sums), combo_hash(cfg)]
        rows.append(row)
    return _write(rows)


def long_csv(done) -> str:
    rows = [LONG_COLUMNS]
    for ti, cfg, s in done:
        variant = cfg.variant + ("+obf" if cfg.obfuscated_counts else "")
        for metric in METRICS:
            rows.append([f"{cfg.topology.kind}{ti}", variant, cfg.c, cfg.g, cfg.seed, metric,
                         _fmt(getattr(s, metric)), combo_hash(cfg)])
    return _write(rows)


def _write(rows) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()
