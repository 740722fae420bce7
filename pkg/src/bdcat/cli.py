"""Command-line entry point: ``bdcat [sweep|run] ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .config import PRESETS, SweepConfig, config_from_dict, parse_config, with_seeds
from .errors import BdcatError
from .sim import run_simulation
from .sweep import run_sweep

log = logging.getLogger("bdcat")


def _load(args) -> SweepConfig:
    if args.config:
        text = Path(args.config).read_text(encoding="utf-8")
        cfg = parse_config(text)
        if args.preset:
            raise BdcatError("give either --config or --preset, not both")
    elif args.preset:
        cfg = config_from_dict({"preset": args.preset})
    else:
        cfg = config_from_dict({})
    if args.seed is not None:
        cfg = with_seeds(cfg, [args.seed])
    if args.events is not None:
        cfg = replace(cfg, events=args.events)
    if args.out:
        cfg = replace(cfg, output=args.out)
    return cfg


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="bdcat",
        description="Simulate balanced content addressing on tree-based greedy embeddings.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-c", "--config", help="JSON config file")
    common.add_argument("-p", "--preset", choices=sorted(PRESETS), help="named parameter set")
    common.add_argument("-o", "--out", help="output directory (overrides the config)")
    common.add_argument("-s", "--seed", type=int, help="run only this seed")
    common.add_argument("-n", "--events", type=int, help="override the event count")
    common.add_argument("-v", "--verbose", action="count", default=0,
                        help="more logging (-v info, -vv debug)")
    sub = p.add_subparsers(dest="command")
    sub.add_parser("sweep", parents=[common], help="run the whole grid (default)")
    run = sub.add_parser("run", parents=[common],
                         help="one run (first grid cell) with its per-step CSV")
    run.add_argument("--steps", help="write the per-step CSV here ('-' for stdout)")
    sub.add_parser("show-config", parents=[common], help="print the resolved config")
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv or argv[0] not in ("sweep", "run", "show-config", "-h", "--help"):
        argv = ["sweep"] + argv
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _load(args)
        if args.command == "show-config":
            print(json.dumps(cfg.to_dict(), indent=2, sort_keys=True))
            return 0
        if args.command == "run":
            _, sim_cfg = next(cfg.runs())
            result = run_simulation(sim_cfg)
            if args.steps == "-":
                sys.stdout.write(result.steps_csv())
            elif args.steps:
                Path(args.steps).write_text(result.steps_csv())
            print(result.summary.to_json(), file=sys.stderr if args.steps == "-" else sys.stdout)
            return 0
        res = run_sweep(cfg)
        print(f"{len(res.summaries)} runs; aggregate: {res.aggregate_path}; long: {res.long_path}")
        return 0
    except (BdcatError, OSError) as exc:
        print(f"bdcat: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
