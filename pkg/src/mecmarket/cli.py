"""Command-line interface.

Subcommands::

    mecmarket simulate [config.json] [--seed N] [--out DIR] [--format csv|json]
    mecmarket sweep [config.json] --axis {M,F,Z,pricer,caching} --values V1,V2,...
    mecmarket train-cache [config.json] [--seed N] [--out DIR]
    mecmarket ingest TRACE [config.json] [--out DIR]

``--set section.key=value`` (repeatable) overrides any config field; values
are parsed as JSON with a bare-string fallback. Exit codes: 0 success,
2 configuration error, 1 runtime error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from .caching import save_checkpoint
from .config import ConfigError, ScenarioConfig, default_config
from .harness import (emit, emit_sweep, map_jobs_to_programs, run_scenario,
                      substream, sweep, write_learning_curve, write_summary,
                      SWEEP_AXES)
from .workload import ingest_trace, parse_trace_file


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mecmarket",
        description="Edge-market simulator: pricing, offloading, service caching.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, config_arg: bool = True) -> None:
        if config_arg:
            p.add_argument("config", nargs="?", default=None,
                           help="scenario config JSON (defaults built in)")
        p.add_argument("--seed", type=int, default=None,
                       help="override the master seed")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--format", choices=("csv", "json"), default="csv",
                       dest="fmt", help="metrics file format")
        p.add_argument("--set", action="append", default=[], dest="overrides",
                       metavar="KEY=VALUE", help="override a config field")

    p_sim = sub.add_parser("simulate", help="run one scenario")
    common(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    p_sweep = sub.add_parser("sweep", help="run a scenario along one axis")
    common(p_sweep)
    p_sweep.add_argument("--axis", required=True, choices=SWEEP_AXES)
    p_sweep.add_argument("--values", required=True,
                         help="comma-separated axis values")
    p_sweep.set_defaults(func=cmd_sweep)

    p_train = sub.add_parser("train-cache", help="train the caching agent")
    common(p_train)
    p_train.set_defaults(func=cmd_train_cache)

    p_ingest = sub.add_parser("ingest", help="bin a trace file into frames")
    p_ingest.add_argument("trace", help="trace file path")
    common(p_ingest)
    p_ingest.set_defaults(func=cmd_ingest)
    return parser


def load_config(args: argparse.Namespace) -> ScenarioConfig:
    config = (ScenarioConfig.from_json(args.config)
              if args.config else default_config())
    if args.overrides:
        config = config.with_overrides(args.overrides)
    if args.seed is not None:
        config = config.with_overrides([f"seed={args.seed}"])
    return config


def cmd_simulate(args: argparse.Namespace) -> int:
    config = load_config(args)
    result = run_scenario(config)
    paths = emit(result, args.out, args.fmt)
    print(f"scenario {config.scenario_id}: profit {result.total_profit!r}, "
          f"{len(result.rows)} rows")
    for path in paths:
        print(f"wrote {path}")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    config = load_config(args)
    values = [_parse_value(v) for v in args.values.split(",") if v.strip()]
    results = sweep(config, args.axis, values)
    paths = emit_sweep(results, args.axis, values, args.out, args.fmt)
    for value, result in zip(values, results):
        print(f"{args.axis}={value}: profit {result.total_profit!r}")
    for path in paths:
        print(f"wrote {path}")
    return 0


def cmd_train_cache(args: argparse.Namespace) -> int:
    config = load_config(args)
    if config.caching != "gndrl":
        config = config.with_overrides(["caching.strategy=gndrl"])
    result = run_scenario(config)
    training = result.gndrl
    os.makedirs(args.out, exist_ok=True)
    ckpt = os.path.join(args.out, "checkpoint.npz")
    save_checkpoint(ckpt, training.qnet, training.target, config.gndrl,
                    substream(config.seed, "agent"), steps=training.steps)
    curve_path = os.path.join(args.out, "learning_curve.csv")
    write_learning_curve(result.learning_curve, curve_path)
    summary_path = os.path.join(args.out, "summary.json")
    write_summary(result.summary, summary_path)
    print(f"trained {config.gndrl.episodes} episodes; final greedy return "
          f"{float(training.greedy_returns[-1])!r}")
    for path in (ckpt, curve_path, summary_path):
        print(f"wrote {path}")
    return 0


def cmd_ingest(args: argparse.Namespace) -> int:
    config = load_config(args)
    records, diagnostics = parse_trace_file(args.trace)
    program_map = map_jobs_to_programs(records, config.system.num_programs)
    frames, stats = ingest_trace(
        records, config.workload.frame_len_s, config.workload.slot_len_s,
        program_map, config.system.num_programs, config.users,
        substream(config.seed, "workload"), substream(config.seed, "channel"))
    report = {
        "trace": args.trace,
        "records": stats,
        "parse_errors": diagnostics,
        "program_map": {str(k): v for k, v in sorted(program_map.items())},
        "num_frames": len(frames),
        "slots_per_frame": frames[0].num_slots if frames else 0,
        "frame_counts": [[int(c) for c in f.counts] for f in frames],
    }
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "ingest_report.json")
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"ingested {stats['kept']}/{stats['input']} records into "
          f"{len(frames)} frames")
    print(f"wrote {path}")
    return 0


def _parse_value(text: str):
    text = text.strip()
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
