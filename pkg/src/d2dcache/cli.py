"""Experiment runner CLI.

Subcommands: lt-compare, tl-sweep, tradeoff-global, tradeoff-local,
tradeoff-localglobal, density-check, validate. Every run writes a CSV whose
`#`-prefixed metadata lines (config hash, seed, replicates) make it exactly
re-runnable; identical (config, seed) produce bitwise-identical files for any
thread count.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .config import (ConfigError, ExperimentConfig, apply_overrides,
                     config_from_dict, load_config, preset)
from .interference import QuadratureError
from . import experiments

_RUNNERS = {
    "lt-compare": experiments.lt_compare_rows,
    "tl-sweep": experiments.tl_sweep_rows,
    "tradeoff-global": experiments.tradeoff_global_rows,
    "tradeoff-local": experiments.tradeoff_local_rows,
    "tradeoff-localglobal": experiments.tradeoff_localglobal_rows,
    "density-check": experiments.density_check_rows,
    "validate": experiments.validate_rows,
}


def format_value(value) -> str:
    if isinstance(value, (bool,)):
        return str(int(value))
    if isinstance(value, (int,)):
        return str(value)
    if isinstance(value, float):
        return f"{value:.9g}"
    return str(value)


def write_csv(path: str, header, rows, metadata: dict) -> None:
    lines = [f"# {key}={format_value(metadata[key])}" for key in sorted(metadata)]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(format_value(v) for v in row))
    out_dir = os.path.dirname(os.path.abspath(path))
    os.makedirs(out_dir, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _parse_set(values) -> dict:
    overrides = {}
    for item in values or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, raw = item.split("=", 1)
        try:
            overrides[key] = json.loads(raw)
        except json.JSONDecodeError:
            overrides[key] = raw
    return overrides


def build_experiment(args) -> ExperimentConfig:
    if args.config and args.preset:
        raise ConfigError("pass either --config or --preset, not both")
    if args.config:
        exp = load_config(args.config)
    elif args.preset:
        exp = preset(args.preset)
    else:
        exp = ExperimentConfig()
    overrides = _parse_set(args.set)
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.replicates is not None:
        overrides["replicates"] = args.replicates
    if overrides:
        exp = apply_overrides(exp, overrides)
    return exp


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="d2dcache",
        description="Clustered D2D video-caching network simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _RUNNERS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="experiment config (JSON tree)")
        p.add_argument("--preset", help="named preset, e.g. fig4")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="dotted-path config override, repeatable")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--replicates", type=int, default=None)
        p.add_argument("--out", default=None, help="output CSV path")
        p.add_argument("--threads", type=int,
                       default=max(1, os.cpu_count() or 1))
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        exp = build_experiment(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = args.out or f"{args.command}.csv"
    try:
        header, rows = _RUNNERS[args.command](exp, threads=args.threads)
    except QuadratureError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    metadata = {
        "config_sha256": exp.digest(),
        "seed": exp.seed,
        "replicates": exp.replicates,
        "subcommand": args.command,
    }
    if args.preset:
        metadata["preset"] = args.preset
    write_csv(out, header, rows, metadata)
    if args.command == "validate":
        failures = [row for row in rows if row[1] != "PASS"]
        for row in rows:
            print(f"{row[1]:4s} {row[0]} (stat={row[2]:.4g}, "
                  f"threshold={row[3]:.4g}) {row[4]}")
        return 1 if failures else 0
    print(f"wrote {out} ({len(rows)} rows)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
