"""Command line front end.

    bo3 run <config.json> [--set path=value]... [--out DIR]
    bo3 plot <csv> --x COL --y COL [--y COL2 ...] [--loglog] [--out FILE]
    bo3 validate <config.json>

Exit codes: 0 pass, 1 fail, 2 degraded (pass with warnings), 3 usage or
configuration error.  BO3_OUT overrides the output directory.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .experiments import (
    ConfigError,
    apply_override,
    config_from_dict,
    run_experiment,
    validate_config,
)
from .plotting import plot_csv

USAGE_ERROR = 3


def _load_config(path: str):
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"no such config file: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}")
    return config_from_dict(raw)


def _cmd_run(args) -> int:
    cfg = _load_config(args.config)
    for assignment in args.set or []:
        apply_override(cfg, assignment)
    result = run_experiment(cfg, base_dir=args.out)
    for name, ok in sorted(result.verdicts.items()):
        value = result.metrics.get(name)
        shown = "" if value is None else f"  ({value:.6g})"
        print(f"{'PASS' if ok else 'FAIL'}  {result.name}.{name}{shown}")
    for w in result.warnings:
        print(f"WARN  {w}")
    return result.exit_code


def _cmd_validate(args) -> int:
    cfg = _load_config(args.config)
    validate_config(cfg)
    print(f"ok: {args.config} ({cfg.experiment})")
    return 0


def _cmd_plot(args) -> int:
    out = args.out or (Path(args.csv).with_suffix(".svg"))
    plot_csv(args.csv, out, x=args.x, y=args.y, loglog=args.loglog,
             annotate=args.annotate)
    print(f"wrote {out}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="bo3", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment from a JSON config")
    p_run.add_argument("config")
    p_run.add_argument("--set", action="append", metavar="PATH=VALUE",
                       help="override one scalar config field")
    p_run.add_argument("--out", default=None, help="output directory")
    p_run.set_defaults(func=_cmd_run)

    p_val = sub.add_parser("validate", help="check a config without running it")
    p_val.add_argument("config")
    p_val.set_defaults(func=_cmd_validate)

    p_plot = sub.add_parser("plot", help="render an experiment CSV as SVG")
    p_plot.add_argument("csv")
    p_plot.add_argument("--x", required=True)
    p_plot.add_argument("--y", required=True, action="append")
    p_plot.add_argument("--loglog", action="store_true")
    p_plot.add_argument("--annotate", default="")
    p_plot.add_argument("--out", default=None)
    p_plot.set_defaults(func=_cmd_plot)

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE_ERROR if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
