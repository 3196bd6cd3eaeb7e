"""Command-line front end.

Subcommands:
  fig <1..9>          reproduce a figure's data set (documented defaults for
                      anything the source leaves unstated)
  run <config.toml>   execute a config-driven experiment
  validate <config>   schema-check a config without running it
  list-experiments    show available experiment kinds

Exit codes: 0 success, 2 configuration error, 3 numerical-contract violation.
"""

import argparse
import os
import sys

from . import __version__
from .accel import backend_name, set_threads
from .config import EXPERIMENT_KINDS, ConfigError, load_config, \
    validate_config
from .tables import TableError, write_table

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


class NumericalContractError(Exception):
    pass


def _parser():
    p = argparse.ArgumentParser(
        prog="spinmetro",
        description="Entanglement-enhanced phase/frequency estimation "
                    "workbench")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--seed", type=int, default=None,
                   help="override the experiment seed")
    p.add_argument("--threads", type=int, default=None,
                   help="cap worker threads for jitted kernels")
    p.add_argument("--out", type=str, default=None,
                   help="output file (or directory for multi-table runs)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    sub = p.add_subparsers(dest="command", required=True)
    fig = sub.add_parser("fig", help="reproduce a figure's data")
    fig.add_argument("number", type=int)
    run = sub.add_parser("run", help="run a config file")
    run.add_argument("config")
    val = sub.add_parser("validate", help="validate a config file")
    val.add_argument("config")
    sub.add_parser("list-experiments", help="list experiment kinds")
    return p


def _emit(tables, out, fmt):
    written = []
    multi = len(tables) > 1
    for name, table in tables:
        if out is None:
            path = f"{name}.{fmt}"
        elif multi or os.path.isdir(out):
            base = out if os.path.isdir(out) else out
            os.makedirs(base, exist_ok=True)
            path = os.path.join(base, f"{name}.{fmt}")
        else:
            path = out
        written += write_table(table, path, fmt)
    for path in written:
        print(path)
    return written


def main(argv=None):
    args = _parser().parse_args(argv)
    if args.threads is not None:
        set_threads(args.threads)
    try:
        if args.command == "list-experiments":
            for kind in EXPERIMENT_KINDS:
                print(kind)
            print(f"(backend: {backend_name()})")
            return EXIT_OK
        if args.command == "validate":
            cfg = load_config(args.config)
            validate_config(cfg)
            print(f"ok: {args.config}")
            return EXIT_OK
        if args.command == "fig":
            from .experiments import run_fig

            if not 1 <= args.number <= 9:
                raise ConfigError("figure number must be 1..9")
            tables = run_fig(args.number, seed=args.seed or 0)
            _emit(tables, args.out, args.format)
            return EXIT_OK
        if args.command == "run":
            from .experiments import RUNNERS

            cfg = load_config(args.config)
            kind, cfg = validate_config(cfg)
            if args.seed is not None:
                cfg["seed"] = args.seed
            tables = RUNNERS[kind](cfg)
            out = args.out or cfg.get("out")
            _emit(tables, out, args.format)
            return EXIT_OK
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TableError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (AssertionError, ArithmeticError, NumericalContractError) as exc:
        print(f"numerical contract violation: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
