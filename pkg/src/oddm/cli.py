"""Command line entry point: ``oddm-sim <experiment> --config <file> [--set key=value ...] --out <dir>``."""

import argparse
import sys
import traceback

from .experiments import EXPERIMENTS, ConfigError, load_config, run_experiment

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def build_parser():
    parser = argparse.ArgumentParser(prog="oddm-sim", description="Run an ODDM simulation experiment.")
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", help="TOML file of key = value settings (omit for defaults)")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override one setting; repeatable")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--traceback", action="store_true", help="print the full traceback on failure")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        cfg = load_config(args.config, args.experiment, args.overrides)
    except ConfigError as exc:
        print(f"oddm-sim: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for w in cfg.warnings:
        print(f"oddm-sim: warning: {w}", file=sys.stderr)
    try:
        manifest = run_experiment(cfg, args.out)
    except Exception as exc:  # any failure inside a run maps to the runtime exit code
        if args.traceback:
            traceback.print_exc()
        print(f"oddm-sim: {args.experiment} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"wrote {len(manifest['files']) + 1} files to {args.out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
