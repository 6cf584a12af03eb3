"""Command-line entry point: ``oneshotfl run|synth|validate``.

Exit codes: 0 success, 1 usage or configuration error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

from ..feddata import synth_federated, write_csv
from .config import ConfigError, load_config
from .experiment import run_experiment
from .report import emit_report

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="oneshotfl", description="One-shot federated learning experiments.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run an experiment and write its report")
    run.add_argument("--config", required=True)
    run.add_argument("--out", required=True)
    run.add_argument("--seed", type=int, help="override the config's master seed")

    synth = sub.add_parser("synth", help="export a synthetic federated dataset as CSV")
    synth.add_argument("--m", type=int, required=True)
    synth.add_argument("--d", type=int, required=True)
    synth.add_argument("--het", type=float, required=True)
    synth.add_argument("--seed", type=int, required=True)
    synth.add_argument("--out", required=True)
    synth.add_argument("--size-min", type=int, default=20)
    synth.add_argument("--size-max", type=int, default=120)

    validate = sub.add_parser("validate", help="check a config file")
    validate.add_argument("--config", required=True)
    return parser


def _run(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    report = run_experiment(config)
    for path in emit_report(report, args.out):
        print(path)
    best = report.best_method or "none"
    print(f"best ensemble: {best}")
    return EXIT_OK


def _synth(args) -> int:
    try:
        dataset = synth_federated(args.m, (args.size_min, args.size_max), args.d, args.het, args.seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    write_csv(dataset, args.out)
    print(f"wrote {dataset.n_samples} samples over {dataset.m} devices to {args.out}")
    return EXIT_OK


def _validate(args) -> int:
    load_config(args.config)
    print(f"{args.config}: ok")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": _run, "synth": _synth, "validate": _validate}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - every runtime failure maps to exit 2
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
