"""Command-line entry point.

Subcommands ``ber``, ``tap-error``, ``temporal`` and ``utilization`` each load
a JSON experiment config, run the Monte Carlo, and write a CSV or JSON result
table. Exit codes: 0 on success, 2 on a configuration error, 3 when ``--check``
is given and an experiment's built-in sanity checks flag a violation.
"""

from __future__ import annotations

import argparse
import sys

from .harness import RUNNERS, ConfigError, emit_results, load_config, table_to_csv

_COMMANDS = {
    "ber": "ber-sweep",
    "tap-error": "tap-error",
    "temporal": "temporal",
    "utilization": "utilization",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blindmd",
        description="Link-level Monte Carlo experiments for the blind "
        "matrix-decomposition receiver and its pilot-based baselines.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, kind in _COMMANDS.items():
        p = sub.add_parser(name, help=f"run a {kind} experiment")
        p.add_argument("--config", required=True, help="path to the JSON experiment config")
        p.add_argument("--seed", type=int, default=None, help="override the master seed")
        p.add_argument("--out", default=None, help="result file path (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--threads", type=int, default=1, help="worker threads for trials")
        p.add_argument(
            "--check",
            action="store_true",
            help="exit with status 3 if the experiment's sanity checks fail",
        )
        p.set_defaults(kind=kind)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, kind=args.kind, seed=args.seed)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    table = RUNNERS[cfg.kind](cfg, threads=max(1, args.threads))
    if args.out:
        emit_results(table, args.out, args.format)
    else:
        sys.stdout.write(table_to_csv(table))
    violations = table.meta.get("violations", [])
    for v in violations:
        print(f"check: {v}", file=sys.stderr)
    if args.check and violations:
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
