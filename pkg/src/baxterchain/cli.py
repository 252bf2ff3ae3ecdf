"""Command-line interface.

    baxterchain list
    baxterchain run <config-file>
    baxterchain run --suite trig --seed 7 --tol trig.baxter=1e-9 \
        --out report.json --format json

Exit codes: 0 all gating checks pass, 1 gating failure, 2 config error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .harness import (ConfigError, SuiteConfig, REGISTRY, list_checks,
                      parse_config_text, run_suite, emit_report)
from . import checks  # noqa: F401  (populates the registry)


def _suite_ids(name: str) -> list:
    if name == "all":
        return list(REGISTRY)
    ids = [cid for cid in REGISTRY if cid.startswith(name + ".")]
    if not ids:
        raise ConfigError(f"unknown suite {name!r}; "
                          f"use all/special/ladder/trig/elliptic")
    return ids


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="baxterchain")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("list", help="print every check id, what it verifies, "
                                "and its default tolerance")

    runp = sub.add_parser("run", help="run a check suite")
    runp.add_argument("config", nargs="?", help="flat key=value config file")
    runp.add_argument("--suite", help="all | special | ladder | trig | elliptic")
    runp.add_argument("--seed", type=int)
    runp.add_argument("--tol", action="append", default=[],
                      metavar="CHECK=EPS", help="tolerance override")
    runp.add_argument("--out", help="write the report to this path")
    runp.add_argument("--format", choices=("json", "text"), dest="fmt")

    args = parser.parse_args(argv)

    if args.command == "list":
        for cid, statement, tol, diag in list_checks():
            tag = "  [diagnostic]" if diag else ""
            print(f"{cid:34s} tol={tol:.1e}{tag}\n    {statement}")
        return 0

    try:
        if args.config:
            cfg = parse_config_text(Path(args.config).read_text())
        else:
            cfg = SuiteConfig()
        if args.suite:
            cfg.checks = _suite_ids(args.suite)
        if args.seed is not None:
            cfg.seed = args.seed
        for item in args.tol:
            if "=" not in item:
                raise ConfigError(f"--tol expects CHECK=EPS, got {item!r}")
            cid, eps = item.split("=", 1)
            cfg.tolerances[cid.strip()] = float(eps)
        if args.out:
            cfg.out = args.out
        if args.fmt:
            cfg.fmt = args.fmt
        cfg.validate()
    except (ConfigError, OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    report = run_suite(cfg)
    rendered = emit_report(report, cfg.fmt)
    if cfg.out:
        try:
            Path(cfg.out).write_text(rendered + "\n")
        except OSError as exc:
            print(f"cannot write report: {exc}", file=sys.stderr)
            return 2
        print(emit_report(report, "text"))
    else:
        print(rendered)
    return 0 if report.summary["failed"] == 0 else 1


if __name__ == "__main__":
    sys.exit(main())
