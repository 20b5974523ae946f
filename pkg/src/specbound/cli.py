"""Command line entry point: run scenarios, validate configs, run oracles only.

Exit codes: 0 verdict matches the expected regime (or no expectation),
2 verdict mismatch, 1 error.
"""

from __future__ import annotations

import argparse
import sys

from .reports import emit_report
from .scenarios import ScenarioConfig, run_scenario, validate_config


def _add_common(p):
    p.add_argument("config", help="scenario config (TOML)")
    p.add_argument("--threads", type=int, default=1,
                   help="worker threads for moment sums (1 = fully deterministic)")
    p.add_argument("--out", default=None, help="output directory override")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="specbound",
        description="Spectral-bottom upper bounds for non-local forms, "
                    "with discrete Rayleigh/Persson oracles")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_common(sub.add_parser("run", help="full pipeline with report emission"))
    check = sub.add_parser("check", help="validate a config without running")
    check.add_argument("config")
    _add_common(sub.add_parser("oracle", help="oracle battery only"))
    args = parser.parse_args(argv)

    try:
        config = ScenarioConfig.from_toml(args.config)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    if args.command == "check":
        problems = validate_config(config)
        for p in problems:
            print(f"constraint violated: {p}", file=sys.stderr)
        if not problems:
            print("config ok")
        return 1 if problems else 0

    if args.command == "oracle":
        config.grids = dict(config.grids)
        config.run_oracles = True

    try:
        report = run_scenario(config, threads=args.threads)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1

    outdir = args.out or config.output.get("dir", "out")
    paths = emit_report(report, outdir)
    print(f"verdict: {report.bound.verdict} "
          f"(expected: {report.expected_verdict or 'n/a'}) "
          f"best bound {report.bound.best_bound:.6g} at r={report.bound.best_r:.4g}")
    print(f"report written to {paths['report']}")
    if report.verdict_match is False:
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
