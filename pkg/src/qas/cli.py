"""Command-line entry points.

    qas run <config.json>          run one experiment config
    qas suite invariants --seed S  mixing-inequality battery
    qas verify-cover <graph> <cover>  validate a subgraph cover

Exit code 0 iff every configured threshold passed.  The output directory can
be overridden with the QAS_OUTPUT_DIR environment variable.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import CoverError, QasError
from .harness import (
    ExperimentConfig,
    emit_report,
    load_config,
    run_experiment,
    run_invariant_suite,
    verify_cover,
)
from .metric import parse_edge_list, shortest_path_metric


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.output_dir:
        cfg.output_dir = args.output_dir
    report = run_experiment(cfg)
    if cfg.output_dir:
        paths = emit_report(report, cfg.output_dir)
        print(f"report: {paths['report']}")
    status = "PASS" if report.passed else "FAIL"
    print(
        f"[{status}] {report.kind} seed={report.seed} "
        f"sup_error={report.sup_w1_error:.6g} certified_mass={report.certified_mass:.4f} "
        f"({report.wall_time_s:.2f}s)"
    )
    return 0 if report.passed else 1


def _cmd_suite(args) -> int:
    if args.suite != "invariants":
        print(f"unknown suite {args.suite!r}", file=sys.stderr)
        return 2
    results = run_invariant_suite(args.seed, n_trials=args.trials)
    ok = True
    for name, res in results.items():
        status = "PASS" if res["ok"] else "FAIL"
        ok &= res["ok"]
        print(f"[{status}] mixing inequality: {name} worst_slack={res['worst_slack']:.3e} n={res['n']}")
    return 0 if ok else 1


def _cmd_verify_cover(args) -> int:
    edges, n = parse_edge_list(Path(args.graph).read_text())
    space = shortest_path_metric(edges, n)
    cover = json.loads(Path(args.cover).read_text())
    try:
        verify_cover(space, cover)
    except CoverError as exc:
        print(f"[FAIL] {exc}")
        return 1
    print(f"[PASS] cover of {len(cover)} pieces preserves the metric on {n} vertices")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="qas", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config")
    p_run.add_argument("--output-dir", default=None)
    p_run.set_defaults(fn=_cmd_run)

    p_suite = sub.add_parser("suite", help="run a named validation suite")
    p_suite.add_argument("suite")
    p_suite.add_argument("--seed", type=int, required=True)
    p_suite.add_argument("--trials", type=int, default=1000)
    p_suite.set_defaults(fn=_cmd_suite)

    p_cover = sub.add_parser("verify-cover", help="validate a subgraph cover")
    p_cover.add_argument("graph")
    p_cover.add_argument("cover")
    p_cover.set_defaults(fn=_cmd_verify_cover)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except QasError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
