"""Command-line runner: ``dunklmax <command> [--config PATH] [--out DIR] [--seed N] [--strict]``.

Exit status is 0 when every check passes, 1 when a check fails or a
computation cannot be resolved, and 2 for usage or configuration errors
(including a setting outside the hypotheses in strict mode).
"""

from __future__ import annotations

import argparse
import glob
import os
import sys

from .config import ConfigError, ExperimentConfig, KINDS
from .decomposition import DegenerateFitError, LevelError
from .experiments import format_table, run_experiment
from .parallel import worker_count
from .radial import DivergenceError, ResolutionError
from .setting import HypothesisError

__all__ = ["main", "build_parser"]

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _common(suppress):
    # flags are accepted before or after the command; the copy attached to
    # the subcommands must not reset values given before it
    kw = {"default": argparse.SUPPRESS} if suppress else {}
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="INI configuration file", **kw)
    common.add_argument("--out", metavar="DIR", help="output directory (overrides [output] dir)",
                        **kw)
    common.add_argument("--seed", type=int, metavar="N", help="test-family seed", **kw)
    common.add_argument("--strict", action="store_true",
                        help="refuse settings and exponents outside the maximal theorem", **kw)
    return common


def build_parser():
    common = _common(suppress=True)
    parser = argparse.ArgumentParser(prog="dunklmax", parents=[_common(suppress=False)],
                                     description="Dunkl spherical maximal function experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {"verify": "radial calculus and decomposition invariants",
             "sweep-p": "spherical maximal norm estimates across the p-list",
             "sweep-j": "per-level slopes, square functions and domination",
             "asymptotics": "decay of the sphere transform and its derivative"}
    for kind in KINDS:
        sub.add_parser(kind, parents=[common], help=helps[kind])
    table = sub.add_parser("table", parents=[common], help="print the CSVs in an output directory")
    table.add_argument("kinds", nargs="*", help="experiments to show (default: all found)")
    return parser


def _load_config(args, kind):
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    updates = {"experiment": {"kind": kind}}
    if args.strict:
        updates["experiment"]["strict"] = True
    if args.seed is not None:
        updates["family"] = {"seed": args.seed}
    if args.out:
        updates["output"] = {"dir": args.out}
    return cfg.with_updates(**updates)


def _table(args, out):
    out_dir = args.out or (ExperimentConfig.load(args.config).output.dir if args.config else "out")
    kinds = getattr(args, "kinds", None) or None
    paths = ([os.path.join(out_dir, f"{k}.csv") for k in kinds] if kinds
             else sorted(glob.glob(os.path.join(out_dir, "*.csv"))))
    if not paths:
        print(f"dunklmax: no CSV files in {out_dir}", file=sys.stderr)
        return EXIT_USAGE
    status = EXIT_PASS
    for path in paths:
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            print(f"dunklmax: {exc}", file=sys.stderr)
            return EXIT_USAGE
        print(f"== {os.path.basename(path)}", file=out)
        print(format_table(text), file=out)
        if ",false," in text:
            status = EXIT_FAIL
    return status


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        worker_count()
        if args.command == "table":
            return _table(args, out)
        cfg = _load_config(args, args.command)
    except (ConfigError, ValueError) as exc:
        print(f"dunklmax: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        report = run_experiment(cfg)
    except HypothesisError as exc:
        print(f"dunklmax: hypothesis not met: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ResolutionError, DivergenceError, DegenerateFitError, LevelError) as exc:
        print(f"dunklmax: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    csv_path, rep_path = report.write(cfg.output.dir)
    print(format_table(report.csv_text()), file=out)
    failed = report.failures
    print(f"{report.kind}: {len(report.rows) - len(failed)}/{len(report.rows)} rows ok, "
          f"{len(failed)} failed; wrote {csv_path} and {rep_path}", file=out)
    for r in failed:
        print(f"FAILED {r.experiment} p={r.p} j={r.j}: {r.estimate} (tolerance {r.tolerance})",
              file=out)
    return EXIT_FAIL if failed else EXIT_PASS


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
