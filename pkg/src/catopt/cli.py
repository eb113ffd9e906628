"""Command-line entry point: ``catopt run | bench | ablate``.

Exit codes: 0 optimal (or sweep completed), 1 nonconvergence, 2 usage error,
3 internal error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import asdict
from pathlib import Path

from . import bench
from .core import ConfigError
from .problems import CATALOG, QuadraticFormatError, load_quadratic

EXIT_OK, EXIT_NONCONVERGED, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _positive_float(text):
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return value


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _add_run_flags(p, ablation_flags=True):
    p.add_argument("--eps", type=_positive_float, default=1e-5, help="gradient-norm tolerance")
    p.add_argument("--max-iter", type=_positive_int, default=100000)
    p.add_argument("--max-time", type=_positive_float, default=18000.0,
                   help="seconds per run (default 5 hours)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--r1", type=_positive_float, default=None, help="fixed initial radius")
    p.add_argument("--jobs", type=_positive_int, default=1, help="parallel runs")
    if ablation_flags:
        _add_ablation_flags(p)


def _add_ablation_flags(p):
    p.add_argument("--classic-rho", action="store_true",
                   help="use the classic actual/predicted ratio instead of rho-hat")
    p.add_argument("--conference-radius-rule", action="store_true",
                   help="r <- omega1 |d| on success, |d| / omega1 otherwise")
    p.add_argument("--fixed-initial-radius", action="store_true", help="r1 = 1")


def _settings(args):
    return bench.RunSettings(
        eps=args.eps, max_iter=args.max_iter, max_time=args.max_time, seed=args.seed,
        r1=args.r1, classic_rho=getattr(args, "classic_rho", False),
        conference_radius_rule=getattr(args, "conference_radius_rule", False),
        fixed_initial_radius=getattr(args, "fixed_initial_radius", False))


def _suite(text):
    if text is None or text == "all":
        return list(bench.DEFAULT_SUITE)
    suite = [t for t in (s.strip() for s in text.split(",")) if t]
    if not suite:
        raise UsageError("empty suite")
    for token in suite:
        name, dim = bench.parse_problem(token)
        if name not in CATALOG:
            raise UsageError(f"unknown problem {name!r}")
    return suite


def build_parser():
    parser = argparse.ArgumentParser(prog="catopt", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one solver on one problem")
    run.add_argument("--problem", choices=sorted(CATALOG), default=None)
    run.add_argument("--dim", type=_positive_int, default=None)
    run.add_argument("--quadratic-file", type=Path, default=None,
                     help="load f(x) = 1/2 x'Ax + b'x + c from a file instead of --problem")
    run.add_argument("--solver", choices=bench.SOLVERS, default="cat")
    run.add_argument("--trace", type=Path, default=None, help="write per-iteration CSV here")
    run.add_argument("--format", choices=("json", "csv"), default="json")
    _add_run_flags(run)

    bn = sub.add_parser("bench", help="run a solver matrix over a problem suite")
    bn.add_argument("--suite", default="all",
                    help="comma-separated name[:dim] tokens, or 'all'")
    bn.add_argument("--solvers", default="cat,gd")
    bn.add_argument("--out-dir", type=Path, required=True)
    _add_run_flags(bn)

    ab = sub.add_parser(
        "ablate", help="compare the default method with single-modification ablations",
        description="Runs the default configuration and each single-flag ablation. "
                    "Pass at most one ablation flag to compare only that variant. "
                    "The older subproblem solver is not available as an ablation.")
    ab.add_argument("--suite", default="all")
    ab.add_argument("--out-dir", type=Path, required=True)
    _add_run_flags(ab, ablation_flags=False)
    _add_ablation_flags(ab)
    return parser


def cmd_run(args, out=None):
    out = out or sys.stdout
    settings = _settings(args)
    oracle = x1 = None
    if args.quadratic_file is not None:
        oracle = load_quadratic(args.quadratic_file)
        x1 = oracle.x1 if oracle.x1 is not None else [0.0] * oracle.dim
        problem = f"quadratic:{args.quadratic_file.name}"
    elif args.problem is None:
        raise UsageError("one of --problem or --quadratic-file is required")
    else:
        problem = args.problem if args.dim is None else bench.problem_label(args.problem, args.dim)
    record, res = bench.run_one(problem, args.solver, settings, trace=args.trace is not None,
                                oracle=oracle, x1=x1)
    if args.trace is not None:
        rows = [r if isinstance(r, dict) else asdict(r) for r in (res.trace or [])]
        with open(args.trace, "w", newline="", encoding="utf-8") as fh:
            if rows:
                w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
                w.writeheader()
                w.writerows(rows)
    row = asdict(record)
    if args.format == "json":
        out.write(json.dumps({k: (None if isinstance(v, float) and not math.isfinite(v) else v)
                              for k, v in row.items()}) + "\n")
    else:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(bench.RECORD_COLUMNS)
        w.writerow([bench._fmt(row[c]) for c in bench.RECORD_COLUMNS])
    return EXIT_OK if record.solved else EXIT_NONCONVERGED


def cmd_bench(args, out=None):
    out = out or sys.stdout
    suite = _suite(args.suite)
    solvers = [s.strip() for s in args.solvers.split(",") if s.strip()]
    unknown = [s for s in solvers if s not in bench.SOLVERS]
    if not solvers or unknown:
        raise UsageError(f"unknown or empty solver list: {args.solvers!r}")
    settings = _settings(args)
    records = bench.sweep(suite, solvers, settings, jobs=args.jobs)
    bench.write_bench_outputs(args.out_dir, records, settings.max_iter, settings.max_time)
    solved = sum(r.solved for r in records)
    out.write(f"{len(records)} runs, {solved} solved; wrote {args.out_dir}\n")
    return EXIT_OK


def cmd_ablate(args, out=None):
    out = out or sys.stdout
    suite = _suite(args.suite)
    chosen = [name for name, flag in (("classic-rho", args.classic_rho),
                                      ("conference-radius-rule", args.conference_radius_rule),
                                      ("fixed-initial-radius", args.fixed_initial_radius)) if flag]
    if len(chosen) > 1:
        raise UsageError("ablations are single-flag only; pass at most one ablation flag")
    variants = ["default", *chosen] if chosen else list(bench.ABLATIONS)
    settings = _settings(args)
    records = bench.ablation_sweep(suite, variants, settings, jobs=args.jobs)
    outdir = Path(args.out_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    bench.write_records(outdir / "records.csv", records)
    rows = [row for row in bench.aggregate(records, settings.max_iter, settings.max_time)
            if row["statistic"] == "median"]
    for row in rows:
        row["variant"] = row.pop("solver")
    bench.write_csv(outdir / "ablation.csv", "ablation", rows, ["variant", "statistic", *bench.METRICS])
    out.write(f"{len(records)} runs over {len(variants)} variants; wrote {outdir}\n")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "bench": cmd_bench, "ablate": cmd_ablate}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError, QuadraticFormatError, KeyError, ValueError) as exc:
        print(f"catopt {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        print(f"catopt {args.command}: internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
