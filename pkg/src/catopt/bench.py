"""Benchmark sweeps: per-run records, aggregate statistics and
fraction-solved profiles, all written as versioned CSV."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .baselines import ArmijoConfig, gd_solve
from .cat import solve
from .core import SolverConfig, Status
from .problems import make_problem

SOLVERS = ("cat", "cat-conference", "gd")
COUNT_METRICS = ("n_f", "n_grad", "n_hess", "n_fact")
METRICS = COUNT_METRICS + ("wall_seconds",)
SHIFT = 1.0
CSV_VERSION = 1

DEFAULT_SUITE = (
    "sphere:2", "sphere:100", "convex_quadratic:10", "rosenbrock:2", "rosenbrock:100",
    "extended_rosenbrock:4", "powell_singular:4", "hard_case_synthetic:3",
    "hard_case_synthetic:10",
)

ABLATIONS = {
    "default": {},
    "classic-rho": {"use_classic_rho": True},
    "conference-radius-rule": {"conference_radius_rule": True},
    "fixed-initial-radius": {"fixed_initial_radius": True},
}


@dataclass(frozen=True)
class RunSettings:
    eps: float = 1e-5
    max_iter: int = 100000
    max_time: float = 18000.0
    seed: int = 0
    r1: Optional[float] = None
    classic_rho: bool = False
    conference_radius_rule: bool = False
    fixed_initial_radius: bool = False

    def solver_config(self, solver="cat") -> SolverConfig:
        cfg = SolverConfig(
            eps_tol=self.eps, max_iter=self.max_iter, max_time=self.max_time, seed=self.seed,
            r1_override=self.r1, use_classic_rho=self.classic_rho,
            conference_radius_rule=self.conference_radius_rule,
            fixed_initial_radius=self.fixed_initial_radius)
        if solver == "cat-conference":
            cfg = cfg.replace(conference_radius_rule=True, fixed_initial_radius=True)
        return cfg

    def armijo_config(self) -> ArmijoConfig:
        return ArmijoConfig(eps_tol=self.eps, max_iter=self.max_iter, max_time=self.max_time)


@dataclass
class BenchRecord:
    problem: str
    solver: str
    status: str
    iterations: int
    n_f: int
    n_grad: int
    n_hess: int
    n_fact: int
    wall_seconds: float
    f_final: float
    grad_norm_final: float

    @property
    def solved(self):
        return self.status == Status.OPTIMAL.value

    @classmethod
    def from_result(cls, problem, solver, res):
        c = res.counters
        return cls(problem, solver, res.status.value, res.iterations, c.n_f, c.n_grad,
                   c.n_hess, c.n_fact, res.wall_time, res.f_final, res.grad_norm_final)

    @classmethod
    def from_row(cls, row):
        kw = {}
        for f in fields(cls):
            raw = row[f.name]
            kw[f.name] = int(raw) if f.type == "int" else float(raw) if f.type == "float" else raw
        return cls(**kw)


def parse_problem(token):
    """``"name"`` or ``"name:dim"`` to ``(name, dim or None)``."""
    name, _, dim = token.partition(":")
    return name, (int(dim) if dim else None)


def problem_label(name, dim):
    return f"{name}:{dim}"


def run_one(problem, solver, settings: RunSettings, trace=False, oracle=None, x1=None):
    """Run ``solver`` on a catalog token (or an explicit oracle) and return
    ``(BenchRecord, SolveResult)``."""
    if oracle is None:
        name, dim = parse_problem(problem)
        oracle, spec = make_problem(name, dim)
        x1 = spec.x1
        problem = problem_label(name, spec.dim)
    if solver == "gd":
        res = gd_solve(oracle, x1, settings.armijo_config(), trace=trace)
    elif solver in ("cat", "cat-conference"):
        res = solve(oracle, x1, settings.solver_config(solver), trace=trace)
    else:
        raise ValueError(f"unknown solver {solver!r}")
    return BenchRecord.from_result(problem, solver, res), res


def _run_task(task):
    problem, solver, settings = task
    return run_one(problem, solver, settings)[0]


def _run_variant_task(task):
    problem, variant, settings = task
    name, dim = parse_problem(problem)
    oracle, spec = make_problem(name, dim)
    cfg = settings.solver_config().replace(**ABLATIONS[variant])
    res = solve(oracle, spec.x1, cfg)
    return BenchRecord.from_result(problem_label(name, spec.dim), variant, res)


def _collect(worker, tasks, jobs):
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(worker, tasks))
    else:
        records = [worker(t) for t in tasks]
    return sorted(records, key=lambda r: (r.problem, r.solver))


def sweep(suite: Iterable[str], solvers: Iterable[str], settings: RunSettings, jobs=1):
    tasks = [(p, s, settings) for p in suite for s in solvers]
    return _collect(_run_task, tasks, jobs)


def ablation_sweep(suite, variants, settings: RunSettings, jobs=1):
    tasks = [(p, v, settings) for p in suite for v in variants]
    return _collect(_run_variant_task, tasks, jobs)


def shifted_geomean(values, shift=SHIFT):
    values = list(values)
    return math.exp(math.fsum(math.log(v + shift) for v in values) / len(values)) - shift


def penalized(record: BenchRecord, metric, max_iter, max_time):
    """Metric value with failures replaced by twice the run limit."""
    if record.solved:
        return float(getattr(record, metric))
    return 2.0 * (max_time if metric == "wall_seconds" else max_iter)


def aggregate(records, max_iter, max_time):
    """Rows ``{solver, statistic, <metric>...}`` with the shifted geometric
    mean and median of each metric per solver."""
    rows = []
    for solver in sorted({r.solver for r in records}):
        mine = [r for r in records if r.solver == solver]
        for stat in ("shifted_geomean", "median"):
            row = {"solver": solver, "statistic": stat}
            for m in METRICS:
                vals = [penalized(r, m, max_iter, max_time) for r in mine]
                row[m] = shifted_geomean(vals) if stat == "shifted_geomean" else float(np.median(vals))
            rows.append(row)
    return rows


def objective_gaps(records):
    """``f_final`` minus the best ``f_final`` among solvers, per record."""
    best = {}
    for r in records:
        if math.isfinite(r.f_final):
            best[r.problem] = min(best.get(r.problem, math.inf), r.f_final)
    return [max(0.0, r.f_final - best[r.problem]) if r.problem in best and math.isfinite(r.f_final)
            else math.inf for r in records]


def profile(records, n_points=41):
    """Long-format fraction-solved curves.

    For every metric, ``fraction`` is the share of a solver's problems that
    were solved within ``budget`` of that metric; ``objective_difference``
    rows give the share whose final objective is within ``budget`` of the
    best final objective among all solvers.
    """
    rows = []
    solvers = sorted({r.solver for r in records})
    for m in METRICS:
        vals = [float(getattr(r, m)) for r in records if r.solved]
        positive = [v for v in vals if v > 0]
        if positive:
            lo = min(positive) if m == "wall_seconds" else 1.0
            hi = max(max(positive), lo)
            grid = np.logspace(math.log10(lo), math.log10(hi), n_points)
        else:
            grid = np.ones(1)
        for s in solvers:
            mine = [r for r in records if r.solver == s]
            for b in grid:
                hit = sum(1 for r in mine if r.solved and getattr(r, m) <= b)
                rows.append({"metric": m, "solver": s, "budget": float(b),
                             "fraction": hit / len(mine)})
    gaps = objective_gaps(records)
    grid = [0.0] + [10.0 ** e for e in range(-12, 3)]
    for s in solvers:
        mine = [g for r, g in zip(records, gaps) if r.solver == s]
        for b in grid:
            rows.append({"metric": "objective_difference", "solver": s, "budget": b,
                         "fraction": sum(1 for g in mine if g <= b) / len(mine)})
    return rows


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path, kind, rows, columns):
    buf = io.StringIO()
    buf.write(f"# catopt {kind} v{CSV_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in columns])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


RECORD_COLUMNS = [f.name for f in fields(BenchRecord)]


def write_records(path, records):
    write_csv(path, "records", [asdict(r) for r in records], RECORD_COLUMNS)


def read_records(path):
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return [BenchRecord.from_row(row) for row in csv.DictReader(lines)]


def write_bench_outputs(out_dir, records, max_iter, max_time):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_records(out / "records.csv", records)
    write_csv(out / "aggregates.csv", "aggregates", aggregate(records, max_iter, max_time),
              ["solver", "statistic", *METRICS])
    write_csv(out / "profile.csv", "profile", profile(records),
              ["metric", "solver", "budget", "fraction"])
    return out
