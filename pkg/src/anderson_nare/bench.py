"""Benchmark grid over (method x (a, c) x n) for the NARE fixed-point problem.

Every cell builds its problem once, starts from zero, stops on RES <= n*eps
and is timed over ``repeats`` runs.  The first run is a warm-up: it is checked
for correctness but left out of the reported mean (unless it is the only run).
CPU figures are wall-clock on the current machine and only comparable
within one run of the harness.
"""

from __future__ import annotations

import csv
import io
import json
import math
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .aa_core import AaConfig, SolveReport, aa_solve
from .baselines import BaselineKind, ResCriterion, baseline_solve
from .errors import AndersonNareError, DivideByZero, NonFiniteIterate
from .nare import NareProblem, build_problem, jacobian
from .theory import (
    TheoryParams,
    check_theorem_conditions,
    empirical_contraction,
    empirical_r_factor,
    jacobian_norms,
    nare_lipschitz,
)

DEFAULT_METHODS = ["AA(1)", "AA(3)", "AA(5)", "AA(8)", "FP", "MFP", "NBJ", "NBGS"]
DEFAULT_PARAMS = [
    (0.9, 0.1),
    (0.1, 0.9),
    (1e-2, 1 - 1e-2),
    (1e-4, 1 - 1e-4),
    (1e-6, 1 - 1e-6),
    (1e-8, 1 - 1e-8),
    (1e-9, 1 - 1e-9),
]
# Baselines need 1e5+ iterations on these rows; only run them with --long.
LONG_ONLY_A = (1e-8, 1e-9)
CSV_COLUMNS = ["method", "a", "c", "n", "it", "cpu_mean_s", "res_final", "status"]
THEORY_MAX_N = 256

_AA_RE = re.compile(r"^AA\s*[:(]\s*(\d+)\s*\)?$", re.IGNORECASE)


def parse_method(text: str) -> tuple[str, int | None]:
    """``"AA:3"`` / ``"AA(3)"`` -> ``("AA(3)", 3)``; baselines -> ``(name, None)``."""
    text = text.strip()
    m = _AA_RE.match(text)
    if m:
        depth = int(m.group(1))
        return f"AA({depth})", depth
    try:
        return BaselineKind(text.upper()).value, None
    except ValueError:
        raise ValueError(f"unknown method {text!r}; expected AA:<m>, FP, MFP, NBJ or NBGS") from None


@dataclass
class ExperimentSpec:
    methods: list[str] = field(default_factory=lambda: list(DEFAULT_METHODS))
    params: list[tuple[float, float]] = field(default_factory=lambda: list(DEFAULT_PARAMS))
    sizes: list[int] = field(default_factory=lambda: [1024])
    repeats: int = 10
    max_iter: int = 10**6
    output: str = "csv"
    history_dump: str | None = None
    long: bool = False
    theory: bool = False
    workers: int = 1

    def __post_init__(self):
        self.methods = [parse_method(m)[0] for m in self.methods]
        self.params = [(float(a), float(c)) for a, c in self.params]
        self.sizes = [int(n) for n in self.sizes]
        if not self.methods or not self.params or not self.sizes:
            raise ValueError("methods, params and sizes must be nonempty")
        for n in self.sizes:
            if n < 4 or n % 4:
                raise ValueError(f"sizes must be positive multiples of 4, got {n}")
        for a, c in self.params:
            if not (0.0 <= a < 1.0 and 0.0 < c <= 1.0):
                raise ValueError(f"(a, c) = ({a}, {c}) outside [0,1) x (0,1]")
        if self.repeats < 1 or self.max_iter < 1:
            raise ValueError("repeats and max_iter must be positive")
        if self.output not in ("csv", "markdown", "json"):
            raise ValueError(f"unknown output format {self.output!r}")

    @classmethod
    def from_json(cls, text: str) -> "ExperimentSpec":
        raw = json.loads(text)
        if "params" in raw:
            raw["params"] = [tuple(pc) for pc in raw["params"]]
        return cls(**raw)


@dataclass
class ResultRow:
    method: str
    a: float
    c: float
    n: int
    it: int
    cpu_mean: float
    res_final: float
    status: str
    theory: dict | None = None

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    def csv_fields(self) -> list[str]:
        return [
            self.method,
            repr(self.a),
            repr(self.c),
            str(self.n),
            str(self.it),
            f"{self.cpu_mean:.4f}",
            f"{self.res_final:.6e}",
            self.status,
        ]


def solve_method(prob: NareProblem, method: str, max_iter: int, record_history: bool = True) -> SolveReport:
    name, depth = parse_method(method)
    stop = ResCriterion(prob.n)
    if depth is not None:
        cfg = AaConfig(depth=depth, max_iter=max_iter, record_history=record_history)
        return aa_solve(prob.fixed_point_map(), np.zeros(prob.dim), cfg, stop)
    return baseline_solve(prob, name, stop, max_iter, record_history=record_history)


def _is_skipped(method: str, a: float, long: bool) -> bool:
    return not long and parse_method(method)[1] is None and any(math.isclose(a, s) for s in LONG_ONLY_A)


def run_cell(prob: NareProblem, method: str, repeats: int, max_iter: int, record_history: bool):
    """Run one grid cell; failures become a status, never an exception."""
    times, counts = [], []
    report = None
    status = "converged"
    for _ in range(repeats):
        t0 = time.perf_counter()
        try:
            report = solve_method(prob, method, max_iter, record_history)
        except DivideByZero as exc:
            report, status = exc.report, "breakdown"
            break
        except NonFiniteIterate as exc:
            report, status = exc.report, "nonfinite"
            break
        except AndersonNareError as exc:
            return ResultRow(method, prob.a, prob.c, prob.n, 0, 0.0, math.nan, f"error:{type(exc).__name__}"), None
        times.append(time.perf_counter() - t0)
        counts.append(report.iterations)
        if not report.converged:
            status = "max_iter"
            break
    if status == "converged" and len(set(counts)) > 1:
        status = "nondeterministic"
    timed = times[1:] if len(times) > 1 else times
    cpu = float(np.mean(timed)) if timed else 0.0
    row = ResultRow(method, prob.a, prob.c, prob.n, report.iterations, cpu, report.final_res, status)
    return row, report


def theory_summary(prob: NareProblem, report: SolveReport, depth: int, seed: int = 0, samples: int = 64) -> dict:
    """Condition check for an AA run, using the run's own limit as the solution estimate."""
    out: dict = {"method": report.method, "a": prob.a, "c": prob.c, "n": prob.n}
    fn = report.fnorms
    if fn.size >= 3:
        out["r_factor"] = empirical_r_factor(fn)
    alpha_sums = [r.alpha_abs_sum for r in report.records]
    out["m_alpha_observed"] = max(alpha_sums) if alpha_sums else 1.0
    etas = [r.eta for r in report.records[1:]]
    out["eta_max"] = max(etas) if etas else 1.0
    if prob.n > THEORY_MAX_N:
        out["status"] = f"skipped: n > {THEORY_MAX_N}"
        return out
    x_star = report.x_final
    jn, inv, kappa = jacobian_norms(jacobian(prob, x_star))
    out.update(jac_norm=jn, inv_norm=inv, kappa=kappa)
    rng = np.random.default_rng(seed)
    pairs = [(rng.uniform(0, 2, prob.dim), rng.uniform(0, 2, prob.dim)) for _ in range(samples)]
    theta = empirical_contraction(prob.fixed_point_map(), pairs)
    out["theta_hat"] = theta
    if not theta < 1.0:
        out["status"] = "no contraction witness below 1"
        return out
    params = TheoryParams(
        nu=1.0,
        h_nu=nare_lipschitz(prob.a, prob.c),
        theta=theta,
        m_alpha=max(1.0, out["m_alpha_observed"]),
        kappa=max(1.0, kappa),
        inv_norm=inv,
        x0_dist=float(np.abs(x_star).max()),
        eta=min(1.0, out["eta_max"]),
    )
    try:
        out["conditions"] = check_theorem_conditions(depth, params).to_dict()
        out["status"] = "ok"
    except AndersonNareError as exc:
        out["status"] = f"hypothesis violated: {exc}"
    return out


def _cell_job(args):
    a, c, n, method, repeats, max_iter, record, theory = args
    prob = build_problem(a, c, n)
    row, report = run_cell(prob, method, repeats, max_iter, record)
    if theory and report is not None and report.converged:
        depth = parse_method(method)[1]
        if depth is not None and depth > 0:
            row.theory = theory_summary(prob, report, depth)
    return row, report


def run_experiment(spec: ExperimentSpec, return_reports: bool = False):
    """Run every cell in spec order.  Optionally also return the per-cell reports."""
    record = spec.history_dump is not None or spec.theory
    jobs, skipped = [], {}
    for n in spec.sizes:
        for a, c in spec.params:
            for method in spec.methods:
                key = len(jobs) + len(skipped)
                if _is_skipped(method, a, spec.long):
                    skipped[key] = ResultRow(method, a, c, n, 0, 0.0, math.nan, "skipped")
                else:
                    jobs.append((key, (a, c, n, method, spec.repeats, spec.max_iter, record or method.startswith("AA"), spec.theory)))

    results: dict[int, tuple] = {}
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            for (key, _), res in zip(jobs, pool.map(_cell_job, [j for _, j in jobs])):
                results[key] = res
    else:
        # Reuse one problem per (a, c, n) when running sequentially.
        cache: dict[tuple, NareProblem] = {}
        for key, (a, c, n, method, repeats, max_iter, rec, theory) in jobs:
            prob = cache.get((a, c, n))
            if prob is None:
                cache.clear()
                prob = cache[(a, c, n)] = build_problem(a, c, n)
            row, report = run_cell(prob, method, repeats, max_iter, rec)
            if theory and report is not None and report.converged:
                depth = parse_method(method)[1]
                if depth:
                    row.theory = theory_summary(prob, report, depth)
            results[key] = (row, report)
    for key, row in skipped.items():
        results[key] = (row, None)

    ordered = [results[k] for k in sorted(results)]
    if spec.history_dump is not None:
        outdir = Path(spec.history_dump)
        outdir.mkdir(parents=True, exist_ok=True)
        for row, report in ordered:
            if report is not None:
                dump_history(report, outdir / history_filename(row))
    rows = [r for r, _ in ordered]
    if return_reports:
        return rows, [rep for _, rep in ordered]
    return rows


def history_filename(row: ResultRow) -> str:
    method = row.method.replace("(", "").replace(")", "")
    return f"{method}_a{row.a!r}_c{row.c!r}_n{row.n}.csv"


def emit_table(rows: list[ResultRow], fmt: str = "csv") -> str:
    if not rows:
        raise ValueError("no rows to emit")
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow(row.csv_fields())
        return buf.getvalue()
    if fmt == "json":
        out = []
        for row in rows:
            d = asdict(row)
            d["cpu_mean_s"] = d.pop("cpu_mean")
            if d["theory"] is None:
                del d["theory"]
            if isinstance(d["res_final"], float) and not math.isfinite(d["res_final"]):
                d["res_final"] = None
            out.append(d)
        return json.dumps(out, indent=2)
    if fmt == "markdown":
        return _markdown(rows)
    raise ValueError(f"unknown format {fmt!r}")


def _fmt_ac(a: float, c: float) -> str:
    if a > 0 and math.isclose(a + c, 1.0) and a < 0.05:
        e = round(math.log10(a))
        if math.isclose(a, 10.0**e):
            return f"(1e{e}, 1-1e{e})"
    return f"({a:g}, {c:g})"


def _markdown(rows: list[ResultRow]) -> str:
    lines = []
    for n in dict.fromkeys(r.n for r in rows):
        sub = [r for r in rows if r.n == n]
        methods = list(dict.fromkeys(r.method for r in sub))
        lines.append(f"### n = {n}")
        lines.append("")
        lines.append("| (a,c) | Item | " + " | ".join(methods) + " |")
        lines.append("|" + "---|" * (len(methods) + 2))
        for a, c in dict.fromkeys((r.a, r.c) for r in sub):
            cell = {r.method: r for r in sub if (r.a, r.c) == (a, c)}

            def val(m, what):
                r = cell.get(m)
                if r is None or r.status == "skipped":
                    return "-"
                if what == "IT":
                    return str(r.it) if r.converged else f"{r.it} ({r.status})"
                if what == "CPU":
                    return f"{r.cpu_mean:.4f}"
                return f"{r.res_final:.4e}"

            for i, item in enumerate(("IT", "CPU", "RES")):
                head = _fmt_ac(a, c) if i == 0 else ""
                lines.append(f"| {head} | {item} | " + " | ".join(val(m, item) for m in methods) + " |")
        lines.append("")
    return "\n".join(lines)


def dump_history(report: SolveReport, path) -> None:
    """Write ``k,res_inf,fnorm2,eta``, one line per counted iteration."""
    if not report.records and report.iterations:
        raise ValueError("report carries no history; rerun with record_history enabled")
    records = report.records[-report.iterations:] if report.iterations else []
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["k", "res_inf", "fnorm2", "eta"])
        for r in records:
            writer.writerow([r.k, repr(r.res_inf), repr(r.fnorm2), repr(r.eta)])
