"""Command line entry point: ``proxcycle run <problem.json> [options]``.

Exit status is 0 only when the requested solver converged and every
verification check passed, 1 otherwise, and 2 for unusable input.
"""

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass

import numpy as np

from .catalog import IndicatorLine, check_blanket_assumption, existence_diagnostic
from .engine import Status, generalized_solve, naive_cycle_iterate
from .errors import ProxCycleError
from .lines import LineFamily, solve_line_cycles
from .problemfile import MODES, parse_problem
from .verify import (Check, VerificationReport, brute_force_cycle_search, check_cycle,
                     check_fixed_point_translation, check_gap_identities)

__all__ = ["run", "RunResult", "main", "TRACE_HEADER", "REPORT_SCHEMA"]

REPORT_SCHEMA = "proxcycle.report/1"
TRACE_HEADER = ("iter", "norm_x", "residual", "gap_change")

# tolerances of the checks attached to every run
IDENTITY_TOL = 1e-7
ANALYTIC_TOL = 1e-9
AGREEMENT_TOL = 1e-6


@dataclass
class RunResult:
    exit_status: int
    report: dict
    trace: list

    def report_json(self):
        return json.dumps(self.report, indent=2, sort_keys=True) + "\n"

    def trace_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(TRACE_HEADER)
        for rec in self.trace:
            writer.writerow([rec.iter, repr(rec.norm_x), repr(rec.residual), repr(rec.gap_change)])
        return buf.getvalue()


def _clean(val):
    """Make ``val`` JSON-safe: arrays to lists, non-finite floats to strings."""
    if isinstance(val, np.ndarray):
        return _clean(val.tolist())
    if isinstance(val, (list, tuple)):
        return [_clean(v) for v in val]
    if isinstance(val, dict):
        return {k: _clean(v) for k, v in val.items()}
    if isinstance(val, (np.floating, float)):
        val = float(val)
        return val if math.isfinite(val) else str(val)
    if isinstance(val, np.integer):
        return int(val)
    return val


def _num(value, tol):
    return {"value": _clean(value), "tolerance": tol}


def _solver_section(rep, tol):
    z = rep.classical_cycle
    return {
        "status": rep.status.value,
        "iterations": rep.iterations,
        "final_residual": _num(rep.final_residual, tol),
        "generalized_cycle": _num(rep.generalized_cycle, tol),
        "gap_vector": _num(rep.gap_vector, tol),
        "classical_cycle": None if z is None else _num(z, tol),
        "inner_cap_hits": rep.inner_cap_hits,
        "warnings": list(rep.warnings),
    }


def _solver_checks(pf, rep, checks):
    problem = pf.problem
    tol = pf.solver.outer_tol
    scale = max(1.0, float(np.linalg.norm(rep.gap_vector)))
    checks.add(*check_gap_identities(rep.generalized_cycle, rep.gap_vector,
                                     IDENTITY_TOL * scale))
    z = rep.classical_cycle
    if z is not None:
        checks.add(check_cycle(problem, z, 10 * tol * max(1.0, float(np.linalg.norm(z)))))
        checks.add(check_fixed_point_translation(problem, z, np.roll(z, 1, axis=0) - z,
                                                 samples=pf.samples, seed=pf.seed))


def _analytic(pf, checks):
    family = LineFamily.from_problem(pf.problem)
    sol = solve_line_cycles(family)
    b = family.directions
    u = sol.points
    stationarity = max(abs(b[i] @ (u[i] - u[i - 1])) for i in range(family.m))
    scale = max(1.0, float(np.abs(sol.matrix).max()))
    checks.add(
        Check("linear_system", *_le(np.abs(sol.matrix @ sol.t - sol.rhs).max(), 1e-10 * scale),
              "A t = rhs"),
        Check("stationarity", *_le(stationarity, ANALYTIC_TOL * scale),
              "<b_i, u_i - u_{i-1}> = 0"),
        check_cycle(pf.problem, u, ANALYTIC_TOL * max(1.0, float(np.linalg.norm(u)))),
    )
    section = {
        "status": Status.CONVERGED.value,
        "classification": sol.classification,
        "matrix": _num(sol.matrix, 0.0),
        "rhs": _num(sol.rhs, 0.0),
        "determinant": _num(sol.determinant, 1e-10),
        "t": _num(sol.t, 1e-10),
        "nullspace": _num(sol.nullspace, 1e-10),
        "cycle_points": _num(sol.points, ANALYTIC_TOL),
        "gap_vector": _num(sol.gap_vector, ANALYTIC_TOL),
    }
    return sol, section


def _le(measured, tol):
    measured = float(measured)
    return bool(measured <= tol), measured, float(tol)


def run(pf):
    """Solve and verify a parsed problem file.

    Returns a :class:`RunResult`; nothing is written to disk here.
    """
    mode = pf.mode
    if mode not in MODES:
        raise ProxCycleError(f"unknown mode {mode!r}")
    checks = VerificationReport()
    runs = {}
    trace = []
    gaps = {}
    ok = True

    if mode in ("naive", "verify_all"):
        rep = naive_cycle_iterate(pf.problem, pf.solver)
        runs["naive"] = _solver_section(rep, pf.solver.outer_tol)
        if rep.converged:
            _solver_checks(pf, rep, checks)
            gaps["naive"] = rep.gap_vector
        if mode == "naive":
            trace = rep.trace
            ok = rep.converged

    if mode in ("generalized", "verify_all"):
        rep = generalized_solve(pf.problem, pf.solver, method=pf.inner_method)
        runs["generalized"] = _solver_section(rep, pf.solver.outer_tol)
        _solver_checks(pf, rep, checks)
        gaps["generalized"] = rep.gap_vector
        trace = rep.trace
        ok = rep.converged

    all_lines = all(isinstance(p, IndicatorLine) for p in pf.problem.pieces)
    if mode == "analytic_lines" or (mode == "verify_all" and all_lines):
        sol, runs["analytic_lines"] = _analytic(pf, checks)
        gaps["analytic_lines"] = sol.gap_vector

    if mode == "verify_all":
        names = sorted(gaps)
        for a, b in zip(names, names[1:]):
            diff = float(np.abs(gaps[a] - gaps[b]).max())
            checks.add(Check(f"gap_agreement_{a}_vs_{b}", *_le(diff, AGREEMENT_TOL),
                             "gap vectors of different solvers coincide"))
        if pf.brute_force is not None:
            g = pf.brute_force
            bf = brute_force_cycle_search(pf.problem, g["lo"], g["hi"], g["steps"])
            runs["brute_force"] = {"grid": dict(g), "evaluations": bf.evaluations,
                                   "best_z": _num(bf.z, 0.0),
                                   "min_cycle_residual": _num(bf.residual, 0.0)}

    passed = checks.passed
    exit_status = 0 if ok and passed else 1
    report = {
        "schema": REPORT_SCHEMA,
        "mode": mode,
        "seed": pf.seed,
        "problem": pf.to_dict(),
        "diagnostics": {"blanket_assumption": check_blanket_assumption(pf.problem),
                        "classical_cycle_existence": existence_diagnostic(pf.problem)},
        "runs": runs,
        "verification": _clean(checks.to_dict()),
        "exit_status": exit_status,
    }
    return RunResult(exit_status, _clean(report), trace)


def _build_parser():
    parser = argparse.ArgumentParser(prog="proxcycle",
                                     description="Cycles and gap vectors of cyclic proximal maps.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="solve and verify a problem file")
    p.add_argument("problem", help="problem JSON path or bundled problem name")
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--gamma", type=float)
    p.add_argument("--lambda", dest="relaxation", type=float)
    p.add_argument("--max-iters", dest="max_outer_iters", type=int)
    p.add_argument("--tol", dest="outer_tol", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--trace", dest="trace_path")
    p.add_argument("--report", dest="report_path")
    return parser


def main(argv=None):
    args = _build_parser().parse_args(argv)
    overrides = {k: v for k, v in vars(args).items()
                 if k not in ("command", "problem") and v is not None}
    try:
        pf = parse_problem(args.problem).with_overrides(**overrides)
        result = run(pf)
    except ProxCycleError as exc:
        print(f"proxcycle: error: {exc}", file=sys.stderr)
        return 2
    if pf.report_path:
        with open(pf.report_path, "w") as fh:
            fh.write(result.report_json())
    if pf.trace_path:
        with open(pf.trace_path, "w", newline="") as fh:
            fh.write(result.trace_csv())
    for name, sec in result.report["runs"].items():
        status = sec.get("status", "")
        print(f"{name}: {status}".rstrip())
    ver = result.report["verification"]
    n_fail = sum(1 for c in ver["checks"] if not c["passed"] and not c["skipped"])
    print(f"checks: {len(ver['checks'])} run, {n_fail} failed")
    return result.exit_status


if __name__ == "__main__":
    sys.exit(main())
