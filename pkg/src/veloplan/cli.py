"""Command-line interface.

Exit codes:

* 0: solved and exact (``check``: a-priori certified; other commands: done)
* 2: relaxation solved but not exact (``check``: not certified a priori)
* 3: the relaxation is infeasible
* 4: bad input (arguments, files, parameters)
* 5: solver failure (numerical breakdown or iteration limit)
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .conic_solver import SolverConfig, solve_socp
from .dynamics import evaluate_objective, feasibility_check
from .errors import VeloPlanError
from .exactness import (DEFAULT_GAP_THRESHOLD, NotExact, exactness_report,
                        recover_nonconvex)
from .experiments import (pareto_sweep, random_batch, runtime_scaling, write_batch_csv,
                          write_pareto_csv, write_scaling_csv)
from .formulation import build_relaxation, extract_solution
from .model import ProblemInstance, SolverStatus, require_valid, vehicle_preset
from .scenarios import (ScenarioConfig, benchmark_path_instance, counterexample_instance,
                        lambda_grid, random_instance)

EXIT_OK = 0
EXIT_NOT_EXACT = 2
EXIT_INFEASIBLE = 3
EXIT_INPUT = 4
EXIT_SOLVER = 5

INSTANCE_PRESETS = ("benchmark", "counterexample")

log = logging.getLogger("veloplan")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


@dataclass
class CliConfig:
    """Parsed command line."""

    subcommand: str
    out: Path
    solver: SolverConfig
    source: Optional[str] = None
    seed: int = 0
    extra: dict = field(default_factory=dict)


def _build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--out", default=".", help="output directory (default: .)")
    common.add_argument("--eq-tol", type=float, default=1e-9)
    common.add_argument("--gap-tol", type=float, default=1e-9)
    common.add_argument("--max-iters", type=int, default=200)
    common.add_argument("-v", "--verbose", action="store_true")

    instance_opts = _Parser(add_help=False)
    instance_opts.add_argument("--vehicle", default="fiat500",
                               help="vehicle preset: fiat500 or fiat500e")
    instance_opts.add_argument("--lambda", dest="lam", type=float, default=None,
                               help="energy weight in s/J")
    instance_opts.add_argument("--n", type=int, default=200, help="number of grid points")

    parser = _Parser(prog="veloplan", description="Minimum time/energy speed planning.")
    sub = parser.add_subparsers(dest="subcommand", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("solve", parents=[common, instance_opts],
                       help="solve an instance; write solution.csv and report.json")
    p.add_argument("instance", help="instance JSON file or preset name "
                                    f"({', '.join(INSTANCE_PRESETS)})")
    p.add_argument("--gap-threshold", type=float, default=DEFAULT_GAP_THRESHOLD)

    p = sub.add_parser("check", parents=[common, instance_opts],
                       help="evaluate the a-priori exactness conditions; write exactness.json")
    p.add_argument("instance")

    p = sub.add_parser("scenario", parents=[common, instance_opts],
                       help="write a bundled scenario as instance.json")
    p.add_argument("kind", choices=("counterexample", "benchmark", "random"))
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("pareto", parents=[common],
                       help="lambda sweep on the benchmark path; write pareto.csv")
    p.add_argument("--vehicle", default="fiat500")
    p.add_argument("--samples", type=int, default=100,
                   help="number of log-spaced lambda values besides 0")
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--threads", type=int, default=None)

    p = sub.add_parser("bench", parents=[common],
                       help="solve time versus n on the benchmark path; write scaling.csv")
    p.add_argument("--vehicle", default="fiat500")
    p.add_argument("--n-list", type=int, nargs="+", default=[50, 200, 500, 1000])
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--lambda", dest="lam", type=float, default=0.0)

    p = sub.add_parser("batch", parents=[common],
                       help="random-instance statistics; write batch.csv")
    p.add_argument("--vehicle", default="fiat500")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None)
    return parser


def _config(args) -> CliConfig:
    solver = SolverConfig(eq_tol=args.eq_tol, gap_tol=args.gap_tol, max_iters=args.max_iters)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return CliConfig(subcommand=args.subcommand, out=out, solver=solver,
                     source=getattr(args, "instance", None),
                     seed=getattr(args, "seed", 0), extra=vars(args))


def load_instance(source: str, vehicle: str = "fiat500", lam: Optional[float] = None,
                  n: int = 200) -> ProblemInstance:
    """Instance from a JSON file or a preset name.

    ``lam`` overrides the weight stored in a file and defaults to 0 for
    presets.
    """
    if source in INSTANCE_PRESETS:
        if source == "counterexample":
            inst = counterexample_instance()
            return inst if lam is None else inst.with_lambda(lam)
        return benchmark_path_instance(vehicle_preset(vehicle), lam or 0.0, n)
    path = Path(source)
    if not path.is_file():
        raise UsageError(f"no such instance file or preset: {source!r}")
    inst = ProblemInstance.from_json(path.read_text(encoding="utf-8"))
    if lam is not None:
        inst = inst.with_lambda(lam)
    require_valid(inst)
    return inst


def _fmt(v) -> str:
    return "" if v is None else repr(float(v))


def write_solution_csv(path: Path, instance: ProblemInstance, w, F, t) -> None:
    s = instance.path.s
    power = F * np.sqrt(np.maximum(w[:-1], 0.0))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["i", "s_m", "w_m2s2", "v_kmh", "F_N", "power_W", "t_spm"])
        for i in range(instance.n):
            step = i < instance.n - 1
            writer.writerow([i, _fmt(s[i]), _fmt(w[i]), _fmt(3.6 * np.sqrt(max(w[i], 0.0))),
                             _fmt(F[i] if step else None), _fmt(power[i] if step else None),
                             _fmt(t[i] if step else None)])


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, indent=2, allow_nan=False, default=_json_default) + "\n",
                    encoding="utf-8")


def _json_default(v):
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(f"not JSON serialisable: {type(v).__name__}")


def _clean(v):
    """Replace non-finite floats by None so the report stays strict JSON."""
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, (float, np.floating)):
        return float(v) if np.isfinite(v) else None
    return v


def cmd_solve(cfg: CliConfig) -> int:
    a = cfg.extra
    inst = load_instance(cfg.source, a["vehicle"], a["lam"], a["n"])
    program = build_relaxation(inst)
    raw = solve_socp(program, cfg.solver)
    report = {"instance_digest": inst.digest(), "lambda": inst.lam, "n": inst.n,
              "solver": {"status": raw.status.value, "iterations": raw.iterations,
                         "wall_time_s": raw.wall_time,
                         "residuals": {"primal": raw.final_residuals.primal,
                                       "dual": raw.final_residuals.dual,
                                       "gap": raw.final_residuals.gap},
                         "diagnostics": {k: v for k, v in raw.diagnostics.items()
                                         if not isinstance(v, list)}}}
    if raw.status is SolverStatus.INFEASIBLE:
        report["exactness"] = exactness_report(inst, None, a["gap_threshold"]).to_dict()
        report["outcome"] = "infeasible"
        _write_json(cfg.out / "report.json", _clean(report))
        log.error("relaxation infeasible: %s", raw.diagnostics.get("reason", ""))
        return EXIT_INFEASIBLE
    if raw.status is not SolverStatus.OPTIMAL:
        report["exactness"] = exactness_report(inst, None, a["gap_threshold"]).to_dict()
        report["outcome"] = "solver_failure"
        _write_json(cfg.out / "report.json", _clean(report))
        log.error("solver stopped with %s", raw.status.value)
        return EXIT_SOLVER

    sol = extract_solution(program, raw)
    exact = exactness_report(inst, sol, a["gap_threshold"])
    report["exactness"] = exact.to_dict()
    report["relaxation_residuals"] = {**sol.residuals, **sol.constraint_residuals}
    recovered = recover_nonconvex(sol, a["gap_threshold"])
    if isinstance(recovered, NotExact):
        obj = evaluate_objective(sol.w, sol.F, inst)
        report["outcome"] = "not_exact"
        report["not_exact"] = recovered.to_dict()
        report["objective"] = {**obj.to_dict(), "relaxation_value": sol.objective}
        report["feasibility"] = feasibility_check(sol.w, sol.F, inst).to_dict()
        write_solution_csv(cfg.out / "solution.csv", inst, sol.w, sol.F, sol.t)
        _write_json(cfg.out / "report.json", _clean(report))
        log.warning("relaxation is not exact (gap %.3g)", recovered.gap)
        return EXIT_NOT_EXACT
    obj = evaluate_objective(recovered.w, recovered.F, inst)
    report["outcome"] = "exact"
    report["objective"] = {**obj.to_dict(), "relaxation_value": sol.objective}
    report["feasibility"] = feasibility_check(recovered.w, recovered.F, inst).to_dict()
    write_solution_csv(cfg.out / "solution.csv", inst, recovered.w, recovered.F, recovered.t)
    _write_json(cfg.out / "report.json", _clean(report))
    return EXIT_OK


def cmd_check(cfg: CliConfig) -> int:
    a = cfg.extra
    inst = load_instance(cfg.source, a["vehicle"], a["lam"], a["n"])
    report = exactness_report(inst)
    doc = {"instance_digest": inst.digest(), **report.to_dict()}
    _write_json(cfg.out / "exactness.json", _clean(doc))
    return EXIT_OK if report.a_priori else EXIT_NOT_EXACT


def cmd_scenario(cfg: CliConfig) -> int:
    a = cfg.extra
    vehicle = vehicle_preset(a["vehicle"])
    if a["kind"] == "counterexample":
        inst = counterexample_instance()
    elif a["kind"] == "benchmark":
        inst = benchmark_path_instance(vehicle, a["lam"] or 0.0, a["n"])
    else:
        inst = random_instance(ScenarioConfig(seed=a["seed"], n=a["n"]), vehicle)
    if a["lam"] is not None:
        inst = inst.with_lambda(a["lam"])
    (cfg.out / "instance.json").write_text(inst.to_json() + "\n", encoding="utf-8")
    print(inst.digest())
    return EXIT_OK


def cmd_pareto(cfg: CliConfig) -> int:
    a = cfg.extra
    if a["samples"] < 1:
        raise UsageError("--samples must be at least 1")
    points = pareto_sweep(vehicle_preset(a["vehicle"]), lambda_grid(a["samples"]), a["n"],
                          cfg.solver, a["threads"])
    write_pareto_csv(points, cfg.out / "pareto.csv")
    failed = [p for p in points if p.status is not SolverStatus.OPTIMAL]
    return EXIT_SOLVER if failed else EXIT_OK


def cmd_bench(cfg: CliConfig) -> int:
    a = cfg.extra
    records = runtime_scaling(vehicle_preset(a["vehicle"]), a["n_list"], a["lam"],
                              a["repeats"], cfg.solver)
    write_scaling_csv(records, cfg.out / "scaling.csv")
    return EXIT_SOLVER if any(r.status is not SolverStatus.OPTIMAL for r in records) else EXIT_OK


def cmd_batch(cfg: CliConfig) -> int:
    a = cfg.extra
    summary = random_batch(ScenarioConfig(seed=a["seed"]), vehicle_preset(a["vehicle"]),
                           a["count"], cfg.solver, a["threads"])
    write_batch_csv(summary, cfg.out / "batch.csv")
    print(json.dumps(_clean(summary.statistics())))
    return EXIT_SOLVER if summary.failures else EXIT_OK


COMMANDS = {"solve": cmd_solve, "check": cmd_check, "scenario": cmd_scenario,
            "pareto": cmd_pareto, "bench": cmd_bench, "batch": cmd_batch}


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Execute one subcommand and return its exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        cfg = _config(args)
        return COMMANDS[cfg.subcommand](cfg)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INPUT
    except (VeloPlanError, ValueError, OSError) as exc:
        print(f"veloplan: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main() -> None:
    sys.exit(run())
