"""Batch studies: Pareto fronts, runtime scaling, random-instance statistics.

Solves inside a sweep are independent. They run on a thread pool whose size
is capped by the ``VELO_PLAN_THREADS`` environment variable; results are
always returned in a fixed order, never in completion order.
"""

from __future__ import annotations

import csv
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .conic_solver import SolverConfig, solve_socp
from .dynamics import evaluate_objective, forward_simulate
from .errors import NoSolution, SingularSpeed
from .exactness import DEFAULT_GAP_THRESHOLD, exactness_report, posterior_gap
from .formulation import build_relaxation, extract_solution
from .model import FIAT_500, ProblemInstance, SolverStatus, VehicleParams
from .scenarios import ScenarioConfig, benchmark_path_instance, random_instance

log = logging.getLogger(__name__)

THREADS_ENV = "VELO_PLAN_THREADS"


def resolve_threads(requested: Optional[int] = None) -> int:
    """Worker count: ``requested`` (default: CPU count) capped by the env var."""
    n = requested if requested is not None else (os.cpu_count() or 1)
    cap = os.environ.get(THREADS_ENV)
    if cap:
        try:
            n = min(n, int(cap))
        except ValueError:
            log.warning("ignoring non-integer %s=%r", THREADS_ENV, cap)
    return max(1, n)


def _map_ordered(fn: Callable, items: Sequence, threads: Optional[int]) -> list:
    workers = min(resolve_threads(threads), len(items)) if items else 1
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class SolveOutcome:
    """One solved instance, evaluated by the dynamics oracle."""

    instance: ProblemInstance
    status: SolverStatus
    solve_time: float
    iterations: int
    travel_time: float = math.nan
    energy: float = math.nan
    weighted: float = math.nan
    solver_objective: float = math.nan
    exactness_gap: float = math.nan
    simulation_error: float = math.nan
    a_priori: bool = False
    reason: str = ""

    @property
    def exact(self) -> bool:
        return self.status is SolverStatus.OPTIMAL and self.exactness_gap <= DEFAULT_GAP_THRESHOLD

    @property
    def objective_error(self) -> float:
        """Relative difference between oracle and solver objective values."""
        return abs(self.weighted - self.solver_objective) / max(abs(self.solver_objective), 1e-300)


def solve_and_evaluate(instance: ProblemInstance,
                       config: Optional[SolverConfig] = None) -> SolveOutcome:
    """Solve the relaxation and recompute its objectives independently.

    ``simulation_error`` is the largest difference between the solver's
    squared speeds and a forward simulation of its forces, relative to the
    largest squared speed of the profile. A pointwise ratio would be
    meaningless where the profile ends at a standstill (w of order 1e-13).
    """
    program = build_relaxation(instance)
    raw = solve_socp(program, config)
    a_priori = exactness_report(instance).a_priori
    base = dict(instance=instance, status=raw.status, solve_time=raw.wall_time,
                iterations=raw.iterations, a_priori=a_priori)
    try:
        sol = extract_solution(program, raw)
        gap = posterior_gap(sol)
        obj = evaluate_objective(sol.w, sol.F, instance)
    except (NoSolution, SingularSpeed) as exc:
        return SolveOutcome(**base, reason=str(exc))
    sim = forward_simulate(instance.w_init, sol.F, instance.path, instance.vehicle).w
    sim_err = float(np.max(np.abs(sim - sol.w)) / max(float(np.max(np.abs(sol.w))), 1e-300))
    return SolveOutcome(**base, travel_time=obj.travel_time, energy=obj.energy,
                        weighted=obj.weighted, solver_objective=sol.objective,
                        exactness_gap=gap, simulation_error=sim_err)


@dataclass(frozen=True)
class ParetoPoint:
    lam: float
    travel_time: float
    energy: float
    exactness_gap: float
    solve_time: float
    status: SolverStatus = SolverStatus.OPTIMAL
    solver_objective: float = math.nan


def pareto_sweep(vehicle: VehicleParams, lambda_values: Iterable[float], n: int = 200,
                 config: Optional[SolverConfig] = None,
                 threads: Optional[int] = None) -> list[ParetoPoint]:
    """One benchmark-path solve per ``lambda``; points sorted by ``lambda``.

    Time and energy come from the dynamics oracle. A failed solve yields a
    point with NaN objectives and its solver status.
    """
    lams = sorted(float(v) for v in lambda_values)
    if not lams:
        raise ValueError("lambda_values must be nonempty")
    if any(v < 0 or not math.isfinite(v) for v in lams):
        raise ValueError("lambda values must be finite and non-negative")

    def one(lam):
        out = solve_and_evaluate(benchmark_path_instance(vehicle, lam, n), config)
        return ParetoPoint(lam, out.travel_time, out.energy, out.exactness_gap,
                           out.solve_time, out.status, out.solver_objective)

    return _map_ordered(one, lams, threads)


@dataclass(frozen=True)
class BenchRecord:
    n: int
    solve_time: float
    status: SolverStatus
    iterations: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be at least 2")


def runtime_scaling(vehicle: VehicleParams, n_values: Iterable[int], lam: float = 0.0,
                    repeats: int = 1, config: Optional[SolverConfig] = None) -> list[BenchRecord]:
    """Solve the benchmark path at each resolution; report the median time.

    Runs sequentially so that timings are not disturbed by other solves.
    """
    out = []
    for n in n_values:
        n = int(n)
        if n < 2:
            raise ValueError(f"n must be at least 2, got {n}")
        program = build_relaxation(benchmark_path_instance(vehicle, lam, n))
        times, raw = [], None
        for _ in range(max(1, repeats)):
            raw = solve_socp(program, config)
            times.append(raw.wall_time)
        out.append(BenchRecord(n, float(np.median(times)), raw.status, raw.iterations))
    return out


@dataclass(frozen=True)
class BatchRecord:
    seed: int
    lam: float
    solve_time: float
    gap: float
    status: SolverStatus
    a_priori: bool
    simulation_error: float = math.nan
    objective_error: float = math.nan


@dataclass(frozen=True)
class BatchSummary:
    vehicle: str
    records: tuple[BatchRecord, ...]

    @property
    def solve_times(self) -> np.ndarray:
        return np.array([r.solve_time for r in self.records])

    @property
    def failures(self) -> int:
        return sum(r.status is not SolverStatus.OPTIMAL for r in self.records)

    @property
    def max_gap(self) -> float:
        gaps = [r.gap for r in self.records if r.status is SolverStatus.OPTIMAL]
        return float(max(gaps)) if gaps else math.nan

    def statistics(self) -> dict:
        t = self.solve_times
        q1, med, q3 = np.percentile(t, [25, 50, 75])
        return {"vehicle": self.vehicle, "count": len(self.records),
                "mean_solve_s": float(t.mean()), "median_solve_s": float(med),
                "q1_solve_s": float(q1), "q3_solve_s": float(q3),
                "max_gap": self.max_gap, "failures": self.failures}


def random_batch(config: ScenarioConfig, vehicle: VehicleParams = FIAT_500, count: int = 100,
                 solver: Optional[SolverConfig] = None,
                 threads: Optional[int] = None) -> BatchSummary:
    """Solve ``count`` random instances with seeds ``config.seed + k``."""
    if count < 1:
        raise ValueError("count must be at least 1")

    def one(k):
        cfg = replace(config, seed=config.seed + k)
        out = solve_and_evaluate(random_instance(cfg, vehicle), solver)
        return BatchRecord(cfg.seed, out.instance.lam, out.solve_time, out.exactness_gap,
                           out.status, out.a_priori, out.simulation_error, out.objective_error)

    return BatchSummary(vehicle.name, tuple(_map_ordered(one, range(count), threads)))


def _write_rows(path, header, rows) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return path


def write_pareto_csv(points: Iterable[ParetoPoint], path) -> Path:
    return _write_rows(path, ["lambda", "time_s", "energy_J", "gap", "solve_s"],
                       ([p.lam, p.travel_time, p.energy, p.exactness_gap, p.solve_time]
                        for p in points))


def write_scaling_csv(records: Iterable[BenchRecord], path) -> Path:
    return _write_rows(path, ["n", "solve_s", "status"],
                       ([r.n, r.solve_time, r.status.value] for r in records))


def write_batch_csv(summary: BatchSummary, path) -> Path:
    return _write_rows(path, ["seed", "lambda", "solve_time", "gap", "status"],
                       ([r.seed, r.lam, r.solve_time, r.gap, r.status.value]
                        for r in summary.records))
