"""Minimum time/energy speed planning through an exact second-order cone relaxation."""

from .conic_solver import ConicSolution, SolverConfig, kkt_residuals, solve_socp
from .dynamics import (FeasibilityReport, ObjectiveBreakdown, brute_force_small,
                       evaluate_objective, feasibility_check, forward_simulate)
from .errors import (ConditionUndefined, InvalidParameter, MalformedInput, NoSolution,
                     SingularSpeed, VeloPlanError)
from .exactness import (ExactnessReport, NotExact, check_critical_condition,
                        check_h_condition, check_wmax_condition, exactness_report,
                        posterior_gap, recover_nonconvex)
from .experiments import (BenchRecord, ParetoPoint, pareto_sweep, random_batch,
                          runtime_scaling)
from .formulation import (ConicProgram, ExtractedSolution, build_relaxation,
                          extract_solution, solve_relaxation)
from .model import (FIAT_500, FIAT_500E, PathProfile, ProblemInstance, SolverStatus,
                    SpeedSolution, VehicleParams, critical_speed, kmh_to_w,
                    validate_instance, vehicle_preset, w_to_kmh)
from .scenarios import (ScenarioConfig, benchmark_path_instance, counterexample_instance,
                        lambda_grid, load_elevation_csv, random_instance)

__version__ = "0.1.0"

__all__ = [
    "BenchRecord",
    "ConditionUndefined",
    "ConicProgram",
    "ConicSolution",
    "ExactnessReport",
    "ExtractedSolution",
    "FIAT_500",
    "FIAT_500E",
    "FeasibilityReport",
    "InvalidParameter",
    "MalformedInput",
    "NoSolution",
    "NotExact",
    "ObjectiveBreakdown",
    "ParetoPoint",
    "PathProfile",
    "ProblemInstance",
    "ScenarioConfig",
    "SingularSpeed",
    "SolverConfig",
    "SolverStatus",
    "SpeedSolution",
    "VehicleParams",
    "VeloPlanError",
    "benchmark_path_instance",
    "brute_force_small",
    "build_relaxation",
    "check_critical_condition",
    "check_h_condition",
    "check_wmax_condition",
    "counterexample_instance",
    "critical_speed",
    "evaluate_objective",
    "exactness_report",
    "extract_solution",
    "feasibility_check",
    "forward_simulate",
    "kkt_residuals",
    "kmh_to_w",
    "lambda_grid",
    "load_elevation_csv",
    "pareto_sweep",
    "posterior_gap",
    "random_batch",
    "random_instance",
    "recover_nonconvex",
    "runtime_scaling",
    "solve_relaxation",
    "solve_socp",
    "validate_instance",
    "vehicle_preset",
    "w_to_kmh",
]
