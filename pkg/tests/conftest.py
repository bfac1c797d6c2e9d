"""Shared fixtures and hand-derived reference values.

Every constant below was obtained by substituting the vehicle data into the
closed-form expressions with plain arithmetic, independently of the package,
and frozen before the implementation was exercised.
"""

from __future__ import annotations

import numpy as np
import pytest

from veloplan.formulation import build_relaxation, solve_relaxation
from veloplan.model import FIAT_500, PathProfile, ProblemInstance
from veloplan.scenarios import benchmark_path_instance, counterexample_instance

# Fiat 500, mu = 0.7, h = 3, lambda = 0
FIAT500_WBAR = 58.40971002849093
FIAT500_H_LHS = 28.700129163118955
FIAT500_H_RHS = 18.368226287233224
FIAT500E_WBAR = 86.14679164286133

# counterexample: P = 12.5 kW, mu = 0.3, h = 1, sin 22.5 deg incline
CE_WBAR = 19.29241314192461
CE_H_LHS = 9.405643121515485
CE_H_RHS = 3.4697833777593927
CE_MARGIN_INCLINE = -4.361137827001525      # 0.29087 - 4.65201
CE_BRACKET_INCLINE = -1.1444157865538171    # 2.68809 - 0.01033 - 3.82218
CE_BRACKET_FLAT = 2.8603571880488574

# speed-limit margin at w_max = 625 on a 4 % grade, Fiat 500
MARGIN_625_UPHILL = 1.3757965977249225

# one explicit step from w = 625 with F = 0 on flat ground, h = 3
ONE_STEP_W = 624.0067614581179

# 25 m/s cruise over 600 m on flat ground, Fiat 500
CRUISE_FORCE = 320.15389000000005
CRUISE_ENERGY = 192092.33400000003

# sine of a 4 % grade
RAMP_SINE = 0.039968038348871575


def flat_instance(n: int, h: float = 3.0, w_init: float = 625.0, lam: float = 0.0,
                  w_max: float = 1975.0, vehicle=FIAT_500) -> ProblemInstance:
    return ProblemInstance(vehicle, PathProfile(h, np.zeros(n - 1), np.full(n, w_max)),
                           lam=lam, w_init=w_init)


def clarabel_value(program) -> float:
    """Optimal value of ``program`` from an external reference solver."""
    cp = pytest.importorskip("cvxpy")
    x = cp.Variable(program.num_vars)
    lp = program.lp_dim
    cons = [program.A @ x == program.b, program.h[:lp] - program.G[:lp] @ x >= 0]
    off = lp
    for d in program.soc_dims:
        u = program.h[off:off + d] - program.G[off:off + d] @ x
        cons.append(cp.SOC(u[0], u[1:]))
        off += d
    prob = cp.Problem(cp.Minimize(program.c @ x), cons)
    prob.solve(solver="CLARABEL")
    return float(prob.value)


ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    """Register one acceptance line; echoed again in the terminal summary."""
    line = f"CRITERION {number}: {'PASS' if passed else 'FAIL'} | {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])


@pytest.fixture(scope="session")
def benchmark_instance():
    return benchmark_path_instance(FIAT_500, 0.0, 200)


@pytest.fixture(scope="session")
def benchmark_solution(benchmark_instance):
    return solve_relaxation(benchmark_instance)


@pytest.fixture(scope="session")
def benchmark_program(benchmark_instance):
    return build_relaxation(benchmark_instance)


@pytest.fixture(scope="session")
def ce_instance():
    return counterexample_instance()


@pytest.fixture(scope="session")
def ce_solution(ce_instance):
    return solve_relaxation(ce_instance)
