"""The interior-point solver on generic and relaxation programs."""

import numpy as np
import pytest
import scipy.sparse as sp

from veloplan.conic_solver import SolverConfig, kkt_residuals, solve_socp
from veloplan.errors import InvalidParameter
from veloplan.formulation import ConicProgram, NonnegativeOrthant, SecondOrderCone
from veloplan.model import SolverStatus

from conftest import clarabel_value


def _program(c, A, b, G, h, lp, socs=()):
    cones = ((NonnegativeOrthant(lp),) if lp else ()) + tuple(SecondOrderCone(d) for d in socs)
    return ConicProgram(np.asarray(c, float), sp.csc_matrix(np.atleast_2d(A)), np.asarray(b, float),
                        sp.csc_matrix(np.atleast_2d(G)), np.asarray(h, float), cones)


@pytest.fixture
def small_lp():
    # min -x0 - x1  s.t.  x0 + x1 + x2 = 1, x >= 0  -> value -1
    return _program([-1, -1, 0], [[1, 1, 1]], [1], -np.eye(3), np.zeros(3), 3)


@pytest.fixture
def small_socp():
    # min x0  s.t.  ||(x1, x2)|| <= x0, x1 = 3, x2 = 4  -> value 5
    return _program([1, 0, 0], [[0, 1, 0], [0, 0, 1]], [3, 4], -np.eye(3), np.zeros(3), 0, (3,))


class TestSmallPrograms:
    def test_lp(self, small_lp):
        sol = solve_socp(small_lp)
        assert sol.status is SolverStatus.OPTIMAL
        assert sol.objective == pytest.approx(-1.0, abs=1e-8)

    def test_socp(self, small_socp):
        sol = solve_socp(small_socp)
        assert sol.status is SolverStatus.OPTIMAL
        assert sol.objective == pytest.approx(5.0, abs=1e-8)
        np.testing.assert_allclose(sol.primal, [5, 3, 4], atol=1e-7)

    def test_without_equilibration(self, small_socp):
        sol = solve_socp(small_socp, SolverConfig(equilibrate=False))
        assert sol.objective == pytest.approx(5.0, abs=1e-8)

    def test_primal_infeasible(self):
        # x0 = -1 with x0 >= 0
        prog = _program([1.0], [[1.0]], [-1.0], [[-1.0]], [0.0], 1)
        assert solve_socp(prog).status is SolverStatus.INFEASIBLE

    def test_iteration_limit(self, small_socp):
        sol = solve_socp(small_socp, SolverConfig(max_iters=1))
        assert sol.status is SolverStatus.MAX_ITER

    def test_non_finite_data(self, small_lp):
        bad = small_lp.with_objective(np.array([np.nan, 0, 0]))
        with pytest.raises(InvalidParameter):
            solve_socp(bad)

    @pytest.mark.parametrize("kwargs", [dict(eq_tol=0.0), dict(max_iters=0),
                                        dict(step_fraction=1.0)])
    def test_config_validation(self, kwargs):
        with pytest.raises(InvalidParameter):
            SolverConfig(**kwargs)


class TestRelaxationSolve:
    def test_agrees_with_reference(self, ce_instance):
        from veloplan.formulation import build_relaxation
        prog = build_relaxation(ce_instance)
        sol = solve_socp(prog)
        assert sol.objective == pytest.approx(clarabel_value(prog), rel=1e-7)

    def test_kkt_residuals(self, benchmark_program):
        sol = solve_socp(benchmark_program)
        res = kkt_residuals(benchmark_program, sol)
        assert res.primal < 1e-8 and res.dual < 1e-8
        assert res.dual_cone < 1e-8 and res.gap < 1e-8

    def test_residual_dimension_mismatch(self, benchmark_program, small_lp):
        sol = solve_socp(small_lp)
        with pytest.raises(InvalidParameter):
            kkt_residuals(benchmark_program, sol)

    def test_deterministic(self, benchmark_program):
        a, b = solve_socp(benchmark_program), solve_socp(benchmark_program)
        np.testing.assert_array_equal(a.primal, b.primal)
        assert a.iterations == b.iterations

    def test_objective_scale_invariance(self, benchmark_program):
        base = solve_socp(benchmark_program)
        scaled = solve_socp(benchmark_program.with_objective(1000.0 * benchmark_program.c))
        assert scaled.objective == pytest.approx(1000.0 * base.objective, rel=1e-7)

    def test_gap_shrinks(self, benchmark_program):
        hist = solve_socp(benchmark_program).history
        gaps = [row["gap"] for row in hist]
        assert gaps[-1] < 1e-6 * gaps[0]
