"""Assembly of the relaxation and its relationship to the original problem."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from veloplan.conic_solver import solve_socp
from veloplan.dynamics import forward_simulate
from veloplan.errors import InvalidParameter, NoSolution
from veloplan.formulation import (NonnegativeOrthant, SecondOrderCone, build_relaxation,
                                  cone_violation, dump_triplets, embed_point,
                                  hyperbolic_to_soc, load_triplets, physical_residuals,
                                  soc_margin, solve_relaxation, variable_layout)
from veloplan.model import FIAT_500, FIAT_500E, PathProfile, ProblemInstance

from conftest import clarabel_value, flat_instance


class TestLayout:
    def test_blocks_are_contiguous(self):
        lay = variable_layout(5)
        assert [(k, s.start, s.stop) for k, s in lay.items()] == [
            ("w", 0, 5), ("f", 5, 9), ("t", 9, 13), ("e", 13, 17), ("y", 17, 21), ("z", 21, 25)]

    def test_cone_shapes(self, benchmark_program):
        p = benchmark_program
        m = 199
        assert p.num_vars == 200 + 5 * m
        assert p.soc_dims == [3] * (3 * m)
        assert isinstance(p.cones[0], NonnegativeOrthant)
        assert all(isinstance(k, SecondOrderCone) for k in p.cones[1:])
        assert p.A.shape == (m + 1, p.num_vars)
        p.check()


class TestHyperbolic:
    @given(st.floats(-10, 10), st.floats(0, 10), st.floats(0, 10))
    def test_membership_matches_product(self, a, b, c):
        entries, rhs = hyperbolic_to_soc(0, 1, 2)
        G = np.zeros((3, 3))
        for r, col, v in entries:
            G[r, col] += v
        u = rhs - G @ np.array([a, b, c])
        lhs, prod = a * a, b * c
        if abs(lhs - prod) > 1e-6 * (1 + prod):
            assert (soc_margin(u) >= 0) == (lhs <= prod)

    def test_constant_terms_go_to_rhs(self):
        entries, rhs = hyperbolic_to_soc(1.0, 0, 1)
        np.testing.assert_allclose(rhs, [0, 0, 2.0])
        assert sorted(entries) == [(0, 0, -1.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 1.0)]

    def test_margin(self):
        assert soc_margin([5.0, 3.0, 4.0]) == pytest.approx(0.0)
        assert soc_margin([1.0, 3.0, 4.0]) < 0


def _feasible_point(instance, rng):
    """Forces that keep the car between the bounds, simulated forward."""
    veh, path = instance.vehicle, instance.path
    for _ in range(200):
        F = rng.uniform(-0.2, 0.2, instance.n - 1) * veh.M * veh.g * veh.mu
        F += veh.M * veh.g * (path.slope_sin + veh.c) + veh.Gamma * instance.w_init
        sim = forward_simulate(instance.w_init, F, path, veh)
        w = sim.w
        if sim.valid and np.all(w > 1.0) and np.all(w <= path.w_max) and \
                np.all(F * np.sqrt(w[:-1]) <= veh.P_max):
            return w, F
    pytest.skip("no feasible sample found")


class TestRelaxationContainsOriginal:
    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10_000), st.sampled_from([FIAT_500, FIAT_500E]),
           st.floats(0.0, 1e-3))
    def test_embedded_feasible_point_is_relaxed_feasible(self, seed, vehicle, lam):
        inst = flat_instance(6, w_init=100.0, lam=lam, vehicle=vehicle)
        w, F = _feasible_point(inst, np.random.default_rng(seed))
        prog = build_relaxation(inst)
        x = embed_point(inst, w, F)
        assert np.max(np.abs(prog.A @ x - prog.b)) < 1e-8
        assert cone_violation(prog, prog.h - prog.G @ x) < 1e-8

    def test_embedded_objective_is_weighted_sum(self):
        inst = flat_instance(4, w_init=100.0, lam=1e-4, vehicle=FIAT_500E)
        w, F = _feasible_point(inst, np.random.default_rng(3))
        x = embed_point(inst, w, F)
        prog = build_relaxation(inst)
        h = inst.path.h
        expected = np.sum(h / np.sqrt(w[:-1])) + inst.lam * h * np.sum(np.maximum(0.7 * F, F))
        assert prog.c @ x == pytest.approx(expected, rel=1e-12)

    def test_relaxed_optimum_below_any_feasible_point(self):
        inst = flat_instance(6, w_init=100.0)
        w, F = _feasible_point(inst, np.random.default_rng(0))
        prog = build_relaxation(inst)
        sol = solve_relaxation(inst)
        assert sol.objective <= prog.c @ embed_point(inst, w, F) + 1e-9


class TestPowerRows:
    def test_removing_power_rows_enlarges_feasible_set(self, ce_instance):
        prog = build_relaxation(ce_instance)
        full = solve_socp(prog)
        free = solve_socp(prog.without_power_rows())
        assert free.status.value == "Optimal"
        assert free.objective < full.objective - 1e-3
        assert prog.without_power_rows().lp_dim == prog.lp_dim - 199

    def test_program_without_power_rows_rejects_second_removal(self, benchmark_program):
        with pytest.raises(InvalidParameter):
            benchmark_program.without_power_rows().without_power_rows()


class TestConsistency:
    def test_check_rejects_bad_dimensions(self, benchmark_program):
        p = benchmark_program
        bad = type(p)(p.c[:-1], p.A, p.b, p.G, p.h, p.cones)
        with pytest.raises(InvalidParameter):
            bad.check()
        bad = type(p)(p.c, p.A, p.b, p.G, p.h, (SecondOrderCone(3),) + p.cones)
        with pytest.raises(InvalidParameter):
            bad.check()

    def test_invalid_instance_rejected(self):
        inst = flat_instance(3, w_init=5000.0)
        with pytest.raises(InvalidParameter):
            build_relaxation(inst)

    def test_triplet_round_trip(self, tmp_path, benchmark_program):
        path = tmp_path / "prog.txt"
        dump_triplets(benchmark_program, path)
        again = load_triplets(path)
        again.check()
        for name in ("c", "b", "h"):
            np.testing.assert_array_equal(getattr(again, name), getattr(benchmark_program, name))
        for name in ("A", "G"):
            assert abs(getattr(again, name) - getattr(benchmark_program, name)).max() == 0
        assert again.cones == benchmark_program.cones

    def test_matches_reference_solver(self, benchmark_program, benchmark_solution):
        ref = clarabel_value(benchmark_program)
        assert benchmark_solution.objective == pytest.approx(ref, rel=1e-7)

    def test_extracted_residuals_small(self, benchmark_solution):
        res = benchmark_solution.constraint_residuals
        assert res["dynamics"] < 1e-7
        assert res["speed_max"] < 1e-6 and res["initial"] < 1e-8
        assert res["relaxed_time"] < 1e-8

    def test_physical_residuals_detects_violation(self, benchmark_instance):
        n = benchmark_instance.n
        w = np.full(n, 10.0)
        res = physical_residuals(benchmark_instance, w, np.zeros(n - 1), np.full(n - 1, 0.1))
        assert res["dynamics"] > 0 and res["initial"] == pytest.approx(9.9)

    def test_infeasible_instance_raises_no_solution(self):
        # dropping from top speed to 2 m/s within 10 cm exceeds the braking force
        inst = ProblemInstance(FIAT_500, PathProfile(0.1, [0.0], [1975.0, 4.0]), 0.0, 1975.0)
        with pytest.raises(NoSolution):
            solve_relaxation(inst)
