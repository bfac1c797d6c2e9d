"""Sweeps, scaling runs and random batches on small inputs."""

import csv

import numpy as np
import pytest

from veloplan.experiments import (BenchRecord, pareto_sweep, random_batch, resolve_threads,
                                  runtime_scaling, solve_and_evaluate, write_batch_csv,
                                  write_pareto_csv, write_scaling_csv)
from veloplan.model import FIAT_500, FIAT_500E, SolverStatus
from veloplan.scenarios import ScenarioConfig, benchmark_path_instance


def _header(path):
    with open(path, newline="") as fh:
        return next(csv.reader(fh))


@pytest.fixture(scope="module")
def small_sweep():
    return pareto_sweep(FIAT_500E, [1e-3, 0.0, 1e-5], n=60, threads=1)


class TestParetoSweep:
    def test_sorted_and_optimal(self, small_sweep):
        assert [p.lam for p in small_sweep] == [0.0, 1e-5, 1e-3]
        assert all(p.status is SolverStatus.OPTIMAL for p in small_sweep)

    def test_trade_off(self, small_sweep):
        times = [p.travel_time for p in small_sweep]
        energies = [p.energy for p in small_sweep]
        assert times == sorted(times) and energies == sorted(energies, reverse=True)

    def test_threads_do_not_change_results(self, small_sweep):
        again = pareto_sweep(FIAT_500E, [0.0, 1e-5, 1e-3], n=60, threads=3)
        for a, b in zip(small_sweep, again):
            assert (a.lam, a.travel_time, a.energy) == (b.lam, b.travel_time, b.energy)

    @pytest.mark.parametrize("lams", [[], [-1.0], [float("nan")]])
    def test_bad_lambdas(self, lams):
        with pytest.raises(ValueError):
            pareto_sweep(FIAT_500, lams, n=10)

    def test_csv(self, tmp_path, small_sweep):
        path = write_pareto_csv(small_sweep, tmp_path / "p.csv")
        assert _header(path) == ["lambda", "time_s", "energy_J", "gap", "solve_s"]
        assert len(path.read_text().splitlines()) == 4


class TestThreads:
    def test_env_cap(self, monkeypatch):
        monkeypatch.setenv("VELO_PLAN_THREADS", "2")
        assert resolve_threads(8) == 2
        monkeypatch.setenv("VELO_PLAN_THREADS", "junk")
        assert resolve_threads(3) == 3
        monkeypatch.delenv("VELO_PLAN_THREADS")
        assert resolve_threads(0) == 1


class TestScaling:
    def test_records(self, tmp_path):
        recs = runtime_scaling(FIAT_500, [2, 20], repeats=2)
        assert [r.n for r in recs] == [2, 20]
        assert all(r.status is SolverStatus.OPTIMAL and r.solve_time > 0 for r in recs)
        path = write_scaling_csv(recs, tmp_path / "s.csv")
        assert _header(path) == ["n", "solve_s", "status"]

    def test_minimum_size(self):
        with pytest.raises(ValueError):
            BenchRecord(1, 0.1, SolverStatus.OPTIMAL)
        with pytest.raises(ValueError):
            runtime_scaling(FIAT_500, [1])


class TestBatch:
    def test_small_batch(self, tmp_path):
        summary = random_batch(ScenarioConfig(seed=5, n=40), FIAT_500, count=4, threads=2)
        assert [r.seed for r in summary.records] == [5, 6, 7, 8]
        assert summary.failures == 0 and summary.max_gap <= 1e-6
        stats = summary.statistics()
        assert stats["count"] == 4 and stats["q1_solve_s"] <= stats["q3_solve_s"]
        path = write_batch_csv(summary, tmp_path / "b.csv")
        assert _header(path) == ["seed", "lambda", "solve_time", "gap", "status"]

    def test_count_must_be_positive(self):
        with pytest.raises(ValueError):
            random_batch(ScenarioConfig(), count=0)


class TestSolveAndEvaluate:
    def test_oracle_agrees(self):
        out = solve_and_evaluate(benchmark_path_instance(FIAT_500, 1e-4, 200))
        assert out.exact and out.a_priori
        assert out.simulation_error < 1e-8 and out.objective_error < 1e-8

    def test_two_point_instance(self):
        out = solve_and_evaluate(benchmark_path_instance(FIAT_500, 0.0, 2))
        assert out.status is SolverStatus.OPTIMAL
        assert np.isfinite(out.travel_time)
