import csv
import json
import math
import os

import numpy as np
import pytest

from frackac.errors import AnalysisError, ConfigurationError, UsageError
from frackac.harness import (
    ConvergenceTable,
    ErrorReport,
    PointRecord,
    fit_log_slope,
    l2_error,
    measure_l2_error,
    sweep,
    table_metadata,
    write_convergence_table,
    write_error_report,
    write_metadata,
)
from frackac.problems import example1, example2, example3, example4
from frackac.solver import SolverConfig
from frackac.stable import RngStream


def exact_estimator(problem, T, points, config, workers):
    return np.asarray(problem.exact(T, points)), np.zeros(len(points))


def offset_estimator(offset):
    def estimator(problem, T, points, config, workers):
        return np.asarray(problem.exact(T, points)) + offset, np.zeros(len(points))

    return estimator


def sqrt_rate_estimator(problem, T, points, config, workers):
    # error shrinking like M^(-1/2)
    return np.asarray(problem.exact(T, points)) + 0.1 / math.sqrt(config.num_paths), np.zeros(len(points))


CONFIG = SolverConfig(dt=0.01, num_paths=100)


class TestL2Error:
    def test_exact_estimator_has_zero_error(self):
        report = measure_l2_error(example1(1.3, 0.6, 2), 1.0, CONFIG, 50, 12345, estimator=exact_estimator)
        assert report.l2_error == 0.0
        assert report.num_eval_points == 50
        assert len(report.per_point) == 50

    @pytest.mark.parametrize("make_problem", [lambda: example1(1.3, 0.6, 2), lambda: example3(1.3, 0.6)])
    def test_constant_offset(self, make_problem):
        problem = make_problem()
        c = 0.25
        report = measure_l2_error(problem, 1.0, CONFIG, 40, 1, estimator=offset_estimator(c))
        assert report.l2_error == pytest.approx(c * math.sqrt(problem.domain.volume), rel=1e-12)

    def test_order_independent(self):
        rng = np.random.default_rng(0)
        exact = rng.random(101)
        estimate = exact + rng.normal(size=101)
        perm = rng.permutation(101)
        assert l2_error(2.0, exact, estimate) == l2_error(2.0, exact[perm], estimate[perm])

    def test_needs_exact_solution(self):
        with pytest.raises(UsageError):
            measure_l2_error(example4(1.0, 0.5), 0.5, CONFIG, 10, 0, estimator=exact_estimator)

    def test_evaluation_points_depend_only_on_eval_seed(self):
        problem = example1(1.3, 0.6, 2)
        a = measure_l2_error(problem, 1.0, CONFIG, 20, 7, estimator=exact_estimator)
        b = measure_l2_error(problem, 1.0, SolverConfig(dt=0.5, num_paths=3, master_seed=99), 20, 7, estimator=exact_estimator)
        assert [r.point for r in a.per_point] == [r.point for r in b.per_point]

    def test_evaluation_points_avoid_trajectory_streams(self):
        problem = example1(1.3, 0.6, 2)
        report = measure_l2_error(problem, 1.0, SolverConfig(dt=0.01, num_paths=10, master_seed=7), 20, 7, estimator=exact_estimator)
        trajectory_zero = problem.domain.sample_interior_points(20, RngStream(7, 0))
        assert not np.array_equal(np.array([r.point for r in report.per_point]), trajectory_zero)

    def test_config_echo(self):
        report = measure_l2_error(example1(1.3, 0.6, 2), 1.0, CONFIG, 5, 0, estimator=exact_estimator)
        assert report.config["num_paths"] == 100
        assert report.config["dt"] == 0.01
        assert report.config["problem"] == "example1"

    def test_small_monte_carlo_run(self):
        problem = example1(1.3, 0.6, 2)
        config = SolverConfig(dt=0.05, num_paths=32)
        a = measure_l2_error(problem, 1.0, config, 4, 3)
        b = measure_l2_error(problem, 1.0, config, 4, 3)
        assert math.isfinite(a.l2_error)
        assert a.l2_error == b.l2_error
        assert all(r.std_error >= 0 for r in a.per_point)


class TestFitLogSlope:
    def test_exact_power_law(self):
        x = np.geomspace(10.0, 1e4, 6)
        slope, stderr = fit_log_slope(x, 3.0 * x**-0.5)
        assert slope == pytest.approx(-0.5, abs=1e-12)
        assert stderr < 1e-10

    def test_unusable_points_dropped(self):
        x = [1.0, 10.0, 100.0, 1000.0, 0.0]
        y = [1.0, 0.1, 0.01, float("nan"), 5.0]
        slope, _ = fit_log_slope(x, y)
        assert slope == pytest.approx(-1.0, abs=1e-12)

    def test_too_few_points(self):
        with pytest.raises(AnalysisError):
            fit_log_slope([1.0, 10.0], [1.0, 0.1])
        with pytest.raises(AnalysisError):
            fit_log_slope([1.0, 10.0, 100.0], [1.0, 0.0, -1.0])


class TestSweep:
    def test_recovers_injected_rate(self):
        problem = example1(1.3, 0.6, 2)
        table = sweep(problem, 1.0, CONFIG, "num_paths", [1000, 10, 100, 10000], 30, 5, estimator=sqrt_rate_estimator)
        assert [row[0] for row in table.rows] == [10.0, 100.0, 1000.0, 10000.0]
        assert table.fitted_slope == pytest.approx(-0.5, abs=1e-9)
        assert table.config["axis"] == "num_paths"

    def test_dt_axis(self):
        def dt_estimator(problem, T, points, config, workers):
            return np.asarray(problem.exact(T, points)) + config.dt, np.zeros(len(points))

        table = sweep(example3(1.3, 0.6), 1.0, CONFIG, "dt", [0.1, 0.01, 0.001], 10, 5, estimator=dt_estimator)
        assert table.fitted_slope == pytest.approx(1.0, abs=1e-9)

    def test_reproducible(self):
        problem = example1(1.3, 0.6, 2)
        base = SolverConfig(dt=0.05, num_paths=8)
        a = sweep(problem, 1.0, base, "num_paths", [8, 16, 32], 3, 11)
        b = sweep(problem, 1.0, base, "num_paths", [8, 16, 32], 3, 11)
        assert a.rows == b.rows

    @pytest.mark.parametrize("values", [[], [10, 100], [10, 10, 100], [0, 10, 100], [-1, 10, 100]])
    def test_invalid_values(self, values):
        with pytest.raises(ConfigurationError) as info:
            sweep(example1(1.3, 0.6, 2), 1.0, CONFIG, "num_paths", values, 5, 0, estimator=exact_estimator)
        assert info.value.field == "harness.values"

    def test_invalid_axis(self):
        with pytest.raises(ConfigurationError) as info:
            sweep(example1(1.3, 0.6, 2), 1.0, CONFIG, "seed", [1, 2, 3], 5, 0, estimator=exact_estimator)
        assert info.value.field == "harness.axis"


class TestWriters:
    def test_error_report_csv(self, tmp_path):
        report = ErrorReport(
            l2_error=0.1,
            num_eval_points=2,
            per_point=[PointRecord([0.1, 0.2], 1.0 / 3.0, 0.3, 0.01), PointRecord([-0.5, 0.0], 0.5, 0.49, 0.02)],
        )
        path = tmp_path / "out" / "report.csv"
        write_error_report(report, str(path))
        with open(path) as f:
            rows = list(csv.reader(f))
        assert rows[0] == ["x1", "x2", "exact", "estimate", "std_error"]
        assert float(rows[1][2]) == 1.0 / 3.0
        assert len(rows) == 3

    def test_error_report_needs_points(self, tmp_path):
        with pytest.raises(UsageError):
            write_error_report(ErrorReport(l2_error=0.1, num_eval_points=2), str(tmp_path / "r.csv"))

    def test_convergence_table_and_metadata(self, tmp_path):
        table = ConvergenceTable(axis="dt", rows=[(0.01, 0.2), (0.1, 0.6)], fitted_slope=0.477, slope_stderr=0.0)
        write_convergence_table(table, str(tmp_path / "table.csv"))
        write_metadata(table_metadata(table, {"note": "demo"}), str(tmp_path / "table.json"))

        with open(tmp_path / "table.csv") as f:
            rows = list(csv.reader(f))
        assert rows == [["axis_value", "l2_error"], ["0.01", "0.2"], ["0.1", "0.6"]]

        with open(tmp_path / "table.json") as f:
            meta = json.load(f)
        assert meta["fitted_slope"] == 0.477
        assert meta["note"] == "demo"
        assert "written_at" in meta
        assert os.path.exists(tmp_path / "table.json")


PATH_COUNTS = [100, 316, 1000, 3162, 10000]
STEP_SIZES = [0.1, 0.05, 0.025, 0.0125]


def _workers():
    return os.cpu_count() or 1


@pytest.mark.slow
class TestAcceptance:
    @pytest.mark.parametrize(
        "problem,dt",
        [(example1(1.3, 0.6, 2), 1e-3), (example2(1.3, 0.6), 5e-4), (example3(1.3, 0.6), 1e-3)],
        ids=["example1", "example2", "example3"],
    )
    def test_paths_rate(self, problem, dt):
        table = sweep(
            problem, 1.0, SolverConfig(dt=dt, num_paths=100), "num_paths", PATH_COUNTS, 200, 12345, workers=_workers()
        )
        assert -0.65 <= table.fitted_slope <= -0.35

    def test_step_rate_subdiffusive(self):
        table = sweep(
            example1(0.5, 0.1, 2), 1.0, SolverConfig(dt=0.1, num_paths=10_000), "dt", STEP_SIZES, 200, 12345,
            workers=_workers(),
        )
        assert 0.3 <= table.fitted_slope <= 0.7

    def test_step_rate_deterministic_clock(self):
        # with beta = 1 the clock is exact and the remaining time discretization error is first order
        table = sweep(
            example1(0.5, 1.0, 2), 1.0, SolverConfig(dt=0.1, num_paths=10_000), "dt", STEP_SIZES, 200, 12345,
            workers=_workers(),
        )
        assert 0.7 <= table.fitted_slope <= 1.2
