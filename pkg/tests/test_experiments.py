import math

import numpy as np
import pytest

from linf_sphere.errors import DomainError
from linf_sphere.experiments import (
    SUMMARIZERS,
    ExperimentReport,
    grf_ratio_bound,
    random_harmonic_bound,
    read_report,
    run_lowerbound_demo,
    run_ratio_experiment,
    run_recovery_benchmark,
)
from linf_sphere.harmonics import dim_harmonics, sqrt_dim


def data_part(report):
    return "\n".join(report.data_lines())


class TestBounds:
    def test_values(self):
        assert random_harmonic_bound(5, 4, 0.05) == pytest.approx(
            5 * math.sqrt(math.log(60) + 50 * math.log(5)), rel=1e-15)
        assert grf_ratio_bound(5, 4, 0.05) == pytest.approx(
            5 * math.sqrt(2 * math.log(120) + 52 * math.log(5)), rel=1e-15)


class TestRatio:
    def test_degree_zero_ratio_is_one(self):
        rep = run_ratio_experiment(4, [0], trials=20, grid_size=500, seed=1)
        assert all(r["ratio"] == pytest.approx(1.0, abs=1e-12) for r in rep.rows)

    def test_small_run(self):
        rep = run_ratio_experiment([3, 5], [2, 4], trials=20, grid_size=2000, seed=3)
        assert len(rep.rows) == 80
        assert rep.columns[0] == "d"
        for r in rep.rows:
            # grid rms only estimates the L2 norm, so allow a little room over sqrt(N)
            assert r["ratio"] <= 1.05 * r["worst_case"]
            assert r["pass"] == (r["ratio"] <= r["bound"])
            assert r["worst_case"] == sqrt_dim(r["d"], r["k"])
        assert rep.summary["d=5,k=4"]["pass_fraction_grf"] >= 0.95
        assert rep.summary["d=3,k=2"]["trials"] == 20

    def test_dense_route(self):
        rep = run_ratio_experiment(5, [6], trials=5, grid_size=2000, seed=0, basis_max_dim=50,
                                   dense_grid_size=300)
        assert {r["route"] for r in rep.rows} == {"dense"}
        assert {r["grid_size"] for r in rep.rows} == {300}

    def test_deterministic_and_summary_recomputable(self, tmp_path):
        a = run_ratio_experiment(3, [2, 3], trials=20, grid_size=1000, seed=7)
        b = run_ratio_experiment(3, [2, 3], trials=20, grid_size=1000, seed=7)
        assert data_part(a) == data_part(b)
        path = tmp_path / "ratio.csv"
        a.write_csv(path)
        back = read_report(path)
        assert back.name == "ratio" and back.seed == 7 and back.params == a.params
        assert SUMMARIZERS["ratio"](back.rows) == a.summary == back.summary
        assert data_part(back) == data_part(a)

    def test_seed_is_recorded_and_reproduces_row(self):
        rep = run_ratio_experiment(3, [2], trials=20, grid_size=1000, seed=2)
        assert len({r["seed"] for r in rep.rows}) == 20

    def test_errors(self):
        with pytest.raises(DomainError):
            run_ratio_experiment(3, [], trials=20)
        with pytest.raises(DomainError):
            run_ratio_experiment(2, [2], trials=20)


class TestRecovery:
    def test_constant_field_noiseless(self):
        rep = run_recovery_benchmark(5, 1.0, 1.0, [500.0], [50], trials=3, grid_size=2000,
                                     noise_sigma=0.0, spectrum_max_degree=0)
        assert all(r["degree"] == 0 and r["status"] == "ok" for r in rep.rows)
        assert max(r["linf_error"] for r in rep.rows) <= 1e-3

    def test_threshold_not_found_rows(self):
        rep = run_recovery_benchmark(5, 1.0, 1.0, [0.5, 500.0], [20], trials=2, grid_size=500)
        bad = [r for r in rep.rows if r["epsilon"] == 0.5]
        assert bad and all(r["status"] == "threshold_not_found" and math.isnan(r["linf_error"])
                           and not r["pass"] for r in bad)
        assert all(r["status"] == "ok" for r in rep.rows if r["epsilon"] == 500.0)
        assert rep.summary["epsilon=0.5,n=20"]["fitted"] == 0

    def test_common_random_numbers(self):
        rep = run_recovery_benchmark(5, 1.0, 1.0, [500.0], [20, 40], trials=2, grid_size=500, degree=1)
        for t in range(2):
            a, b = [r for r in rep.rows if r["trial"] == t]
            assert a["linf_f"] == b["linf_f"] and a["seed"] == b["seed"]

    def test_nn_fitter_and_round_trip(self, tmp_path):
        rep = run_recovery_benchmark(5, 1.0, 1.0, [500.0], [30], trials=2, grid_size=500, degree=2,
                                     fitter="nn", nn_width=16)
        path = tmp_path / "rec.csv"
        rep.write_csv(path)
        back = read_report(path)
        assert SUMMARIZERS["recovery"](back.rows) == rep.summary

    def test_errors(self):
        with pytest.raises(DomainError):
            run_recovery_benchmark(5, 1.0, 1.0, [], [10])
        with pytest.raises(DomainError):
            run_recovery_benchmark(5, 1.0, 1.0, [1.0], [10], fitter="tree")


class TestLowerBound:
    def test_signal_and_truth(self):
        d, k = 5, 6
        rep = run_lowerbound_demo(d, k, 1.0, [3], trials=20, grid_size=5000, fitters=("kernel",))
        sig = np.array([r["signal_msq"] for r in rep.rows])
        assert abs(sig.mean() - 1 / dim_harmonics(d, k)) <= 4 * sig.std(ddof=1) / math.sqrt(sig.size) + 1e-12
        assert all(abs(r["truth_sup"] - 1.0) <= 1e-14 for r in rep.rows)
        assert all(r["budget"] == pytest.approx(dim_harmonics(d, k)) for r in rep.rows)
        assert all(r["failed"] == (r["linf_error"] >= r["threshold"]) for r in rep.rows)

    def test_both_fitters_and_determinism(self):
        a = run_lowerbound_demo(5, 4, 0.5, [2, 4], trials=3, grid_size=500)
        b = run_lowerbound_demo(5, 4, 0.5, [2, 4], trials=3, grid_size=500)
        assert {r["fitter"] for r in a.rows} == {"kernel", "nn"}
        assert len(a.rows) == 12
        assert data_part(a) == data_part(b)
        assert SUMMARIZERS["lowerbound"](a.rows) == a.summary

    def test_errors(self):
        with pytest.raises(DomainError):
            run_lowerbound_demo(5, 3, 1.0, [2], trials=2)
        with pytest.raises(DomainError):
            run_lowerbound_demo(5, 6, 1.0, [2], trials=2, fitters=("svm",))


def test_report_csv_layout():
    rep = ExperimentReport("demo", {"a": 1}, 4, ["x", "flag"], [{"x": 0.1, "flag": True}], {"s": 1}, 1.5)
    lines = rep.to_csv_text().splitlines()
    assert lines[0] == "# meta"
    assert "# version=1" in lines and "# seed=4" in lines
    assert lines[-2:] == ["x,flag", "0.1,1"]
