import json
import math

import numpy as np
import pytest

import infent as ie
from infent.errors import ConfigError, FitUnavailableError, ReportParseError

LOG2E = math.log2(math.e)


def make_config(**overrides):
    base = {
        "pmf": {"kind": "finite", "weights": {str(i): 1.0 for i in range(1, 9)}},
        "estimator": {"kind": "plugin"},
        "n_grid": [100, 400],
        "trials": 20,
        "base_seed": 12345,
    }
    base.update(overrides)
    return ie.config_from_dict(base)


def synthetic_report(n_grid, errors_by_n):
    records = tuple(
        ie.TrialRecord(n=n, trial=t, seed=n * 1000 + t, estimate_bits=1.0,
                       abs_error_bits=e, degenerate=False)
        for n in n_grid
        for t, e in enumerate(errors_by_n[n])
    )
    return ie.ExperimentReport(config={}, true_entropy_bits=1.0, records=records,
                               fitted_rate=None)


class TestRunErrorTrajectory:
    def test_point_mass_gives_zero_errors(self):
        cfg = make_config(pmf={"kind": "finite", "weights": {"7": 1.0}},
                          n_grid=[10, 20, 40], trials=3)
        report = ie.run_error_trajectory(cfg)
        assert all(r.abs_error_bits == 0.0 for r in report.records)
        assert report.fitted_rate is None  # zero errors leave nothing to fit

    def test_mean_errors_decrease(self):
        cfg = make_config(n_grid=[200, 2000, 20000], trials=40)
        report = ie.run_error_trajectory(cfg)
        means = report.mean_abs_errors()
        vals = [means[n] for n in sorted(means)]
        assert vals[0] > vals[1] > vals[2]

    def test_power_data_driven_never_degenerate(self):
        cfg = make_config(
            pmf={"kind": "power", "p": 2.0},
            estimator={"kind": "data_driven", "eps": {"t": 0.4}},
            n_grid=[100, 1000],
            trials=50,
        )
        report = ie.run_error_trajectory(cfg)
        assert not any(r.degenerate for r in report.records)

    def test_seed_uniqueness_and_determinism(self):
        cfg = make_config(trials=25)
        r1 = ie.run_error_trajectory(cfg)
        r2 = ie.run_error_trajectory(cfg)
        seeds = [r.seed for r in r1.records]
        assert len(set(seeds)) == len(seeds)
        assert ie.experiments.report_to_json(r1) == ie.experiments.report_to_json(r2)

    def test_parallel_matches_serial(self):
        cfg = make_config(n_grid=[50, 100, 200], trials=10)
        serial = ie.run_error_trajectory(cfg, jobs=1)
        parallel = ie.run_error_trajectory(cfg, jobs=2)
        assert ie.experiments.report_to_json(serial) == ie.experiments.report_to_json(parallel)

    def test_incompatible_estimator_rejected_before_running(self):
        with pytest.raises(ConfigError):
            make_config(
                pmf={"kind": "power", "p": 2.0},
                estimator={
                    "kind": "barron",
                    "a": {"t": 2.5},
                    "reference": {"kind": "finite", "weights": {"1": 1.0}},
                },
            )

    def test_mean_error_below_integrated_tail_bound(self):
        # integrate min(1, 2**(k+1) exp(-2n eps^2/C^2)) deps in closed form
        cfg = make_config(
            pmf={"kind": "finite", "weights": {str(i): 1.0 for i in range(1, 5)}},
            n_grid=[1000], trials=200,
        )
        report = ie.run_error_trajectory(cfg)
        mean_err = report.mean_abs_errors()[1000]
        stats = ie.support_stats(ie.FiniteMeasure(mass={i: 0.25 for i in range(1, 5)}))
        c = stats.min_mass_bits + LOG2E / stats.min_mass
        n, k = 1000, stats.size
        eps0 = c * math.sqrt((k + 1) * math.log(2.0) / (2.0 * n))
        integral = eps0 + 2.0 ** (k + 1) * (c / math.sqrt(2.0 * n)) * (
            math.sqrt(math.pi) / 2.0
        ) * math.erfc(eps0 * math.sqrt(2.0 * n) / c)
        assert integral < 2.0  # below the entropy range, so the check applies
        assert mean_err <= integral


class TestFitRate:
    def test_exact_half_power(self):
        n_grid = [100, 1000, 10000]
        report = synthetic_report(n_grid, {n: [3.0 * n**-0.5] for n in n_grid})
        fit = ie.fit_rate(report)
        assert fit.slope == pytest.approx(-0.5, abs=1e-12)
        assert fit.r2 == pytest.approx(1.0, abs=1e-12)

    def test_noisy_slow_power(self):
        rng = np.random.default_rng(606)
        n_grid = [10**3, 10**4, 10**5, 10**6]
        errors = {n: list(0.7 * n**-0.2 * (1.0 + 0.01 * rng.standard_normal(50)))
                  for n in n_grid}
        fit = ie.fit_rate(synthetic_report(n_grid, errors))
        assert abs(fit.slope + 0.2) < 0.02

    def test_constant_errors(self):
        n_grid = [10, 100, 1000]
        fit = ie.fit_rate(synthetic_report(n_grid, {n: [0.25, 0.25] for n in n_grid}))
        assert fit.slope == pytest.approx(0.0, abs=1e-12)

    def test_too_few_points(self):
        with pytest.raises(FitUnavailableError):
            ie.fit_rate(synthetic_report([10, 100], {10: [0.1], 100: [0.05]}))

    def test_zero_errors(self):
        with pytest.raises(FitUnavailableError):
            ie.fit_rate(synthetic_report([10, 100, 1000], {10: [0.1], 100: [0.0], 1000: [0.1]}))


class TestCoverage:
    def test_loose_delta_uniform_two(self):
        cfg = make_config(
            pmf={"kind": "finite", "weights": {"1": 1.0, "2": 1.0}},
            n_grid=[1000], trials=100,
        )
        assert ie.coverage_experiment(cfg, delta=0.5) >= 0.5

    def test_requires_finite_support(self):
        cfg = make_config(pmf={"kind": "power", "p": 2.0}, n_grid=[100], trials=2)
        with pytest.raises(ConfigError):
            ie.coverage_experiment(cfg, delta=0.1)

    def test_requires_plugin(self):
        cfg = make_config(estimator={"kind": "data_driven", "eps": {"t": 0.3}},
                          n_grid=[100], trials=2)
        with pytest.raises(ConfigError):
            ie.coverage_experiment(cfg, delta=0.1)


class TestDiagnostics:
    def test_oracle_set_prefix(self):
        pmf = ie.make_exp_tail_pmf(math.log(2))
        assert ie.oracle_threshold_set(pmf, 0.2) == frozenset({1, 2})
        assert ie.oracle_threshold_set(pmf, 0.6) == frozenset()

    def test_empty_oracle_set_trivial_sigma_field(self):
        pmf = ie.make_finite_pmf({i: 1 for i in range(1, 5)})
        smp = ie.sample(pmf, 100, seed=1)
        diag = ie.compute_diagnostics(smp, pmf, eps=0.9)
        assert diag.oracle_gamma == frozenset()
        assert diag.xi == 0.0
        assert diag.approx_terms[0] == math.inf

    def test_support_detection_frequency(self):
        pmf = ie.make_finite_pmf({i: 1 for i in range(1, 5)})
        reached = 0
        for trial in range(200):
            smp = ie.sample(pmf, 200, seed=ie.derive_seed(5, 200, trial))
            if ie.compute_diagnostics(smp, pmf, eps=0.01).t_o_reached:
                reached += 1
        assert reached >= 198  # detection failure rate is exponentially small

    def test_xi_dominates_rho_under_containment(self):
        pmf = ie.make_power_tail_pmf(2.0)
        n = 10**4
        eps = float(n**-0.4)
        wins = checked = 0
        for trial in range(100):
            smp = ie.sample(pmf, n, seed=ie.derive_seed(17, n, trial))
            diag = ie.compute_diagnostics(smp, pmf, eps)
            if diag.gamma <= diag.oracle_gamma_half:
                checked += 1
                assert diag.xi >= diag.rho - 1e-12
            if diag.xi >= diag.rho - 1e-12:
                wins += 1
        assert checked > 0
        assert wins >= 99

    def test_engine_records_diagnostics(self):
        cfg = make_config(
            pmf={"kind": "power", "p": 2.0},
            estimator={"kind": "data_driven", "eps": {"t": 0.4}},
            n_grid=[500], trials=3, collect_diagnostics=True,
        )
        report = ie.run_error_trajectory(cfg)
        assert all(r.diagnostics is not None and "xi" in r.diagnostics
                   for r in report.records)

    def test_diagnostics_require_data_driven(self):
        with pytest.raises(ConfigError):
            make_config(collect_diagnostics=True)


class TestPersistence:
    def test_round_trip(self, tmp_path):
        cfg = make_config(n_grid=[50, 100], trials=4)
        report = ie.run_error_trajectory(cfg)
        path = tmp_path / "report.json"
        ie.save_report(report, path)
        back = ie.load_report(path)
        assert back == report

    def test_csv_row_count(self, tmp_path):
        cfg = make_config(n_grid=[50, 100, 200], trials=7)
        report = ie.run_error_trajectory(cfg)
        path = tmp_path / "records.csv"
        ie.export_csv(report, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "n,trial,seed,estimate,abs_error,degenerate"
        assert len(lines) - 1 == 3 * 7

    def test_short_grid_has_no_fit(self, tmp_path):
        cfg = make_config(n_grid=[50], trials=2)
        report = ie.run_error_trajectory(cfg)
        path = tmp_path / "r.json"
        ie.save_report(report, path)
        assert ie.load_report(path).fitted_rate is None

    def test_malformed_file(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"config": {},\n  "records": [oops]\n}')
        with pytest.raises(ReportParseError) as err:
            ie.load_report(path)
        assert "line 2" in str(err.value)

    def test_structurally_invalid_file(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"config": {}, "records": [{"n": 10}]}')
        with pytest.raises(ReportParseError):
            ie.load_report(path)

    def test_engine_writes_configured_outputs(self, tmp_path):
        report_path = tmp_path / "r.json"
        csv_path = tmp_path / "r.csv"
        cfg = make_config(n_grid=[50], trials=3,
                          outputs={"report": str(report_path), "csv": str(csv_path)})
        ie.run_error_trajectory(cfg)
        assert report_path.exists()
        assert len(csv_path.read_text().strip().splitlines()) == 1 + 3

    def test_byte_identical_reports(self, tmp_path):
        cfg_dict = {
            "pmf": {"kind": "exp", "alpha": 0.7},
            "estimator": {"kind": "data_driven", "eps": {"t": 0.3}},
            "n_grid": [100, 200],
            "trials": 5,
            "base_seed": 99,
        }
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        ie.save_report(ie.run_error_trajectory(ie.config_from_dict(cfg_dict)), p1)
        ie.save_report(ie.run_error_trajectory(ie.config_from_dict(json.loads(json.dumps(cfg_dict)))), p2)
        assert p1.read_bytes() == p2.read_bytes()
