import contextlib
import io
import json
import os
from pathlib import Path

import pytest

from infent.cli import build_parser, dispatch, parse_invocation

DATA_DIR = Path(__file__).parent / "data"


def run_cli(argv):
    """Dispatch argv, returning (exit_code, stdout, stderr)."""
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = dispatch(parse_invocation(argv))
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def sample_file(tmp_path):
    path = tmp_path / "s.txt"
    path.write_text("1\n2\n1\n2\n")
    return str(path)


@pytest.fixture
def rate_config(tmp_path):
    cfg = {
        "pmf": {"kind": "finite", "weights": {str(i): 1.0 for i in range(1, 5)}},
        "estimator": {"kind": "plugin"},
        "n_grid": [100, 400, 1600],
        "trials": 10,
        "base_seed": 7,
        "outputs": {"report": str(tmp_path / "report.json")},
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return str(path)


class TestParseInvocation:
    def test_estimate_invocation(self):
        inv = parse_invocation(["estimate", "--estimator", "plugin", "--input", "s.txt"])
        assert inv.subcommand == "estimate"
        assert inv.options.input == "s.txt"
        assert inv.verbosity == 0

    def test_verbose_flag(self, sample_file):
        code, out, err = run_cli(["-v", "estimate", "--input", sample_file])
        assert code == 0
        assert out.splitlines()[0] == "1.000000 bits"
        assert err.startswith("infent estimate ")

    def test_rate_invocation(self):
        inv = parse_invocation(["rate", "--config", "exp.json"])
        assert inv.subcommand == "rate" and inv.options.config == "exp.json"

    def test_unknown_subcommand_exits_2(self):
        with pytest.raises(SystemExit) as err:
            parse_invocation(["frobnicate"])
        assert err.value.code == 2

    def test_unknown_flag_exits_2(self):
        with pytest.raises(SystemExit) as err:
            parse_invocation(["estimate", "--input", "s.txt", "--bogus"])
        assert err.value.code == 2


class TestEstimate:
    def test_plugin_text_output(self, sample_file):
        code, out, _ = run_cli(["estimate", "--input", sample_file])
        assert code == 0
        assert out.splitlines()[0] == "1.000000 bits"

    def test_confidence_line(self, sample_file):
        code, out, _ = run_cli([
            "estimate", "--input", sample_file, "--delta", "0.05",
            "--true-support-stats", '{"m": 0.5, "size": 2}',
        ])
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "1.000000 bits"
        assert lines[1].startswith("ci_halfwidth=") and lines[1].endswith("delta=0.05")

    def test_json_output_full_precision(self, sample_file):
        code, out, _ = run_cli(["estimate", "--input", sample_file, "--json"])
        payload = json.loads(out)
        assert code == 0 and payload["entropy_bits"] == 1.0 and payload["n"] == 4

    def test_degenerate_data_driven_exits_1(self, tmp_path):
        path = tmp_path / "wide.txt"
        path.write_text("\n".join(str(i) for i in range(1, 11)))
        code, out, _ = run_cli(["estimate", "--input", str(path),
                                "--estimator", "data-driven", "--eps", "0.5"])
        assert code == 1
        assert out.splitlines()[0] == "0.000000 bits"

    def test_missing_input_exits_3(self, tmp_path):
        code, _, err = run_cli(["estimate", "--input", str(tmp_path / "nope.txt")])
        assert code == 3 and "error:" in err

    def test_byte_identical_output(self, sample_file):
        first = run_cli(["estimate", "--input", sample_file])
        second = run_cli(["estimate", "--input", sample_file])
        assert first == second


class TestRateAndTrajectory:
    def test_rate_summary_line(self, rate_config, tmp_path):
        code, out, _ = run_cli(["rate", "--config", rate_config])
        assert code == 0
        line = out.splitlines()[0]
        assert line.startswith("slope=") and "r2=" in line and "target=0.500000" in line
        assert (tmp_path / "report.json").exists()

    def test_power_data_driven_target(self, tmp_path):
        cfg = {
            "pmf": {"kind": "power", "p": 2.0},
            "estimator": {"kind": "data_driven", "eps": {"t": 0.4}},
            "n_grid": [100, 200, 400],
            "trials": 4,
            "base_seed": 3,
            "outputs": {"report": str(tmp_path / "r.json")},
        }
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg))
        code, out, _ = run_cli(["rate", "--config", str(path)])
        assert code == 0
        assert "target=0.200000" in out.splitlines()[0]

    def test_trajectory_summary_and_flag_override(self, rate_config, tmp_path):
        override = str(tmp_path / "alt.json")
        code, out, _ = run_cli(["trajectory", "--config", rate_config,
                                "--trials", "3", "--output", override])
        assert code == 0
        assert out.splitlines()[0].startswith("records=9 degenerate=0")
        report = json.loads(Path(override).read_text())
        assert report["config"]["trials"] == 3

    def test_unreadable_config_exits_3(self, tmp_path):
        code, _, err = run_cli(["rate", "--config", str(tmp_path / "missing.json")])
        assert code == 3 and "error:" in err

    def test_default_output_dir_env(self, rate_config, tmp_path, monkeypatch):
        outdir = tmp_path / "outputs"
        outdir.mkdir()
        monkeypatch.setenv("INFENT_OUTPUT_DIR", str(outdir))
        cfg = json.loads(Path(rate_config).read_text())
        del cfg["outputs"]
        path = tmp_path / "noout.json"
        path.write_text(json.dumps(cfg))
        code, out, _ = run_cli(["trajectory", "--config", str(path)])
        assert code == 0
        assert (outdir / "report.json").exists()

    def test_coverage_summary(self, tmp_path):
        cfg = {
            "pmf": {"kind": "finite", "weights": {"1": 1.0, "2": 1.0}},
            "estimator": {"kind": "plugin"},
            "n_grid": [500],
            "trials": 50,
            "base_seed": 21,
            "outputs": {"report": str(tmp_path / "c.json")},
        }
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg))
        code, out, _ = run_cli(["coverage", "--config", str(path), "--delta", "0.5"])
        assert code == 0
        cov = float(out.splitlines()[0].split()[0].split("=")[1])
        assert cov >= 0.5


class TestBoundsCommand:
    def test_csv_to_stdout(self):
        code, out, _ = run_cli([
            "bounds", "--quantity", "entropy", "--size", "4", "--min-mass", "0.25",
            "--n", "100", "--eps-grid", "0.5,1.0,2.0",
        ])
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "eps,bound"
        assert len(lines) == 4
        vals = [float(line.split(",")[1]) for line in lines[1:]]
        assert vals[0] > vals[1] > vals[2]

    def test_empirical_column(self, tmp_path):
        out_path = tmp_path / "curve.csv"
        code, out, _ = run_cli([
            "bounds", "--quantity", "tv", "--size", "2", "--n", "50",
            "--eps-grid", "0.1,0.3", "--trials", "200", "--output", str(out_path),
        ])
        assert code == 0
        lines = out_path.read_text().strip().splitlines()
        assert lines[0] == "eps,bound,empirical_frequency"
        for line in lines[1:]:
            eps, bound, freq = (float(v) for v in line.split(","))
            if bound < 1.0:
                assert freq <= bound


class TestLecamCommand:
    def test_table(self):
        code, out, _ = run_cli(["lecam", "--p-uniform", "2",
                                "--m-list", "100,10000", "--n", "100"])
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0].startswith("M=100 d=") and lines[1].startswith("M=10000 d=")
        d0, d1 = (float(line.split()[1].split("=")[1]) for line in lines)
        g0, g1 = (float(line.split()[2].split("=")[1]) for line in lines)
        assert d0 > d1 and g0 < g1


class TestDiagnoseCommand:
    def test_json_dump(self, sample_file):
        code, out, _ = run_cli([
            "diagnose", "--input", sample_file,
            "--truth", '{"kind": "finite", "weights": {"1": 1.0, "2": 1.0}}',
            "--eps", "0.25",
        ])
        assert code == 0
        payload = json.loads(out)
        assert payload["t_o_reached"] is True
        assert payload["xi"] >= 0.0 and payload["rho"] >= 0.0


class TestConsoleEntry:
    def test_module_entry_point(self, sample_file):
        import subprocess
        import sys

        proc = subprocess.run(
            [sys.executable, "-m", "infent.cli", "estimate", "--input", sample_file],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0
        assert proc.stdout.splitlines()[0] == "1.000000 bits"

    def test_module_entry_usage_error(self):
        import subprocess
        import sys

        proc = subprocess.run(
            [sys.executable, "-m", "infent.cli", "frobnicate"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 2


class TestGoldenHelp:
    @pytest.mark.parametrize(
        "name", ["main", "estimate", "trajectory", "rate", "coverage",
                 "bounds", "lecam", "diagnose"]
    )
    def test_help_text_unchanged(self, name):
        golden = (DATA_DIR / f"help_{name}.txt").read_text()
        parser = build_parser()
        if name == "main":
            assert parser.format_help() == golden
            return
        buf = io.StringIO()
        with contextlib.redirect_stdout(buf):
            with pytest.raises(SystemExit):
                parser.parse_args([name, "--help"])
        assert buf.getvalue() == golden
