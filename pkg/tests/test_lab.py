"""Config grammar, experiment runner contract, exit codes and the CLI."""

import json
import subprocess
import sys

import pytest

from diraclab import lab
from diraclab.lab import (EXIT_CONFIG_ERROR, EXIT_GATE_FAILURE, EXIT_OK,
                          EXIT_PRECONDITION, ConfigError, EXPERIMENTS,
                          list_experiments, parse_config_text,
                          run_config_file, run_experiment)


class TestConfigGrammar:
    def test_parses_keys_comments_and_tolerances(self):
        cfg = parse_config_text(
            "# a comment\n"
            "experiment = clifford\n"
            "n = 128   # trailing comment\n"
            "sigma = 2.5\n"
            "tol_residual = 1e-12\n"
            "\n")
        assert cfg == {"experiment": "clifford", "n": 128, "sigma": 2.5,
                       "tol_residual": 1e-12}

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown key"):
            parse_config_text("experiment = clifford\nwhatever = 3\n")

    def test_bad_value_rejected(self):
        with pytest.raises(ConfigError, match="cannot parse"):
            parse_config_text("experiment = clifford\nn = abc\n")

    def test_missing_experiment_rejected(self):
        with pytest.raises(ConfigError, match="experiment"):
            parse_config_text("n = 64\n")

    def test_missing_equals_rejected(self):
        with pytest.raises(ConfigError, match="key = value"):
            parse_config_text("experiment clifford\n")


class TestCatalog:
    def test_thirteen_experiments(self):
        assert len(EXPERIMENTS) == 13
        assert sorted(EXPERIMENTS) == sorted([
            "clifford", "appendixA", "spectrum", "evolve", "zitter",
            "timeseries", "commutator", "uncertainty", "mt", "boost",
            "debroglie", "pauli", "hamstep"])

    def test_listing_carries_anchors(self):
        lines = list_experiments()
        assert len(lines) == 13
        assert any(line.startswith("uncertainty: eqs. 28-31") for line in lines)
        for line in lines:
            name, _, anchor = line.partition(": ")
            assert name in EXPERIMENTS
            assert anchor

    def test_unknown_experiment_suggestion(self):
        with pytest.raises(ConfigError, match="did you mean 'spectrum'"):
            run_experiment({"experiment": "spectrun"})

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ConfigError, match="fixed dimensionality"):
            run_experiment({"experiment": "evolve", "dim": 3})


class TestRunnerContract:
    def test_pass_run_writes_summary(self, tmp_path):
        code = run_experiment({"experiment": "clifford"}, str(tmp_path))
        assert code == EXIT_OK
        summary = json.loads((tmp_path / "clifford" / "summary.json").read_text())
        assert summary["ok"] is True
        assert summary["failures"] == []
        assert summary["passes"]["clifford_3d"] is True

    def test_zero_tolerance_forces_failure(self, tmp_path):
        cfg = {"experiment": "hamstep", "tol_rest_phase": 0.0}
        code = run_experiment(cfg, str(tmp_path))
        assert code == EXIT_GATE_FAILURE
        summary = json.loads((tmp_path / "hamstep" / "summary.json").read_text())
        assert summary["ok"] is False
        assert "rest_phase" in summary["failures"]

    def test_forced_failure_names_product_gate(self, tmp_path):
        # the measured product carries a genuine ~6x margin over its bound,
        # so forcing a failure needs a tolerance beyond that margin
        cfg = {"experiment": "uncertainty", "n_packets": 2,
               "tol_eq31": -6.0, "seed": 1}
        code = run_experiment(cfg, str(tmp_path))
        assert code == EXIT_GATE_FAILURE
        summary = json.loads((tmp_path / "uncertainty" / "summary.json").read_text())
        assert summary["ok"] is False
        assert "pass_eq31" in summary["failures"]

    def test_precondition_exit_writes_summary(self, tmp_path):
        cfg = {"experiment": "evolve", "sigma": 0.1}
        code = run_experiment(cfg, str(tmp_path))
        assert code == EXIT_PRECONDITION
        summary = json.loads((tmp_path / "evolve" / "summary.json").read_text())
        assert summary["ok"] is False
        assert summary["error_kind"] == "precondition"
        assert "sigma" in summary["error"]

    def test_malformed_config_writes_nothing(self, tmp_path):
        cfg_file = tmp_path / "bad.cfg"
        cfg_file.write_text("experiment = clifford\nbogus = 1\n")
        out = tmp_path / "out"
        code = run_config_file(cfg_file, str(out))
        assert code == EXIT_CONFIG_ERROR
        assert not out.exists()

    def test_missing_config_file(self, tmp_path):
        code = run_config_file(tmp_path / "nope.cfg", str(tmp_path))
        assert code == EXIT_CONFIG_ERROR

    def test_reproducible_bytes(self, tmp_path):
        cfg_file = tmp_path / "appendixA.cfg"
        cfg_file.write_text("experiment = appendixA\nn = 128\n")
        run_config_file(cfg_file, str(tmp_path / "a"))
        run_config_file(cfg_file, str(tmp_path / "b"))
        name = "appendixA/commutator_residuals.csv"
        assert ((tmp_path / "a" / name).read_bytes()
                == (tmp_path / "b" / name).read_bytes())

    def test_out_env_override(self, tmp_path, monkeypatch):
        monkeypatch.setenv("DIRACLAB_OUT", str(tmp_path / "envout"))
        cfg_file = tmp_path / "clifford.cfg"
        cfg_file.write_text("experiment = clifford\n")
        assert run_config_file(cfg_file) == EXIT_OK
        assert (tmp_path / "envout" / "clifford" / "summary.json").exists()

    def test_run_all_empty_dir(self, tmp_path):
        assert lab.run_all(tmp_path, str(tmp_path)) == EXIT_CONFIG_ERROR


class TestCli:
    def test_list_subcommand(self, capsys):
        from diraclab.cli import main
        assert main(["list"]) == EXIT_OK
        out = capsys.readouterr().out.strip().splitlines()
        assert len(out) == 13

    def test_run_subcommand(self, tmp_path, capsys):
        cfg_file = tmp_path / "clifford.cfg"
        cfg_file.write_text("experiment = clifford\n")
        from diraclab.cli import main
        assert main(["run", str(cfg_file), "--out", str(tmp_path)]) == EXIT_OK
        assert "clifford: PASS" in capsys.readouterr().out

    def test_console_script(self, tmp_path):
        cfg_file = tmp_path / "clifford.cfg"
        cfg_file.write_text("experiment = clifford\n")
        proc = subprocess.run(
            [sys.executable, "-m", "diraclab.cli", "run", str(cfg_file),
             "--out", str(tmp_path)],
            capture_output=True, text=True)
        assert proc.returncode == 0
        assert "PASS" in proc.stdout
