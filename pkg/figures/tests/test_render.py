"""Rendering of the four figure kinds from golden lab outputs."""

import json
import subprocess
import sys
from pathlib import Path

import pytest

from diracfig import SchemaError, render
from diracfig.cli import main

FIXTURES = Path(__file__).parent / "fixtures"


class TestKinds:
    def test_series_renders_with_fit_annotation(self, tmp_path):
        out = tmp_path / "series.svg"
        result = render("series", FIXTURES / "T_series_k0p5.csv", out)
        assert out.exists() and out.stat().st_size > 0
        assert b"<svg" in out.read_bytes()[:400]
        assert result.n_points == 384

    def test_spectrum_renders_and_separates_branches(self, tmp_path):
        out = tmp_path / "spectrum.svg"
        result = render("spectrum", FIXTURES / "spectrum.json", out)
        assert out.exists()
        tau0 = json.loads((FIXTURES / "spectrum.json").read_text())["tau0"]
        # rendered line data, not pixels: the branch curves stay 2 tau0 apart
        assert result.branch_gap == pytest.approx(2 * tau0, rel=1e-12)
        assert result.y_ranges["tau_plus"][0] == pytest.approx(tau0, rel=1e-12)
        assert result.y_ranges["tau_minus"][1] == pytest.approx(-tau0, rel=1e-12)

    def test_bars_renders(self, tmp_path):
        out = tmp_path / "bars.svg"
        result = render("bars", FIXTURES / "uncertainty.json", out)
        assert out.exists() and result.n_points == 4

    def test_trajectory_renders(self, tmp_path):
        out = tmp_path / "trajectory.svg"
        result = render("trajectory", FIXTURES / "boost_run.csv", out)
        assert out.exists() and result.n_points == 301

    def test_series_overlay_multiple_inputs(self, tmp_path):
        first = FIXTURES / "T_series_k0p5.csv"
        second = tmp_path / "other.csv"
        second.write_text("# observable = T\nt,re,im\n0,1,0\n1,2,0\n2,3,0\n")
        out = tmp_path / "overlay.svg"
        result = render("series", [first, second], out)
        assert out.exists()
        assert result.n_points == 384 + 3

    def test_pdf_output(self, tmp_path):
        out = tmp_path / "series.pdf"
        render("series", FIXTURES / "T_series_k0p5.csv", out)
        assert out.read_bytes()[:5] == b"%PDF-"


class TestErrors:
    def test_empty_csv_writes_nothing(self, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text("")
        out = tmp_path / "fig.svg"
        with pytest.raises(SchemaError, match="empty"):
            render("series", empty, out)
        assert not out.exists()

    def test_missing_column_named(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("t,re\n0,1\n1,2\n")
        with pytest.raises(SchemaError, match="'im'"):
            render("series", bad, tmp_path / "fig.svg")

    def test_missing_trajectory_column_named(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("step,eps_accum,p_mean\n0,0,0\n")
        with pytest.raises(SchemaError, match="'H_mean'"):
            render("trajectory", bad, tmp_path / "fig.svg")

    def test_missing_json_key_named(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"r": [0, 1], "tau_plus": [1, 2]}))
        with pytest.raises(SchemaError, match="'tau_minus'"):
            render("spectrum", bad, tmp_path / "fig.svg")

    def test_unknown_kind(self, tmp_path):
        with pytest.raises(ValueError, match="unknown figure kind"):
            render("sparkline", FIXTURES / "spectrum.json", tmp_path / "f.svg")

    def test_missing_input(self, tmp_path):
        with pytest.raises(SchemaError, match="not found"):
            render("series", tmp_path / "nope.csv", tmp_path / "f.svg")


def test_idempotent_bytes(tmp_path):
    a = tmp_path / "a.svg"
    b = tmp_path / "b.svg"
    render("spectrum", FIXTURES / "spectrum.json", a)
    render("spectrum", FIXTURES / "spectrum.json", b)
    assert a.read_bytes() == b.read_bytes()


class TestCli:
    def test_render_subcommand(self, tmp_path, capsys):
        out = tmp_path / "fig.svg"
        code = main(["render", "--kind", "spectrum",
                     "--in", str(FIXTURES / "spectrum.json"),
                     "--out", str(out)])
        assert code == 0
        assert out.exists()
        assert "spectrum: wrote" in capsys.readouterr().out

    def test_render_schema_failure_exit_code(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("")
        code = main(["render", "--kind", "series",
                     "--in", str(bad), "--out", str(tmp_path / "f.svg")])
        assert code == 1
        assert "error:" in capsys.readouterr().err

    def test_render_all_walks_directory(self, tmp_path, capsys):
        results = tmp_path / "results" / "spectrum"
        results.mkdir(parents=True)
        (results / "spectrum.json").write_text(
            (FIXTURES / "spectrum.json").read_text())
        code = main(["render-all", str(tmp_path / "results")])
        assert code == 0
        assert (results / "spectrum.svg").exists()

    def test_console_module(self, tmp_path):
        out = tmp_path / "fig.svg"
        proc = subprocess.run(
            [sys.executable, "-m", "diracfig.cli", "render", "--kind", "bars",
             "--in", str(FIXTURES / "uncertainty.json"), "--out", str(out)],
            capture_output=True, text=True)
        assert proc.returncode == 0
        assert out.exists()
