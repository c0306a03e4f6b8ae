"""Acceptance gate: every top-level criterion at its stated tolerance.

The suite drives the shipped experiment configs through the same code path
as `diraclab run-all`, records per-experiment wall time, and prints one
pass/fail line per criterion (visible with `pytest -s`).
"""

import json
import time
from pathlib import Path

import numpy as np
import pytest

from diraclab import lab

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"


class SuiteResult:
    def __init__(self, root: Path):
        self.root = root
        self.elapsed: dict[str, float] = {}
        self.codes: dict[str, int] = {}

    def run(self):
        for cfg_file in sorted(CONFIG_DIR.glob("*.cfg")):
            cfg = lab.load_config(cfg_file)
            t0 = time.perf_counter()
            code = lab.run_experiment(cfg, str(self.root))
            self.elapsed[cfg["experiment"]] = time.perf_counter() - t0
            self.codes[cfg["experiment"]] = code
        return self

    def summary(self, name: str) -> dict:
        return json.loads((self.root / name / "summary.json").read_text())

    def values(self, name: str) -> dict:
        return self.summary(name)["values"]

    def passed(self, name: str) -> bool:
        return self.codes[name] == lab.EXIT_OK and self.summary(name)["ok"]


@pytest.fixture(scope="session")
def suite(tmp_path_factory):
    return SuiteResult(tmp_path_factory.mktemp("acceptance")).run()


def report(number: int, ok: bool, detail: str):
    status = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE {number:2d}: {status} - {detail}")
    assert ok, detail


def test_criterion_01_clifford(suite):
    vals = suite.values("clifford")
    ok = (suite.passed("clifford")
          and vals["residual_1d"] <= 1e-13
          and vals["residual_3d"] <= 1e-13
          and suite.elapsed["clifford"] < 1.0)
    report(1, ok, f"clifford residuals {vals['residual_1d']:.1e}/"
                  f"{vals['residual_3d']:.1e} <= 1e-13 "
                  f"in {suite.elapsed['clifford']:.2f}s")


def test_criterion_02_spectrum(suite):
    vals = suite.values("spectrum")
    ok = (suite.passed("spectrum")
          and vals["max_rel_dev"] <= 1e-10
          and abs(vals["min_gap"] - 2 * vals["tau0"]) <= 1e-10
          and vals["max_orth_dev"] <= 1e-12
          and suite.elapsed["spectrum"] < 10.0)
    report(2, ok, f"spectrum rel dev {vals['max_rel_dev']:.1e}, gap dev "
                  f"{abs(vals['min_gap'] - 2 * vals['tau0']):.1e}, orth "
                  f"{vals['max_orth_dev']:.1e} in {suite.elapsed['spectrum']:.1f}s")


def test_criterion_03_appendix_suite(suite):
    vals = suite.values("appendixA")
    res = vals["commutator_residuals"]
    ok = (suite.passed("appendixA")
          and vals["roundtrip_dev"] <= 1e-12
          and vals["translate_shift_dev"] <= 1e-9
          and vals["min_gaussian_rel_dev"] <= 0.005
          and res[0] > res[1] > res[2]
          and suite.elapsed["appendixA"] < 30.0)
    report(3, ok, f"roundtrip {vals['roundtrip_dev']:.1e}, translate "
                  f"{vals['translate_shift_dev']:.1e}, product dev "
                  f"{vals['min_gaussian_rel_dev']:.2%}, residuals "
                  f"{res[0]:.2e}>{res[1]:.2e}>{res[2]:.2e} "
                  f"in {suite.elapsed['appendixA']:.1f}s")


def test_criterion_04_dynamics(suite):
    ev = suite.values("evolve")
    zb = suite.values("zitter")
    elapsed = suite.elapsed["evolve"] + suite.elapsed["zitter"]
    bins_ok = (abs(zb["omega_rest"] - zb["omega_model_rest"])
               + abs(zb["omega_moving"] - zb["omega_model_moving"])) < 1.0
    ok = (suite.passed("evolve") and suite.passed("zitter")
          and ev["r_slope_rel_dev"] <= 1e-3
          and ev["dense_oracle_dev"] <= 1e-10
          and bins_ok
          and elapsed < 60.0)
    report(4, ok, f"r-slope dev {ev['r_slope_rel_dev']:.1e} <= 0.1%, dense "
                  f"oracle {ev['dense_oracle_dev']:.1e} <= 1e-10, trembling "
                  f"peaks at {zb['omega_rest']:.3f}/{zb['omega_moving']:.3f} "
                  f"(models {zb['omega_model_rest']:.3f}/"
                  f"{zb['omega_model_moving']:.3f}) in {elapsed:.1f}s")


def test_criterion_05_time_series(suite):
    vals = suite.values("timeseries")
    slope_devs = [vals[f"slope_rel_dev_{tag}"] for tag in ("k0p1", "k0p5", "k2p0")]
    ok = (suite.passed("timeseries")
          and max(slope_devs) <= 0.01
          and vals["intercept_rel_dev"] <= 0.01
          and suite.elapsed["timeseries"] < 60.0)
    report(5, ok, f"T-slope devs {['%.2e' % d for d in slope_devs]} <= 1%, "
                  f"intercept dev {vals['intercept_rel_dev']:.2e} <= 1% "
                  f"in {suite.elapsed['timeseries']:.1f}s")


def test_criterion_06_commutator(suite):
    vals = suite.values("commutator")
    summary = suite.summary("commutator")
    ratios = [vals["halving_ratio_0"], vals["halving_ratio_1"]]
    bounds = [summary["passes"][k] for k in summary["passes"] if k.startswith("bound")]
    ok = (suite.passed("commutator")
          and all(abs(r - 0.5) <= 0.125 for r in ratios)
          and all(bounds)
          and suite.elapsed["commutator"] < 120.0)
    report(6, ok, f"residual halving ratios {ratios[0]:.3f}, {ratios[1]:.3f} "
                  f"within 0.5 +/- 25%, all tail bounds hold (1D 64-256, 3D 8) "
                  f"in {suite.elapsed['commutator']:.1f}s")


def test_criterion_07_uncertainty_chain(suite):
    vals = suite.values("uncertainty")
    ok = (suite.passed("uncertainty")
          and vals["n_packets"] == 20
          and vals["margin_eq29"] >= -1e-10
          and vals["margin_eq30"] >= -1e-10
          and vals["margin_eq31"] >= 0.0
          and vals["margin_eq28"] >= 0.0
          and suite.elapsed["uncertainty"] < 120.0)
    report(7, ok, f"20 packets: margins eq29 {vals['margin_eq29']:.2e}, "
                  f"eq30 {vals['margin_eq30']:.2e}, eq31 {vals['margin_eq31']:.2e}, "
                  f"eq28 {vals['margin_eq28']:.2e} in "
                  f"{suite.elapsed['uncertainty']:.1f}s")


def test_criterion_08_mandelstam_tamm(suite):
    vals = suite.values("mt")
    summary = suite.summary("mt")
    ok = (suite.passed("mt")
          and vals["ratio_rel_dev_nr"] <= 0.05
          and vals["ratio_rel_dev_ur"] <= 0.05
          and summary["passes"]["pass_eq36_nr"]
          and summary["passes"]["pass_eq36_ur"]
          and suite.elapsed["mt"] < 60.0)
    report(8, ok, f"slow-regime ratio {vals['ratio_nr']:.1f} vs "
                  f"{vals['ratio_model_nr']:.1f} ({vals['ratio_rel_dev_nr']:.2%}), "
                  f"fast-regime {vals['ratio_ur']:.4f} vs 1 "
                  f"({vals['ratio_rel_dev_ur']:.2%}), floor bound holds, "
                  f"in {suite.elapsed['mt']:.1f}s")


def test_criterion_09_boost(suite):
    b = suite.values("boost")
    d = suite.values("debroglie")
    p = suite.values("pauli")
    elapsed = (suite.elapsed["boost"] + suite.elapsed["debroglie"]
               + suite.elapsed["pauli"])
    ok = (suite.passed("boost") and suite.passed("debroglie")
          and suite.passed("pauli")
          and b["dp_deps_rel_dev"] <= 0.005
          and b["phase_per_eps_plus"] * b["phase_per_eps_minus"] < 0
          and d["wavelength_rel_dev"] <= 0.01
          and b["dp_rel_dev"] <= 0.10
          and p["leakage_small_eps"] <= 1e-6
          and elapsed < 120.0)
    report(9, ok, f"d<p>/deps dev {b['dp_deps_rel_dev']:.1e} <= 0.5%, phase "
                  f"signs flip, wavelength dev {d['wavelength_rel_dev']:.2%} "
                  f"<= 1%, finite gain dev {b['dp_rel_dev']:.1%} <= 10%, "
                  f"leakage {p['leakage_small_eps']:.1e} <= 1e-6 "
                  f"in {elapsed:.1f}s")


def test_criterion_10_hamiltonian_step(suite):
    vals = suite.values("hamstep")
    ok = (suite.passed("hamstep")
          and vals["phase_dev_rest_packet"] <= 0.02
          and vals["phase_dev_moving"] <= 0.02
          and abs(vals["shift_moving"] - vals["shift_model_moving"])
          <= 0.005 * abs(vals["shift_model_moving"])
          and suite.elapsed["hamstep"] < 30.0)
    report(10, ok, f"phase devs {vals['phase_dev_rest_packet']:.2e}/"
                   f"{vals['phase_dev_moving']:.2e} <= 2%, shift "
                   f"{vals['shift_moving']:.4f} vs {vals['shift_model_moving']:.4f} "
                   f"in {suite.elapsed['hamstep']:.1f}s")


def test_criterion_11_reproducibility(suite, tmp_path_factory):
    t0 = time.perf_counter()
    other = SuiteResult(tmp_path_factory.mktemp("repro")).run()
    elapsed = time.perf_counter() - t0
    total_first = sum(suite.elapsed.values())
    mismatches = []
    for path in sorted(suite.root.rglob("*")):
        if not path.is_file():
            continue
        twin = other.root / path.relative_to(suite.root)
        if not twin.exists() or path.read_bytes() != twin.read_bytes():
            mismatches.append(str(path.relative_to(suite.root)))
    ok = (not mismatches and all(other.passed(n) for n in other.codes)
          and total_first < 300.0 and elapsed < 300.0)
    report(11, ok, f"two full runs byte-identical over "
                   f"{sum(1 for _ in suite.root.rglob('*.csv'))} CSV and "
                   f"{sum(1 for _ in suite.root.rglob('*.json'))} JSON files; "
                   f"suite {total_first:.0f}s/{elapsed:.0f}s < 300s"
                   + (f"; mismatches: {mismatches}" if mismatches else ""))
