"""The transformation generated by the time operator: momentum response,
phase bookkeeping, branch admixture and the time-step dual."""

import numpy as np
import pytest

from diraclab import algebra, boost, dynamics, lattice
from diraclab.boost import (EdgeClearanceError, boost_run, boost_step,
                            de_broglie_check, hamiltonian_step_check,
                            momentum_response_derivative, pauli_diagnostic,
                            phase_shift_check, time_mean_invariance)
from diraclab.dynamics import PhysParams, expectation, make_packet
from diraclab.lattice import PreconditionError, make_lattice, probe_state

PARAMS = PhysParams()
REP1 = algebra.build_rep(1)
LAT = make_lattice(1, 1024, 200.0)
TAU0 = PARAMS.tau0


def packet(k0=0.3, sigma=10.0, branch="+", lat=LAT):
    return make_packet(lat, REP1, PARAMS, k0, sigma, branch=branch)


class TestBoostStep:
    def test_zero_increment_is_identity(self):
        pk = packet()
        out = boost_step(pk, 0.0)
        assert np.abs(out.amplitudes - pk.amplitudes).max() == 0.0

    def test_group_law(self):
        pk = packet()
        two = boost_step(boost_step(pk, 0.05), 0.05)
        one = boost_step(pk, 0.1)
        assert np.abs(two.amplitudes - one.amplitudes).max() <= 1e-12

    def test_unitary(self):
        assert abs(boost_step(packet(), 0.3).norm_sq() - 1.0) <= 1e-12

    def test_norm_drift_over_many_steps(self):
        lat = make_lattice(1, 128, 60.0)
        field = lattice.to_space(packet(0.0, 4.0, lat=lat), "position")
        for _ in range(10_000):
            field = boost_step(field, -1e-4)
        assert abs(field.norm_sq() - 1.0) <= 1e-9

    def test_rejects_nonfinite(self):
        with pytest.raises(PreconditionError):
            boost_step(packet(), np.inf)


class TestMomentumResponse:
    def test_first_order_rate(self):
        # exact derivative -<alpha>/c under exp(-i eps T/hbar); the paper's
        # operator-picture displacement has the opposite sign, realized by
        # running with eps < 0
        pk = packet(0.3)
        alpha = expectation(pk, "alpha")
        rate = momentum_response_derivative(pk)
        assert rate == pytest.approx(-alpha / PARAMS.c, rel=0.005)

    def test_forward_boost_gains_momentum(self):
        pk = packet(0.3)
        run = boost_run(pk, -0.2, 10)
        assert run.p_mean[-1] > run.p_mean[0]


class TestBoostRun:
    def test_record_shapes_and_norm(self):
        run = boost_run(packet(), -0.1, 8)
        assert len(run.steps) == 9
        assert run.eps_accum[-1] == pytest.approx(-0.1)
        assert abs(run.final.norm_sq() - 1.0) <= 1e-12

    def test_sampling_density_does_not_change_endpoint(self):
        pk = packet()
        a = boost_run(pk, -0.3, 3).final
        b = boost_run(pk, -0.3, 17).final
        a_pos = lattice.to_space(a, "position")
        b_pos = lattice.to_space(b, "position")
        assert np.abs(a_pos.amplitudes - b_pos.amplitudes).max() <= 1e-10

    def test_run_composition(self):
        pk = packet()
        once = boost_run(pk, -0.4, 8).final
        twice = boost_run(boost_run(pk, -0.25, 5).final, -0.15, 3).final
        assert np.abs(lattice.to_space(once, "position").amplitudes
                      - lattice.to_space(twice, "position").amplitudes).max() <= 1e-10

    def test_time_mean_invariant(self):
        assert time_mean_invariance(packet(), 0.8) <= 1e-10

    def test_edge_clearance_abort_carries_step(self):
        state = probe_state(LAT, REP1, PARAMS, "cusp", sigma=60.0)
        with pytest.raises(EdgeClearanceError) as err:
            boost_run(state, -0.1, 5)
        assert err.value.step == 1

    def test_csv_schema(self, tmp_path):
        run = boost_run(packet(), -0.1, 4)
        path = tmp_path / "run.csv"
        run.to_csv(path)
        lines = path.read_text().splitlines()
        header = next(l for l in lines if not l.startswith("#"))
        assert header == ("step,eps_accum,p_mean,H_mean,beta_mean,"
                          "pop_plus,pop_minus,phase_step")
        assert len(lines) - lines.index(header) - 1 == 5


class TestPhaseShift:
    def test_positive_branch_phase_rate(self):
        # overlap-argument oracle: phase per unit eps = -<beta> tau0/hbar
        run = boost_run(packet(0.0, 10.0, "+"), -0.05, 50)
        report = phase_shift_check(run)
        assert report.rel_dev <= 0.01
        assert report.phase_per_eps == pytest.approx(-TAU0, rel=0.01)

    def test_negative_branch_flips_sign(self):
        plus = phase_shift_check(boost_run(packet(0.0, 10.0, "+"), -0.05, 50))
        minus = phase_shift_check(boost_run(packet(0.0, 10.0, "-"), -0.05, 50))
        assert plus.phase_per_eps * minus.phase_per_eps < 0
        assert plus.branch_sign == 1.0
        assert minus.branch_sign == -1.0

    def test_mixed_input_reports_per_branch(self):
        run = boost_run(packet(0.0, 10.0, "mixed"), -0.01, 10)
        report = phase_shift_check(run)
        assert report.per_branch is not None
        assert report.per_branch["+"] * report.per_branch["-"] < 0
        assert report.per_branch["+"] == pytest.approx(0.01 * TAU0, rel=0.05)

    def test_full_de_broglie_phase(self):
        # |eps| <beta> = m c^2 accumulates 2 pi
        pk = packet(0.0, 10.0, lat=make_lattice(1, 2048, 400.0))
        H0 = expectation(pk, "H")
        run = boost_run(pk, -H0, 1000)
        assert run.phase_total == pytest.approx(2 * np.pi, rel=0.02)


class TestLeakage:
    def test_small_eps_leakage_gate(self):
        run = boost_run(packet(0.0, 10.0), -3e-5, 10)
        report = pauli_diagnostic(run)
        assert report.leakage_final <= 1e-6

    def test_leakage_quadratic_and_monotone_small_regime(self):
        leaks = []
        for eps in (-0.005, -0.01, -0.02):
            run = boost_run(packet(0.0, 10.0), eps, 5)
            leaks.append(pauli_diagnostic(run).leakage_final)
        assert leaks[0] < leaks[1] < leaks[2]
        assert leaks[1] / leaks[0] == pytest.approx(4.0, rel=0.15)

    def test_energy_support_floor(self):
        run = boost_run(packet(0.0, 10.0), -0.05, 10)
        report = pauli_diagnostic(run)
        assert report.min_supported_energy >= PARAMS.mc2 * (1 - 1e-12)

    def test_zero_run_trivial(self):
        run = boost_run(packet(0.0, 10.0), 0.0, 3)
        report = pauli_diagnostic(run)
        assert report.leakage_final <= 1e-12
        assert report.leakage_monotone


class TestDeBroglie:
    def test_constructed_moving_packet_oracle(self):
        # h/p at p ~ 0.5: lambda ~ 4 pi (peak read off the refined lattice
        # maximum, accurate to sub-bin level)
        pk = packet(0.5, 10.0)
        report = de_broglie_check(pk)
        assert report.wavelength == pytest.approx(4 * np.pi, rel=1e-3)
        assert report.rel_dev <= 0.01
        assert report.phase_group_product == pytest.approx(PARAMS.c**2, rel=0.01)

    def test_on_grid_peak_is_exact(self):
        k0 = LAT.axis_momenta()[16]
        pk = packet(k0, 10.0)
        report = de_broglie_check(pk)
        assert report.p_peak == pytest.approx(k0, rel=1e-12)
        assert report.wavelength == pytest.approx(2 * np.pi * PARAMS.hbar / k0,
                                                  rel=1e-12)

    def test_requires_momentum(self):
        with pytest.raises(PreconditionError):
            de_broglie_check(packet(0.0, 10.0))

    def test_identity_after_gentle_boost(self):
        lat = make_lattice(1, 1024, 240.0)
        pk = make_packet(lat, REP1, PARAMS, 0.45, 16.0)
        run = boost_run(pk, -0.005, 10)
        purified = dynamics.project_branch(run.final, "+")
        assert purified.norm_sq() >= 0.99
        report = de_broglie_check(purified.normalized())
        assert report.rel_dev <= 0.01


class TestHamiltonianStep:
    def test_zero_step(self):
        report = hamiltonian_step_check(packet(), 0.0)
        assert report.r_shift == 0.0
        assert report.phase_total == 0.0

    def test_rest_mode_phase_exact(self):
        # rest-frame oracle exp(-i m c^2 t/hbar) over one period
        lat = make_lattice(1, 256, 50.0)
        amps = np.zeros((256, 2), dtype=complex)
        amps[0] = [1.0, 0.0]
        mode = lattice.SpinorField(lat, REP1, PARAMS, "momentum", amps).normalized()
        report = hamiltonian_step_check(mode, TAU0, n_steps=16)
        assert abs(abs(report.phase_total) - 2 * np.pi) <= 1e-6 * 2 * np.pi

    def test_moving_packet_boosted_period(self):
        # over dt = gamma tau0 the co-moving phase magnitude is 2 pi and the
        # center moves by v_gp dt
        pk = packet(0.5, 10.0)
        gamma = dynamics.lorentz_gamma(pk)
        report = hamiltonian_step_check(pk, gamma * TAU0, n_steps=64)
        assert abs(abs(report.phase_total) - 2 * np.pi) <= 0.02 * 2 * np.pi
        assert report.shift_rel_dev <= 0.005

    def test_rest_packet_boosted_period(self):
        lat = make_lattice(1, 1024, 400.0)
        pk = make_packet(lat, REP1, PARAMS, 0.0, 30.0)
        gamma = dynamics.lorentz_gamma(pk)
        report = hamiltonian_step_check(pk, gamma * TAU0, n_steps=64)
        assert abs(abs(report.phase_total) - 2 * np.pi) <= 0.02 * 2 * np.pi
