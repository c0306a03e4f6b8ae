"""The dynamical time operator T = alpha.r/c + beta*tau0.

T is block-diagonal in position space: one spinor-dimensional Hermitian
block per grid point, with T(x)^2 = ((|x|/c)^2 + tau0^2) * I. That closed
square gives exact spectra, exact block exponentials (used by the boost
module) and exact second moments.

The commutator with the free Dirac Hamiltonian reduces, on the lattice, to
the per-axis deviation of [x,p] from i*hbar acting on the state: every
spinor-matrix identity involved is exact in finite dimensions. The dense
report verifies that reduction explicitly and bounds the deviation with the
same tail functional used by the lattice module.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .algebra import DiracRep, spin_orbit_K
from .dynamics import (ObservableSeries, PhysParams, ZbPeak, dense_hamiltonian,
                       evolve, expectation, transport_rate_mean, zb_spectrum)
from .lattice import (Lattice, PreconditionError, SpinorField,
                      apply_momentum, apply_position, eps_tail, inner,
                      momentum_operator, position_operator, probe_state,
                      to_space)


@dataclass(frozen=True)
class TimeOperator:
    lattice: Lattice
    rep: DiracRep
    tau0: float
    c: float
    blocks: np.ndarray  # shape grid_shape + (s, s)


def build_time_operator(lattice: Lattice, rep: DiracRep,
                        params: PhysParams) -> TimeOperator:
    grids = lattice.position_grids()
    s = rep.spinor_dim
    blocks = np.zeros(lattice.grid_shape + (s, s), dtype=complex)
    for g, alpha in zip(grids, rep.alphas):
        blocks += g[..., None, None] * alpha / params.c
    blocks += params.tau0 * rep.beta
    return TimeOperator(lattice, rep, params.tau0, params.c, blocks)


def apply_time_operator(op: TimeOperator, field: SpinorField) -> SpinorField:
    pos = to_space(field, "position")
    amps = np.einsum("...st,...t->...s", op.blocks, pos.amplitudes)
    out = pos.with_amplitudes(amps)
    return to_space(out, field.space)


def time_expectation(op: TimeOperator, field: SpinorField) -> float:
    pos = to_space(field, "position")
    return float(np.real(inner(pos, apply_time_operator(op, pos))))


def time_square_expectation(op: TimeOperator, field: SpinorField) -> float:
    """<T^2> from the closed block square ((|x|/c)^2 + tau0^2)."""
    pos = to_space(field, "position")
    lat = op.lattice
    r2 = sum(g**2 for g in lat.position_grids())
    w = r2 / op.c**2 + op.tau0**2
    return float(np.sum(w * pos.density()) * pos.measure)


@dataclass(frozen=True)
class SpectrumAt:
    x: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns
    spin_labels: np.ndarray | None
    label_kind: str


def spectrum_at(op: TimeOperator, x) -> SpectrumAt:
    """Eigenvalues +-sqrt((|x|/c)^2 + tau0^2) and eigenspinors at a point.

    In 3D each branch is doubly degenerate; the pairs are simultaneously
    diagonalized with the spin component along x (helicity). At x = 0 that
    labeling is undefined and s_z labels are used instead.
    """
    rep = op.rep
    xv = np.atleast_1d(np.asarray(x, dtype=float))
    if len(xv) != rep.spatial_dim:
        raise ValueError(f"point has {len(xv)} components, rep is {rep.spatial_dim}D")
    block = sum(xi * ai / op.c for xi, ai in zip(xv, rep.alphas)) + op.tau0 * rep.beta
    vals, vecs = np.linalg.eigh(block)
    if rep.spatial_dim == 1:
        return SpectrumAt(xv, vals, vecs, None, "none")
    r = float(np.linalg.norm(xv))
    if r > 0:
        helicity = sum(xi * si for xi, si in zip(xv, rep.spins)) / r
        kind = "helicity"
    else:
        helicity = rep.spins[2]
        kind = "s_z"
    labels = np.empty(rep.spinor_dim)
    for val in np.unique(np.round(vals, 12)):
        sel = np.isclose(vals, val, rtol=0, atol=1e-10)
        V = vecs[:, sel]
        hproj = V.conj().T @ helicity @ V
        hvals, hvecs = np.linalg.eigh(hproj)
        vecs[:, sel] = V @ hvecs
        labels[sel] = hvals
    return SpectrumAt(xv, vals, vecs, labels, kind)


@dataclass(frozen=True)
class TimeSeriesFit:
    slope: float
    intercept: float
    slope_model: float
    zb: ZbPeak | None


def series_T(field0: SpinorField, times, min_window_tau0: float = 10.0,
             with_zb: bool = False) -> tuple[ObservableSeries, TimeSeriesFit]:
    """<T(t)> series with its least-squares line.

    The fitted slope is compared against the mode-wise <(c p / H)^2>; for
    mixed packets the detrended series carries the branch-interference
    oscillation, extracted on request via the standard peak finder.
    """
    times = np.asarray(times, dtype=float)
    params = field0.params
    if len(times) < 2:
        raise PreconditionError("series_T needs at least two samples")
    window = times[-1] - times[0]
    if window < min_window_tau0 * params.tau0:
        raise PreconditionError(
            f"series window {window} shorter than {min_window_tau0} tau0")
    dt = np.diff(times)
    if not np.allclose(dt, dt[0], rtol=1e-9, atol=0.0):
        raise PreconditionError("series_T needs uniform sampling")
    op = build_time_operator(field0.lattice, field0.rep, params)
    mom = to_space(field0, "momentum")
    values = np.empty(len(times))
    for i, t in enumerate(times):
        values[i] = time_expectation(op, evolve(mom, t))
    series = ObservableSeries(times, values, "T", {})
    slope, intercept = np.polyfit(times, values, 1)
    fit = TimeSeriesFit(float(slope), float(intercept),
                        transport_rate_mean(field0),
                        zb_spectrum(series) if with_zb else None)
    return series, fit


def dense_time_operator(lattice: Lattice, rep: DiracRep,
                        params: PhysParams) -> np.ndarray:
    ngrid = lattice.ngrid
    if ngrid * rep.spinor_dim > 8192:
        raise PreconditionError("dense time operator exceeds the dense-mode cap")
    eye_g = np.eye(ngrid, dtype=complex)
    T = params.tau0 * np.kron(eye_g, rep.beta)
    for a in range(lattice.spatial_dim):
        X = position_operator(lattice, axis=a)
        T = T + np.kron(X, rep.alphas[a]) / params.c
    return T


@dataclass(frozen=True)
class ChronosCommutatorReport:
    n_per_axis: int
    spatial_dim: int
    residual: float
    eps_tail: float
    identity_residual: float

    @property
    def bound_ok(self) -> bool:
        return self.residual <= self.eps_tail


def commutator_TH(lattice: Lattice, rep: DiracRep, params: PhysParams,
                  sigma: float | None = None,
                  profile: str = "cusp") -> ChronosCommutatorReport:
    """Dense check of the T-H commutator identity on a test packet.

    Computes R = [T,H] - i*hbar*(I + 2 beta K) - 2 beta (tau0 H - m c^2 T)
    (the K term is the identity in 1D, where the spin-orbit part is absent)
    and reports ||R psi|| for the canonical tail-probe state, its tail bound,
    and the max-norm distance between R and the per-axis commutator
    deviation sum_a ([x_a,p_a] - i hbar) x I, which vanishes identically.
    """
    ngrid = lattice.ngrid
    dim = ngrid * rep.spinor_dim
    if dim > 8192:
        raise PreconditionError(f"dense commutator dimension {dim} exceeds cap 8192")
    hbar = params.hbar
    T = dense_time_operator(lattice, rep, params)
    H = dense_hamiltonian(lattice, rep, params)
    eye = np.eye(dim, dtype=complex)
    eye_g = np.eye(ngrid, dtype=complex)
    beta_full = np.kron(eye_g, rep.beta)
    if rep.spatial_dim == 3:
        K = spin_orbit_K(rep, lattice)
        central = 1j * hbar * (eye + 2.0 * beta_full @ K)
    else:
        central = 1j * hbar * eye
    R = (T @ H - H @ T) - central - 2.0 * beta_full @ (params.tau0 * H - params.mc2 * T)

    # independent structural check: R must equal the pure lattice artifact
    D = np.zeros((dim, dim), dtype=complex)
    eye_s = np.eye(rep.spinor_dim, dtype=complex)
    for a in range(lattice.spatial_dim):
        X = position_operator(lattice, axis=a)
        P = momentum_operator(lattice, axis=a)
        D += np.kron(X @ P - P @ X - 1j * hbar * eye_g, eye_s)
    identity_residual = float(np.abs(R - D).max())

    if sigma is None:
        sigma = lattice.box_length / 10.0
    state = probe_state(lattice, rep, params, profile=profile, sigma=sigma)
    vec = state.amplitudes.reshape(-1)
    rvec = R @ vec
    measure = state.measure
    residual = float(np.sqrt(np.sum(np.abs(rvec) ** 2) * measure))
    eps, _ = eps_tail(state)
    return ChronosCommutatorReport(lattice.n_per_axis, lattice.spatial_dim,
                                   residual, eps, identity_residual)


def spin_orbit_mean(field: SpinorField) -> float:
    """<s.l>/hbar^2 via spectral application (no dense operators)."""
    if field.rep.spatial_dim != 3:
        raise PreconditionError("spin-orbit mean requires the 3D representation")
    pos = to_space(field, "position")
    hbar = field.lattice.hbar
    total = 0.0
    for k in range(3):
        i, j = (k + 1) % 3, (k + 2) % 3
        lk = apply_position(apply_momentum(pos, axis=j), axis=i).amplitudes \
            - apply_position(apply_momentum(pos, axis=i), axis=j).amplitudes
        # spins are stored as s_k/hbar, so s.l/hbar^2 = spins.l/hbar
        sk_lk = np.einsum("st,...t->...s", field.rep.spins[k], lk)
        total += float(np.real(np.sum(np.conj(pos.amplitudes) * sk_lk) * pos.measure))
    return total / hbar


@dataclass
class UncertaintyReport:
    dT: float
    dH: float
    dr: float
    dp: float
    bound_eq28: float
    bound_eq31: float
    mt_time: float | None
    dTdt: float | None
    pass_eq29: bool
    pass_eq30: bool
    pass_eq31: bool
    pass_eq36: bool | None

    def to_json(self, path=None) -> str:
        payload = {
            "dT": self.dT, "dH": self.dH, "dr": self.dr, "dp": self.dp,
            "bound_eq28": self.bound_eq28, "bound_eq31": self.bound_eq31,
            "mt_time": self.mt_time, "dTdt": self.dTdt,
            "pass_eq29": self.pass_eq29, "pass_eq30": self.pass_eq30,
            "pass_eq31": self.pass_eq31, "pass_eq36": self.pass_eq36,
        }
        text = json.dumps(payload, indent=2, sort_keys=True)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text


def _vector_spread(field: SpinorField, space: str) -> float:
    from .lattice import _moments
    f = to_space(field, space)
    _, var = _moments(f)
    return float(np.sqrt(var.sum()))


def uncertainty_TH(field: SpinorField,
                   op: TimeOperator | None = None) -> UncertaintyReport:
    """Spreads of T and H with the position/momentum chain and both bounds."""
    if abs(field.norm_sq() - 1.0) > 1e-8:
        raise PreconditionError("uncertainty_TH requires a normalized field")
    params = field.params
    hbar = params.hbar
    c = params.c
    if op is None:
        op = build_time_operator(field.lattice, field.rep, params)
    mean_T = time_expectation(op, field)
    mean_T2 = time_square_expectation(op, field)
    dT = float(np.sqrt(max(0.0, mean_T2 - mean_T**2)))

    mom = to_space(field, "momentum")
    from .dynamics import _mode_hamiltonian_fields
    _, E = _mode_hamiltonian_fields(mom)
    mean_H = expectation(mom, "H")
    mean_H2 = float(np.sum(E**2 * mom.density()) * mom.measure)
    dH = float(np.sqrt(max(0.0, mean_H2 - mean_H**2)))

    dr = _vector_spread(field, "position")
    dp = _vector_spread(field, "momentum")

    if field.rep.spatial_dim == 3:
        beta_k_mean = 1.0 + 2.0 * spin_orbit_mean(field)
        bound_eq28 = 0.5 * hbar * abs(1.0 + 2.0 * beta_k_mean)
        bound_eq31 = 1.5 * hbar
    else:
        bound_eq28 = 0.5 * hbar
        bound_eq31 = 0.5 * hbar

    pass_eq29 = dT**2 >= dr**2 / c**2 - 1e-10
    pass_eq30 = dH**2 >= c**2 * dp**2 - 1e-10
    pass_eq31 = dT * dH >= bound_eq31 * (1.0 - 1e-6)
    return UncertaintyReport(dT, dH, dr, dp, bound_eq28, bound_eq31,
                             None, None, pass_eq29, pass_eq30, pass_eq31, None)


def mt_report(field: SpinorField, times,
              slope_floor: float = 1e-6) -> UncertaintyReport:
    """Mandelstam-Tamm view: dT / |d<T>/dt| from the fitted drift rate.

    Rest packets are flagged rather than returned: below `slope_floor`
    (default (v/c)^2 = 1e-6) the associated time diverges.
    """
    base = uncertainty_TH(field)
    _, fit = series_T(field, times)
    if abs(fit.slope) < slope_floor:
        raise PreconditionError("mean drift rate of T is below the divergence "
                                "floor; the Mandelstam-Tamm time diverges")
    mt_time = base.dT / abs(fit.slope)
    hbar = field.params.hbar
    pass_eq36 = mt_time * base.dH >= 0.5 * hbar * (1.0 - 1e-6)
    return UncertaintyReport(base.dT, base.dH, base.dr, base.dp,
                             base.bound_eq28, base.bound_eq31,
                             float(mt_time), fit.slope,
                             base.pass_eq29, base.pass_eq30, base.pass_eq31,
                             bool(pass_eq36))
