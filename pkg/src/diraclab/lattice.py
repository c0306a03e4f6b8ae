"""Periodic position/momentum lattice with its discrete Fourier pairing.

Conventions (fixed so that CSV outputs are bit-reproducible):

* N even (power of two), positions x_j = -L/2 + j*dx, j = 0..N-1.
* Momentum grid is the exact DFT conjugate grid, numpy fftfreq order, with
  the Nyquist bin assigned to the negative frequency.
* The position<->momentum map carries the continuum normalization
  1/sqrt(2*pi*hbar) absorbed into the lattice measures, so that
  sum |psi|^2 dx^d = sum |phi|^2 dp^d exactly (Parseval).

No finite matrices satisfy [x,p] = i*hbar*I (the trace obstruction), so all
commutator identities are verified as actions on band-limited states,
together with a computed tail bound `eps_tail` built from the state's mass
at the box edge and at the Nyquist edge.
"""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass

import numpy as np

from .algebra import DiracRep

DENSE_DIM_CAP = 8192

# Calibrated coefficients of the tail bound (box-edge seam, Nyquist seam,
# roundoff floor). Frozen after sweeping profiles x sizes x dims; the
# property suite re-verifies the bound on every run.
_EPS_TAIL_KX = 0.6
_EPS_TAIL_KP = 6.0
_EPS_TAIL_FLOOR = 2e-13


class PreconditionError(ValueError):
    """A named precondition of an operation was violated."""


@dataclass(frozen=True)
class Lattice:
    spatial_dim: int
    n_per_axis: int
    box_length: float
    hbar: float = 1.0

    @property
    def dx(self) -> float:
        return self.box_length / self.n_per_axis

    @property
    def dp(self) -> float:
        return self.hbar * 2.0 * np.pi / self.box_length

    @property
    def ngrid(self) -> int:
        return self.n_per_axis**self.spatial_dim

    def axis_positions(self) -> np.ndarray:
        n = self.n_per_axis
        return -0.5 * self.box_length + self.dx * np.arange(n)

    def axis_momenta(self) -> np.ndarray:
        return self.hbar * 2.0 * np.pi * np.fft.fftfreq(self.n_per_axis, d=self.dx)

    def pmax(self, axis: int = 0) -> float:
        return float(np.abs(self.axis_momenta()).max())

    def position_grids(self) -> list[np.ndarray]:
        ax = self.axis_positions()
        return list(np.meshgrid(*([ax] * self.spatial_dim), indexing="ij"))

    def momentum_grids(self) -> list[np.ndarray]:
        ax = self.axis_momenta()
        return list(np.meshgrid(*([ax] * self.spatial_dim), indexing="ij"))

    @property
    def grid_shape(self) -> tuple[int, ...]:
        return (self.n_per_axis,) * self.spatial_dim


def make_lattice(spatial_dim: int, n_per_axis: int, box_length: float,
                 hbar: float = 1.0) -> Lattice:
    if spatial_dim not in (1, 3):
        raise PreconditionError(f"spatial_dim must be 1 or 3, got {spatial_dim}")
    n = int(n_per_axis)
    if n < 4 or (n & (n - 1)) != 0:
        raise PreconditionError(f"n_per_axis must be a power of two >= 4, got {n_per_axis}")
    if box_length <= 0:
        raise PreconditionError("box_length must be positive")
    return Lattice(spatial_dim, n, float(box_length), float(hbar))


@dataclass
class SpinorField:
    """Complex amplitude per (grid point, spinor component).

    `space` is 'position' or 'momentum'; amplitudes have shape
    grid_shape + (spinor_dim,). Fields are treated as immutable values:
    operations return new fields.
    """

    lattice: Lattice
    rep: DiracRep
    params: "object"
    space: str
    amplitudes: np.ndarray

    def __post_init__(self):
        expected = self.lattice.grid_shape + (self.rep.spinor_dim,)
        if self.amplitudes.shape != expected:
            raise ValueError(f"amplitude shape {self.amplitudes.shape} != {expected}")
        if self.space not in ("position", "momentum"):
            raise ValueError(f"unknown space tag {self.space!r}")

    @property
    def measure(self) -> float:
        lat = self.lattice
        step = lat.dx if self.space == "position" else lat.dp
        return step**lat.spatial_dim

    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2) * self.measure)

    def density(self) -> np.ndarray:
        """|psi|^2 summed over spinor components (a density in this space)."""
        return np.sum(np.abs(self.amplitudes) ** 2, axis=-1)

    def with_amplitudes(self, amps: np.ndarray, space: str | None = None) -> "SpinorField":
        return SpinorField(self.lattice, self.rep, self.params,
                           space or self.space, amps)

    def normalized(self) -> "SpinorField":
        n2 = self.norm_sq()
        if n2 <= 0:
            raise ValueError("cannot normalize a zero field")
        return self.with_amplitudes(self.amplitudes / np.sqrt(n2))


def inner(a: SpinorField, b: SpinorField) -> complex:
    """<a|b> with the lattice measure. Both fields must share a space tag."""
    if a.space != b.space:
        raise ValueError("inner product requires fields in the same space")
    return complex(np.sum(np.conj(a.amplitudes) * b.amplitudes) * a.measure)


def _axis_phases(lattice: Lattice, sign: float) -> list[np.ndarray]:
    x0 = lattice.axis_positions()[0]
    k = lattice.axis_momenta() / lattice.hbar
    return [np.exp(sign * 1j * k * x0)] * lattice.spatial_dim


def _reshape_phase(phase: np.ndarray, axis: int, ndim: int) -> np.ndarray:
    shape = [1] * ndim
    shape[axis] = len(phase)
    return phase.reshape(shape)


def dft_forward(field: SpinorField) -> SpinorField:
    """Position-space field -> momentum-space field (unitary)."""
    if field.space != "position":
        raise PreconditionError("dft_forward expects a position-space field")
    lat = field.lattice
    d = lat.spatial_dim
    axes = tuple(range(d))
    amps = np.fft.fftn(field.amplitudes, axes=axes)
    ndim = amps.ndim
    for a, ph in enumerate(_axis_phases(lat, -1.0)):
        amps = amps * _reshape_phase(ph, a, ndim)
    amps = amps * (lat.dx / np.sqrt(2.0 * np.pi * lat.hbar)) ** d
    return field.with_amplitudes(amps, "momentum")


def dft_inverse(field: SpinorField) -> SpinorField:
    """Momentum-space field -> position-space field (unitary)."""
    if field.space != "momentum":
        raise PreconditionError("dft_inverse expects a momentum-space field")
    lat = field.lattice
    d = lat.spatial_dim
    axes = tuple(range(d))
    amps = field.amplitudes
    ndim = amps.ndim
    for a, ph in enumerate(_axis_phases(lat, +1.0)):
        amps = amps * _reshape_phase(ph, a, ndim)
    amps = np.fft.ifftn(amps, axes=axes)
    amps = amps * (lat.n_per_axis * lat.dp / np.sqrt(2.0 * np.pi * lat.hbar)) ** d
    return field.with_amplitudes(amps, "position")


def to_space(field: SpinorField, space: str) -> SpinorField:
    if field.space == space:
        return field
    return dft_forward(field) if space == "momentum" else dft_inverse(field)


def position_operator(lattice: Lattice, axis: int = 0) -> np.ndarray:
    """Dense x_axis, diagonal in the position basis over the flat grid."""
    if lattice.ngrid > DENSE_DIM_CAP:
        raise PreconditionError(f"grid dimension {lattice.ngrid} exceeds dense cap")
    xg = lattice.position_grids()[axis].reshape(-1)
    return np.diag(xg).astype(complex)


def momentum_operator(lattice: Lattice, axis: int = 0) -> np.ndarray:
    """Dense p_axis = F^dag diag(p) F over the flat grid."""
    if lattice.ngrid > DENSE_DIM_CAP:
        raise PreconditionError(f"grid dimension {lattice.ngrid} exceeds dense cap")
    n = lattice.n_per_axis
    x = lattice.axis_positions()
    p = lattice.axis_momenta()
    F = np.exp(-1j * np.outer(p, x) / lattice.hbar) / np.sqrt(n)
    p1d = F.conj().T @ np.diag(p) @ F
    mats = [np.eye(n, dtype=complex)] * lattice.spatial_dim
    mats[axis] = p1d
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def apply_momentum(field: SpinorField, axis: int = 0, power: int = 1) -> SpinorField:
    """p_axis^power applied spectrally; returns a field in the input space."""
    mom = to_space(field, "momentum")
    pg = field.lattice.momentum_grids()[axis]
    amps = mom.amplitudes * (pg[..., None] ** power)
    out = mom.with_amplitudes(amps)
    return to_space(out, field.space)


def apply_position(field: SpinorField, axis: int = 0, power: int = 1) -> SpinorField:
    """x_axis^power applied pointwise; returns a field in the input space."""
    pos = to_space(field, "position")
    xg = field.lattice.position_grids()[axis]
    amps = pos.amplitudes * (xg[..., None] ** power)
    out = pos.with_amplitudes(amps)
    return to_space(out, field.space)


def edge_band_mass(field: SpinorField, fraction: float = 1.0 / 16.0) -> float:
    """Probability mass within `fraction` of the box length from either edge."""
    pos = to_space(field, "position")
    lat = field.lattice
    rho = pos.density() * pos.measure
    band = int(max(1, round(fraction * lat.n_per_axis)))
    mass = 0.0
    for a in range(lat.spatial_dim):
        sl_lo = [slice(None)] * lat.spatial_dim
        sl_hi = [slice(None)] * lat.spatial_dim
        sl_lo[a] = slice(0, band)
        sl_hi[a] = slice(lat.n_per_axis - band, lat.n_per_axis)
        mass += float(np.sum(rho[tuple(sl_lo)]) + np.sum(rho[tuple(sl_hi)]))
    return mass


def translate(field: SpinorField, alpha: float, axis: int = 0) -> SpinorField:
    """exp(-i alpha p_axis / hbar): shifts <x_axis> by alpha (mod box)."""
    lat = field.lattice
    if abs(alpha) >= lat.box_length / 2:
        raise PreconditionError(f"|alpha|={abs(alpha)} must be < L/2={lat.box_length / 2}")
    if field.space != "position":
        raise PreconditionError("translate expects a position-space field")
    if edge_band_mass(field) > 1e-9:
        warnings.warn("field has significant support near the box edge; "
                      "translation will alias around the boundary", stacklevel=2)
    mom = dft_forward(field)
    pg = lat.momentum_grids()[axis]
    amps = mom.amplitudes * np.exp(-1j * alpha * pg[..., None] / lat.hbar)
    return dft_inverse(mom.with_amplitudes(amps))


def _moments(field: SpinorField) -> tuple[np.ndarray, np.ndarray]:
    """Per-axis (mean, variance) of the density in the field's own space."""
    lat = field.lattice
    rho = field.density() * field.measure
    grids = (lat.position_grids() if field.space == "position"
             else lat.momentum_grids())
    means, variances = [], []
    for g in grids:
        m = float(np.sum(g * rho))
        v = float(np.sum((g - m) ** 2 * rho))
        means.append(m)
        variances.append(v)
    return np.array(means), np.array(variances)


def mean_commutator_xp(field: SpinorField, axis: int = 0) -> complex:
    """<psi| [x_axis, p_axis] |psi> evaluated spectrally on the state."""
    pos = to_space(field, "position")
    u = apply_position(pos, axis=axis)
    v = apply_momentum(pos, axis=axis)
    a = inner(u, v)
    return a - np.conj(a)


@dataclass(frozen=True)
class XPReport:
    dx: float
    dp: float
    product: float
    grid_tol: float
    dx_axes: tuple[float, ...]
    dp_axes: tuple[float, ...]


def uncertainty_xp(field: SpinorField) -> XPReport:
    """Second-central-moment widths and their product, with a reported
    grid tolerance such that product >= (d*hbar/2)*(1 - grid_tol) holds
    rigorously on the lattice (d = spatial_dim)."""
    if abs(field.norm_sq() - 1.0) > 1e-8:
        raise PreconditionError("uncertainty_xp requires a normalized field")
    lat = field.lattice
    pos = to_space(field, "position")
    mom = to_space(field, "momentum")
    _, var_x = _moments(pos)
    _, var_p = _moments(mom)
    dx = float(np.sqrt(var_x.sum()))
    dp = float(np.sqrt(var_p.sum()))
    comm = sum(abs(mean_commutator_xp(pos, axis=a)) for a in range(lat.spatial_dim))
    d = lat.spatial_dim
    grid_tol = max(0.0, 1.0 - comm / (d * lat.hbar)) + 1e-12
    return XPReport(dx, dp, dx * dp, grid_tol,
                    tuple(np.sqrt(var_x)), tuple(np.sqrt(var_p)))


@dataclass(frozen=True)
class CommutatorReport:
    residual: float
    eps_tail: float
    per_axis_residual: tuple[float, ...]
    per_axis_eps: tuple[float, ...]

    @property
    def bound_ok(self) -> bool:
        return self.residual <= self.eps_tail


def _marginal_density(field: SpinorField, axis: int) -> np.ndarray:
    """1D marginal density along `axis` in the field's own space."""
    lat = field.lattice
    rho = field.density() * field.measure
    other = tuple(a for a in range(lat.spatial_dim) if a != axis)
    marg = np.sum(rho, axis=other) if other else rho
    step = lat.dx if field.space == "position" else lat.dp
    return marg / step


def eps_tail(field: SpinorField) -> tuple[float, tuple[float, ...]]:
    """Tail bound for the per-axis commutator residual on this state.

    Built from the state's mass at the seam of each grid: the box edge in
    position space (the sawtooth x jumps by L there) and the Nyquist edge in
    momentum space (p jumps by 2 p_max there). Coefficients are calibrated
    with a safety margin and re-verified by the property suite.
    """
    lat = field.lattice
    hbar = lat.hbar
    pos = to_space(field, "position")
    mom = to_space(field, "momentum")
    n = lat.n_per_axis
    kmax = lat.pmax() / hbar
    L = lat.box_length
    per_axis = []
    for a in range(lat.spatial_dim):
        rho_x = _marginal_density(pos, a)
        rho_k = _marginal_density(mom, a) * hbar  # density per wavenumber
        seam_x = np.sqrt(rho_x[0] + rho_x[-1])
        seam_k = np.sqrt(rho_k[n // 2] + rho_k[n // 2 - 1])
        term_x = _EPS_TAIL_KX * np.sqrt(n) * L * seam_x
        term_p = _EPS_TAIL_KP * np.sqrt(L) * kmax * seam_k
        floor = _EPS_TAIL_FLOOR * (1.0 + L * kmax) * np.sqrt(n)
        per_axis.append(hbar * (term_x + term_p + floor))
    return float(sum(per_axis)), tuple(per_axis)


def commutator_residual_report(field: SpinorField) -> CommutatorReport:
    """|| sum_a ([x_a, p_a] - i hbar) psi || with its tail bound."""
    lat = field.lattice
    pos = to_space(field, "position").normalized()
    hbar = lat.hbar
    total = np.zeros_like(pos.amplitudes)
    per_axis_res = []
    for a in range(lat.spatial_dim):
        xp = apply_position(apply_momentum(pos, axis=a), axis=a)
        px = apply_momentum(apply_position(pos, axis=a), axis=a)
        r = xp.amplitudes - px.amplitudes - 1j * hbar * pos.amplitudes
        per_axis_res.append(float(np.sqrt(np.sum(np.abs(r) ** 2) * pos.measure)))
        total += r
    residual = float(np.sqrt(np.sum(np.abs(total) ** 2) * pos.measure))
    eps, per_axis_eps = eps_tail(pos)
    return CommutatorReport(residual, eps, tuple(per_axis_res), per_axis_eps)


def probe_state(lattice: Lattice, rep: DiracRep, params, profile: str = "gauss",
                sigma: float = 1.0, k0: float = 0.0, x0: float = 0.0,
                spinor: np.ndarray | None = None) -> SpinorField:
    """Separable test state for operator checks (not subject to the packet
    preconditions). Profiles: 'gauss' (smooth) and 'cusp' (exponential,
    algebraic momentum tails that expose the Nyquist seam)."""
    if profile not in ("gauss", "cusp"):
        raise ValueError(f"unknown profile {profile!r}")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    grids = lattice.position_grids()
    f = np.ones(lattice.grid_shape, dtype=complex)
    for g in grids:
        if profile == "gauss":
            f = f * np.exp(-((g - x0) ** 2) / (4.0 * sigma**2))
        else:
            f = f * np.exp(-np.abs(g - x0) / sigma)
    f = f * np.exp(1j * k0 * grids[-1])
    if spinor is None:
        spinor = np.zeros(rep.spinor_dim, dtype=complex)
        spinor[0] = 1.0
    amps = f[..., None] * np.asarray(spinor, dtype=complex)
    out = SpinorField(lattice, rep, params, "position", amps)
    return out.normalized()


_MAGIC = b"SPNF"
_HEADER = struct.Struct("<4sIIIdBI")


def save_field(field: SpinorField, path) -> None:
    """Documented binary layout: header (dims, N, L, space tag, spinor_dim)
    then little-endian complex doubles, row-major grid-then-spinor order."""
    lat = field.lattice
    space_tag = 0 if field.space == "position" else 1
    header = _HEADER.pack(_MAGIC, 1, lat.spatial_dim, lat.n_per_axis,
                          lat.box_length, space_tag, field.rep.spinor_dim)
    payload = np.ascontiguousarray(field.amplitudes).astype("<c16").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def load_field(path, rep: DiracRep, params) -> SpinorField:
    with open(path, "rb") as fh:
        magic, version, sdim, n, L, space_tag, spinor_dim = _HEADER.unpack(
            fh.read(_HEADER.size))
        if magic != _MAGIC:
            raise ValueError(f"not a spinor-field file: bad magic {magic!r}")
        if version != 1:
            raise ValueError(f"unsupported field file version {version}")
        if spinor_dim != rep.spinor_dim:
            raise ValueError("spinor dimension mismatch with supplied representation")
        hbar = getattr(params, "hbar", 1.0)
        lattice = make_lattice(sdim, n, L, hbar=hbar)
        count = lattice.ngrid * spinor_dim
        data = np.frombuffer(fh.read(count * 16), dtype="<c16").astype(complex)
    amps = data.reshape(lattice.grid_shape + (spinor_dim,))
    space = "position" if space_tag == 0 else "momentum"
    return SpinorField(lattice, rep, params, space, amps)
