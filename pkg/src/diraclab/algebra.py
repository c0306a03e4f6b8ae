"""Finite-dimensional Dirac matrices and derived spin operators.

Two representations are supported:

* 1D (spinor_dim 2): alpha = sigma_x, beta = sigma_z.
* 3D (spinor_dim 4): the Dirac-Pauli representation, beta = diag(1,1,-1,-1)
  and alpha_i with the Pauli matrices on the off-diagonal blocks.

All entries are exact small integers, so the anticommutation residuals are
at roundoff level.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DENSE_DIM_CAP = 8192

PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


@dataclass(frozen=True)
class DiracRep:
    """Matrices alpha_i, beta (and spin matrices in 3D) on the spinor space."""

    spatial_dim: int
    spinor_dim: int
    alphas: tuple[np.ndarray, ...]
    beta: np.ndarray
    spins: tuple[np.ndarray, ...] | None = None


def build_rep(spatial_dim: int) -> DiracRep:
    """Build the Dirac matrices for 1 or 3 spatial dimensions."""
    if spatial_dim == 1:
        return DiracRep(1, 2, (PAULI[0].copy(),), PAULI[2].copy())
    if spatial_dim == 3:
        z2 = np.zeros((2, 2), dtype=complex)
        alphas = tuple(np.block([[z2, s], [s, z2]]) for s in PAULI)
        beta = np.diag([1.0, 1.0, -1.0, -1.0]).astype(complex)
        spins = tuple(0.5 * np.block([[s, z2], [z2, s]]) for s in PAULI)
        return DiracRep(3, 4, alphas, beta, spins)
    raise ValueError(f"spatial_dim must be 1 or 3, got {spatial_dim}")


def clifford_residual(rep: DiracRep) -> float:
    """Max-norm residual over all anticommutation and hermiticity relations."""
    n = rep.spinor_dim
    eye = np.eye(n)
    mats = list(rep.alphas) + [rep.beta]
    res = 0.0
    for i, ai in enumerate(rep.alphas):
        for j, aj in enumerate(rep.alphas):
            target = 2.0 * eye if i == j else 0.0
            res = max(res, np.abs(ai @ aj + aj @ ai - target).max())
        res = max(res, np.abs(ai @ rep.beta + rep.beta @ ai).max())
    res = max(res, np.abs(rep.beta @ rep.beta - eye).max())
    for m in mats:
        res = max(res, np.abs(m - m.conj().T).max())
    return float(res)


def _orbital_angular_momentum_dense(lattice) -> list[np.ndarray]:
    """Dense l_k = (r x p)_k on the scalar grid space, k = x,y,z."""
    from .lattice import momentum_operator, position_operator

    xs = [position_operator(lattice, axis=a) for a in range(3)]
    ps = [momentum_operator(lattice, axis=a) for a in range(3)]
    ls = []
    for k in range(3):
        i, j = (k + 1) % 3, (k + 2) % 3
        ls.append(xs[i] @ ps[j] - xs[j] @ ps[i])
    return ls


def spin_orbit_K(rep: DiracRep, lattice) -> np.ndarray:
    """Dense K = beta (2 s.l / hbar^2 + 1) on the (grid x spinor) space.

    Spin matrices are stored in units of hbar (sigma/2) and the dense l_k
    carry one power of hbar from the momentum grid, leaving a single 1/hbar.
    """
    if rep.spatial_dim != 3:
        raise ValueError("spin-orbit K requires the 3D representation")
    ngrid = lattice.n_per_axis**lattice.spatial_dim
    dim = ngrid * rep.spinor_dim
    if dim > DENSE_DIM_CAP:
        raise ValueError(f"dense operator dimension {dim} exceeds cap {DENSE_DIM_CAP}")
    ls = _orbital_angular_momentum_dense(lattice)
    eye_grid = np.eye(ngrid)
    sl_over_hbar2 = sum(np.kron(lk, sk) for lk, sk in zip(ls, rep.spins)) / lattice.hbar
    return np.kron(eye_grid, rep.beta) @ (2.0 * sl_over_hbar2 + np.eye(dim))


def spin_orbit_commutator_report(rep: DiracRep, lattice, params, state) -> dict:
    """Residual of [K, H] applied to a test state, with its tail bound.

    Exact in the continuum; on the lattice the deviation comes solely from the
    per-axis [x,p] action on band-limited states, so the same tail bound used
    for the commutator suite applies.
    """
    from .chronos import dense_hamiltonian
    from .lattice import commutator_residual_report

    K = spin_orbit_K(rep, lattice)
    H = dense_hamiltonian(lattice, rep, params)
    vec = state.amplitudes.reshape(-1)
    r = (K @ (H @ vec) - H @ (K @ vec))
    measure = lattice.dx**lattice.spatial_dim
    residual = float(np.sqrt(np.sum(np.abs(r) ** 2) * measure))
    base = commutator_residual_report(state)
    # [K,H] carries two extra operator factors of scale ~ (x/c-range, p-range)
    scale = 1.0 + (np.abs(lattice.axis_positions()).max() * lattice.pmax(0)) / lattice.hbar
    return {
        "residual": residual,
        "eps_tail": base.eps_tail * 8.0 * scale,
        "bound_ok": residual <= base.eps_tail * 8.0 * scale,
    }
