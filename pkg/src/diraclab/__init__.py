"""diraclab: lattice verification laboratory for the self-adjoint time
operator of free Dirac quantum mechanics."""

from .algebra import DiracRep, build_rep, clifford_residual, spin_orbit_K
from .boost import (BoostRun, EdgeClearanceError, boost_run, boost_step,
                    de_broglie_check, hamiltonian_step_check, pauli_diagnostic,
                    phase_shift_check)
from .chronos import (TimeOperator, UncertaintyReport, build_time_operator,
                      commutator_TH, mt_report, series_T, spectrum_at,
                      uncertainty_TH)
from .dynamics import (ModeEigensystem, ObservableSeries, PhysParams,
                       evolve, group_velocity, hamiltonian_mode,
                       lorentz_gamma, make_packet, mode_eigensystem,
                       observable_series, zb_spectrum)
from .lattice import (Lattice, PreconditionError, SpinorField, dft_forward,
                      dft_inverse, load_field, make_lattice, probe_state,
                      save_field, translate, uncertainty_xp)

__version__ = "0.1.0"
