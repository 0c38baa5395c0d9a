"""Wannier-Stark ladders, Bloch-Zener dynamics, and driven quantum walks
in non-Hermitian two-band lattices."""

from .errors import (BoundaryContaminationError, BranchTrackingWarning,
                     ConvergenceError, DegenerateCoinError, FlatBandGateError,
                     InsufficientDataError, LightConeError, ModelRegimeWarning,
                     NumericalGuardError)
from .models import (ModelKind, ModelSpec, RealSpaceOperator,
                     bloch_hamiltonian, dispersion, pt_threshold,
                     real_space_hamiltonian)
from .spectrum import (SweepCurve, TransitionKind, TransitionResult, WSResult,
                       classify_transition, ordered_exponential, sweep_delta,
                       theta_exact, theta_wkb, ws_ladder_eigenvalues)
from .dynamics import (DynamicsKind, LatticeState, PeriodicityResult,
                       Trajectory, auto_cells, evolve, fit_growth_rate,
                       initial_excitation, periodicity_classify,
                       revival_amplitude, window_mismatch)
from .walk import (QWParams, QWState, QWTrajectory, initial_pulse,
                   qw_band_collapse_check, qw_bloch_step_matrix,
                   qw_continuum_check, qw_continuum_params, qw_dispersion_f0,
                   qw_evolve, qw_growth_rate, qw_phases, qw_pt_threshold,
                   qw_quasi_energy, qw_recurrence_classify,
                   qw_static_step_matrix, qw_step, qw_sweep_delta)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "BoundaryContaminationError", "BranchTrackingWarning", "ConvergenceError",
    "DegenerateCoinError", "FlatBandGateError", "InsufficientDataError",
    "LightConeError", "ModelRegimeWarning", "NumericalGuardError",
    "ModelKind", "ModelSpec", "RealSpaceOperator", "bloch_hamiltonian",
    "dispersion", "pt_threshold", "real_space_hamiltonian",
    "SweepCurve", "TransitionKind", "TransitionResult", "WSResult",
    "classify_transition", "ordered_exponential", "sweep_delta",
    "theta_exact", "theta_wkb", "ws_ladder_eigenvalues",
    "DynamicsKind", "LatticeState", "PeriodicityResult", "Trajectory",
    "auto_cells", "evolve", "fit_growth_rate", "initial_excitation",
    "periodicity_classify", "revival_amplitude", "window_mismatch",
    "QWParams", "QWState", "QWTrajectory", "initial_pulse",
    "qw_band_collapse_check", "qw_bloch_step_matrix", "qw_continuum_check",
    "qw_continuum_params", "qw_dispersion_f0", "qw_evolve", "qw_growth_rate",
    "qw_phases", "qw_pt_threshold", "qw_quasi_energy",
    "qw_recurrence_classify", "qw_static_step_matrix", "qw_step",
    "qw_sweep_delta",
]
