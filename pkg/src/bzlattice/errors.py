"""Exceptions and warning categories shared across the package."""


class NumericalGuardError(RuntimeError):
    """A runtime numerical guard tripped (CLI exit code 3)."""


class ConvergenceError(NumericalGuardError):
    """Grid refinement hit its cap without meeting the tolerance."""


class BoundaryContaminationError(NumericalGuardError):
    """Wavefront weight on the outermost cells exceeded the abort threshold."""


class LightConeError(NumericalGuardError):
    """Walk light cone reached the edge of the allocated array."""


class FlatBandGateError(NumericalGuardError):
    """Quasi-energy band is not flat enough for a single-q sweep to represent it."""


class InsufficientDataError(ValueError):
    """Time series too short or too coarsely sampled for classification."""


class DegenerateCoinError(ValueError):
    """Coin angles give sin(beta1)·sin(beta2) = 0; the threshold is undefined."""


class ModelRegimeWarning(UserWarning):
    """Parameters leave the regime t2 > 2·t1 > 0 assumed for the sharp-transition lattice."""


class BranchTrackingWarning(UserWarning):
    """Band integrand passed near zero; the tracked square-root branch is unreliable there."""
