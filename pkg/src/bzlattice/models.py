"""Two-band non-Hermitian lattice models with balanced gain and loss.

Both models live on a chain of two-site cells (sublattices a and b) with
on-site gain +iΔ on a and loss −iΔ on b. They differ in how cells couple:

* ``model1``: symmetric coupling t2 within the cell and t1 across cells on
  both diagonals, giving the real, even Bloch off-diagonal t2 + 2·t1·cos k.
* ``rice-mele``: staggered hopping, t2 within the cell and t1 linking b of one
  cell to a of the next, giving t2 + t1·e^{∓ik} off-diagonals.

The Fourier convention is a_n ~ e^{ikn}: a term c·e^{−ikd} in the (1,2) Bloch
entry couples a_n to b_{n−d}. A dc force F adds the diagonal ramp F·(n + n0).
"""

import dataclasses
import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ModelRegimeWarning

__all__ = [
    "ModelKind",
    "ModelSpec",
    "RealSpaceOperator",
    "bloch_hamiltonian",
    "dispersion",
    "pt_threshold",
    "real_space_hamiltonian",
]


class ModelKind(str, Enum):
    MODEL1 = "model1"
    RICE_MELE = "rice-mele"


@dataclass(frozen=True)
class ModelSpec:
    """Model family plus its hopping amplitudes and gain/loss strength."""

    kind: ModelKind
    t1: float
    t2: float
    delta: float = 0.0

    def __post_init__(self):
        kind = ModelKind(self.kind)
        object.__setattr__(self, "kind", kind)
        for name in ("t1", "t2", "delta"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {value!r}")
        if kind is ModelKind.MODEL1 and not (self.t2 > 2 * self.t1 > 0):
            warnings.warn(
                "model1 parameters leave the t2 > 2*t1 > 0 regime; "
                "the gap-closing threshold t2 - 2*t1 may not apply",
                ModelRegimeWarning,
                stacklevel=2,
            )

    def with_delta(self, delta: float) -> "ModelSpec":
        """Copy of this model at a different gain/loss strength."""
        return dataclasses.replace(self, delta=delta)


def _bloch_entries(model: ModelSpec, k):
    """Bloch matrix entries (h11, h12, h21) for scalar or array momentum k."""
    k = np.asarray(k, dtype=float)
    h11 = np.broadcast_to(1j * model.delta, k.shape).astype(complex)
    if model.kind is ModelKind.MODEL1:
        f = (model.t2 + 2.0 * model.t1 * np.cos(k)).astype(complex)
        return h11, f, f.copy()
    h12 = model.t2 + model.t1 * np.exp(-1j * k)
    h21 = model.t2 + model.t1 * np.exp(+1j * k)
    return h11, h12, h21


def bloch_hamiltonian(model: ModelSpec, k: float) -> np.ndarray:
    """Traceless 2x2 Bloch Hamiltonian at momentum k."""
    h11, h12, h21 = _bloch_entries(model, k)
    return np.array([[h11, h12], [h21, -h11]], dtype=complex)


def dispersion(model: ModelSpec, k):
    """Band pair E± = ±sqrt(h11² + h12·h21) at momentum k (scalar or array)."""
    h11, h12, h21 = _bloch_entries(model, k)
    e_plus = np.sqrt(h11 * h11 + h12 * h21)
    return e_plus, -e_plus


def pt_threshold(model: ModelSpec) -> float:
    """Gain/loss strength where the static (F = 0) spectrum first turns complex.

    model1 closes its gap at k = π, giving max(t2 − 2·t1, 0); the staggered
    model closes at |t2 − t1|.
    """
    if model.kind is ModelKind.MODEL1:
        return max(model.t2 - 2.0 * model.t1, 0.0)
    return abs(model.t2 - model.t1)


@dataclass(frozen=True)
class RealSpaceOperator:
    """Dense real-space Hamiltonian for N cells, with its build parameters."""

    matrix: np.ndarray = field(repr=False)
    model: ModelSpec
    force: float
    n_cells: int
    n0: int
    periodic: bool = False

    @property
    def n_sites(self) -> int:
        return 2 * self.n_cells


def real_space_hamiltonian(
    model: ModelSpec,
    F: float,
    N: int,
    n0: int | None = None,
    periodic: bool = False,
) -> RealSpaceOperator:
    """Real-space Hamiltonian on N cells with ramp F·(n + n0) and open ends.

    Sites interleave as (a_0, b_0, a_1, b_1, ...). n0 defaults to −(N // 2) so
    the ramp is centered. ``periodic=True`` wraps the inter-cell couplings and
    is only meaningful (and only allowed) at F = 0; it exists so the Bloch and
    real-space forms can be checked against each other.
    """
    if N < 3:
        raise ValueError(f"need at least 3 cells, got N={N}")
    if F < 0 or not np.isfinite(F):
        raise ValueError(f"force must be finite and >= 0, got {F!r}")
    if periodic and F != 0:
        raise ValueError("periodic boundaries are incompatible with a force ramp")
    if n0 is None:
        n0 = -(N // 2)

    H = np.zeros((2 * N, 2 * N), dtype=complex)
    cells = np.arange(N)
    ramp = F * (cells + n0)
    H[2 * cells, 2 * cells] = ramp + 1j * model.delta
    H[2 * cells + 1, 2 * cells + 1] = ramp - 1j * model.delta
    # intracell coupling t2 on both models
    H[2 * cells, 2 * cells + 1] = model.t2
    H[2 * cells + 1, 2 * cells] = model.t2

    last = N if periodic else N - 1
    n = np.arange(last)
    nxt = (n + 1) % N
    if model.kind is ModelKind.MODEL1:
        # a_n couples to b_{n±1} with t1, symmetrically
        H[2 * n, 2 * nxt + 1] = model.t1
        H[2 * nxt + 1, 2 * n] = model.t1
        H[2 * nxt, 2 * n + 1] = model.t1
        H[2 * n + 1, 2 * nxt] = model.t1
    else:
        # staggered: a_{n+1} couples to b_n with t1
        H[2 * nxt, 2 * n + 1] = model.t1
        H[2 * n + 1, 2 * nxt] = model.t1
    return RealSpaceOperator(
        matrix=H, model=model, force=F, n_cells=N, n0=n0, periodic=periodic
    )
