"""Wannier-Stark ladder spectra for the driven two-band lattices.

Under a dc force F the spectrum organizes into two interleaved ladders
E = l·F ± θ. The ladder offset θ comes from the one-period Bloch propagator

    U = prod_k exp(-i H(k) δk / F),   cos φ = (U11 + U22) / 2,   θ = F φ / (2π),

built as a k-ordered product over one Brillouin zone. The ramp +F·n drives
the quasimomentum downward (k̇ = -F for states a_n ~ e^{ikn}), so the sweep
descends from k = π with later slices multiplying on the left; for models with
H(-k) = H(k) the direction is immaterial, but a complex intracell phase makes
the two orderings inequivalent. A stationary-phase estimate of
the same offset is the band integral θ_wkb = (1/2π) ∮ E₊(k) dk, with the
square-root branch tracked continuously in k.

θ is only defined modulo F and up to overall sign; results use the
representative with Im θ ≥ 0 (the growth rate), which also keeps
Re φ in [0, π] whenever the half-trace is real.
"""

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from typing import NamedTuple

import numpy as np

from .errors import BranchTrackingWarning, ConvergenceError
from .models import ModelSpec, _bloch_entries, real_space_hamiltonian

__all__ = [
    "WSResult",
    "SweepCurve",
    "TransitionKind",
    "TransitionResult",
    "ordered_exponential",
    "theta_exact",
    "theta_wkb",
    "ws_ladder_eigenvalues",
    "sweep_delta",
    "classify_transition",
]

_NK_DEFAULT = 4096
_NK_CAP = 2**20
_THETA_TOL = 1e-9


def _ladder_angle(c: complex) -> complex:
    """Solve cos φ = c for the ladder representative with Im φ ≥ 0.

    Uses the principal arccos when the angle is real (Re in [0, π]); for a
    genuinely complex angle the Im ≥ 0 member of the ±arccos pair is chosen,
    folding by 2π so real traces < -1 land on Re φ = π rather than -π.
    """
    w = complex(np.arccos(complex(c)))
    if abs(w.imag) <= 1e-12:
        return complex(w.real, abs(w.imag))
    if w.imag < 0:
        w = -w
        if abs(w.real + np.pi) < 1e-12:
            w += 2 * np.pi
    return w


def _ladder_angle_from_matrix(U: np.ndarray) -> complex:
    """Ladder angle of a unimodular 2x2 propagator, Im φ ≥ 0 representative.

    Reads φ off the eigenvalues e^{±iφ} instead of arccos of the half-trace:
    eigenvalue perturbations stay linear in the rounding noise of U, while
    arccos amplifies it like a square root near the fold points φ ≈ 0, π.
    Conventions match _ladder_angle (Re φ in [0, π] for real half-traces).
    """
    lam = np.linalg.eigvals(U)
    mags = np.abs(lam)
    if np.all(np.abs(mags - 1.0) < 1e-12):
        # angle is real to precision: conjugate pair on the unit circle
        return complex(np.max(np.abs(np.angle(lam))), 0.0)
    # The growing eigenvalue carries relative error ~eps, while the decaying
    # one is polluted by eps·‖U‖ (huge once e^{Im φ} is large, and LAPACK may
    # round it to 0 outright). Read the angle off the growing member and
    # negate: -φ_out is the Im φ ≥ 0 representative of the pair.
    lam_out = lam[np.argmax(mags)]
    phi = complex(1j * np.log(lam_out))
    c = 0.5 * (U[0, 0] + U[1, 1])
    if abs(c.imag) <= 1e-10 * max(1.0, abs(c)):
        # real half-trace: ±Re φ are the same ladder pair, fold into [0, π]
        # so successive grid refinements cannot flip sign at a π crossing
        phi = complex(abs(phi.real), phi.imag)
    return phi


def _ordered_product(mats: np.ndarray) -> np.ndarray:
    """Product mats[..., n-1] @ ... @ mats[..., 0] by pairwise reduction.

    Pairwise association keeps the reduction deterministic and turns the
    chain into log2(n) batched matmuls.
    """
    while mats.shape[-3] > 1:
        n = mats.shape[-3]
        even = n - (n % 2)
        paired = mats[..., 1:even:2, :, :] @ mats[..., 0:even:2, :, :]
        if n % 2:
            paired = np.concatenate([paired, mats[..., even:, :, :]], axis=-3)
        mats = paired
    return mats[..., 0, :, :]


def _slice_matrices(model: ModelSpec, F: float, n_k: int) -> np.ndarray:
    """exp(-i H(k_j) δk / F) on the midpoint grid, descending from k = π.

    mats[0] is the earliest slice (largest k); _ordered_product then puts the
    latest slice (smallest k) leftmost, matching the downward drift k̇ = -F.
    The closed form for traceless H (H² = E₊² I) avoids per-slice expm calls:
    exp(-icH) = cos(cE) I - i (sin(cE)/E) H.
    """
    dk = 2 * np.pi / n_k
    k = np.pi - (np.arange(n_k) + 0.5) * dk
    h11, h12, h21 = _bloch_entries(model, k)
    e = np.sqrt(h11 * h11 + h12 * h21)
    z = (dk / F) * e
    small = np.abs(z) < 1e-6
    zs = np.where(small, 1.0, z)
    sinc = np.where(small, 1.0 - z * z / 6.0 + z**4 / 120.0, np.sin(zs) / zs)
    s = (dk / F) * sinc
    cz = np.cos(z)
    mats = np.empty((n_k, 2, 2), dtype=complex)
    mats[:, 0, 0] = cz - 1j * s * h11
    mats[:, 0, 1] = -1j * s * h12
    mats[:, 1, 0] = -1j * s * h21
    mats[:, 1, 1] = cz + 1j * s * h11
    return mats


def ordered_exponential(model: ModelSpec, F: float, n_k: int = _NK_DEFAULT) -> np.ndarray:
    """One-period Bloch propagator U over k in [-π, π) on an n_k midpoint grid."""
    if F <= 0 or not np.isfinite(F):
        raise ValueError(f"force must be finite and > 0, got {F!r}")
    if n_k < 16:
        raise ValueError(f"n_k must be >= 16, got {n_k}")
    return _ordered_product(_slice_matrices(model, F, n_k))


@dataclass(frozen=True)
class WSResult:
    """Ladder offset θ and the quantities it was derived from.

    beat_period is the interladder beating time (π/φ)·T1; it is only reported
    when φ is real to numerical precision, and None otherwise.
    """

    theta: complex
    phi: complex
    force: float
    n_k: int
    bloch_period: float
    beat_period: float | None


def _ws_result(phi: complex, F: float, n_k: int) -> WSResult:
    t1_period = 2 * np.pi / F
    beat = (np.pi / phi.real) * t1_period if abs(phi.imag) < 1e-8 and phi.real != 0 else None
    return WSResult(
        theta=phi * F / (2 * np.pi),
        phi=phi,
        force=F,
        n_k=n_k,
        bloch_period=t1_period,
        beat_period=beat,
    )


def theta_exact(model: ModelSpec, F: float, n_k: int | None = None) -> WSResult:
    """Ladder offset from the ordered Bloch propagator.

    With n_k=None the midpoint grid starts at 4096 slices and doubles until
    two successive θ estimates agree to 1e-9 (ConvergenceError past 2^20).
    An explicit n_k is used as given.
    """
    if n_k is not None:
        U = ordered_exponential(model, F, n_k)
        return _ws_result(_ladder_angle_from_matrix(U), F, n_k)

    n = _NK_DEFAULT
    U = ordered_exponential(model, F, n)
    c_prev = 0.5 * (U[0, 0] + U[1, 1])
    theta_prev = _ladder_angle_from_matrix(U) * F / (2 * np.pi)
    while n < _NK_CAP:
        n *= 2
        U = ordered_exponential(model, F, n)
        c = 0.5 * (U[0, 0] + U[1, 1])
        phi = _ladder_angle_from_matrix(U)
        theta = phi * F / (2 * np.pi)
        # secondary escape: trace converged to rounding even if the folded
        # angle jitters between representatives near φ ≈ 0 or π
        if abs(theta - theta_prev) < _THETA_TOL or abs(c - c_prev) < 1e-13 * max(1.0, abs(c)):
            return _ws_result(phi, F, n)
        c_prev, theta_prev = c, theta
    raise ConvergenceError(
        f"theta did not converge to {_THETA_TOL} within {_NK_CAP} k-slices"
    )


def theta_wkb(model: ModelSpec, n_k: int = _NK_DEFAULT) -> complex:
    """Band integral (1/2π) ∮ E₊(k) dk with a continuously tracked branch.

    The branch starts from the principal root at k = -π and follows the
    nearest root at each grid point. Warns when the integrand passes within
    1e-12 of zero (an exceptional point in k), where tracking is ambiguous.
    """
    if n_k < 16:
        raise ValueError(f"n_k must be >= 16, got {n_k}")
    k = np.linspace(-np.pi, np.pi, n_k + 1)
    h11, h12, h21 = _bloch_entries(model, k)
    u = np.sqrt(h11 * h11 + h12 * h21)
    if np.min(np.abs(u)) < 1e-12:
        warnings.warn(
            "band integrand passes through zero; tracked branch is unreliable near the node",
            BranchTrackingWarning,
            stacklevel=2,
        )
    # relative sign chain: flip whenever -u[j] continues u[j-1] better than +u[j]
    flip = np.where(np.abs(u[1:] - u[:-1]) <= np.abs(u[1:] + u[:-1]), 1.0, -1.0)
    signs = np.concatenate([[1.0], np.cumprod(flip)])
    return complex(np.trapezoid(signs * u, k) / (2 * np.pi))


def ws_ladder_eigenvalues(
    model: ModelSpec,
    F: float,
    N: int,
    n0: int | None = None,
    max_cells: int = 2000,
    edge_weight_tol: float = 1e-8,
) -> tuple[np.ndarray, np.ndarray]:
    """Dense spectrum of the open finite lattice, with interior tagging.

    Returns (eigenvalues, interior) sorted by real part. ``interior`` marks
    eigenvectors carrying less than ``edge_weight_tol`` weight on the
    outermost two cells of either end; only those are meaningful ladder
    members, the rest feel the open boundary.
    """
    if N < 16:
        raise ValueError(f"need at least 16 cells for a ladder spectrum, got N={N}")
    if N > max_cells:
        raise ValueError(f"N={N} exceeds the dense-diagonalization cap of {max_cells} cells")
    if F <= 0:
        raise ValueError("ladder spectrum needs F > 0")
    op = real_space_hamiltonian(model, F, N, n0=n0)
    eigvals, eigvecs = np.linalg.eig(op.matrix)
    edge = np.r_[0:4, 2 * N - 4 : 2 * N]
    weight = np.sum(np.abs(eigvecs[edge, :]) ** 2, axis=0)
    interior = weight < edge_weight_tol
    order = np.argsort(eigvals.real, kind="stable")
    return eigvals[order], interior[order]


class TransitionKind(str, Enum):
    SHARP = "sharp"
    SMOOTH = "smooth"
    UNDETERMINED = "undetermined"


class TransitionResult(NamedTuple):
    kind: TransitionKind
    delta_star: float | None
    rise_threshold: float | None


@dataclass
class SweepCurve:
    """θ(Δ) samples from a gain/loss sweep at fixed force."""

    deltas: np.ndarray
    thetas: np.ndarray
    force: float
    thetas_wkb: np.ndarray | None = None
    classification: TransitionKind = TransitionKind.UNDETERMINED
    delta_star: float | None = None
    eps_floor: float = 1e-6

    def __post_init__(self):
        self.deltas = np.asarray(self.deltas, dtype=float)
        self.thetas = np.asarray(self.thetas, dtype=complex)
        if self.deltas.size != self.thetas.size:
            raise ValueError("deltas and thetas must have matching lengths")
        if self.deltas.size > 1 and not np.all(np.diff(self.deltas) > 0):
            raise ValueError("sweep grid must be strictly increasing in delta")


def classify_transition(curve: SweepCurve, eps_floor: float | None = None) -> TransitionResult:
    """Label a sweep Sharp/Smooth/Undetermined and locate its rise Δ*.

    Sharp means the growth rate stays below eps_floor on the run leading up
    to the rise and is decisively (> 10·eps_floor) nonzero afterwards; Smooth
    means the pre-rise region already carries a small nonzero growth rate.
    Δ* is the first crossing of max(100·eps_floor, 5% of the peak), linearly
    interpolated between samples.
    """
    eps = curve.eps_floor if eps_floor is None else eps_floor
    y = curve.thetas.imag
    n = y.size
    undetermined = TransitionResult(TransitionKind.UNDETERMINED, None, None)
    if n < 8:
        return undetermined
    ymax = float(np.max(y))
    tau = max(100.0 * eps, 0.05 * ymax)
    above = np.flatnonzero(y >= tau)
    if above.size == 0 or above[0] == 0:
        return undetermined
    idx = int(above[0])
    d0, d1 = curve.deltas[idx - 1], curve.deltas[idx]
    y0, y1 = y[idx - 1], y[idx]
    delta_star = float(d0 + (tau - y0) * (d1 - d0) / (y1 - y0)) if y1 > y0 else float(d1)

    below = np.flatnonzero(y >= eps)
    run = int(below[0]) if below.size else n  # leading run with y < eps
    # a sharp transition keeps the pre-rise region pinned at zero; require the
    # zero run to cover most of it so a slow nonzero tail is not mislabeled
    if run >= max(1, (idx + 1) // 2) and run < n and np.all(y[run:] > 10.0 * eps):
        return TransitionResult(TransitionKind.SHARP, delta_star, tau)
    if np.max(y[:idx]) > eps:
        return TransitionResult(TransitionKind.SMOOTH, delta_star, tau)
    return undetermined


def sweep_delta(
    model: ModelSpec,
    delta_min: float,
    delta_max: float,
    n_steps: int,
    F: float,
    n_k: int | None = None,
    include_wkb: bool = True,
    wkb_n_k: int = _NK_DEFAULT,
    eps_floor: float = 1e-6,
    threads: int = 1,
) -> SweepCurve:
    """θ(Δ) over a uniform grid of n_steps intervals (n_steps+1 samples).

    A degenerate range delta_min == delta_max yields a single sample. Points
    are independent; with threads > 1 they are evaluated in a thread pool and
    reassembled in grid order, so results do not depend on the thread count.
    """
    if delta_min < 0 or delta_max < delta_min:
        raise ValueError("need 0 <= delta_min <= delta_max")
    if delta_min == delta_max:
        deltas = np.array([delta_min])
    else:
        if n_steps < 2:
            raise ValueError("need at least 2 sweep intervals")
        deltas = np.linspace(delta_min, delta_max, n_steps + 1)

    def point(d: float):
        m = replace(model, delta=float(d))
        th = theta_exact(m, F, n_k).theta
        wk = theta_wkb(m, wkb_n_k) if include_wkb else None
        return th, wk

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(point, deltas))
    else:
        results = [point(d) for d in deltas]

    thetas = np.array([r[0] for r in results], dtype=complex)
    wkbs = np.array([r[1] for r in results], dtype=complex) if include_wkb else None
    curve = SweepCurve(
        deltas=deltas, thetas=thetas, force=F, thetas_wkb=wkbs, eps_floor=eps_floor
    )
    verdict = classify_transition(curve)
    curve.classification = verdict.kind
    curve.delta_star = verdict.delta_star
    return curve
