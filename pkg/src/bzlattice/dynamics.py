"""Time-domain propagation of the driven two-band lattices.

Integrates i dψ/dt = H ψ on the real-space operator with a fixed-step RK4
scheme, tracking the total amplitude through a log accumulator so that
non-Hermitian growth over many Bloch periods never leaves double range.
Sampled output is stored as normalized amplitude maps, which is what the
amplitude-map and revival figures plot, plus the log of the true norm.

The periodicity classifier compares consecutive one-Bloch-period windows of
the revival series A(t) after a transient; a max window-to-window relative
L2 mismatch below tolerance counts as periodic.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple, Optional

import numpy as np

from .errors import BoundaryContaminationError, InsufficientDataError
from .models import ModelSpec, dispersion, real_space_hamiltonian

_BASE_STEPS = 2000          # default steps per Bloch period (or per run at F = 0)
_SAMPLES_PER_PERIOD = 100   # sampling density of the stored trajectory
_STAB_LIMIT = 0.1           # RK4 stability guard: dt * spectral_radius < this


class DynamicsKind(str, Enum):
    PERIODIC = "periodic"
    APERIODIC = "aperiodic"


class PeriodicityResult(NamedTuple):
    kind: DynamicsKind
    mismatch: float


@dataclass
class LatticeState:
    """Two-sublattice wavefunction with a split-off log magnitude.

    The stored vectors are kept near unit norm; the physical amplitude is
    stored * exp(log_amp). n0 is the cell index of a[0] (the force ramp is
    F*(n0 + i) on cell i), excited the array index of the initially excited
    cell when the state came from initial_excitation.
    """

    a: np.ndarray
    b: np.ndarray
    t: float = 0.0
    log_amp: float = 0.0
    n0: int = 0
    excited: Optional[int] = None

    def __post_init__(self) -> None:
        self.a = np.asarray(self.a, dtype=complex)
        self.b = np.asarray(self.b, dtype=complex)
        if self.a.ndim != 1 or self.a.shape != self.b.shape:
            raise ValueError("a and b must be 1-d arrays of equal length")
        if self.a.size < 1:
            raise ValueError("state needs at least one cell")
        if not (np.isfinite(self.log_amp) and np.isfinite(self.t)):
            raise ValueError("t and log_amp must be finite")

    @property
    def n_cells(self) -> int:
        return self.a.size

    def stored_norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.a) ** 2 + np.abs(self.b) ** 2)))

    def copy(self) -> "LatticeState":
        return LatticeState(self.a.copy(), self.b.copy(), self.t,
                            self.log_amp, self.n0, self.excited)


def auto_cells(model: ModelSpec, F: float) -> int:
    """Lattice size for a centered excitation surviving ~10 Bloch periods.

    The Bloch-Zener excursion scales with bandwidth over force; four times
    that plus a flat margin keeps the wavefront off the boundary cells.
    """
    if F <= 0:
        raise ValueError("auto sizing needs F > 0; pass n_cells explicitly")
    k = np.linspace(-np.pi, np.pi, 512)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        e_plus, _ = dispersion(model.with_delta(0.0), k)
    w = float(np.max(np.abs(e_plus)))
    return 4 * math.ceil(w / F) + 41


def initial_excitation(model: ModelSpec, F: float,
                       n_cells: Optional[int] = None) -> LatticeState:
    """Single-cell excitation a_n = δ_{n,center} on an auto-sized lattice."""
    if n_cells is None:
        n_cells = auto_cells(model, F)
    if n_cells < 1:
        raise ValueError(f"n_cells must be >= 1, got {n_cells}")
    center = n_cells // 2
    a = np.zeros(n_cells, dtype=complex)
    b = np.zeros(n_cells, dtype=complex)
    a[center] = 1.0
    return LatticeState(a, b, n0=-center, excited=center)


@dataclass
class Trajectory:
    """Uniformly sampled evolution record.

    a_abs and b_abs hold |ã_n| and |b̃_n| (normalized so the summed square
    over both maps is 1 at each sample). log_amp is the log of the true
    total norm, revival the A(t) series at the revival site.
    """

    times: np.ndarray
    a_abs: np.ndarray
    b_abs: np.ndarray
    log_amp: np.ndarray
    revival: np.ndarray
    revival_site: int
    n0: int
    dt: float
    sample_every: int
    final_state: LatticeState = field(repr=False)

    @property
    def n_cells(self) -> int:
        return self.a_abs.shape[1]


def _spectral_radius_bound(H: np.ndarray) -> float:
    """Gershgorin row-sum bound, cheap and safe for the stability guard."""
    return float(np.max(np.sum(np.abs(H), axis=1)))


def _resolve_steps(F: float, t_end: float, dt: Optional[float],
                   rho: float) -> float:
    """Pick dt = T_ref / n with n a multiple of the base step count.

    T_ref is the Bloch period when there is a force (so sample grids stay
    commensurate with T1), else the full run. The multiple grows until the
    stability guard holds. An explicit dt is validated, never adjusted.
    """
    if dt is not None:
        if dt <= 0 or not np.isfinite(dt):
            raise ValueError(f"dt must be finite and > 0, got {dt!r}")
        if dt * rho >= _STAB_LIMIT:
            raise ValueError(
                f"dt={dt:g} violates the stability guard dt*rho < {_STAB_LIMIT} "
                f"(rho estimate {rho:g}); refine dt or shrink the lattice")
        return dt
    t_ref = 2 * np.pi / F if F > 0 else t_end
    n = _BASE_STEPS
    while (t_ref / n) * rho >= _STAB_LIMIT:
        n += _BASE_STEPS
    return t_ref / n


def evolve(model: ModelSpec, F: float, init: LatticeState, t_end: float,
           dt: Optional[float] = None, sample_every: Optional[int] = None,
           boundary_tol: float = 1e-6) -> Trajectory:
    """Propagate init for t_end with fixed-step RK4 on i dψ/dt = H ψ.

    The stored state is renormalized into [0.5, 2] whenever it drifts out,
    with the removed magnitude accumulated on log_amp. Aborts with
    BoundaryContaminationError when the normalized weight on the outermost
    two cells of either edge exceeds boundary_tol at a sample point.
    """
    if t_end <= 0 or not np.isfinite(t_end):
        raise ValueError(f"t_end must be finite and > 0, got {t_end!r}")
    if F < 0 or not np.isfinite(F):
        raise ValueError(f"force must be finite and >= 0, got {F!r}")
    N = init.n_cells
    if N < 3:
        raise ValueError("evolution needs at least 3 cells")

    op = real_space_hamiltonian(model, F, N, n0=init.n0)
    H = op.matrix
    rho = _spectral_radius_bound(H)
    dt = _resolve_steps(F, t_end, dt, rho)

    n_total = int(round(t_end / dt))
    if abs(n_total * dt - t_end) > 1e-9 * max(1.0, t_end):
        n_total = int(math.ceil(t_end / dt))
    if sample_every is None:
        period_steps = int(round((2 * np.pi / F) / dt)) if F > 0 else n_total
        sample_every = max(1, period_steps // _SAMPLES_PER_PERIOD)
    elif sample_every < 1:
        raise ValueError(f"sample_every must be >= 1, got {sample_every}")
    if n_total % sample_every:
        n_total += sample_every - (n_total % sample_every)

    psi = np.empty(2 * N, dtype=complex)
    psi[0::2] = init.a
    psi[1::2] = init.b
    log_amp = float(init.log_amp)
    nrm = float(np.linalg.norm(psi))
    if nrm == 0.0:
        raise ValueError("initial state has zero norm")

    site = init.excited if init.excited is not None else N // 2
    n_samples = n_total // sample_every + 1
    times = np.empty(n_samples)
    a_abs = np.empty((n_samples, N))
    b_abs = np.empty((n_samples, N))
    logs = np.empty(n_samples)

    edge = np.r_[0:4, 2 * N - 4: 2 * N]

    def record(j: int, step: int) -> None:
        nrm_now = float(np.linalg.norm(psi))
        times[j] = init.t + step * dt
        a_abs[j] = np.abs(psi[0::2]) / nrm_now
        b_abs[j] = np.abs(psi[1::2]) / nrm_now
        logs[j] = log_amp + np.log(nrm_now)
        edge_weight = float(np.sum(np.abs(psi[edge]) ** 2)) / nrm_now**2
        if edge_weight > boundary_tol:
            raise BoundaryContaminationError(
                f"normalized weight {edge_weight:.3e} on the outermost 2 cells "
                f"at t={times[j]:g} exceeds {boundary_tol:g}; enlarge the lattice")

    record(0, 0)
    minus_i_H = -1j * H
    half = 0.5 * dt
    sixth = dt / 6.0
    for step in range(1, n_total + 1):
        k1 = minus_i_H @ psi
        k2 = minus_i_H @ (psi + half * k1)
        k3 = minus_i_H @ (psi + half * k2)
        k4 = minus_i_H @ (psi + dt * k3)
        psi += sixth * (k1 + 2.0 * (k2 + k3) + k4)
        nrm = float(np.linalg.norm(psi))
        if not np.isfinite(nrm) or nrm == 0.0:
            raise FloatingPointError(f"state norm became {nrm!r} at step {step}")
        if nrm < 0.5 or nrm > 2.0:
            log_amp += np.log(nrm)
            psi /= nrm
        if step % sample_every == 0:
            record(step // sample_every, step)

    nrm = float(np.linalg.norm(psi))
    final = LatticeState(psi[0::2] / nrm, psi[1::2] / nrm,
                         t=init.t + n_total * dt,
                         log_amp=log_amp + float(np.log(nrm)),
                         n0=init.n0, excited=init.excited)
    return Trajectory(times=times, a_abs=a_abs, b_abs=b_abs, log_amp=logs,
                      revival=a_abs[:, site].copy(), revival_site=site,
                      n0=init.n0, dt=dt, sample_every=sample_every,
                      final_state=final)


def revival_amplitude(traj: Trajectory, site: Optional[int] = None) -> np.ndarray:
    """A(t) = |ã_site(t)|; defaults to the trajectory's revival site."""
    if site is None:
        return traj.revival.copy()
    if not 0 <= site < traj.n_cells:
        raise ValueError(f"site {site} outside lattice of {traj.n_cells} cells")
    return traj.a_abs[:, site].copy()


def periodicity_classify(series: np.ndarray, dt_sample: float,
                         bloch_period: float, transient: Optional[float] = None,
                         tol: float = 0.05) -> PeriodicityResult:
    """Window-mismatch test for period-T1 dynamics after a transient.

    mismatch = max over consecutive one-period windows w of
    ||A_{w+1} - A_w||_2 / ||A_w||_2. Requires sampling commensurate with the
    period (>= 64 samples per period) and coverage of transient + 3 periods.
    """
    series = np.asarray(series, dtype=float)
    if series.ndim != 1:
        raise ValueError("series must be 1-d")
    if dt_sample <= 0 or bloch_period <= 0:
        raise ValueError("dt_sample and bloch_period must be > 0")
    if transient is None:
        transient = 3.0 * bloch_period
    per = bloch_period / dt_sample
    L = int(round(per))
    if L < 64 or abs(per - L) > 1e-6 * per:
        raise InsufficientDataError(
            f"sampling must be commensurate with the period at >= 64 samples "
            f"per period (got {per:g})")
    start = int(round(transient / dt_sample))
    mismatch = window_mismatch(series, L, start)
    kind = DynamicsKind.PERIODIC if mismatch < tol else DynamicsKind.APERIODIC
    return PeriodicityResult(kind, mismatch)


def window_mismatch(series: np.ndarray, window_len: int, start: int) -> float:
    """Max relative L2 difference between consecutive length-L windows.

    Shared core of the continuous-time and walk periodicity classifiers.
    """
    series = np.asarray(series, dtype=float)
    n_windows = (series.size - start) // window_len
    if n_windows < 3:
        raise InsufficientDataError(
            f"series covers {n_windows} full periods past the transient; "
            f"need >= 3")
    windows = series[start:start + n_windows * window_len]
    windows = windows.reshape(n_windows, window_len)
    prev = windows[:-1]
    scale = np.linalg.norm(prev, axis=1)
    if np.any(scale == 0.0):
        raise InsufficientDataError("a comparison window is identically zero")
    return float(np.max(np.linalg.norm(windows[1:] - prev, axis=1) / scale))


def fit_growth_rate(traj: Trajectory, t_start: float) -> float:
    """Least-squares slope of log true norm over samples with t >= t_start."""
    mask = traj.times >= t_start - 1e-12
    if int(np.count_nonzero(mask)) < 2:
        raise InsufficientDataError("fewer than 2 samples past t_start")
    return float(np.polyfit(traj.times[mask], traj.log_amp[mask], 1)[0])
