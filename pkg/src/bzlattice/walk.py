"""Two-step discrete-time quantum walk with a synthetic dc force and gain/loss.

Each full step is two substeps: a coin mix with angle β followed by a site
shift (u pulls from n+1, v from n-1) and a complex phase e^{∓iφ}. The phase
schedule φ1,2 = ∓iΔ/2 + Fm ± π/2 with F = 2π/M applies balanced gain/loss
and a linear-in-time ramp, the discrete analog of a dc force. In Bloch space
a full step is D(q-φ2)R(β2)D(q-φ1)R(β1) with D(α) = diag(e^{iα}, e^{-iα})
and R(β) the symmetric coin; its half-trace at static phases reproduces the
two-band dispersion ±acos{cos β1 cos β2 cos 2q + sin β1 sin β2 cosh Δ}.

With the force on, the M-step Floquet exponents μ(q) collapse to a
q-independent value (flat quasi-energy bands); θ = μ/M plays the role of
the ladder offset and its imaginary part drives the periodicity transition
of the pulse dynamics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

import numpy as np

from .dynamics import DynamicsKind, PeriodicityResult, window_mismatch
from .errors import (DegenerateCoinError, FlatBandGateError,
                     InsufficientDataError, LightConeError)
from .models import ModelSpec
from .spectrum import (SweepCurve, _ladder_angle, _ladder_angle_from_matrix,
                       _ordered_product, classify_transition, theta_exact)


@dataclass(frozen=True)
class QWParams:
    """Coupling angles, gain/loss strength, and the force period M."""

    beta1: float
    beta2: float
    delta: float = 0.0
    M: int = 61

    def __post_init__(self) -> None:
        for name in ("beta1", "beta2", "delta"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.delta < 0:
            raise ValueError(f"delta must be >= 0, got {self.delta!r}")
        if not isinstance(self.M, (int, np.integer)) or self.M < 2:
            raise ValueError(f"M must be an integer >= 2, got {self.M!r}")

    @property
    def force(self) -> float:
        return 2.0 * np.pi / self.M

    def with_delta(self, delta: float) -> "QWParams":
        return replace(self, delta=delta)


def qw_phases(m: int, params: QWParams) -> Tuple[complex, complex]:
    """Step-m phase pair: φ1 = -iΔ/2 + Fm + π/2, φ2 = +iΔ/2 + Fm - π/2."""
    if m < 1:
        raise ValueError(f"step index must be >= 1, got {m}")
    fm = params.force * m
    half = 0.5 * params.delta
    return (complex(fm + np.pi / 2, -half), complex(fm - np.pi / 2, +half))


def _static_phases(params: QWParams) -> Tuple[complex, complex]:
    """Phase pair with the force ramp frozen out (F·m treated as 0)."""
    half = 0.5 * params.delta
    return (complex(np.pi / 2, -half), complex(-np.pi / 2, +half))


@dataclass
class QWState:
    """Pulse amplitudes on sites n ∈ [-n_max, n_max] plus step bookkeeping.

    The stored vectors are kept near unit norm with the overflow pushed to
    log_amp, as in the continuous-time integrator. n_start is the site of
    the initial excitation (light-cone reference).
    """

    u: np.ndarray
    v: np.ndarray
    m: int = 0
    log_amp: float = 0.0
    n_start: int = 0

    def __post_init__(self) -> None:
        self.u = np.asarray(self.u, dtype=complex)
        self.v = np.asarray(self.v, dtype=complex)
        if self.u.ndim != 1 or self.u.shape != self.v.shape:
            raise ValueError("u and v must be 1-d arrays of equal length")
        if self.u.size < 5:
            raise ValueError("walk array needs at least 5 sites")
        if self.u.size % 2 == 0:
            raise ValueError("walk array must be odd-length (centered on n=0)")

    @property
    def n_max(self) -> int:
        return self.u.size // 2

    def site_index(self, n: int) -> int:
        i = n + self.n_max
        if not 0 <= i < self.u.size:
            raise ValueError(f"site {n} outside array [-{self.n_max}, {self.n_max}]")
        return i

    def stored_norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.u) ** 2 + np.abs(self.v) ** 2)))

    def copy(self) -> "QWState":
        return QWState(self.u.copy(), self.v.copy(), self.m,
                       self.log_amp, self.n_start)


def initial_pulse(m_end: int, n_start: int = 0) -> QWState:
    """Single-pulse excitation u_n = δ_{n,n_start} sized for m_end steps.

    Sites span [-2·m_end - 4, 2·m_end + 4]: a full step spreads support by
    at most 2 sites each way, so the light cone cannot reach the edge.
    """
    if m_end < 1:
        raise ValueError(f"m_end must be >= 1, got {m_end}")
    n_max = 2 * m_end + 4
    u = np.zeros(2 * n_max + 1, dtype=complex)
    v = np.zeros_like(u)
    state = QWState(u, v, n_start=n_start)
    state.u[state.site_index(n_start)] = 1.0
    return state


def _substep(u: np.ndarray, v: np.ndarray, beta: float,
             phi: complex) -> Tuple[np.ndarray, np.ndarray]:
    c, s = np.cos(beta), np.sin(beta)
    eu = np.exp(-1j * phi)
    ev = np.exp(+1j * phi)
    nu = np.zeros_like(u)
    nv = np.zeros_like(v)
    nu[:-1] = (c * u[1:] + 1j * s * v[1:]) * eu
    nv[1:] = (c * v[:-1] + 1j * s * u[:-1]) * ev
    return nu, nv


def qw_step(state: QWState, params: QWParams) -> QWState:
    """One full walk step (both substeps); returns a new state at m+1."""
    # two one-site shifts happen below; nonzero weight on the outermost two
    # entries would silently leak off the array instead of wrapping
    for arr in (state.u, state.v):
        if arr[0] != 0 or arr[1] != 0 or arr[-1] != 0 or arr[-2] != 0:
            raise LightConeError(
                f"light cone reached the array edge at step {state.m}; "
                f"allocate a larger walk array")
    m_next = state.m + 1
    phi1, phi2 = qw_phases(m_next, params)
    u, v = _substep(state.u, state.v, params.beta1, phi1)
    u, v = _substep(u, v, params.beta2, phi2)
    log_amp = state.log_amp
    nrm = float(np.sqrt(np.sum(np.abs(u) ** 2 + np.abs(v) ** 2)))
    if not np.isfinite(nrm) or nrm == 0.0:
        raise FloatingPointError(f"walk norm became {nrm!r} at step {m_next}")
    if nrm < 0.5 or nrm > 2.0:
        log_amp += np.log(nrm)
        u /= nrm
        v /= nrm
    return QWState(u, v, m_next, log_amp, state.n_start)


def _dr(a: np.ndarray, beta: float) -> np.ndarray:
    """D(a)·R(β) for broadcast a: [[c e^{ia}, is e^{ia}], [is e^{-ia}, c e^{-ia}]]."""
    c, s = np.cos(beta), np.sin(beta)
    ep = np.exp(1j * a)
    em = np.exp(-1j * a)
    out = np.empty(np.shape(a) + (2, 2), dtype=complex)
    out[..., 0, 0] = c * ep
    out[..., 0, 1] = 1j * s * ep
    out[..., 1, 0] = 1j * s * em
    out[..., 1, 1] = c * em
    return out


def _full_step_matrix(q, phi1: complex, phi2: complex,
                      params: QWParams) -> np.ndarray:
    q = np.asarray(q, dtype=complex)
    return _dr(q - phi2, params.beta2) @ _dr(q - phi1, params.beta1)


def qw_bloch_step_matrix(q: float, m: int, params: QWParams) -> np.ndarray:
    """Bloch-space matrix of full step m: D(q-φ2)R(β2)D(q-φ1)R(β1)."""
    phi1, phi2 = qw_phases(m, params)
    return _full_step_matrix(q, phi1, phi2, params)


def qw_static_step_matrix(q: float, params: QWParams) -> np.ndarray:
    """Single-step matrix with static phases (force ramp frozen out)."""
    phi1, phi2 = _static_phases(params)
    return _full_step_matrix(q, phi1, phi2, params)


def qw_dispersion_f0(q, params: QWParams):
    """Static two-band dispersion (E+, E-) from the half-trace formula."""
    c1, c2 = np.cos(params.beta1), np.cos(params.beta2)
    s1, s2 = np.sin(params.beta1), np.sin(params.beta2)
    htr = c1 * c2 * np.cos(2 * np.asarray(q, dtype=float)) \
        + s1 * s2 * np.cosh(params.delta)
    if np.ndim(htr) == 0:
        e = _ladder_angle(complex(htr))
        return e, -e
    e = np.array([_ladder_angle(complex(x)) for x in np.ravel(htr)])
    e = e.reshape(np.shape(htr))
    return e, -e


def qw_pt_threshold(beta1: float, beta2: float) -> float:
    """Gain/loss strength where the static bands stop being entirely real."""
    c = abs(np.cos(beta1) * np.cos(beta2))
    s = abs(np.sin(beta1) * np.sin(beta2))
    if s < 1e-14:
        raise DegenerateCoinError(
            "threshold undefined at sin(beta1)·sin(beta2) = 0")
    arg = (1.0 - c) / s
    return float(np.arccosh(arg)) if arg >= 1.0 else 0.0


def _propagators(params: QWParams, q: np.ndarray) -> np.ndarray:
    """S(q) = U^{(M)}···U^{(1)} for each q, by pairwise ordered product."""
    m = np.arange(1, params.M + 1)
    fm = params.force * m
    half = 0.5 * params.delta
    phi1 = fm + np.pi / 2 - 1j * half
    phi2 = fm - np.pi / 2 + 1j * half
    a1 = q[:, None] - phi1[None, :]
    a2 = q[:, None] - phi2[None, :]
    mats = _dr(a2, params.beta2) @ _dr(a1, params.beta1)
    return _ordered_product(mats)


def qw_quasi_energy(q: float, params: QWParams) -> complex:
    """Flat-band ladder offset θ(q) = μ(q)/M, Im θ ≥ 0 representative."""
    S = _propagators(params, np.atleast_1d(float(q)))[0]
    return _ladder_angle_from_matrix(S) / params.M


def qw_band_collapse_check(params: QWParams, n_q: int = 64) -> float:
    """Max |θ(q_j) - θ(q_0)| over a uniform q-grid; ~0 means collapsed bands."""
    if n_q < 16:
        raise ValueError(f"n_q must be >= 16, got {n_q}")
    q = np.linspace(-np.pi, np.pi, n_q, endpoint=False)
    S = _propagators(params, q)
    thetas = np.array([_ladder_angle_from_matrix(S[j]) for j in range(n_q)])
    thetas /= params.M
    return float(np.max(np.abs(thetas - thetas[0])))


def qw_sweep_delta(params: QWParams, delta_min: float, delta_max: float,
                   n_steps: int, eps_floor: float = 1e-6,
                   gate_n_q: int = 64, gate_tol: float = 1e-8) -> SweepCurve:
    """Δ-sweep of θ at q = 0, gated by a band-flatness check.

    q = 0 only represents the spectrum if the bands are collapsed, so the
    flatness of θ(q) is verified at both sweep endpoints first.
    """
    if not (np.isfinite(delta_min) and np.isfinite(delta_max)):
        raise ValueError("delta range must be finite")
    if delta_min > delta_max:
        raise ValueError("delta_min must be <= delta_max")
    if n_steps < 1:
        raise ValueError(f"n_steps must be >= 1, got {n_steps}")
    for d_edge in {delta_min, delta_max}:
        spread = qw_band_collapse_check(params.with_delta(d_edge), gate_n_q)
        if spread > gate_tol:
            raise FlatBandGateError(
                f"θ(q) spread {spread:.3e} at Δ={d_edge:g} exceeds {gate_tol:g}; "
                f"q=0 does not represent the spectrum")
    if delta_min == delta_max:
        deltas = np.array([delta_min])
    else:
        deltas = np.linspace(delta_min, delta_max, n_steps + 1)
    thetas = np.array([qw_quasi_energy(0.0, params.with_delta(float(d)))
                       for d in deltas])
    curve = SweepCurve(deltas=deltas, thetas=thetas, force=params.force,
                       eps_floor=eps_floor)
    result = classify_transition(curve)
    curve.classification = result.kind
    curve.delta_star = result.delta_star
    return curve


@dataclass
class QWTrajectory:
    """Per-step record of a walk run.

    u_abs/v_abs hold the globally normalized magnitudes |ũ_n|, |ṽ_n| (the
    summed square over both maps is 1 per step); log_amp is the log of the
    true total norm; recurrence is A_m = |ũ_{n_start}|.
    """

    steps: np.ndarray
    u_abs: np.ndarray
    v_abs: np.ndarray
    log_amp: np.ndarray
    recurrence: np.ndarray
    site: int
    n_min: int
    final_state: QWState = field(repr=False)

    @property
    def n_sites(self) -> int:
        return self.u_abs.shape[1]


def qw_evolve(params: QWParams, m_end: int,
              init: Optional[QWState] = None) -> QWTrajectory:
    """Run m_end full steps from a single-pulse (or given) initial state."""
    if m_end < 1:
        raise ValueError(f"m_end must be >= 1, got {m_end}")
    state = initial_pulse(m_end) if init is None else init.copy()
    site = state.site_index(state.n_start)
    n_sites = state.u.size
    steps = np.arange(m_end + 1)
    u_abs = np.empty((m_end + 1, n_sites))
    v_abs = np.empty((m_end + 1, n_sites))
    logs = np.empty(m_end + 1)

    def record(j: int, st: QWState) -> None:
        nrm = st.stored_norm()
        u_abs[j] = np.abs(st.u) / nrm
        v_abs[j] = np.abs(st.v) / nrm
        logs[j] = st.log_amp + np.log(nrm)

    record(0, state)
    for j in range(1, m_end + 1):
        state = qw_step(state, params)
        record(j, state)
    return QWTrajectory(steps=steps, u_abs=u_abs, v_abs=v_abs, log_amp=logs,
                        recurrence=u_abs[:, site].copy(), site=site,
                        n_min=-state.n_max, final_state=state)


def qw_recurrence_classify(recurrence: np.ndarray, M: int,
                           transient_periods: int = 3,
                           tol: float = 0.05) -> PeriodicityResult:
    """Period-M window-mismatch test on the recurrence series A_m."""
    if M < 2:
        raise ValueError(f"M must be >= 2, got {M}")
    if transient_periods < 0:
        raise ValueError("transient_periods must be >= 0")
    series = np.asarray(recurrence, dtype=float)
    mismatch = window_mismatch(series, M, transient_periods * M)
    kind = DynamicsKind.PERIODIC if mismatch < tol else DynamicsKind.APERIODIC
    return PeriodicityResult(kind, mismatch)


def qw_growth_rate(traj: QWTrajectory, start_step: int) -> float:
    """Least-squares slope per step of log true norm from start_step on."""
    mask = traj.steps >= start_step
    if int(np.count_nonzero(mask)) < 2:
        raise InsufficientDataError("fewer than 2 samples past start_step")
    return float(np.polyfit(traj.steps[mask], traj.log_amp[mask], 1)[0])


def qw_continuum_params(t1: float, t2: float, delta: float,
                        f_cont: float) -> QWParams:
    """Walk parameters whose continuum limit is the Rice-Mele model.

    β1 = π/2 - t2, β2 = π/2 + t1; the walk force is half the continuum
    force, so M = round(4π/f_cont).
    """
    for name, val in (("t1", t1), ("t2", t2), ("delta", delta),
                      ("f_cont", f_cont)):
        if not (0 <= val <= 0.2):
            raise ValueError(
                f"{name}={val!r} outside the small-parameter regime [0, 0.2]")
    if f_cont <= 0:
        raise ValueError("f_cont must be > 0")
    M = int(round(4 * np.pi / f_cont))
    return QWParams(beta1=np.pi / 2 - t2, beta2=np.pi / 2 + t1,
                    delta=delta, M=M)


def qw_continuum_check(t1: float, t2: float, delta: float,
                       f_cont: float) -> Tuple[complex, complex]:
    """(θ_walk, θ_RiceMele) at matched parameters, both per unit time.

    One walk step is one time unit, so the two imaginary parts compare
    directly; the real parts live in zones of different width (the ladder
    spacings differ by the factor-2 force mapping).
    """
    params = qw_continuum_params(t1, t2, delta, f_cont)
    theta_qw = qw_quasi_energy(0.0, params)
    rm = ModelSpec("rice-mele", t1=t1, t2=t2, delta=delta)
    theta_rm = theta_exact(rm, f_cont).theta
    return theta_qw, theta_rm
