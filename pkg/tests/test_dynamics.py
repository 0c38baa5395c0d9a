"""Wavepacket integrator against closed forms, plus the periodicity tools."""

import dataclasses
import warnings

import numpy as np
import pytest

import bzlattice as bz

MODEL1 = bz.ModelSpec("model1", t1=0.2, t2=1.0)
RICE_MELE = bz.ModelSpec("rice-mele", t1=0.4, t2=1.0)
T1 = 2 * np.pi / 0.2


def dimer_model(delta=0.0):
    # t1 = 0 decouples the chain into independent t2 dimers
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", bz.ModelRegimeWarning)
        return bz.ModelSpec("model1", t1=0.0, t2=1.0, delta=delta)


def test_auto_cells_and_initial_excitation():
    assert bz.auto_cells(MODEL1, 0.2) == 69
    assert bz.auto_cells(RICE_MELE, 0.2) == 69
    init = bz.initial_excitation(MODEL1, 0.2)
    assert init.n_cells == 69
    assert init.excited == 34 and init.n0 == -34
    assert init.a[34] == 1.0 and np.count_nonzero(init.a) == 1
    assert not init.b.any()
    with pytest.raises(ValueError):
        bz.auto_cells(MODEL1, 0.0)


def test_rabi_oscillation_closed_form():
    init = bz.initial_excitation(dimer_model(), 0.2, n_cells=9)
    traj = bz.evolve(dimer_model(), 0.0, init, t_end=6.0)
    c = init.excited
    assert np.max(np.abs(traj.a_abs[:, c] - np.abs(np.cos(traj.times)))) < 1e-8
    assert np.max(np.abs(traj.b_abs[:, c] - np.abs(np.sin(traj.times)))) < 1e-8
    # nothing leaks off the excited dimer
    others = np.delete(np.arange(9), c)
    assert np.max(traj.a_abs[:, others]) < 1e-13


def test_integrator_is_fourth_order():
    init = bz.initial_excitation(dimer_model(), 0.2, n_cells=9)

    def end_error(dt):
        traj = bz.evolve(dimer_model(), 0.0, init, t_end=2.0, dt=dt,
                         sample_every=int(round(2.0 / dt)))
        c = init.excited
        return abs(traj.a_abs[-1, c] - abs(np.cos(traj.times[-1])))

    ratio = end_error(0.02) / end_error(0.01)
    assert 12.0 < ratio < 20.0


def test_norm_conserved_without_gain():
    init = bz.initial_excitation(MODEL1, 0.2)
    traj = bz.evolve(MODEL1, 0.2, init, t_end=2 * T1)
    assert np.max(np.abs(traj.log_amp)) < 1e-7


def test_linearity_of_normalized_output():
    m = MODEL1.with_delta(0.5)
    init = bz.initial_excitation(m, 0.2)
    scaled = dataclasses.replace(init.copy())
    scaled.a = 0.3j * scaled.a
    scaled.b = 0.3j * scaled.b
    t_a = bz.evolve(m, 0.2, init, t_end=T1)
    t_b = bz.evolve(m, 0.2, scaled, t_end=T1)
    assert np.allclose(t_a.a_abs, t_b.a_abs, atol=1e-12)
    assert np.allclose(t_b.log_amp - t_a.log_amp, np.log(0.3), atol=1e-9)


def test_ramp_origin_is_gauge_freedom():
    m = MODEL1.with_delta(0.4)
    init = bz.initial_excitation(m, 0.2)
    shifted = dataclasses.replace(init.copy(), n0=init.n0 + 7)
    t_a = bz.evolve(m, 0.2, init, t_end=T1)
    t_b = bz.evolve(m, 0.2, shifted, t_end=T1)
    # the shift is a pure identity term, so agreement is limited only by the
    # step truncation error, which sees the larger diagonal
    assert np.allclose(t_a.a_abs, t_b.a_abs, atol=1e-6)
    assert np.allclose(t_a.log_amp, t_b.log_amp, atol=1e-6)


def test_default_step_meets_stability_guard():
    init = bz.initial_excitation(MODEL1, 0.2)
    traj = bz.evolve(MODEL1, 0.2, init, t_end=T1)
    assert traj.dt == pytest.approx(T1 / 4000, rel=1e-15)
    assert traj.sample_every == 40
    assert np.allclose(np.diff(traj.times), T1 / 100, atol=1e-12)


def test_explicit_coarse_step_rejected():
    init = bz.initial_excitation(MODEL1, 0.2)
    with pytest.raises(ValueError, match="stability guard"):
        bz.evolve(MODEL1, 0.2, init, t_end=T1, dt=0.5)


def test_boundary_contamination_aborts():
    m = MODEL1.with_delta(0.4)
    init = bz.initial_excitation(m, 0.2, n_cells=15)
    with pytest.raises(bz.BoundaryContaminationError):
        bz.evolve(m, 0.2, init, t_end=6 * T1)


def test_growth_rate_tracks_imag_offset():
    m = MODEL1.with_delta(0.7)
    theta = bz.theta_exact(m, 0.2).theta
    init = bz.initial_excitation(m, 0.2)
    traj = bz.evolve(m, 0.2, init, t_end=6 * T1)
    rate = bz.fit_growth_rate(traj, 2 * T1)
    assert abs(rate - theta.imag) / theta.imag < 0.05


def test_revival_amplitude_site_handling():
    init = bz.initial_excitation(MODEL1, 0.2)
    traj = bz.evolve(MODEL1, 0.2, init, t_end=T1)
    series = bz.revival_amplitude(traj)
    assert series[0] == pytest.approx(1.0)
    assert np.array_equal(series, traj.a_abs[:, traj.revival_site])
    with pytest.raises(ValueError):
        bz.revival_amplitude(traj, site=500)


def test_periodicity_classifier_synthetic():
    dt = T1 / 100
    t = np.arange(1001) * dt
    res = bz.periodicity_classify(np.abs(np.cos(np.pi * t / T1)), dt, T1)
    assert res.kind is bz.DynamicsKind.PERIODIC
    assert res.mismatch < 1e-12
    two_tone = np.abs(np.cos(2 * np.pi * t / T1)) \
        + np.abs(np.cos(2 * np.sqrt(2) * np.pi * t / T1))
    res = bz.periodicity_classify(two_tone, dt, T1)
    assert res.kind is bz.DynamicsKind.APERIODIC


def test_periodicity_classifier_guards():
    dt = T1 / 100
    short = np.ones(450)  # transient 3 periods + < 3 full windows
    with pytest.raises(bz.InsufficientDataError):
        bz.periodicity_classify(short, dt, T1)
    with pytest.raises(bz.InsufficientDataError):
        bz.periodicity_classify(np.ones(2000), T1 / 32, T1)  # too coarse
    with pytest.raises(bz.InsufficientDataError):
        bz.periodicity_classify(np.ones(2000), T1 / 100.5, T1)  # off-grid


def test_window_mismatch_hand_values():
    assert bz.window_mismatch(np.array([1., 2., 1., 2., 1., 2.]), 2, 0) == 0.0
    assert bz.window_mismatch(
        np.array([1., 2., 1., 2., 2., 4.]), 2, 0) == pytest.approx(1.0)
    with pytest.raises(bz.InsufficientDataError):
        bz.window_mismatch(np.ones(5), 2, 0)  # only 2 full windows
    with pytest.raises(bz.InsufficientDataError):
        bz.window_mismatch(np.zeros(10), 2, 0)  # zero reference window


def test_state_validation():
    with pytest.raises(ValueError):
        bz.LatticeState(a=np.zeros(3, complex), b=np.zeros(4, complex))
    with pytest.raises(ValueError):
        bz.LatticeState(a=np.zeros(0, complex), b=np.zeros(0, complex))
    init = bz.initial_excitation(MODEL1, 0.2, n_cells=9)
    with pytest.raises(ValueError):
        bz.evolve(MODEL1, 0.2, init, t_end=-1.0)
    with pytest.raises(ValueError):
        bz.evolve(MODEL1, -0.2, init, t_end=1.0)
