# -*- coding: utf-8 -*-
import numpy as np
import pytest

import solver
from spectral_core import Grid, RealField, l2_norm_squared, to_real, to_spectral
from operators import ModelParams, MollifierSpec, linear_propagator
from diagnostics import energy, energy_as_printed, mass
from solver import (
    Dealias, Integrator, SolverConfig, SolverError, SpectralGapError, StepSizeError,
    SolitaryWaveError, integrate, integrate_bidirectional, max_abs_difference,
    nonlinear_term, petviashvili_iteration, translate, traveling_wave_residual,
)


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(dt=0.0, t_end=1.0)
    with pytest.raises(ValueError):
        SolverConfig(dt=0.3, t_end=1.0)
    with pytest.raises(ValueError):
        SolverConfig(dt=0.1, t_end=1.0, snapshot_stride=0)
    with pytest.raises(ValueError):
        SolverConfig(dt=0.1, t_end=1.0, cfl_guard=1.5)
    cfg = SolverConfig(dt=0.01, t_end=1.0, integrator="ifrk4", dealias="none")
    assert cfg.integrator is Integrator.IFRK4
    assert cfg.n_steps == 100
    assert not cfg.dealias_enabled


@pytest.mark.parametrize("integrator", list(Integrator))
def test_linear_flow_is_exact(grid, params, gaussian, integrator):
    cfg = SolverConfig(dt=0.05, t_end=1.0, integrator=integrator, nonlinear=False)
    traj = integrate(gaussian, params, cfg)
    expected = linear_propagator(params, 1.0, to_spectral(gaussian))
    np.testing.assert_allclose(traj.final_state.u_hat.coeffs, expected.coeffs, atol=1e-12)
    assert traj.final_state.t == 20 * 0.05


@pytest.mark.parametrize("integrator", list(Integrator))
def test_mass_and_energy_are_conserved(fine_grid, params, integrator):
    u0 = RealField(fine_grid, np.exp(-(fine_grid.x / 2.0) ** 2))
    cfg = SolverConfig(dt=0.005, t_end=1.0, integrator=integrator, snapshot_stride=50)
    traj = integrate(u0, params, cfg)
    u1 = traj.final_state.u_hat
    assert mass(u1) == pytest.approx(mass(u0), rel=1e-6)
    assert energy(u1, params) == pytest.approx(energy(u0, params), rel=1e-4)
    assert energy_as_printed(u0, params) != pytest.approx(energy(u0, params))
    assert len(traj) == 5


def test_snapshot_times_are_step_multiples(grid, params, gaussian):
    cfg = SolverConfig(dt=0.01, t_end=0.3, snapshot_stride=10)
    traj = integrate(gaussian, params, cfg)
    np.testing.assert_array_equal(traj.times(), [0.0, 10 * 0.01, 20 * 0.01, 30 * 0.01])
    assert traj.spacing() == pytest.approx(0.1)
    assert traj.covers(0.0, 0.3)
    assert len(traj.window(0.05, 0.3)) == 3


def test_sinks_receive_every_snapshot(grid, params, gaussian):
    seen = []
    cfg = SolverConfig(dt=0.01, t_end=0.1, snapshot_stride=2, keep_snapshots=False)
    traj = integrate(gaussian, params, cfg, sinks=[lambda t, s: seen.append(s.step_count)])
    assert seen == [0, 2, 4, 6, 8, 10]
    assert len(traj) == 0
    assert traj.final_state.step_count == 10


def test_resumed_integration_is_identical(grid, params, gaussian):
    full = integrate(gaussian, params, SolverConfig(dt=0.01, t_end=0.4))
    half = integrate(gaussian, params, SolverConfig(dt=0.01, t_end=0.2))
    rest = integrate(None, params, SolverConfig(dt=0.01, t_end=0.4), start=half.final_state)
    np.testing.assert_array_equal(rest.final_state.u_hat.coeffs, full.final_state.u_hat.coeffs)
    assert rest.final_state.step_count == 40
    # 续算时起点不重复输出
    assert rest.snapshots[0].step == 21
    with pytest.raises(ValueError):
        integrate(None, params, SolverConfig(dt=0.01, t_end=0.4))


def test_step_size_guard(grid, params, gaussian):
    with pytest.raises(StepSizeError):
        integrate(gaussian, params, SolverConfig(dt=0.5, t_end=1.0))
    # 线性流不受限制
    integrate(gaussian, params, SolverConfig(dt=0.5, t_end=1.0, nonlinear=False))


def test_dt_cap_formula(grid, params):
    cfg = SolverConfig(dt=0.01, t_end=1.0, c_int=2.0)
    cutoff = 2.0 / 3.0 * grid.k_max
    assert cfg.dt_cap(grid, params, 3.0) == pytest.approx(2.0 / (cutoff * 3.0))
    assert cfg.dt_cap(grid, ModelParams(0.5, 2), 3.0) == pytest.approx(2.0 / (grid.k_max / 2 * 9.0))
    assert cfg.dt_cap(grid, params, 0.0) == np.inf


def test_non_finite_step_raises_with_last_good_state(grid, params, gaussian, monkeypatch):
    calls = {'n': 0}
    real = solver.nonlinear_term

    def failing(u_hat, *args, **kwargs):
        calls['n'] += 1
        out = real(u_hat, *args, **kwargs)
        if calls['n'] > 8:
            out.coeffs[:] = np.nan
        return out

    monkeypatch.setattr(solver, "nonlinear_term", failing)
    with pytest.raises(SolverError) as info:
        integrate(gaussian, params, SolverConfig(dt=0.01, t_end=0.1))
    err = info.value
    assert err.last_good_state.step_count == 2
    assert err.step_index == 3
    assert err.trajectory.final_state.step_count == 2
    assert [s.step for s in err.trajectory.snapshots] == [0, 1, 2]


def test_nonlinear_term_is_dealiased(grid, params, gaussian):
    N = nonlinear_term(to_spectral(gaussian), params)
    cutoff = 2.0 / 3.0 * grid.k_max
    assert np.all(N.coeffs[grid.wavenumbers > cutoff] == 0)
    assert N.coeffs[0] == 0
    undealiased = nonlinear_term(to_spectral(gaussian), params, Dealias.NONE)
    assert np.any(undealiased.coeffs[grid.wavenumbers > cutoff] != 0)
    mollified = nonlinear_term(to_spectral(gaussian), params, mollifier=MollifierSpec(0.5))
    assert not np.allclose(mollified.coeffs, N.coeffs)


def test_bidirectional_trajectory_matches_linear_group(grid, params, gaussian):
    cfg = SolverConfig(dt=0.05, t_end=1.0, nonlinear=False, snapshot_stride=2)
    traj = integrate_bidirectional(gaussian, params, cfg, 0.5, 1.0)
    t = traj.times()
    assert t[0] == pytest.approx(-0.5) and t[-1] == pytest.approx(1.0)
    assert np.all(np.diff(t) > 0)
    assert traj.spacing() == pytest.approx(0.1)
    u0 = to_spectral(gaussian)
    for snap in traj.snapshots:
        np.testing.assert_allclose(snap.u_hat.coeffs,
                                   linear_propagator(params, snap.t, u0).coeffs, atol=1e-12)


def test_bidirectional_nonlinear_is_time_reversible(grid, params, gaussian):
    cfg = SolverConfig(dt=0.01, t_end=0.2, snapshot_stride=5)
    traj = integrate_bidirectional(gaussian, params, cfg, 0.2, 0.2)
    earliest = traj.snapshots[0]
    assert earliest.t == pytest.approx(-0.2)
    forward = integrate(to_real(earliest.u_hat), params, cfg)
    assert max_abs_difference(forward.final_state.u_hat, to_spectral(gaussian)) < 1e-6


def test_translate_shifts_profile(grid, gaussian):
    moved = to_real(translate(to_spectral(gaussian), 2.0 * grid.dx)).values
    np.testing.assert_allclose(moved, np.roll(gaussian.values, 2), atol=1e-12)


def test_petviashvili_recovers_exact_solitary_wave():
    g = Grid(512, 60.0)
    # 宽度与幅度都偏离精确解；只改幅度时一次迭代即收敛
    guess = RealField(g, -2.0 / np.cosh(g.x / 2.5) ** 2)
    wave = petviashvili_iteration(ModelParams(0.0, 1), -1.0, g, tol=1e-11, guess=guess)
    exact = -3.0 / np.cosh(g.x / 2.0) ** 2
    assert wave.residual < 1e-11
    assert wave.iterations > 10
    assert np.all(np.diff(wave.residual_history[-10:]) < 0)
    assert wave.stabilizing_factor == pytest.approx(1.0, abs=1e-8)
    np.testing.assert_allclose(wave.profile.values, exact, atol=1e-8)


def test_petviashvili_with_hilbert_term():
    g = Grid(256, 40.0)
    params = ModelParams(0.5, 1)
    wave = petviashvili_iteration(params, -1.0, g)
    assert wave.residual < 1e-10
    assert wave.residual_history[-1] == wave.residual
    assert traveling_wave_residual(params, -1.0, wave.profile) < 1e-8
    assert np.min(wave.profile.values) < 0


@pytest.mark.slow
def test_solitary_wave_travels_at_its_speed():
    g = Grid(256, 40.0)
    params = ModelParams(0.5, 1)
    c = -1.0
    U = petviashvili_iteration(params, c, g, tol=1e-11).profile
    traj = integrate(U, params, SolverConfig(dt=1e-3, t_end=1.0, snapshot_stride=1000))
    exact = translate(to_spectral(U), c * 1.0)
    assert max_abs_difference(traj.final_state.u_hat, exact) < 1e-5


def test_solitary_wave_preconditions():
    g = Grid(128, 40.0)
    with pytest.raises(SpectralGapError):
        petviashvili_iteration(ModelParams(0.5, 1), -0.01, g)
    with pytest.raises(SpectralGapError):
        petviashvili_iteration(ModelParams(0.5, 2), -1.0, g)
    with pytest.raises(SolitaryWaveError):
        petviashvili_iteration(ModelParams(0.5, 1), -1.0, g, tol=1e-30, max_iter=3)
    with pytest.raises(ValueError):
        petviashvili_iteration(ModelParams(0.5, 1), -1.0, g, tol=0.0)


def test_mollifier_beyond_the_grid_is_the_plain_scheme(grid, params, gaussian):
    plain = integrate(gaussian, params, SolverConfig(dt=0.01, t_end=0.5))
    wide = MollifierSpec(2.0 * grid.k_max)
    mollified = integrate(gaussian, params, SolverConfig(dt=0.01, t_end=0.5, mollifier=wide))
    np.testing.assert_array_equal(mollified.final_state.u_hat.coeffs, plain.final_state.u_hat.coeffs)


def long_gaussian_run(dt, t_end=10.0, **kwargs):
    """N = 512, L = 80, l = 0.5, p = 1 的高斯初值"""
    g = Grid(512, 80.0)
    u0 = RealField(g, np.exp(-(g.x / 2.0) ** 2))
    cfg = SolverConfig(dt=dt, t_end=t_end, snapshot_stride=int(round(t_end / dt)),
                       keep_snapshots=False, **kwargs)
    return u0, integrate(u0, ModelParams(0.5, 1), cfg).final_state


@pytest.mark.slow
def test_long_run_conserves_mass_and_energy():
    params = ModelParams(0.5, 1)
    u0, final = long_gaussian_run(1e-3)
    assert final.t == pytest.approx(10.0)
    assert abs(mass(final.u_hat) - mass(u0)) / mass(u0) <= 1e-10
    assert abs(energy(final.u_hat, params) - energy(u0, params)) / abs(energy(u0, params)) <= 1e-8


@pytest.mark.slow
def test_integrator_is_fourth_order():
    _, reference = long_gaussian_run(0.01 / 8)
    errors = [max_abs_difference(long_gaussian_run(dt)[1].u_hat, reference.u_hat) for dt in (0.02, 0.01)]
    assert 12.0 <= errors[0] / errors[1] <= 20.0


@pytest.mark.slow
def test_kdv_limit_reproduces_the_exact_soliton():
    g = Grid(1024, 80.0)
    params = ModelParams(0.0, 1)
    u0 = RealField(g, -3.0 / np.cosh(g.x / 2.0) ** 2)
    assert traveling_wave_residual(params, -1.0, u0) < 1e-8
    t_end = 10.0
    traj = integrate(u0, params, SolverConfig(dt=1e-3, t_end=t_end, snapshot_stride=10000,
                                              keep_snapshots=False))
    # u(x, t) = −3 sech²((x + t)/2)，周期延拓
    shifted = (g.x + t_end + g.length / 2.0) % g.length - g.length / 2.0
    exact = -3.0 / np.cosh(shifted / 2.0) ** 2
    assert np.max(np.abs(to_real(traj.final_state.u_hat).values - exact)) < 1e-6


@pytest.mark.slow
def test_mollified_runs_converge_as_the_cutoff_grows():
    g = Grid(512, 80.0)
    params = ModelParams(0.5, 1)
    u0 = RealField(g, np.exp(-(g.x / 2.0) ** 2))
    cfg = SolverConfig(dt=0.01, t_end=2.0, keep_snapshots=False)
    plain = integrate(u0, params, cfg).final_state.u_hat
    errors = []
    for n in (g.k_max / 8, g.k_max / 4, g.k_max / 2):
        u_n = integrate(u0, params, SolverConfig(dt=0.01, t_end=2.0, keep_snapshots=False,
                                                 mollifier=MollifierSpec(n))).final_state.u_hat
        errors.append(np.sqrt(l2_norm_squared(u_n.with_coeffs(u_n.coeffs - plain.coeffs))))
    assert errors[0] > errors[1] > errors[2]
