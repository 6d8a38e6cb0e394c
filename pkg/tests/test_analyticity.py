# -*- coding: utf-8 -*-
import numpy as np
import pytest

from spectral_core import Grid, RealField, SpectralField, to_real
from operators import ModelParams
from solver import Snapshot, SolverConfig, Trajectory, integrate
from analyticity import (
    RadiusFitError, RadiusFitOptions, RadiusSample, Verdict,
    fit_decay_law, fit_radius, gamma_bound, lower_bound_audit, radius_timeseries,
)


def decaying(grid, sigma, r=1.0, C=2.0):
    k = grid.wavenumbers
    coeffs = np.ones(grid.n_modes, dtype=complex)
    coeffs[1:] = C * k[1:] ** (-r) * np.exp(-sigma * k[1:])
    return SpectralField(grid, coeffs)


@pytest.mark.parametrize("sigma, r", [(0.2, 1.0), (0.05, 0.5), (0.4, 2.0)])
def test_fit_recovers_synthetic_decay(sigma, r):
    g = Grid(128, 2.0 * np.pi)
    fit = fit_radius(decaying(g, sigma, r))
    assert fit.sigma == pytest.approx(sigma, rel=1e-8)
    assert fit.r == pytest.approx(r, rel=1e-6)
    assert fit.logC == pytest.approx(np.log(2.0), abs=1e-6)
    assert fit.rms_residual < 1e-10
    assert fit.k_window == (pytest.approx(16.0), pytest.approx(128.0 / 3.0))
    assert not fit.clamped


def test_growing_spectrum_is_clamped():
    g = Grid(128, 2.0 * np.pi)
    coeffs = np.exp(0.1 * g.wavenumbers).astype(complex)
    fit = fit_radius(SpectralField(g, coeffs))
    assert fit.clamped
    assert fit.sigma == 0.0
    assert fit.raw_sigma == pytest.approx(-0.1, rel=1e-6)
    assert fit.to_dict()['clamped'] is True


def test_fit_errors():
    g = Grid(128, 2.0 * np.pi)
    with pytest.raises(RadiusFitError):
        fit_radius(SpectralField(g, np.zeros(g.n_modes, dtype=complex)))
    with pytest.raises(RadiusFitError):
        fit_radius(decaying(g, 0.2), RadiusFitOptions(k_lo=40.0, k_hi=42.0))
    with pytest.raises(RadiusFitError):
        fit_radius(decaying(g, 0.2), RadiusFitOptions(k_lo=30.0, k_hi=20.0))
    # 衰减过快时上频带全部落在噪声底以下
    with pytest.raises(RadiusFitError):
        fit_radius(decaying(g, 3.0))


@pytest.mark.parametrize("kwargs", [dict(envelope_width=4), dict(noise_floor=1.0), dict(min_points=2)])
def test_fit_options_validation(kwargs):
    with pytest.raises(ValueError):
        RadiusFitOptions(**kwargs)


def test_radius_timeseries_running_minimum():
    g = Grid(128, 2.0 * np.pi)
    params = ModelParams(0.5, 1)
    spectra = [decaying(g, 0.3), decaying(g, 0.2), SpectralField(g, np.zeros(g.n_modes, dtype=complex)),
               decaying(g, 0.25)]
    traj = Trajectory(g, params, SolverConfig(dt=0.01, t_end=0.3),
                      snapshots=[Snapshot(0.1 * i, 10 * i, F) for i, F in enumerate(spectra)])
    raw = radius_timeseries(traj)
    assert [s.ok for s in raw] == [True, True, False, True]
    assert raw[2].error
    assert raw[3].sigma == pytest.approx(0.25, rel=1e-8)
    lowest = radius_timeseries(traj, running_min=True)
    assert lowest[3].sigma == pytest.approx(0.2, rel=1e-8)
    assert lowest[3].fit.sigma == pytest.approx(0.25, rel=1e-8)


def power_law(gamma, sigma0=0.5, times=None):
    times = np.arange(0.0, 21.0) if times is None else times
    rows = [RadiusSample(t=0.0, fit=None, sigma=sigma0)]
    rows += [RadiusSample(t=float(t), fit=None, sigma=sigma0 * t ** (-gamma)) for t in times if t > 0]
    return rows


def test_decay_law_fit_recovers_exponent():
    fit = fit_decay_law(power_law(1.0))
    assert fit.gamma == pytest.approx(1.0, rel=1e-10)
    assert fit.c == pytest.approx(0.5, rel=1e-10)
    # t = 1 处 σ = σ₀，不计入
    assert fit.t_window == (2.0, 20.0)
    assert fit.n_rows == 19


def test_lower_bound_verdicts():
    params = ModelParams(0.5, 1)
    assert gamma_bound(1) == pytest.approx(4.0 / 3.0 + 0.01)
    assert gamma_bound(2) == 12.0

    ok = lower_bound_audit(power_law(1.0), params)
    assert ok.verdict is Verdict.PASS_BOUND and ok.passed
    assert ok.fit.gamma == pytest.approx(1.0)

    bad = lower_bound_audit(power_law(2.0), params)
    assert bad.verdict is Verdict.VIOLATION and not bad.passed

    flat = lower_bound_audit(power_law(0.0), params)
    assert flat.verdict is Verdict.PASS_PLATEAU
    assert flat.to_dict()['sigma0'] == 0.5

    short = lower_bound_audit(power_law(1.0, times=np.arange(0.0, 5.0)), params)
    assert short.verdict is Verdict.INCONCLUSIVE

    empty = lower_bound_audit([RadiusSample(0.0, None, None, "no data")], params)
    assert empty.verdict is Verdict.INCONCLUSIVE
    assert empty.to_dict()['fit'] is None


def test_lower_bound_audit_rejects_non_positive_epsilon():
    with pytest.raises(ValueError):
        lower_bound_audit(power_law(1.0), ModelParams(0.5, 1), epsilon=0.0)


@pytest.mark.parametrize("scale", [1e-3, 7.5, 1e4])
def test_fit_is_scale_equivariant(scale):
    g = Grid(128, 2.0 * np.pi)
    F = decaying(g, 0.3, 2.0)
    base = fit_radius(F)
    scaled = fit_radius(F.with_coeffs(scale * F.coeffs))
    assert scaled.sigma == pytest.approx(base.sigma, abs=1e-10)
    assert scaled.r == pytest.approx(base.r, abs=1e-10)
    assert scaled.logC == pytest.approx(base.logC + np.log(scale), abs=1e-9)
    assert scaled.n_points_used == base.n_points_used


def test_linear_flow_keeps_the_radius():
    g = Grid(128, 2.0 * np.pi)
    u0 = to_real(decaying(g, 0.3, 1.0))
    cfg = SolverConfig(dt=0.01, t_end=1.0, snapshot_stride=10, nonlinear=False)
    series = radius_timeseries(integrate(u0, ModelParams(0.5, 1), cfg))
    assert len(series) == 11 and all(row.ok for row in series)
    sigma0 = series[0].sigma
    assert sigma0 == pytest.approx(0.3, rel=1e-6)
    for row in series:
        assert abs(row.sigma - sigma0) < 1e-8


@pytest.mark.slow
def test_traveling_wave_keeps_the_radius():
    # l = 0 时 −3 sech²((x + t)/2) 是精确行波，|û(k)| ∝ k/sinh(πk)
    g = Grid(512, 60.0)
    u0 = RealField(g, -3.0 / np.cosh(g.x / 2.0) ** 2)
    cfg = SolverConfig(dt=1e-3, t_end=1.0, snapshot_stride=100)
    traj = integrate(u0, ModelParams(0.0, 1), cfg)
    series = radius_timeseries(traj, RadiusFitOptions(k_lo=4.0, k_hi=8.0))
    assert len(series) == 11 and all(row.ok for row in series)
    sigma0 = series[0].sigma
    assert sigma0 == pytest.approx(np.pi, rel=1e-3)
    for row in series:
        assert row.sigma == pytest.approx(sigma0, rel=0.01)


def test_growing_radius_is_inconclusive():
    # σ₀ 之后的行略低于 σ₀ 但随 t 增大，负 γ 不算作下界成立
    rows = [RadiusSample(t=0.0, fit=None, sigma=2.35)]
    rows += [RadiusSample(t=float(t), fit=None, sigma=1.5 * t ** 0.1) for t in range(1, 21)]
    fit = fit_decay_law(rows)
    assert fit.gamma == pytest.approx(-0.1, rel=1e-8)
    verdict = lower_bound_audit(rows, ModelParams(0.5, 1))
    assert verdict.verdict is Verdict.INCONCLUSIVE and not verdict.passed
    assert verdict.fit is not None
    assert verdict.to_dict()['fit']['gamma'] < 0
