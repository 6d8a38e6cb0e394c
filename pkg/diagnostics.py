#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
守恒量、Gevrey / Sobolev 范数、时间窗上的离散 Bourgain 范数、Gevrey 通量与近似守恒审计
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
from scipy import fft as sp_fft

from spectral_core import (
    Grid, RealField, SpectralField, to_real, to_spectral, l2_inner,
)
from operators import (
    GevreyIndex, ModelParams, bracket, check_overflow, dealias_mask, derivative,
    gevrey_symbol, hilbert, propagator_symbol, smooth_step_down,
)
from solver import (
    Dealias, SolverConfig, SolverState, Trajectory, integrate_bidirectional,
)
from analyticity import RadiusFit, RadiusFitError, RadiusFitOptions, fit_radius

logger = logging.getLogger(__name__)

FieldLike = Union[RealField, SpectralField]


@dataclass(frozen=True)
class BourgainIndex:
    """X^{σ,s,b} 的指标"""
    sigma: float
    s: float = 0.0
    b: float = 0.0

    def __post_init__(self):
        if not (self.sigma >= 0.0):
            raise ValueError(f"sigma 必须非负: {self.sigma}")
        if not all(np.isfinite(v) for v in (self.sigma, self.s, self.b)):
            raise ValueError(f"Bourgain 指标必须有限: {self}")

    @property
    def label(self) -> str:
        return f"bourgain[{self.sigma:g};{self.s:g};{self.b:g}]"


@dataclass(frozen=True)
class TimeWindow:
    """核心区间 [t0, t1]；截断函数支撑在加倍窗口 [t0 − w, t1 + w] 上，w = t1 − t0"""
    t0: float
    t1: float

    def __post_init__(self):
        if not (np.isfinite(self.t0) and np.isfinite(self.t1) and self.t1 > self.t0):
            raise ValueError(f"时间窗需要 t1 > t0: [{self.t0}, {self.t1}]")

    @property
    def width(self) -> float:
        return self.t1 - self.t0

    @property
    def outer(self) -> tuple:
        return self.t0 - self.width, self.t1 + self.width


def bump_cutoff(win: TimeWindow, t: np.ndarray) -> np.ndarray:
    """ψ: 在 [t0, t1] 上为 1，加倍窗口外为 0，其间 C∞ 过渡"""
    t = np.asarray(t, dtype=float)
    y = np.zeros_like(t)
    below = t < win.t0
    above = t > win.t1
    y[below] = (win.t0 - t[below]) / win.width
    y[above] = (t[above] - win.t1) / win.width
    return smooth_step_down(y)


@dataclass
class DiagnosticsRow:
    t: float
    mass: float
    energy: float
    sobolev_s: float
    gevrey: Dict[GevreyIndex, float] = field(default_factory=dict)
    sigma_fit: Optional[RadiusFit] = None
    energy_as_printed: Optional[float] = None


def _spectrum(u: FieldLike) -> SpectralField:
    return u if isinstance(u, SpectralField) else to_spectral(u)


def _values(u: FieldLike) -> np.ndarray:
    return u.values if isinstance(u, RealField) else to_real(u).values


def mass(u: FieldLike) -> float:
    """M(u) = ½∫u² dx"""
    if isinstance(u, SpectralField):
        return 0.5 * l2_inner(u, u)
    return 0.5 * float(np.sum(u.values ** 2)) * u.grid.dx


def _quadratic_energy(u_hat: SpectralField, params: ModelParams) -> float:
    ux = derivative(u_hat, 1)
    dispersion = 0.5 * l2_inner(ux, ux)
    hilbert_term = -0.5 * params.l * l2_inner(u_hat, hilbert(ux))
    return dispersion + hilbert_term


def energy(u: FieldLike, params: ModelParams) -> float:
    """
    E(u) = ∫ [½(∂ₓu)² − (l/2) u ℋ∂ₓu + u^{p+2}/((p+1)(p+2))] dx

    非线性项系数取方程 ∂ₜu − lℋ∂ₓ²u − ∂ₓ³u + u^p∂ₓu = 0 实际守恒的值。
    """
    u_hat = _spectrum(u)
    p = params.p
    values = _values(u)
    potential = float(np.sum(values ** (p + 2))) * u_hat.grid.dx / ((p + 1) * (p + 2))
    return _quadratic_energy(u_hat, params) + potential


def energy_as_printed(u: FieldLike, params: ModelParams) -> float:
    """非线性项系数为 −2/((p+1)(p+2)) 的写法；沿解一般不守恒，仅作对照记录"""
    u_hat = _spectrum(u)
    p = params.p
    values = _values(u)
    potential = -2.0 * float(np.sum(values ** (p + 2))) * u_hat.grid.dx / ((p + 1) * (p + 2))
    return _quadratic_energy(u_hat, params) + potential


def _weights(grid: Grid, sigma: float, s: float) -> np.ndarray:
    return gevrey_symbol(grid, sigma) ** 2 * bracket(grid.wavenumbers) ** (2.0 * s)


def gevrey_norm(u: FieldLike, idx: GevreyIndex) -> float:
    """‖u‖_{G^{σ,s}}，权 e^{2σ|k|}⟨k⟩^{2s}"""
    u_hat = _spectrum(u)
    grid = u_hat.grid
    w = grid.mode_weights * _weights(grid, idx.sigma, idx.s)
    return float(np.sqrt(np.sum(w * np.abs(u_hat.coeffs) ** 2) / grid.length))


def sobolev_norm(u: FieldLike, s: float) -> float:
    return gevrey_norm(u, GevreyIndex(0.0, s))


def embedding_constant(grid: Grid, sigma: float, sigma_p: float, s: float, s_p: float) -> float:
    """sup_k ⟨k⟩^{s′−s} e^{(σ′−σ)|k|}，在网格波数上取"""
    k = grid.wavenumbers
    return float(np.max(bracket(k) ** (s_p - s) * np.exp((sigma_p - sigma) * k)))


def gevrey_embedding_check(u: FieldLike, sigma: float, sigma_p: float,
                           s: float, s_p: float) -> bool:
    """‖u‖_{G^{σ′,s′}} <= C‖u‖_{G^{σ,s}}，C 为离散意义下的最优常数"""
    if not (0.0 <= sigma_p <= sigma):
        raise ValueError(f"嵌入要求 0 <= σ′ <= σ: σ = {sigma}, σ′ = {sigma_p}")
    u_hat = _spectrum(u)
    C = embedding_constant(u_hat.grid, sigma, sigma_p, s, s_p)
    weak = gevrey_norm(u_hat, GevreyIndex(sigma_p, s_p))
    strong = gevrey_norm(u_hat, GevreyIndex(sigma, s))
    return weak <= C * strong * (1.0 + 1e-12) + 1e-300


@dataclass
class GevreyFlux:
    F: RealField
    flux: float


def gevrey_flux(u: FieldLike, sigma: float, params: ModelParams,
                dealias: Dealias = Dealias.TWO_THIRDS) -> GevreyFlux:
    """
    F = ∂ₓ((e^{σ|D|}u)²) − ∂ₓ(e^{σ|D|}(u²))，乘积与求解器使用相同的去混叠截断。

    flux = ½∫ e^{σ|D|}u · F dx 恰为半离散流下 ½ d/dt ‖u‖²_{G^{σ,0}}；
    因子 ½ 来自 u∂ₓu = ½∂ₓ(u²)。
    """
    if params.p != 1:
        raise ValueError(f"Gevrey 通量恒等式只对 p = 1 成立: p = {params.p}")
    u_hat = _spectrum(u)
    grid = u_hat.grid
    A = gevrey_symbol(grid, sigma)
    mask = dealias_mask(grid, 1, Dealias(dealias) is Dealias.TWO_THIRDS)
    low = u_hat.coeffs * mask
    v = to_real(u_hat.with_coeffs(A * low)).values
    w = to_real(u_hat.with_coeffs(low)).values
    squared_weighted = to_spectral(RealField(grid, v ** 2)).coeffs * mask
    weighted_square = A * to_spectral(RealField(grid, w ** 2)).coeffs * mask
    F_hat = 1j * grid.wavenumbers * (squared_weighted - weighted_square)
    F_hat[0] = 0.0
    F_hat[-1] = 0.0
    F_spec = u_hat.with_coeffs(F_hat)
    flux = 0.5 * l2_inner(u_hat.with_coeffs(A * u_hat.coeffs), F_spec)
    return GevreyFlux(F=to_real(F_spec), flux=flux)


def bourgain_norm_window(traj: Trajectory, idx: BourgainIndex, win: TimeWindow,
                         params: Optional[ModelParams] = None,
                         pad_factor: int = 2) -> float:
    """
    ψ·u 的 X^{σ,s,b} 范数 (受限范数的上界代理)。

    在相互作用表象 w = W(−t)u 下计算: û(ξ, τ) = ŵ(ξ, τ − φ(ξ))，
    于是 ⟨τ − φ(ξ)⟩ 权直接作用在 ŵ 的时间频率上。
    """
    params = params or traj.params
    lo, hi = win.outer
    if not traj.covers(lo, hi):
        span = (traj.times()[0], traj.times()[-1]) if len(traj) else (None, None)
        raise ValueError(f"轨迹 {span} 未覆盖加倍窗口 [{lo:g}, {hi:g}]")
    sub = traj.window(lo, hi)
    h = sub.spacing()
    grid = sub.grid
    t = sub.times()
    U = sub.spectra()
    check_overflow(idx.sigma * grid.k_max)

    W = np.stack([propagator_symbol(params, grid, -tn) for tn in t])
    g = bump_cutoff(win, t)[:, None] * W * U
    m = len(t)
    n_pad = 1 << int(np.ceil(np.log2(max(2, pad_factor * m))))
    G = h * sp_fft.fft(g, n=n_pad, axis=0)
    lam = 2.0 * np.pi * sp_fft.fftfreq(n_pad, d=h)

    space = grid.mode_weights * _weights(grid, idx.sigma, idx.s) / grid.length
    time = bracket(lam) ** (2.0 * idx.b) / (n_pad * h)
    total = float(np.sum(time[:, None] * space[None, :] * np.abs(G) ** 2))
    return float(np.sqrt(total))


def diagnostics_row(state: SolverState, gevrey_indices: Sequence[GevreyIndex] = (),
                    sobolev_s: float = 1.0,
                    radius_options: Optional[RadiusFitOptions] = None,
                    fit_radius_enabled: bool = True) -> DiagnosticsRow:
    """一个快照的诊断记录；半径拟合失败时 sigma_fit 为 None"""
    u_hat = state.u_hat
    u = to_real(u_hat)
    row = DiagnosticsRow(
        t=state.t,
        mass=mass(u),
        energy=energy(u, state.params),
        sobolev_s=sobolev_norm(u_hat, sobolev_s),
        gevrey={idx: gevrey_norm(u_hat, idx) for idx in gevrey_indices},
        energy_as_printed=energy_as_printed(u, state.params),
    )
    if fit_radius_enabled:
        try:
            row.sigma_fit = fit_radius(u_hat, radius_options, p=state.params.p)
        except RadiusFitError as e:
            logger.debug(f"t = {state.t:g} 半径拟合失败: {e}")
    return row


@dataclass
class AuditRow:
    sigma: float
    delta: float
    bourgain_cubed: float
    ratio: Optional[float]

    def to_dict(self) -> Dict[str, Optional[float]]:
        return {'sigma': self.sigma, 'delta': self.delta,
                'bourgain_cubed': self.bourgain_cubed, 'ratio': self.ratio}


@dataclass
class AuditTable:
    rows: List[AuditRow]
    theta: float
    b: float
    T: float
    theta_fit: Optional[float] = None
    ratio_spread: Optional[float] = None

    def to_dict(self) -> Dict[str, object]:
        return {
            'theta': self.theta, 'b': self.b, 'T': self.T,
            'theta_fit': self.theta_fit, 'ratio_spread': self.ratio_spread,
            'rows': [r.to_dict() for r in self.rows],
        }


def _fit_theta(rows: Sequence[AuditRow], n_small: int = 3) -> Optional[float]:
    usable = sorted((r for r in rows if r.sigma > 0 and r.delta > 0), key=lambda r: r.sigma)
    usable = usable[:n_small]
    if len(usable) < 2:
        return None
    x = np.log([r.sigma for r in usable])
    y = np.log([r.delta for r in usable])
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)


def almost_conservation_audit(u0: RealField, params: ModelParams, cfg: SolverConfig,
                              sigmas: Sequence[float], T: float, theta: float,
                              b: float) -> AuditTable:
    """
    sup_{t∈[0,T]} ‖u(t)‖²_{G^{σ,0}} − ‖u(0)‖²_{G^{σ,0}} 与 σ^θ‖ψu‖³_{X^{σ,0,b}} 的比值。

    u 与 σ 无关，所有 σ 共用一条 [−T, 2T] 上的双向轨迹 (覆盖 [0, T] 的加倍窗口)。
    """
    if params.p != 1:
        raise ValueError(f"近似守恒审计只对 p = 1 定义: p = {params.p}")
    if not (0.0 < theta < 0.75):
        raise ValueError(f"θ 必须在 (0, 3/4) 内: {theta}")
    if not (0.5 < b < 1.0):
        raise ValueError(f"b 必须在 (1/2, 1) 内: {b}")
    if not T > 0:
        raise ValueError(f"T 必须为正: {T}")
    for sigma in sigmas:
        if sigma < 0:
            raise ValueError(f"sigma 必须非负: {sigma}")
        check_overflow(sigma * u0.grid.k_max)

    window = TimeWindow(0.0, T)
    traj = integrate_bidirectional(u0, params, cfg, T, 2.0 * T)
    core = traj.window(0.0, T)
    spectra = core.spectra()
    grid = traj.grid
    logger.info(f"近似守恒审计: σ = {list(sigmas)}, T = {T:g}, θ = {theta:g}, b = {b:g}, "
                f"{len(core)} 个快照")

    rows: List[AuditRow] = []
    for sigma in sigmas:
        w = grid.mode_weights * _weights(grid, sigma, 0.0) / grid.length
        G = np.sum(w[None, :] * np.abs(spectra) ** 2, axis=1)
        delta = float(np.max(G) - G[0])
        B = bourgain_norm_window(traj, BourgainIndex(sigma, 0.0, b), window, params) ** 3
        ratio = delta / (sigma ** theta * B) if sigma > 0 and B > 0 else None
        rows.append(AuditRow(sigma=float(sigma), delta=delta, bourgain_cubed=B, ratio=ratio))
        logger.debug(f"σ = {sigma:g}: Δ = {delta:.6e}, B³ = {B:.6e}, 比值 = {ratio}")

    ratios = [r.ratio for r in rows if r.ratio is not None and r.ratio > 0]
    spread = max(ratios) / min(ratios) if ratios else None
    return AuditTable(rows=rows, theta=theta, b=b, T=T,
                      theta_fit=_fit_theta(rows), ratio_spread=spread)
