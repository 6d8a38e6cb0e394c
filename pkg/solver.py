#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
广义 Benjamin 方程的时间推进与孤立波剖面

线性部分 iφ(k) 通过单模因子精确积分 (积分因子 RK4 或 ETDRK4)，
非线性项取守恒形式 −(1/(p+1))∂ₓ(u^{p+1})，伪谱计算并去混叠。
"""

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import lru_cache
from typing import Callable, List, Optional, Sequence

import numpy as np

from spectral_core import (
    Grid, RealField, SpectralField, SpectralError,
    to_real, to_spectral, reflect,
)
from operators import (
    ModelParams, MollifierSpec,
    dealias_cutoff, dealias_mask, phase_symbol, propagator_symbol,
)

logger = logging.getLogger(__name__)

# ETDRK4 系数的围道平均点数
CONTOUR_POINTS = 32


class Integrator(Enum):
    IFRK4 = "ifrk4"
    ETDRK4 = "etdrk4"


class Dealias(Enum):
    TWO_THIRDS = "two_thirds"
    NONE = "none"


class StepSizeError(ValueError):
    """dt 超过非线性项显式处理的步长上限"""


class SolverError(RuntimeError):
    """推进过程中出现 NaN/Inf"""

    def __init__(self, message: str, last_good_state: 'SolverState', step_index: int):
        super().__init__(message)
        self.last_good_state = last_good_state
        self.step_index = step_index
        self.trajectory: Optional['Trajectory'] = None


class SpectralGapError(ValueError):
    """孤立波速度不满足谱隙条件，或该 p 下不存在此类孤立波"""


class SolitaryWaveError(RuntimeError):
    """Petviashvili 迭代未收敛"""

    def __init__(self, message: str, last_residual: float, iterations: int):
        super().__init__(message)
        self.last_residual = last_residual
        self.iterations = iterations


@dataclass
class SolverConfig:
    """时间推进配置"""
    dt: float
    t_end: float
    integrator: Integrator = Integrator.ETDRK4
    dealias: Dealias = Dealias.TWO_THIRDS
    mollifier: Optional[MollifierSpec] = None
    snapshot_stride: int = 1
    cfl_guard: float = 1.0
    nonlinear: bool = True
    keep_snapshots: bool = True
    # 积分器常数 C_int
    c_int: float = 1.0

    def __post_init__(self):
        self.integrator = Integrator(self.integrator)
        self.dealias = Dealias(self.dealias)
        if not (self.dt > 0 and np.isfinite(self.dt)):
            raise ValueError(f"dt 必须为正: {self.dt}")
        if not (self.t_end >= 0 and np.isfinite(self.t_end)):
            raise ValueError(f"t_end 必须非负: {self.t_end}")
        if int(self.snapshot_stride) != self.snapshot_stride or self.snapshot_stride < 1:
            raise ValueError(f"snapshot_stride 必须是正整数: {self.snapshot_stride}")
        if not (0.0 < self.cfl_guard <= 1.0):
            raise ValueError(f"cfl_guard 必须在 (0, 1] 内: {self.cfl_guard}")
        n = self.t_end / self.dt
        if abs(n - round(n)) > 1e-9 * max(1.0, n):
            raise ValueError(f"t_end = {self.t_end} 不是 dt = {self.dt} 的整数倍")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    @property
    def dealias_enabled(self) -> bool:
        return self.dealias is Dealias.TWO_THIRDS

    def dt_cap(self, grid: Grid, params: ModelParams, u_max: float) -> float:
        """非线性项的平流步长上限 C_int / (k_cut · max|u|^p)"""
        rate = dealias_cutoff(grid, params.p, self.dealias_enabled) * u_max ** params.p
        return np.inf if rate <= 0 else self.c_int / rate


@dataclass
class SolverState:
    t: float
    u_hat: SpectralField
    step_count: int
    params: ModelParams

    def copy(self) -> 'SolverState':
        return SolverState(self.t, self.u_hat.copy(), self.step_count, self.params)

    @property
    def grid(self) -> Grid:
        return self.u_hat.grid


@dataclass
class Snapshot:
    t: float
    step: int
    u_hat: SpectralField


@dataclass
class Trajectory:
    """快照序列；快照时间等距"""
    grid: Grid
    params: ModelParams
    config: SolverConfig
    snapshots: List[Snapshot] = field(default_factory=list)
    final_state: Optional[SolverState] = None

    def __len__(self) -> int:
        return len(self.snapshots)

    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.snapshots])

    def spectra(self) -> np.ndarray:
        """形状 (快照数, 半谱模式数)"""
        if not self.snapshots:
            return np.zeros((0, self.grid.n_modes), dtype=complex)
        return np.stack([s.u_hat.coeffs for s in self.snapshots])

    def spacing(self) -> float:
        t = self.times()
        if len(t) < 2:
            raise ValueError("轨迹快照少于 2 个，无法确定时间间隔")
        steps = np.diff(t)
        h = float(np.mean(steps))
        if np.max(np.abs(steps - h)) > 1e-9 * max(1.0, abs(h)):
            raise ValueError("轨迹快照时间不等距")
        return h

    def window(self, t_lo: float, t_hi: float) -> 'Trajectory':
        tol = 1e-9 * max(1.0, abs(t_lo), abs(t_hi))
        kept = [s for s in self.snapshots if t_lo - tol <= s.t <= t_hi + tol]
        return replace(self, snapshots=kept)

    def covers(self, t_lo: float, t_hi: float) -> bool:
        if not self.snapshots:
            return False
        tol = 1e-9 * max(1.0, abs(t_lo), abs(t_hi))
        return self.snapshots[0].t <= t_lo + tol and self.snapshots[-1].t >= t_hi - tol


Sink = Callable[[float, SolverState], None]


def nonlinear_term(u_hat: SpectralField, params: ModelParams,
                   dealias: Dealias = Dealias.TWO_THIRDS,
                   mollifier: Optional[MollifierSpec] = None) -> SpectralField:
    """−(1/(p+1))∂ₓ(v^{p+1})，v = u 或 η_n ∗ u；乘积前后各做一次去混叠截断"""
    grid = u_hat.grid
    mask = dealias_mask(grid, params.p, Dealias(dealias) is Dealias.TWO_THIRDS)
    coeffs = u_hat.coeffs * mask
    if mollifier is not None:
        coeffs = coeffs * mollifier.symbol(grid.wavenumbers)
    v = to_real(u_hat.with_coeffs(coeffs)).values
    w_hat = to_spectral(RealField(grid, v ** (params.p + 1))).coeffs * mask
    out = (-1j * grid.wavenumbers / (params.p + 1)) * w_hat
    out[0] = 0.0
    return u_hat.with_coeffs(out)


@dataclass(frozen=True)
class _LinearCoefficients:
    E: np.ndarray
    E2: np.ndarray
    Q: np.ndarray
    f1: np.ndarray
    f2: np.ndarray
    f3: np.ndarray


@lru_cache(maxsize=32)
def _linear_coefficients(grid: Grid, params: ModelParams, dt: float) -> _LinearCoefficients:
    E = propagator_symbol(params, grid, dt)
    E2 = propagator_symbol(params, grid, dt / 2)
    Lh = 1j * phase_symbol(params, grid.wavenumbers) * dt
    Lh[-1] = 0.0
    # 在 Lh 周围单位圆上取平均，避开 ETD 系数函数的可去奇点
    roots = np.exp(2j * np.pi * (np.arange(1, CONTOUR_POINTS + 1) - 0.5) / CONTOUR_POINTS)
    r = Lh[:, None] + roots[None, :]
    er = np.exp(r)
    Q = dt * np.mean((np.exp(r / 2) - 1.0) / r, axis=1)
    f1 = dt * np.mean((-4.0 - r + er * (4.0 - 3.0 * r + r ** 2)) / r ** 3, axis=1)
    f2 = dt * np.mean((2.0 + r + er * (r - 2.0)) / r ** 3, axis=1)
    f3 = dt * np.mean((-4.0 - 3.0 * r - r ** 2 + er * (4.0 - r)) / r ** 3, axis=1)
    return _LinearCoefficients(E=E, E2=E2, Q=Q, f1=f1, f2=f2, f3=f3)


def step(state: SolverState, cfg: SolverConfig) -> SolverState:
    """推进一步 dt；关闭非线性时等于 linear_propagator(dt)"""
    grid = state.grid
    params = state.params
    lc = _linear_coefficients(grid, params, float(cfg.dt))
    v = state.u_hat.coeffs
    h = cfg.dt

    def N(c: np.ndarray) -> np.ndarray:
        return nonlinear_term(state.u_hat.with_coeffs(c), params, cfg.dealias, cfg.mollifier).coeffs

    try:
        if not cfg.nonlinear:
            new = lc.E * v
        elif cfg.integrator is Integrator.ETDRK4:
            Nv = N(v)
            a = lc.E2 * v + lc.Q * Nv
            Na = N(a)
            b = lc.E2 * v + lc.Q * Na
            Nb = N(b)
            c = lc.E2 * a + lc.Q * (2.0 * Nb - Nv)
            Nc = N(c)
            new = lc.E * v + Nv * lc.f1 + 2.0 * (Na + Nb) * lc.f2 + Nc * lc.f3
        else:
            k1 = h * N(v)
            k2 = h * N(lc.E2 * (v + k1 / 2))
            k3 = h * N(lc.E2 * v + k2 / 2)
            k4 = h * N(lc.E * v + lc.E2 * k3)
            new = lc.E * v + (lc.E * k1 + 2.0 * lc.E2 * (k2 + k3) + k4) / 6.0
    except (SpectralError, FloatingPointError) as e:
        raise SolverError(f"第 {state.step_count + 1} 步中间量非有限: {e}",
                          state.copy(), state.step_count + 1) from e

    if not np.all(np.isfinite(new)):
        raise SolverError(f"第 {state.step_count + 1} 步出现 NaN/Inf",
                          state.copy(), state.step_count + 1)
    new = new.copy()
    new[0] = new[0].real
    new[-1] = new[-1].real
    return SolverState(
        t=(state.step_count + 1) * cfg.dt,
        u_hat=state.u_hat.with_coeffs(new),
        step_count=state.step_count + 1,
        params=params,
    )


def initial_state(u0: RealField, params: ModelParams) -> SolverState:
    return SolverState(t=0.0, u_hat=to_spectral(u0), step_count=0, params=params)


def check_step_size(state: SolverState, cfg: SolverConfig):
    if not cfg.nonlinear:
        return
    u_max = float(np.max(np.abs(to_real(state.u_hat).values)))
    cap = cfg.dt_cap(state.grid, state.params, u_max)
    if cfg.dt > cfg.cfl_guard * cap:
        raise StepSizeError(
            f"dt = {cfg.dt:g} 超过上限 cfl_guard·dt_cap = {cfg.cfl_guard * cap:.4g} "
            f"(max|u| = {u_max:.4g})"
        )


def integrate(u0: Optional[RealField], params: ModelParams, cfg: SolverConfig,
              sinks: Sequence[Sink] = (), start: Optional[SolverState] = None) -> Trajectory:
    """
    从 u0 (或续算状态 start) 推进到 t_end，每 snapshot_stride 步调用一次各 sink。
    续算时起始步已在上一段输出过，不再重复调用 sink。
    """
    if start is None:
        if u0 is None:
            raise ValueError("需要初值 u0 或续算状态")
        state = initial_state(u0, params)
        first_emit = True
    else:
        state = start.copy()
        first_emit = False
    grid = state.grid
    traj = Trajectory(grid=grid, params=params, config=cfg)
    check_step_size(state, cfg)

    def emit(s: SolverState):
        if cfg.keep_snapshots:
            traj.snapshots.append(Snapshot(s.t, s.step_count, s.u_hat.copy()))
        for sink in sinks:
            sink(s.t, s)

    if first_emit:
        emit(state)
    n_total = cfg.n_steps
    logger.info(f"开始推进: {state.step_count} -> {n_total} 步, dt={cfg.dt:g}, "
                f"积分器={cfg.integrator.value}, N={grid.n_points}")
    try:
        while state.step_count < n_total:
            state = step(state, cfg)
            if state.step_count % cfg.snapshot_stride == 0:
                emit(state)
    except SolverError as e:
        traj.final_state = e.last_good_state
        e.trajectory = traj
        logger.error(f"推进失败: {e}")
        raise
    traj.final_state = state
    return traj


def integrate_bidirectional(u0: RealField, params: ModelParams, cfg: SolverConfig,
                            t_before: float, t_after: float) -> Trajectory:
    """
    [−t_before, t_after] 上的轨迹。后向部分利用可逆性 u(x,−t) = v(−x,t)，
    其中 v 以 u0(−x) 为初值正向推进。
    """
    forward = integrate(u0, params, replace(cfg, t_end=t_after, keep_snapshots=True))
    back_cfg = replace(cfg, t_end=t_before, keep_snapshots=True)
    if back_cfg.n_steps % cfg.snapshot_stride:
        raise ValueError("t_before 必须是 dt·snapshot_stride 的整数倍")
    mirrored = to_real(reflect(to_spectral(u0)))
    backward = integrate(mirrored, params, back_cfg)
    snaps = [Snapshot(-s.t, -s.step, reflect(s.u_hat)) for s in reversed(backward.snapshots[1:])]
    snaps.extend(forward.snapshots)
    return Trajectory(grid=forward.grid, params=params, config=cfg,
                      snapshots=snaps, final_state=forward.final_state)


def translate(F: SpectralField, shift: float) -> SpectralField:
    """u(x) -> u(x − shift)"""
    symbol = np.exp(-1j * F.grid.wavenumbers * shift)
    symbol[-1] = symbol[-1].real
    return F.with_coeffs(F.coeffs * symbol)


@dataclass
class SolitaryWave:
    profile: RealField
    speed: float
    residual: float
    iterations: int
    residual_history: List[float]
    stabilizing_factor: float


def _traveling_symbol(params: ModelParams, c: float, grid: Grid) -> np.ndarray:
    k = grid.wavenumbers
    return k ** 2 - params.l * k - c


def _check_spectral_gap(params: ModelParams, c: float):
    if params.p % 2 == 0:
        raise SpectralGapError(
            f"p = {params.p} 为偶数: ∫U^(p+2) >= 0 与 ⟨L_c U, U⟩ > 0 矛盾，"
            f"不存在满足 c < -l²/4 的孤立波"
        )
    bound = -params.l ** 2 / 4.0
    if not c < bound:
        raise SpectralGapError(f"谱隙条件 c < -l²/4 不成立: c = {c:g}, -l²/4 = {bound:g}")


def _initial_guess(params: ModelParams, c: float, grid: Grid) -> RealField:
    # l = 0 时的精确解，作为一般 l 的起点
    p = params.p
    a = ((p + 1) * (p + 2) * (-c) / 2.0) ** (1.0 / p)
    arg = p * np.sqrt(-c) * grid.x / 2.0
    return RealField(grid, -a / np.cosh(arg) ** (2.0 / p))


def _spectral_norm(grid: Grid, coeffs: np.ndarray) -> float:
    return float(np.sqrt(np.sum(grid.mode_weights * np.abs(coeffs) ** 2) / grid.length))


def petviashvili_iteration(params: ModelParams, c: float, grid: Grid, tol: float = 1e-10,
                           max_iter: int = 500,
                           guess: Optional[RealField] = None) -> SolitaryWave:
    """
    求解 L_c Û + (1/(p+1))ℱ[U^{p+1}] = 0，L_c(k) = k² − l|k| − c。
    Petviashvili 稳定化因子 M^γ，γ = (p+1)/p。
    """
    if not tol > 0:
        raise ValueError(f"tol 必须为正: {tol}")
    _check_spectral_gap(params, c)
    p = params.p
    gamma = (p + 1.0) / p
    L = _traveling_symbol(params, c, grid)
    w = grid.mode_weights
    u_hat = to_spectral(guess if guess is not None else _initial_guess(params, c, grid)).coeffs
    history: List[float] = []
    M = 1.0
    residual = np.inf
    for it in range(1, max_iter + 1):
        u = to_real(SpectralField(grid, u_hat)).values
        n_hat = -to_spectral(RealField(grid, u ** (p + 1))).coeffs / (p + 1)
        norm = _spectral_norm(grid, u_hat)
        if norm == 0:
            raise SolitaryWaveError("迭代退化为零解", np.inf, it)
        residual = _spectral_norm(grid, L * u_hat - n_hat) / norm
        history.append(residual)
        if residual < tol:
            logger.info(f"Petviashvili 收敛: {it} 次迭代, 残差 {residual:.3e}, M = {M:.12f}")
            return SolitaryWave(
                profile=RealField(grid, u), speed=c, residual=residual,
                iterations=it, residual_history=history, stabilizing_factor=M,
            )
        num = float(np.sum(w * L * np.abs(u_hat) ** 2))
        den = float(np.sum(w * np.real(np.conj(u_hat) * n_hat)))
        if den <= 0:
            raise SolitaryWaveError(f"稳定化因子分母非正 ({den:.3e})，初值极性错误", residual, it)
        M = num / den
        u_hat = M ** gamma * n_hat / L
        u_hat[0] = u_hat[0].real
        u_hat[-1] = u_hat[-1].real
    raise SolitaryWaveError(
        f"Petviashvili 在 {max_iter} 次迭代内未收敛，最后残差 {residual:.3e}", residual, max_iter
    )


def petviashvili_solitary_wave(params: ModelParams, c: float, grid: Grid,
                               tol: float = 1e-10, max_iter: int = 500) -> RealField:
    return petviashvili_iteration(params, c, grid, tol, max_iter).profile


def traveling_wave_residual(params: ModelParams, c: float, U: RealField) -> float:
    """u(x,t) = U(x − ct) 代入含时方程的相对残差"""
    grid = U.grid
    p = params.p
    k = grid.wavenumbers
    u_hat = to_spectral(U).coeffs
    power = to_spectral(RealField(grid, U.values ** (p + 1))).coeffs
    ode = _traveling_symbol(params, c, grid) * u_hat + power / (p + 1)
    r = 1j * k * ode
    r[-1] = 0.0
    return _spectral_norm(grid, r) / _spectral_norm(grid, u_hat)


def max_abs_difference(a: SpectralField, b: SpectralField) -> float:
    return float(np.max(np.abs(to_real(a).values - to_real(b).values)))

