#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
解析半径估计与 σ(T) 下界审计

半径由 Fourier 系数衰减 |û(k)| ≈ C|k|^{−r}e^{−σ|k|} 拟合得到，
再以 σ(t) ~ c·t^{−γ} 拟合衰减律并与理论指数比较。
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import linalg

from spectral_core import SpectralField
from operators import dealias_cutoff, radius_exponent
from solver import Trajectory

logger = logging.getLogger(__name__)

MIN_FIT_POINTS = 8
DECAY_TOLERANCE = 0.2
DEFAULT_EPSILON = 0.01


class RadiusFitError(ValueError):
    """可用的谱点不足，或谱全为零"""


class PlateauRegime(Exception):
    """σ(t) 始终停留在 σ₀ 附近，下界中的 min 未被激活"""

    def __init__(self, sigma0: float, spread: float):
        super().__init__(f"σ(t) 未离开 σ₀ = {sigma0:.6g} (相对偏离 {spread:.3%})，下界未激活")
        self.sigma0 = sigma0
        self.spread = spread


@dataclass(frozen=True)
class RadiusFitOptions:
    """k_lo / k_hi 缺省时取 k_max/4 与去混叠截断"""
    k_lo: Optional[float] = None
    k_hi: Optional[float] = None
    noise_floor: float = 1e-13
    envelope_width: int = 5
    min_points: int = MIN_FIT_POINTS

    def __post_init__(self):
        if self.envelope_width < 1 or self.envelope_width % 2 == 0:
            raise ValueError(f"envelope_width 必须是正奇数: {self.envelope_width}")
        if not (0.0 <= self.noise_floor < 1.0):
            raise ValueError(f"noise_floor 必须在 [0, 1) 内: {self.noise_floor}")
        if self.min_points < 3:
            raise ValueError(f"min_points 至少为 3: {self.min_points}")


@dataclass
class RadiusFit:
    sigma: float
    r: float
    logC: float
    k_window: Tuple[float, float]
    rms_residual: float
    n_points_used: int
    clamped: bool = False
    raw_sigma: Optional[float] = None

    def to_dict(self) -> Dict[str, object]:
        return {
            'sigma': self.sigma, 'r': self.r, 'logC': self.logC,
            'k_window': list(self.k_window), 'rms_residual': self.rms_residual,
            'n_points_used': self.n_points_used, 'clamped': self.clamped,
            'raw_sigma': self.raw_sigma,
        }


def _envelope_points(a: np.ndarray, width: int) -> Tuple[np.ndarray, np.ndarray]:
    """滑动最大值包络；返回取到各窗口最大值的模式下标及其出现次数"""
    half = width // 2
    padded = np.concatenate([np.full(half, -1.0), a, np.full(half, -1.0)])
    windows = sliding_window_view(padded, width)
    argmax = np.arange(len(a)) - half + np.argmax(windows, axis=1)
    return np.unique(argmax, return_counts=True)


def fit_radius(F: SpectralField, opts: Optional[RadiusFitOptions] = None, p: int = 1) -> RadiusFit:
    """
    在上频带内对 log|û(k)| 关于 (1, −log k, −k) 做加权线性最小二乘，
    −k 的系数即 σ。负的 σ 截断为 0 并置 clamped。
    """
    opts = opts or RadiusFitOptions()
    grid = F.grid
    k = grid.wavenumbers
    a = np.abs(F.coeffs)
    peak = float(np.max(a))
    if not peak > 0:
        raise RadiusFitError("谱系数全为零")

    k_lo = grid.k_max / 4.0 if opts.k_lo is None else opts.k_lo
    k_hi = dealias_cutoff(grid, p) if opts.k_hi is None else opts.k_hi
    if not (0.0 < k_lo < k_hi):
        raise RadiusFitError(f"拟合窗口无效: [{k_lo:g}, {k_hi:g}]")

    idx, counts = _envelope_points(a, opts.envelope_width)
    keep = (k[idx] >= k_lo) & (k[idx] <= k_hi) & (a[idx] > opts.noise_floor * peak)
    idx, counts = idx[keep], counts[keep]
    if len(idx) < opts.min_points:
        raise RadiusFitError(
            f"窗口 [{k_lo:.4g}, {k_hi:.4g}] 内噪声底以上的包络点只有 {len(idx)} 个 "
            f"(至少需要 {opts.min_points})"
        )

    kk = k[idx]
    y = np.log(a[idx])
    design = np.column_stack([np.ones_like(kk), -np.log(kk), -kk])
    sw = np.sqrt(counts.astype(float))
    coef, _, _, _ = linalg.lstsq(design * sw[:, None], y * sw)
    logC, r, raw_sigma = (float(c) for c in coef)
    rms = float(np.sqrt(np.mean((design @ coef - y) ** 2)))

    clamped = raw_sigma < 0
    if clamped:
        logger.warning(f"拟合得到负的衰减率 σ = {raw_sigma:.4g}，可能分辨率不足，截断为 0")
    return RadiusFit(
        sigma=0.0 if clamped else raw_sigma,
        r=r, logC=logC, k_window=(float(k_lo), float(k_hi)),
        rms_residual=rms, n_points_used=int(len(idx)),
        clamped=clamped, raw_sigma=raw_sigma,
    )


@dataclass
class RadiusSample:
    """时间序列中的一行；拟合失败时 fit 为 None 并记录原因"""
    t: float
    fit: Optional[RadiusFit]
    sigma: Optional[float]
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.fit is not None


def radius_timeseries(traj: Trajectory, opts: Optional[RadiusFitOptions] = None,
                      running_min: bool = False) -> List[RadiusSample]:
    """逐快照拟合 σ；running_min 时 sigma 列取至今为止的最小值"""
    series: List[RadiusSample] = []
    lowest = np.inf
    for snap in traj.snapshots:
        try:
            fit = fit_radius(snap.u_hat, opts, p=traj.params.p)
        except RadiusFitError as e:
            series.append(RadiusSample(t=snap.t, fit=None, sigma=None, error=str(e)))
            continue
        sigma = fit.sigma
        if running_min:
            lowest = min(lowest, sigma)
            sigma = lowest
        series.append(RadiusSample(t=snap.t, fit=fit, sigma=sigma))
    failed = sum(1 for s in series if not s.ok)
    if failed:
        logger.warning(f"{failed}/{len(series)} 个快照半径拟合失败")
    return series


@dataclass
class DecayLawFit:
    gamma: float
    c: float
    t_window: Tuple[float, float]
    rms_residual: float
    n_rows: int = 0
    sigma0: Optional[float] = None

    def to_dict(self) -> Dict[str, object]:
        return {
            'gamma': self.gamma, 'c': self.c, 't_window': list(self.t_window),
            'rms_residual': self.rms_residual, 'n_rows': self.n_rows, 'sigma0': self.sigma0,
        }


def fit_decay_law(series: Sequence[RadiusSample],
                  t_window: Tuple[float, float] = (1.0, np.inf),
                  sigma0: Optional[float] = None,
                  plateau_tol: float = 0.02,
                  min_rows: int = MIN_FIT_POINTS) -> DecayLawFit:
    """
    在 t >= 1 且 σ 已明显低于 σ₀ 的行上对 log σ 关于 log t 做最小二乘。
    σ₀ 缺省取序列第一个有效值。
    """
    valid = [row for row in series if row.sigma is not None]
    if not valid:
        raise RadiusFitError("序列中没有有效的半径拟合")
    if sigma0 is None:
        sigma0 = float(valid[0].sigma)
    t_lo = max(1.0, float(t_window[0]))
    t_hi = float(t_window[1])
    in_window = [row for row in valid if t_lo <= row.t <= t_hi]
    departing = [row for row in in_window if 0 < row.sigma < sigma0 * (1.0 - plateau_tol)]
    if not departing:
        spread = 0.0
        if in_window and sigma0 > 0:
            sig = np.array([row.sigma for row in in_window])
            spread = float(np.max(np.abs(sig - sigma0)) / sigma0)
        raise PlateauRegime(sigma0, spread)
    if len(departing) < min_rows:
        raise RadiusFitError(
            f"窗口 [{t_lo:g}, {t_hi:g}] 内离开平台的行只有 {len(departing)} 个 (至少需要 {min_rows})"
        )

    logt = np.log([row.t for row in departing])
    logs = np.log([row.sigma for row in departing])
    slope, intercept = np.polyfit(logt, logs, 1)
    rms = float(np.sqrt(np.mean((slope * logt + intercept - logs) ** 2)))
    times = [row.t for row in departing]
    return DecayLawFit(
        gamma=float(-slope), c=float(np.exp(intercept)),
        t_window=(float(min(times)), float(max(times))),
        rms_residual=rms, n_rows=len(departing), sigma0=sigma0,
    )


class Verdict(Enum):
    PASS_PLATEAU = "PASS_PLATEAU"
    PASS_BOUND = "PASS_BOUND"
    VIOLATION = "VIOLATION"
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass
class LowerBoundVerdict:
    verdict: Verdict
    p: int
    epsilon: float
    gamma_bound: float
    tolerance: float
    fit: Optional[DecayLawFit] = None
    message: str = ""
    extra: Dict[str, object] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict in (Verdict.PASS_PLATEAU, Verdict.PASS_BOUND)

    def to_dict(self) -> Dict[str, object]:
        return {
            'verdict': self.verdict.value, 'p': self.p, 'epsilon': self.epsilon,
            'gamma_bound': self.gamma_bound, 'tolerance': self.tolerance,
            'fit': self.fit.to_dict() if self.fit else None,
            'message': self.message, **self.extra,
        }


def gamma_bound(p: int, epsilon: float = DEFAULT_EPSILON) -> float:
    return radius_exponent(p, epsilon)


def lower_bound_audit(series: Sequence[RadiusSample], params, epsilon: float = DEFAULT_EPSILON,
                      tolerance: float = DECAY_TOLERANCE,
                      t_window: Tuple[float, float] = (1.0, np.inf),
                      sigma0: Optional[float] = None) -> LowerBoundVerdict:
    """拟合指数 γ 与理论下界指数比较；平台情形直接通过"""
    if not epsilon > 0:
        raise ValueError(f"epsilon 必须为正: {epsilon}")
    bound = gamma_bound(params.p, epsilon)
    base = dict(p=params.p, epsilon=epsilon, gamma_bound=bound, tolerance=tolerance)
    try:
        fit = fit_decay_law(series, t_window, sigma0)
    except PlateauRegime as e:
        return LowerBoundVerdict(verdict=Verdict.PASS_PLATEAU, message=str(e),
                                 extra={'sigma0': e.sigma0, 'spread': e.spread}, **base)
    except RadiusFitError as e:
        logger.warning(f"下界审计无法拟合衰减律: {e}")
        return LowerBoundVerdict(verdict=Verdict.INCONCLUSIVE, message=str(e), **base)

    if fit.gamma < 0:
        # σ 随 t 增大: 离开平台的行来自拟合噪声，下界未被检验
        message = f"γ = {fit.gamma:.4g} < 0，σ(t) 没有衰减"
        logger.warning(f"下界审计无结论 (p = {params.p}): {message}")
        return LowerBoundVerdict(verdict=Verdict.INCONCLUSIVE, fit=fit, message=message, **base)
    if fit.gamma <= bound + tolerance:
        verdict = Verdict.PASS_BOUND
        message = f"γ = {fit.gamma:.4g} <= {bound:.4g} + {tolerance:g}"
    else:
        verdict = Verdict.VIOLATION
        message = f"γ = {fit.gamma:.4g} 超过 {bound:.4g} + {tolerance:g}"
        logger.warning(f"下界审计违例 (p = {params.p}): {message}")
    return LowerBoundVerdict(verdict=verdict, fit=fit, message=message, **base)
