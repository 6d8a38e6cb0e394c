#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Fourier 乘子算子
Hilbert 变换、导数、相位函数与线性群、Gevrey / Sobolev 权、频率投影、磨光截断

所有算子作用在半谱上并返回新的 SpectralField，实场映射为实场。
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Optional, Union

import numpy as np

from spectral_core import Grid, SpectralField

logger = logging.getLogger(__name__)

# e^x 在 x ≈ 709 处溢出双精度
OVERFLOW_GUARD = 700.0

ArrayLike = Union[float, np.ndarray]


class OverflowGuardError(ValueError):
    """指数权的参数超过溢出保护阈值"""

    def __init__(self, exponent: float, what: str = "σ·k_max"):
        self.exponent = float(exponent)
        super().__init__(f"{what} = {exponent:.6g} 超过溢出保护阈值 {OVERFLOW_GUARD:g}")


@dataclass(frozen=True)
class ModelParams:
    """方程参数 ∂ₜu − lℋ∂ₓ²u − ∂ₓ³u + u^p∂ₓu = 0"""
    l: float
    p: int

    def __post_init__(self):
        if not (0.0 <= self.l < 1.0):
            raise ValueError(f"l 必须满足 0 <= l < 1: {self.l}")
        if int(self.p) != self.p or self.p < 1:
            raise ValueError(f"p 必须是正整数: {self.p}")


@dataclass(frozen=True)
class GevreyIndex:
    """G^{σ,s} 的指标 (σ, s)；σ = 0 退化为 H^s"""
    sigma: float
    s: float = 0.0

    def __post_init__(self):
        if not (self.sigma >= 0.0):
            raise ValueError(f"sigma 必须非负: {self.sigma}")

    @property
    def label(self) -> str:
        return f"gevrey[{self.sigma:g};{self.s:g}]"


class RampProfile(Enum):
    """η̂_n 在 n <= |k| <= 2n 上的过渡形状"""
    LINEAR = "linear"
    COSINE = "cosine"
    SMOOTH = "smooth"


@dataclass(frozen=True)
class MollifierSpec:
    """η̂_n: |k| <= n 时为 1，|k| >= 2n 时为 0，中间单调"""
    n: float
    profile: RampProfile = RampProfile.LINEAR

    def __post_init__(self):
        if not (self.n > 0 and np.isfinite(self.n)):
            raise ValueError(f"磨光截断 n 必须为正: {self.n}")

    def symbol(self, k: np.ndarray) -> np.ndarray:
        y = np.clip((np.abs(k) - self.n) / self.n, 0.0, 1.0)
        if self.profile is RampProfile.LINEAR:
            return 1.0 - y
        if self.profile is RampProfile.COSINE:
            return 0.5 * (1.0 + np.cos(np.pi * y))
        return smooth_step_down(y)


class ProjectionSide(Enum):
    HIGH = "high"
    LOW = "low"


def _exp_inv(y: np.ndarray) -> np.ndarray:
    out = np.zeros_like(y, dtype=float)
    pos = y > 0
    out[pos] = np.exp(-1.0 / y[pos])
    return out


def smooth_step_down(y: np.ndarray) -> np.ndarray:
    """C∞ 过渡: y <= 0 为 1，y >= 1 为 0"""
    y = np.asarray(y, dtype=float)
    a = _exp_inv(1.0 - y)
    b = _exp_inv(y)
    return a / (a + b)


def _nyquist_free(grid: Grid, symbol: np.ndarray) -> np.ndarray:
    # Nyquist 模式自共轭，奇符号在该处无定义
    symbol = np.array(symbol, dtype=complex)
    symbol[-1] = 0.0
    return symbol


def _apply(F: SpectralField, symbol: np.ndarray) -> SpectralField:
    return F.with_coeffs(F.coeffs * symbol)


def check_overflow(exponent: float, what: str = "σ·k_max"):
    if exponent > OVERFLOW_GUARD:
        raise OverflowGuardError(exponent, what)


def hilbert(F: SpectralField) -> SpectralField:
    """ℋ: 乘子 −i·sgn(k)，sgn(0) = 0"""
    k = F.grid.wavenumbers
    return _apply(F, _nyquist_free(F.grid, -1j * np.sign(k)))


def derivative(F: SpectralField, order: int = 1) -> SpectralField:
    """∂ₓ^order: 乘子 (ik)^order，奇数阶时 Nyquist 置零"""
    if int(order) != order or order < 1:
        raise ValueError(f"导数阶数必须是正整数: {order}")
    k = F.grid.wavenumbers
    symbol = (1j * k) ** order
    if order % 2:
        symbol = _nyquist_free(F.grid, symbol)
    else:
        symbol = symbol.real.astype(complex)
    return _apply(F, symbol)


def phase_symbol(params: ModelParams, k: ArrayLike) -> ArrayLike:
    """φ(k) = l|k|k − k³"""
    k = np.asarray(k, dtype=float)
    result = params.l * np.abs(k) * k - k ** 3
    return float(result) if result.ndim == 0 else result


def propagator_symbol(params: ModelParams, grid: Grid, t: float) -> np.ndarray:
    """e^{iφ(k)t}；Nyquist 模式保持不变"""
    symbol = np.exp(1j * phase_symbol(params, grid.wavenumbers) * t)
    symbol[-1] = 1.0
    return symbol


def linear_propagator(params: ModelParams, t: float, F: SpectralField) -> SpectralField:
    """线性群 W(t): 每个系数乘以单模因子 e^{iφ(k)t}"""
    if t == 0:
        return F.copy()
    return _apply(F, propagator_symbol(params, F.grid, t))


def gevrey_symbol(grid: Grid, sigma: float) -> np.ndarray:
    if sigma < 0:
        raise ValueError(f"sigma 必须非负: {sigma}")
    check_overflow(sigma * grid.k_max)
    return np.exp(sigma * grid.wavenumbers)


def gevrey_multiplier(sigma: float, F: SpectralField) -> SpectralField:
    """e^{σ|Dₓ|}: 乘子 e^{σ|k|}"""
    return _apply(F, gevrey_symbol(F.grid, sigma))


def bracket(x: ArrayLike) -> ArrayLike:
    """⟨x⟩ := 1 + |x|"""
    return 1.0 + np.abs(x)


def sobolev_multiplier(s: float, F: SpectralField) -> SpectralField:
    """A^s: 乘子 ⟨k⟩^s"""
    return _apply(F, bracket(F.grid.wavenumbers) ** s)


def project(F: SpectralField, a: float, side: ProjectionSide) -> SpectralField:
    """频率投影: HIGH 保留 |k| > a，LOW 保留 |k| <= a (边界归低频)"""
    if not a > 0:
        raise ValueError(f"投影阈值必须为正: {a}")
    side = ProjectionSide(side)
    k = F.grid.wavenumbers
    keep = k > a if side is ProjectionSide.HIGH else k <= a
    return _apply(F, keep.astype(float))


def mollify(F: SpectralField, m: MollifierSpec) -> SpectralField:
    """η_n ∗ u: 乘子 η̂_n(k)"""
    return _apply(F, m.symbol(F.grid.wavenumbers))


@dataclass
class ExpLemmaProbe:
    """指数不等式两侧的值；数组输入时逐点给出"""
    lhs: ArrayLike
    rhs: ArrayLike
    holds: ArrayLike
    bracket_lhs: ArrayLike
    bracket_rhs: ArrayLike
    bracket_holds: ArrayLike
    opposite_signs: ArrayLike

    @property
    def slack(self) -> ArrayLike:
        """lhs / rhs，rhs = 0 处记为 0"""
        rhs = np.asarray(self.rhs, dtype=float)
        lhs = np.asarray(self.lhs, dtype=float)
        out = np.zeros(np.broadcast(lhs, rhs).shape)
        np.divide(lhs, rhs, out=out, where=rhs > 0)
        return out if out.ndim else float(out)


def exp_lemma_probe(alpha: ArrayLike, beta: ArrayLike, sigma: ArrayLike,
                    theta: ArrayLike) -> ExpLemmaProbe:
    """
    计算
        e^{σ|α|}e^{σ|β|} − e^{σ|α+β|} <= [2σ min(|α|,|β|)]^θ e^{σ|α|}e^{σ|β|}
    以及 min(|α|,|β|) <= ⟨α⟩⟨β⟩/⟨α+β⟩。

    第二个不等式只在 αβ <= 0 时成立 (同号时第一个不等式左侧为零)，
    opposite_signs 标出适用的样本。
    """
    alpha, beta, sigma, theta = (np.asarray(v, dtype=float) for v in (alpha, beta, sigma, theta))
    a, b = np.abs(alpha), np.abs(beta)
    check_overflow(float(np.max(sigma * np.maximum(a, b))), "σ·max(|α|,|β|)")

    product = np.exp(sigma * (a + b))
    smaller = np.minimum(a, b)
    # |α| + |β| − |α+β|: 异号时为 2·min(|α|,|β|)，同号时为 0
    gap = np.where(alpha * beta < 0, 2.0 * smaller, 0.0)
    lhs = -product * np.expm1(-sigma * gap)
    rhs = (2.0 * sigma * smaller) ** theta * product
    holds = lhs <= rhs * (1.0 + 1e-12)

    bracket_rhs = bracket(alpha) * bracket(beta) / bracket(alpha + beta)
    bracket_holds = smaller <= bracket_rhs * (1.0 + 1e-12)
    opposite = alpha * beta <= 0

    def _out(v):
        return v if np.ndim(v) else v.item()

    return ExpLemmaProbe(
        lhs=_out(lhs), rhs=_out(rhs), holds=_out(holds),
        bracket_lhs=_out(smaller), bracket_rhs=_out(bracket_rhs),
        bracket_holds=_out(bracket_holds), opposite_signs=_out(opposite),
    )


@dataclass(frozen=True)
class WellPosednessRegime:
    """模型在理论上的适用范围"""
    local_gevrey_s: str
    global_h1: str
    solitary_waves: str
    radius_exponent: float

    def to_dict(self) -> Dict[str, object]:
        return {
            'local_gevrey_s': self.local_gevrey_s,
            'global_h1': self.global_h1,
            'solitary_waves': self.solitary_waves,
            'radius_exponent': self.radius_exponent,
        }


def radius_exponent(p: int, epsilon: float = 0.0) -> float:
    """σ(T) 代数下界的指数: p = 1 为 4/3 + ε，p >= 2 为 p² + 3p + 2"""
    if p == 1:
        return 4.0 / 3.0 + epsilon
    return float(p * p + 3 * p + 2)


def well_posedness_regime(params: ModelParams, epsilon: float = 0.0) -> WellPosednessRegime:
    p = params.p
    if p < 4:
        global_h1 = "unrestricted"
    elif p == 4:
        global_h1 = "small data"
    else:
        global_h1 = "small data only"
    if p < 4:
        solitary = "stable"
    elif p == 4:
        solitary = "critical"
    else:
        solitary = "unstable"
    local_s = "(-3/4, 0]" if p == 1 else "(3/2, inf)"
    return WellPosednessRegime(
        local_gevrey_s=local_s,
        global_h1=global_h1,
        solitary_waves=solitary,
        radius_exponent=radius_exponent(p, epsilon),
    )


def dealias_cutoff(grid: Grid, p: int, enabled: bool = True) -> float:
    """2/3 规则；p >= 2 时收紧到 k_max·2/(p+2)"""
    if not enabled:
        return grid.k_max
    ratio = 2.0 / 3.0 if p == 1 else 2.0 / (p + 2)
    return ratio * grid.k_max


def dealias_mask(grid: Grid, p: int, enabled: bool = True) -> np.ndarray:
    mask = (grid.wavenumbers <= dealias_cutoff(grid, p, enabled)).astype(float)
    mask[-1] = 0.0
    return mask


def optional_mollify(F: SpectralField, m: Optional[MollifierSpec]) -> SpectralField:
    return F if m is None else mollify(F, m)
