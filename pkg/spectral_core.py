#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
周期网格、谱变换与场容器
实数场采用半谱存储 (rfft)，Hermitian 对称性自动成立

变换约定:
    正变换  û(k_m) = dx · Σ_j e^{-i k_m x_j} u(x_j)
    逆变换  u(x_j) = (1/L) · Σ_m e^{i k_m x_j} û(k_m)   (对全谱求和)
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
from scipy import fft as sp_fft

logger = logging.getLogger(__name__)

# 逆变换时允许的 k=0 / Nyquist 虚部 (相对最大系数)
SYMMETRY_TOLERANCE = 1e-10


class SpectralError(ValueError):
    """场或谱不满足有限性 / 对称性要求"""


@dataclass(frozen=True)
class Grid:
    """周期网格 [-L/2, L/2)，n_points 为偶数且不少于 8"""
    n_points: int
    length: float

    def __post_init__(self):
        if int(self.n_points) != self.n_points or self.n_points < 8 or self.n_points % 2:
            raise SpectralError(f"n_points 必须是 >= 8 的偶数: {self.n_points}")
        if not (np.isfinite(self.length) and self.length > 0):
            raise SpectralError(f"length 必须为正: {self.length}")

    @property
    def dx(self) -> float:
        return self.length / self.n_points

    @property
    def x0(self) -> float:
        return -0.5 * self.length

    @cached_property
    def x(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.n_points)

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """半谱波数 k_m = 2πm/L, m = 0 … N/2"""
        return 2.0 * np.pi * np.arange(self.n_points // 2 + 1) / self.length

    @property
    def n_modes(self) -> int:
        return self.n_points // 2 + 1

    @property
    def k_max(self) -> float:
        """Nyquist 波数"""
        return np.pi * self.n_points / self.length

    @cached_property
    def mode_weights(self) -> np.ndarray:
        """半谱在全谱求和中的重数: k=0 与 Nyquist 为 1，其余为 2"""
        w = np.full(self.n_modes, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        return w

    @cached_property
    def _shift(self) -> np.ndarray:
        # 节点从 -L/2 开始: e^{-i k_m x0} = (-1)^m，取精确值
        return (-1.0) ** np.arange(self.n_modes)

    def full_wavenumbers(self) -> np.ndarray:
        """全谱波数 m = -N/2+1 … N/2 (按升序)"""
        m = np.arange(-self.n_points // 2 + 1, self.n_points // 2 + 1)
        return 2.0 * np.pi * m / self.length

    def describe(self) -> dict:
        return {'n_points': self.n_points, 'length': self.length, 'dx': self.dx, 'k_max': self.k_max}


@dataclass
class RealField:
    """实值状态 u(x_j)"""
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n_points,):
            raise SpectralError(
                f"场长度 {self.values.shape} 与网格点数 {self.grid.n_points} 不一致"
            )

    @classmethod
    def from_function(cls, grid: Grid, f: Callable[[np.ndarray], np.ndarray]) -> 'RealField':
        return cls(grid, f(grid.x))

    @classmethod
    def zeros(cls, grid: Grid) -> 'RealField':
        return cls(grid, np.zeros(grid.n_points))

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))

    def copy(self) -> 'RealField':
        return RealField(self.grid, self.values.copy())


@dataclass
class SpectralField:
    """半谱系数 û(k_m), m = 0 … N/2"""
    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if self.coeffs.shape != (self.grid.n_modes,):
            raise SpectralError(
                f"谱长度 {self.coeffs.shape} 与半谱模式数 {self.grid.n_modes} 不一致"
            )

    @classmethod
    def zeros(cls, grid: Grid) -> 'SpectralField':
        return cls(grid, np.zeros(grid.n_modes, dtype=complex))

    def with_coeffs(self, coeffs: np.ndarray) -> 'SpectralField':
        return SpectralField(self.grid, coeffs)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.coeffs)))

    def copy(self) -> 'SpectralField':
        return SpectralField(self.grid, self.coeffs.copy())

    def symmetry_defect(self) -> float:
        """k=0 与 Nyquist 系数虚部的相对大小"""
        scale = max(1.0, float(np.max(np.abs(self.coeffs))))
        return max(abs(self.coeffs[0].imag), abs(self.coeffs[-1].imag)) / scale

    def full_spectrum(self) -> np.ndarray:
        """展开为全谱 (与 Grid.full_wavenumbers 同序)"""
        c = self.coeffs
        negative = np.conj(c[1:-1][::-1])
        return np.concatenate([negative, c])


def to_spectral(f: RealField) -> SpectralField:
    """物理空间 -> 半谱，系数带 dx 因子以逼近连续 Fourier 变换"""
    if not f.is_finite():
        bad = int(np.count_nonzero(~np.isfinite(f.values)))
        raise SpectralError(f"输入场含 {bad} 个非有限值")
    grid = f.grid
    coeffs = grid.dx * grid._shift * sp_fft.rfft(f.values)
    # k=0 与 Nyquist 的相位因子为 ±1，去掉舍入产生的虚部
    coeffs[0] = coeffs[0].real
    coeffs[-1] = coeffs[-1].real
    return SpectralField(grid, coeffs)


def to_real(F: SpectralField) -> RealField:
    """半谱 -> 物理空间，to_spectral 的精确逆"""
    if not F.is_finite():
        raise SpectralError("谱系数含非有限值")
    defect = F.symmetry_defect()
    if defect > SYMMETRY_TOLERANCE:
        raise SpectralError(f"Hermitian 对称性被破坏: k=0/Nyquist 虚部相对大小 {defect:.3e}")
    grid = F.grid
    values = sp_fft.irfft(grid._shift * F.coeffs, n=grid.n_points) / grid.dx
    return RealField(grid, values)


def l2_inner(F: SpectralField, G: SpectralField) -> float:
    """离散 L² 内积 Σ_j f g dx，在谱空间计算"""
    w = F.grid.mode_weights
    return float(np.sum(w * np.real(np.conj(F.coeffs) * G.coeffs)) / F.grid.length)


def l2_norm_squared(F: SpectralField) -> float:
    w = F.grid.mode_weights
    return float(np.sum(w * np.abs(F.coeffs) ** 2) / F.grid.length)


def reflect(F: SpectralField) -> SpectralField:
    """x -> -x 的反射；实场的半谱取共轭"""
    return SpectralField(F.grid, np.conj(F.coeffs))
