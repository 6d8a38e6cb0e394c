#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
运行配置
逐行 key = value 格式 (点号分段，# 注释)，也接受嵌套 JSON；
用户设置深度合并到 DEFAULT_SETTINGS 之上，再构造各模块的配置对象。
"""

import copy
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from spectral_core import Grid, RealField, SpectralError, SpectralField, to_real
from operators import (
    GevreyIndex, ModelParams, MollifierSpec, RampProfile, OVERFLOW_GUARD, bracket,
)
from solver import Dealias, Integrator, SolverConfig, petviashvili_solitary_wave
from diagnostics import BourgainIndex
from analyticity import RadiusFitOptions

logger = logging.getLogger(__name__)

# 默认设置；每个可识别的键都在这里出现，值的类型决定解析方式
DEFAULT_SETTINGS: Dict[str, Any] = {
    'seed': 0,
    'model': {
        'l': 0.5,
        'p': 1,
    },
    'grid': {
        'n_points': 512,
        'length': 80.0,
    },
    'initial_data': {
        'type': 'gaussian',
        'amplitude': 1.0,
        'width': 2.0,
        'sigma0': 1.0,
        's': 0.0,
        'c': -1.0,
        'path': '',
    },
    'solver': {
        'dt': 1e-3,
        't_end': 1.0,
        'integrator': 'etdrk4',
        'dealias': 'two_thirds',
        'mollifier_n': 0.0,
        'mollifier_profile': 'linear',
        'snapshot_stride': 10,
        'cfl_guard': 1.0,
        'c_int': 1.0,
        'nonlinear': True,
    },
    'diagnostics': {
        'sobolev_s': 1.0,
        'gevrey': '',
        'bourgain': '',
        'radius_fit': True,
        'radius_k_lo': 'auto',
        'radius_k_hi': 'auto',
        'noise_floor': 1e-13,
        'envelope_width': 5,
        'running_min': False,
        'epsilon': 0.01,
        'audit': False,
    },
    'output': {
        'directory': 'runs/default',
        'spectra': False,
        'spectra_stride': 1,
        'checkpoint_stride': 0,
        'plots': True,
    },
    'study': {
        'kind': 'runs',
        'sigmas': '0.4, 0.2, 0.1, 0.05',
        'T': 1.0,
        'theta': 0.5,
        'b': 0.6,
        't_values': '1, 2, 4, 8',
        'amplitudes': '',
        'p': '',
    },
    'probe': {
        'samples': 1000000,
        'batch': 100000,
        'sigma_max': 1.0,
        'alpha_max': 50.0,
        'theta_min': 0.0,
        'theta_max': 1.0,
        'points': '',
    },
    'soliton': {
        'c': -1.0,
        'tol': 1e-10,
        'max_iter': 500,
    },
    'logging': {
        'level': 'INFO',
    },
}

# 不参与配置哈希的键: 运行长度与输出位置可以在续算时改变
HASH_EXCLUDED = ('solver.t_end', 'output', 'logging')

INITIAL_DATA_TYPES = ('gaussian', 'gaussian_spectrum', 'sech', 'soliton', 'file')
STUDY_KINDS = ('runs', 'sigma_audit', 't_scaling')

_TRUE = ('true', 'yes', 'on', '1')
_FALSE = ('false', 'no', 'off', '0')


class ConfigError(ValueError):
    """配置错误，带文件名与行号"""

    def __init__(self, message: str, source: Optional[str] = None, line: Optional[int] = None):
        self.message = message
        self.source = source
        self.line = line
        if source and line:
            prefix = f"{source}:{line}: "
        elif source:
            prefix = f"{source}: "
        else:
            prefix = ""
        super().__init__(prefix + message)


def _default_for(key: str) -> Any:
    node: Any = DEFAULT_SETTINGS
    for part in key.split('.'):
        if not isinstance(node, dict) or part not in node:
            raise KeyError(key)
        node = node[part]
    if isinstance(node, dict):
        raise KeyError(key)
    return node


def _coerce(key: str, raw: Any, source: Optional[str], line: Optional[int]) -> Any:
    default = _default_for(key)
    try:
        if isinstance(default, bool):
            if isinstance(raw, bool):
                return raw
            text = str(raw).strip().lower()
            if text in _TRUE:
                return True
            if text in _FALSE:
                return False
            raise ValueError(raw)
        if isinstance(default, int):
            if isinstance(raw, bool) or (isinstance(raw, float) and not raw.is_integer()):
                raise ValueError(raw)
            return int(raw) if not isinstance(raw, str) else int(raw.strip())
        if isinstance(default, float):
            if isinstance(raw, bool):
                raise ValueError(raw)
            value = float(raw)
            if not np.isfinite(value):
                raise ValueError(raw)
            return value
    except (TypeError, ValueError):
        kind = type(default).__name__
        raise ConfigError(f"{key} 需要 {kind} 类型的值，得到 {raw!r}", source, line)
    if isinstance(raw, (dict, list)):
        raise ConfigError(f"{key} 需要标量值", source, line)
    return str(raw).strip()


def parse_text(text: str, source: str = "<string>") -> Tuple[Dict[str, Any], Dict[str, int]]:
    """解析 key = value 文本，返回 (扁平键值, 键所在行号)"""
    values: Dict[str, Any] = {}
    lines: Dict[str, int] = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ConfigError(f"缺少 '=': {raw_line.strip()!r}", source, lineno)
        key, value = (part.strip() for part in line.split('=', 1))
        if not key:
            raise ConfigError("键名为空", source, lineno)
        try:
            _default_for(key)
        except KeyError:
            raise ConfigError(f"未知的配置键 {key!r}", source, lineno)
        if key in values:
            raise ConfigError(f"重复的配置键 {key!r} (首次出现在第 {lines[key]} 行)", source, lineno)
        values[key] = _coerce(key, value, source, lineno)
        lines[key] = lineno
    return values, lines


def flatten(nested: Dict[str, Any], prefix: str = "") -> Dict[str, Any]:
    flat: Dict[str, Any] = {}
    for key, value in nested.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(flatten(value, name + "."))
        else:
            flat[name] = value
    return flat


def parse_json(text: str, source: str = "<json>") -> Dict[str, Any]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"JSON 解析失败: {e.msg}", source, e.lineno)
    if not isinstance(data, dict):
        raise ConfigError("JSON 配置的顶层必须是对象", source)
    values: Dict[str, Any] = {}
    for key, value in flatten(data).items():
        try:
            _default_for(key)
        except KeyError:
            raise ConfigError(f"未知的配置键 {key!r}", source)
        values[key] = _coerce(key, value, source, None)
    return values


def unflatten(flat: Dict[str, Any]) -> Dict[str, Any]:
    nested: Dict[str, Any] = {}
    for key, value in flat.items():
        node = nested
        parts = key.split('.')
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = value
    return nested


def deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    """递归合并，override 优先；不修改输入"""
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def config_hash(settings: Dict[str, Any]) -> str:
    """规范化设置 (去掉 solver.t_end、output.*、logging.*) 的 SHA-256"""
    flat = flatten(settings)
    kept = {
        k: v for k, v in flat.items()
        if not any(k == ex or k.startswith(ex + '.') for ex in HASH_EXCLUDED)
    }
    canonical = json.dumps(kept, sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


def _float_list(text: str) -> List[float]:
    return [float(item) for item in str(text).replace(';', ',').split(',') if item.strip()]


@dataclass
class InitialData:
    """初值族及其参数"""
    kind: str
    params: Dict[str, Any] = field(default_factory=dict)

    def build(self, grid: Grid, model: ModelParams) -> RealField:
        x = grid.x
        P = self.params
        if self.kind == 'gaussian':
            return RealField(grid, P['amplitude'] * np.exp(-(x / P['width']) ** 2))
        if self.kind == 'sech':
            return RealField(grid, P['amplitude'] / np.cosh(x / P['width']) ** 2)
        if self.kind == 'gaussian_spectrum':
            k = grid.wavenumbers
            coeffs = P['amplitude'] * bracket(k) ** (-P['s']) * np.exp(-P['sigma0'] * k)
            return to_real(SpectralField(grid, coeffs.astype(complex)))
        if self.kind == 'soliton':
            return petviashvili_solitary_wave(model, P['c'], grid)
        if self.kind == 'file':
            values = np.loadtxt(P['path'], dtype=float, ndmin=1).ravel()
            if values.shape != (grid.n_points,):
                raise SpectralError(f"初值文件 {P['path']} 含 {values.size} 个数，应为 {grid.n_points}")
            if not np.all(np.isfinite(values)):
                raise SpectralError(f"初值文件 {P['path']} 含非有限值")
            return RealField(grid, values)
        raise ValueError(f"未知的初值类型: {self.kind}")


@dataclass
class DiagnosticsRequest:
    sobolev_s: float = 1.0
    gevrey: List[GevreyIndex] = field(default_factory=list)
    bourgain: List[BourgainIndex] = field(default_factory=list)
    radius: Optional[RadiusFitOptions] = None
    running_min: bool = False
    epsilon: float = 0.01
    audit: bool = False


@dataclass
class OutputSpec:
    directory: Path
    spectra: bool = False
    spectra_stride: int = 1
    checkpoint_stride: int = 0
    plots: bool = True


@dataclass
class StudySpec:
    kind: str
    sigmas: List[float]
    T: float
    theta: float
    b: float
    t_values: List[float]
    amplitudes: List[float]
    p_values: List[int]


@dataclass
class ProbeSpec:
    samples: int
    batch: int
    sigma_max: float
    alpha_max: float
    theta_min: float
    theta_max: float
    points: List[Tuple[float, float, float, float]]


@dataclass
class SolitonSpec:
    c: float
    tol: float
    max_iter: int


@dataclass
class RunConfig:
    model: ModelParams
    grid: Grid
    initial_data: InitialData
    solver: SolverConfig
    diagnostics: DiagnosticsRequest
    output: OutputSpec
    study: StudySpec
    probe: ProbeSpec
    soliton: SolitonSpec
    seed: int
    log_level: str
    settings: Dict[str, Any]
    source: str = "<defaults>"
    lines: Dict[str, int] = field(default_factory=dict)

    @property
    def hash(self) -> str:
        return config_hash(self.settings)

    def with_overrides(self, overrides: Dict[str, Any]) -> 'RunConfig':
        """以扁平键覆盖部分设置并重新校验"""
        flat = {k: _coerce(k, v, self.source, None) for k, v in overrides.items()}
        settings = deep_merge(self.settings, unflatten(flat))
        return build_run_config(settings, self.source, self.lines)


class _Builder:
    """构造配置对象；出错时定位到对应键所在的行"""

    def __init__(self, settings: Dict[str, Any], source: str, lines: Dict[str, int]):
        self.settings = settings
        self.source = source
        self.lines = lines

    def get(self, key: str) -> Any:
        node = self.settings
        for part in key.split('.'):
            node = node[part]
        return node

    def fail(self, key: str, message: str):
        raise ConfigError(f"{key}: {message}", self.source, self.lines.get(key))

    def check(self, key: str, ok: bool, message: str):
        if not ok:
            self.fail(key, message)

    def floats(self, key: str) -> List[float]:
        try:
            return _float_list(self.get(key))
        except ValueError:
            self.fail(key, f"无法解析数值列表 {self.get(key)!r}")

    def indices(self, key: str, arity: int) -> List[Tuple[float, ...]]:
        out = []
        for item in str(self.get(key)).split(','):
            if not item.strip():
                continue
            parts = item.strip().split(':')
            try:
                numbers = tuple(float(v) for v in parts)
            except ValueError:
                self.fail(key, f"无法解析指标 {item.strip()!r}")
            if not (1 <= len(numbers) <= arity):
                self.fail(key, f"指标 {item.strip()!r} 应有 1 到 {arity} 个分量")
            out.append(numbers + (0.0,) * (arity - len(numbers)))
        return out

    def optional_float(self, key: str) -> Optional[float]:
        raw = str(self.get(key)).strip().lower()
        if raw in ('', 'auto', 'none'):
            return None
        try:
            return float(raw)
        except ValueError:
            self.fail(key, f"需要数值或 auto，得到 {raw!r}")


def build_run_config(settings: Dict[str, Any], source: str = "<defaults>",
                     lines: Optional[Dict[str, int]] = None) -> RunConfig:
    b = _Builder(settings, source, lines or {})

    try:
        model = ModelParams(l=b.get('model.l'), p=b.get('model.p'))
    except ValueError as e:
        b.fail('model.l' if 'l ' in str(e) else 'model.p', str(e))
    try:
        grid = Grid(b.get('grid.n_points'), b.get('grid.length'))
    except SpectralError as e:
        b.fail('grid.n_points' if 'n_points' in str(e) else 'grid.length', str(e))

    kind = b.get('initial_data.type')
    b.check('initial_data.type', kind in INITIAL_DATA_TYPES,
            f"未知的初值类型 {kind!r}，可选 {', '.join(INITIAL_DATA_TYPES)}")
    idata = {k: v for k, v in settings['initial_data'].items() if k != 'type'}
    if kind in ('gaussian', 'sech'):
        b.check('initial_data.width', idata['width'] > 0, "宽度必须为正")
    if kind == 'gaussian_spectrum':
        b.check('initial_data.sigma0', idata['sigma0'] > 0, "sigma0 必须为正")
    if kind == 'soliton':
        b.check('initial_data.c', idata['c'] < -model.l ** 2 / 4.0, "需要满足谱隙条件 c < -l²/4")
        b.check('model.p', model.p % 2 == 1, "孤立波只对奇数 p 存在")
    if kind == 'file':
        path = Path(idata['path'])
        b.check('initial_data.path', bool(idata['path']) and path.is_file(),
                f"初值文件不存在: {idata['path']!r}")
        try:
            values = np.loadtxt(path, dtype=float, ndmin=1).ravel()
        except ValueError as e:
            b.fail('initial_data.path', f"无法读取初值文件: {e}")
        b.check('initial_data.path', values.size == grid.n_points,
                f"初值文件含 {values.size} 个数，应为 {grid.n_points}")
        b.check('initial_data.path', bool(np.all(np.isfinite(values))), "初值文件含非有限值")
    initial = InitialData(kind, idata)

    mollifier = None
    if b.get('solver.mollifier_n') > 0:
        try:
            profile = RampProfile(b.get('solver.mollifier_profile'))
        except ValueError:
            b.fail('solver.mollifier_profile', f"未知的过渡形状 {b.get('solver.mollifier_profile')!r}")
        mollifier = MollifierSpec(b.get('solver.mollifier_n'), profile)
    try:
        integrator = Integrator(b.get('solver.integrator'))
    except ValueError:
        b.fail('solver.integrator', f"未知的积分器 {b.get('solver.integrator')!r}")
    try:
        dealias = Dealias(b.get('solver.dealias'))
    except ValueError:
        b.fail('solver.dealias', f"未知的去混叠规则 {b.get('solver.dealias')!r}")
    try:
        solver = SolverConfig(
            dt=b.get('solver.dt'), t_end=b.get('solver.t_end'),
            integrator=integrator, dealias=dealias, mollifier=mollifier,
            snapshot_stride=b.get('solver.snapshot_stride'),
            cfl_guard=b.get('solver.cfl_guard'), c_int=b.get('solver.c_int'),
            nonlinear=b.get('solver.nonlinear'),
        )
    except ValueError as e:
        text = str(e)
        key = next((f"solver.{name}" for name in ('t_end', 'snapshot_stride', 'cfl_guard', 'dt')
                    if name in text), 'solver.dt')
        b.fail(key, text)

    gevrey = []
    for sigma, s in b.indices('diagnostics.gevrey', 2):
        b.check('diagnostics.gevrey', sigma >= 0, f"sigma 必须非负: {sigma}")
        b.check('diagnostics.gevrey', sigma * grid.k_max <= OVERFLOW_GUARD,
                f"σ·k_max = {sigma * grid.k_max:.4g} 超过溢出保护阈值 {OVERFLOW_GUARD:g}")
        gevrey.append(GevreyIndex(sigma, s))
    bourgain = []
    for sigma, s, bb in b.indices('diagnostics.bourgain', 3):
        b.check('diagnostics.bourgain', sigma >= 0, f"sigma 必须非负: {sigma}")
        b.check('diagnostics.bourgain', sigma * grid.k_max <= OVERFLOW_GUARD,
                f"σ·k_max = {sigma * grid.k_max:.4g} 超过溢出保护阈值 {OVERFLOW_GUARD:g}")
        bourgain.append(BourgainIndex(sigma, s, bb))
    radius = None
    if b.get('diagnostics.radius_fit'):
        try:
            radius = RadiusFitOptions(
                k_lo=b.optional_float('diagnostics.radius_k_lo'),
                k_hi=b.optional_float('diagnostics.radius_k_hi'),
                noise_floor=b.get('diagnostics.noise_floor'),
                envelope_width=b.get('diagnostics.envelope_width'),
            )
        except ValueError as e:
            b.fail('diagnostics.envelope_width', str(e))
    b.check('diagnostics.epsilon', b.get('diagnostics.epsilon') > 0, "epsilon 必须为正")
    diagnostics = DiagnosticsRequest(
        sobolev_s=b.get('diagnostics.sobolev_s'), gevrey=gevrey, bourgain=bourgain,
        radius=radius, running_min=b.get('diagnostics.running_min'),
        epsilon=b.get('diagnostics.epsilon'), audit=b.get('diagnostics.audit'),
    )

    b.check('output.spectra_stride', b.get('output.spectra_stride') >= 1, "必须是正整数")
    b.check('output.checkpoint_stride', b.get('output.checkpoint_stride') >= 0, "不能为负")
    output = OutputSpec(
        directory=Path(b.get('output.directory')),
        spectra=b.get('output.spectra'),
        spectra_stride=b.get('output.spectra_stride'),
        checkpoint_stride=b.get('output.checkpoint_stride'),
        plots=b.get('output.plots'),
    )

    study_kind = b.get('study.kind')
    b.check('study.kind', study_kind in STUDY_KINDS,
            f"未知的研究类型 {study_kind!r}，可选 {', '.join(STUDY_KINDS)}")
    sigmas = b.floats('study.sigmas')
    for sigma in sigmas:
        b.check('study.sigmas', sigma >= 0, f"sigma 必须非负: {sigma}")
        b.check('study.sigmas', sigma * grid.k_max <= OVERFLOW_GUARD,
                f"σ·k_max = {sigma * grid.k_max:.4g} 超过溢出保护阈值 {OVERFLOW_GUARD:g}")
    t_values = b.floats('study.t_values')
    b.check('study.t_values', all(t > 0 for t in t_values), "T 值必须为正")
    p_values = b.floats('study.p')
    b.check('study.p', all(v.is_integer() and v >= 1 for v in p_values), "p 必须是正整数")
    study = StudySpec(
        kind=study_kind, sigmas=sigmas, T=b.get('study.T'),
        theta=b.get('study.theta'), b=b.get('study.b'), t_values=t_values,
        amplitudes=b.floats('study.amplitudes'), p_values=[int(v) for v in p_values],
    )

    points = [tuple(pt) for pt in b.indices('probe.points', 4)]
    b.check('probe.samples', b.get('probe.samples') >= 1, "样本数至少为 1")
    b.check('probe.batch', b.get('probe.batch') >= 1, "批大小至少为 1")
    b.check('probe.theta_max', 0 <= b.get('probe.theta_min') <= b.get('probe.theta_max') <= 1,
            "需要 0 <= theta_min <= theta_max <= 1")
    b.check('probe.sigma_max', b.get('probe.sigma_max') > 0, "必须为正")
    b.check('probe.sigma_max', b.get('probe.sigma_max') * b.get('probe.alpha_max') <= OVERFLOW_GUARD,
            "sigma_max·alpha_max 超过溢出保护阈值")
    for alpha, beta, sigma, _ in points:
        b.check('probe.points', sigma * max(abs(alpha), abs(beta)) <= OVERFLOW_GUARD,
                "σ·max(|α|,|β|) 超过溢出保护阈值")
    probe = ProbeSpec(
        samples=b.get('probe.samples'), batch=b.get('probe.batch'),
        sigma_max=b.get('probe.sigma_max'), alpha_max=b.get('probe.alpha_max'),
        theta_min=b.get('probe.theta_min'), theta_max=b.get('probe.theta_max'),
        points=points,
    )

    b.check('soliton.tol', b.get('soliton.tol') > 0, "tol 必须为正")
    b.check('soliton.max_iter', b.get('soliton.max_iter') >= 1, "max_iter 至少为 1")
    soliton = SolitonSpec(c=b.get('soliton.c'), tol=b.get('soliton.tol'),
                          max_iter=b.get('soliton.max_iter'))

    level = str(b.get('logging.level')).upper()
    b.check('logging.level', level in ('DEBUG', 'INFO', 'WARNING', 'ERROR'), f"未知的日志级别 {level}")

    return RunConfig(
        model=model, grid=grid, initial_data=initial, solver=solver,
        diagnostics=diagnostics, output=output, study=study, probe=probe,
        soliton=soliton, seed=b.get('seed'), log_level=level,
        settings=settings, source=source, lines=dict(lines or {}),
    )


def load_settings(path: Path) -> Tuple[Dict[str, Any], Dict[str, int]]:
    path = Path(path)
    source = str(path)
    try:
        text = path.read_text(encoding='utf-8', errors='replace')
    except OSError as e:
        raise ConfigError(f"无法读取配置文件: {e.strerror}", source)
    if path.suffix.lower() == '.json' or text.lstrip().startswith('{'):
        flat, lines = parse_json(text, source), {}
    else:
        flat, lines = parse_text(text, source)
    return deep_merge(DEFAULT_SETTINGS, unflatten(flat)), lines


def load_run_config(path: Path) -> RunConfig:
    settings, lines = load_settings(path)
    config = build_run_config(settings, str(path), lines)
    logger.info(f"加载配置 {path}: 哈希 {config.hash[:12]}")
    return config


def parse_run_config(text: str, source: str = "<string>") -> RunConfig:
    """从字符串构造配置，测试与嵌入式使用"""
    flat, lines = parse_text(text, source)
    return build_run_config(deep_merge(DEFAULT_SETTINGS, unflatten(flat)), source, lines)
