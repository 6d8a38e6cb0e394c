#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Generalized Benjamin Equation Lab
广义 Benjamin 方程的伪谱模拟与解析半径诊断，命令行入口。

子命令:
    run      单次运行: 时间序列表、谱快照、摘要、检查点
    soliton  Petviashvili 孤立波剖面
    sweep    参数扫描 (runs / sigma_audit / t_scaling)
    probe    指数不等式的 Monte Carlo 探针
    plots    为运行目录生成 gnuplot 脚本

退出码: 0 成功，2 配置或前置条件错误，3 数值失败
"""

import sys
import os

# Windows编码兼容性设置
if sys.platform.startswith('win'):
    try:
        os.environ['PYTHONIOENCODING'] = 'utf-8'
        os.environ['PYTHONUTF8'] = '1'
        if hasattr(sys.stdout, 'reconfigure'):
            sys.stdout.reconfigure(encoding='utf-8', errors='replace')
            sys.stderr.reconfigure(encoding='utf-8', errors='replace')
    except Exception as e:
        print(f"Warning: Failed to set UTF-8 encoding: {e}")

import argparse
import copy
import itertools
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from spectral_core import RealField, SpectralError, SpectralField, to_spectral
from operators import OverflowGuardError, exp_lemma_probe, well_posedness_regime
from solver import (
    SolitaryWaveError, SolverError, SolverState, SpectralGapError, StepSizeError,
    Snapshot, Trajectory, integrate, max_abs_difference, petviashvili_iteration,
    translate, traveling_wave_residual,
)
from diagnostics import (
    TimeWindow, almost_conservation_audit, bourgain_norm_window, diagnostics_row,
)
from analyticity import (
    RadiusSample, fit_radius, RadiusFitError, lower_bound_audit, radius_timeseries,
)
from run_config import DEFAULT_SETTINGS, ConfigError, RunConfig, build_run_config, load_run_config
from checkpoint import Checkpoint, CheckpointError, load_checkpoint, save_checkpoint
from database import ExperimentDatabase
from plot_scripts import AUDIT, SPECTRA_DIR, SUMMARY, TIMESERIES, emit_plot_scripts
from i18n_utils import set_locale, t

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

CHECKPOINT_FILE = "checkpoint.ckpt"
SNAPSHOT_STORE = "snapshots.c16"

CONFIG_ERRORS = (ConfigError, CheckpointError, StepSizeError, SpectralGapError,
                 OverflowGuardError, SpectralError, ValueError)
NUMERICAL_ERRORS = (SolverError, SolitaryWaveError, RuntimeError, FloatingPointError)


def _fmt(value: Optional[float]) -> str:
    if value is None:
        return 'nan'
    return format(float(value), '.17g')


def _json_ready(obj: Any) -> Any:
    """numpy 标量转为 Python 类型，非有限浮点数记为 null"""
    if isinstance(obj, dict):
        return {str(k): _json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_ready(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if np.isfinite(value) else None
    return obj


def write_json(path: Path, data: Dict[str, Any]):
    path.write_text(json.dumps(_json_ready(data), sort_keys=True, indent=2, ensure_ascii=False) + "\n",
                    encoding='utf-8')


def _truncate(path: Path, size: int):
    if path.exists():
        with open(path, 'r+b') as f:
            f.truncate(size)


def read_table(path: Path) -> Tuple[List[str], np.ndarray]:
    """读取时间序列表；返回 (表头, 数值数组)"""
    lines = path.read_text(encoding='utf-8').splitlines()
    header = lines[0].split(',')
    rows = [[float(v) for v in line.split(',')] for line in lines[1:] if line.strip()]
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return header, data


class RunWriter:
    """
    求解器的 sink: 每个快照写一行诊断记录，按需输出谱快照与复数快照，
    并每 checkpoint_stride 步写一次检查点。续算时把文件截断到检查点记录的位置。
    """

    def __init__(self, config: RunConfig, out_dir: Path, cursor: Optional[Dict[str, Any]] = None):
        self.config = config
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.gevrey = config.diagnostics.gevrey
        self.table_path = self.out_dir / TIMESERIES
        self.store_path = self.out_dir / SNAPSHOT_STORE
        keep_store = bool(config.diagnostics.bourgain)

        if cursor:
            _truncate(self.table_path, cursor['table_bytes'])
            self.table = open(self.table_path, 'ab')
            self.store = None
            if keep_store:
                _truncate(self.store_path, cursor.get('store_bytes', 0))
                self.store = open(self.store_path, 'ab')
            self.rows = int(cursor['rows'])
        else:
            self.table = open(self.table_path, 'wb')
            self.table.write((','.join(self.header()) + '\n').encode('utf-8'))
            self.store = open(self.store_path, 'wb') if keep_store else None
            self.rows = 0
        if config.output.spectra:
            (self.out_dir / SPECTRA_DIR).mkdir(exist_ok=True)

    def header(self) -> List[str]:
        return (['t', 'mass', 'energy', 'sobolev_s']
                + [idx.label for idx in self.gevrey]
                + ['sigma_fit', 'sigma_r', 'sigma_resid'])

    def __call__(self, t: float, state: SolverState):
        diag = self.config.diagnostics
        row = diagnostics_row(state, self.gevrey, diag.sobolev_s, diag.radius,
                              fit_radius_enabled=diag.radius is not None)
        fit = row.sigma_fit
        values = [row.t, row.mass, row.energy, row.sobolev_s]
        values += [row.gevrey[idx] for idx in self.gevrey]
        values += [fit.sigma, fit.r, fit.rms_residual] if fit else [None, None, None]
        self.table.write((','.join(_fmt(v) for v in values) + '\n').encode('utf-8'))

        output = self.config.output
        if output.spectra and self.rows % output.spectra_stride == 0:
            self.dump_spectrum(state)
        if self.store is not None:
            self.store.write(np.ascontiguousarray(state.u_hat.coeffs, dtype='<c16').tobytes())
        self.rows += 1
        if output.checkpoint_stride and state.step_count % output.checkpoint_stride == 0 \
                and state.step_count > 0:
            self.checkpoint(state)

    def dump_spectrum(self, state: SolverState):
        k = state.grid.wavenumbers
        amplitude = np.abs(state.u_hat.coeffs)
        path = self.out_dir / SPECTRA_DIR / f"spectrum_{state.step_count:08d}.dat"
        text = ''.join(f"{_fmt(kk)} {_fmt(a)}\n" for kk, a in zip(k, amplitude))
        path.write_text(text, encoding='utf-8')

    def cursor(self) -> Dict[str, Any]:
        self.table.flush()
        if self.store is not None:
            self.store.flush()
        return {
            'rows': self.rows,
            'table_bytes': self.table.tell(),
            'store_bytes': self.store.tell() if self.store is not None else 0,
        }

    def checkpoint(self, state: SolverState) -> Path:
        rng = np.random.default_rng(self.config.seed)
        ckpt = Checkpoint(config_hash=self.config.hash, state=state,
                          rng_state=rng.bit_generator.state, cursor=self.cursor())
        return save_checkpoint(self.out_dir / CHECKPOINT_FILE, ckpt)

    def close(self):
        self.table.close()
        if self.store is not None:
            self.store.close()


def _relative_drift(value: float, reference: float) -> float:
    scale = abs(reference) if reference != 0 else 1.0
    return abs(value - reference) / scale


def _load_trajectory(config: RunConfig, out_dir: Path, times: np.ndarray) -> Optional[Trajectory]:
    path = out_dir / SNAPSHOT_STORE
    if not path.is_file():
        return None
    raw = np.frombuffer(path.read_bytes(), dtype='<c16').astype(complex)
    grid = config.grid
    spectra = raw.reshape(-1, grid.n_modes)
    snaps = [
        Snapshot(t=float(tn), step=int(round(tn / config.solver.dt)),
                 u_hat=SpectralField(grid, coeffs))
        for tn, coeffs in zip(times, spectra)
    ]
    return Trajectory(grid=grid, params=config.model, config=config.solver, snapshots=snaps)


def _radius_dict(u_hat: SpectralField, config: RunConfig) -> Optional[Dict[str, Any]]:
    if config.diagnostics.radius is None:
        return None
    try:
        return fit_radius(u_hat, config.diagnostics.radius, p=config.model.p).to_dict()
    except RadiusFitError as e:
        return {'error': str(e)}


def write_audit_table(path: Path, table) -> Path:
    lines = ["sigma,delta,bourgain_cubed,ratio"]
    lines += [','.join(_fmt(v) for v in (r.sigma, r.delta, r.bourgain_cubed, r.ratio))
              for r in table.rows]
    lines.append(f"# theta_fit = {_fmt(table.theta_fit)}")
    lines.append(f"# ratio_spread = {_fmt(table.ratio_spread)}")
    path.write_text('\n'.join(lines) + '\n', encoding='utf-8')
    return path


def build_summary(config: RunConfig, u0: RealField, final: SolverState, out_dir: Path,
                  status: str, error: Optional[str]) -> Dict[str, Any]:
    """由时间序列表、初值与最终状态构造摘要；不含时间戳，重复运行逐字节相同"""
    params = config.model
    diag = config.diagnostics
    header, table = read_table(out_dir / TIMESERIES)
    col = {name: i for i, name in enumerate(header)}

    u0_hat = to_spectral(u0)
    initial_row = diagnostics_row(SolverState(0.0, u0_hat, 0, params), diag.gevrey,
                                  diag.sobolev_s, fit_radius_enabled=False)
    final_row = diagnostics_row(final, diag.gevrey, diag.sobolev_s, fit_radius_enabled=False)

    def norms(row) -> Dict[str, Any]:
        return {
            't': row.t, 'mass': row.mass, 'energy': row.energy,
            'energy_as_printed': row.energy_as_printed, 'sobolev_s': row.sobolev_s,
            'gevrey': {idx.label: v for idx, v in row.gevrey.items()},
        }

    summary: Dict[str, Any] = {
        'status': status,
        'error': error,
        'config_hash': config.hash,
        'model': {'l': params.l, 'p': params.p},
        'grid': config.grid.describe(),
        'regime': well_posedness_regime(params, diag.epsilon).to_dict(),
        'steps': final.step_count,
        'rows': int(len(table)),
        'initial': norms(initial_row),
        'final': norms(final_row),
        'drift': {
            'mass': _relative_drift(final_row.mass, initial_row.mass),
            'energy': _relative_drift(final_row.energy, initial_row.energy),
            'energy_as_printed': _relative_drift(final_row.energy_as_printed,
                                                 initial_row.energy_as_printed),
        },
        'radius': {
            'initial': _radius_dict(u0_hat, config),
            'final': _radius_dict(final.u_hat, config),
        },
    }
    if len(table):
        summary['max_drift'] = {
            'mass': float(np.max(np.abs(table[:, col['mass']] - initial_row.mass))
                          / max(abs(initial_row.mass), 1e-300)),
            'energy': float(np.max(np.abs(table[:, col['energy']] - initial_row.energy))
                            / max(abs(initial_row.energy), 1e-300)),
        }

    if diag.radius is not None and len(table):
        series = []
        lowest = np.inf
        for tn, sigma in zip(table[:, col['t']], table[:, col['sigma_fit']]):
            if not np.isfinite(sigma):
                series.append(RadiusSample(t=float(tn), fit=None, sigma=None, error="fit failed"))
                continue
            if diag.running_min:
                lowest = min(lowest, sigma)
                sigma = lowest
            series.append(RadiusSample(t=float(tn), fit=None, sigma=float(sigma)))
        summary['decay_law'] = lower_bound_audit(series, params, diag.epsilon).to_dict()

    if diag.bourgain:
        # 窗口取已存快照覆盖的区间，t_end 不一定落在快照上
        times = table[:, col['t']]
        t_last = float(times[-1]) if len(times) else 0.0
        values: Dict[str, Any] = {}
        traj = _load_trajectory(config, out_dir, times) if t_last > 0 else None
        window = TimeWindow(t_last / 3.0, 2.0 * t_last / 3.0) if traj is not None else None
        for idx in diag.bourgain:
            try:
                if window is None:
                    raise ValueError("快照覆盖的时间长度为零")
                values[idx.label] = bourgain_norm_window(traj, idx, window, params)
            except ValueError as e:
                values[idx.label] = None
                logger.warning(f"{idx.label} 无法计算: {e}")
        summary['bourgain'] = values
        if window is not None:
            summary['bourgain_window'] = [window.t0, window.t1]

    if config.initial_data.kind == 'soliton':
        c = config.initial_data.params['c']
        exact = translate(u0_hat, c * final.t)
        summary['soliton'] = {
            'c': c,
            'linf_error': max_abs_difference(final.u_hat, exact),
            'initial_residual': traveling_wave_residual(params, c, u0),
        }
    return summary


def cli_run(config: RunConfig, out_dir: Optional[Path] = None, resume: Optional[Path] = None,
            db: Optional[ExperimentDatabase] = None, quiet: bool = False) -> int:
    """单次运行；数值失败时先写出已有结果再返回 3"""
    u0 = config.initial_data.build(config.grid, config.model)
    start = None
    cursor = None
    if resume is not None:
        ckpt = load_checkpoint(resume, expected_hash=config.hash)
        if ckpt.state.step_count > config.solver.n_steps:
            raise ConfigError(f"solver.t_end = {config.solver.t_end:g} 早于检查点时间 t = {ckpt.state.t:g}",
                              config.source, config.lines.get('solver.t_end'))
        start, cursor = ckpt.state, ckpt.cursor
        out_dir = Path(out_dir) if out_dir is not None else Path(resume).parent
        if not quiet:
            print(f"🔁 {t('run.resumed', step=start.step_count, t=_fmt(start.t))}")
    out_dir = Path(out_dir if out_dir is not None else config.output.directory)
    if not quiet:
        print(f"🚀 {t('run.start', config=config.source, out=out_dir)}")

    run_id = db.create_run('run', config.hash, str(out_dir)) if db else None
    writer = RunWriter(config, out_dir, cursor)
    cfg = replace(config.solver, keep_snapshots=False)
    status, error, code = 'ok', None, EXIT_OK
    try:
        try:
            traj = integrate(None if start else u0, config.model, cfg, sinks=[writer], start=start)
            final = traj.final_state
        except SolverError as e:
            final = e.last_good_state
            status, error, code = 'failed', str(e), EXIT_NUMERICAL
        writer.checkpoint(final)
    except Exception as e:
        # 前置条件错误: 登记为失败后交给 main 映射退出码
        if db:
            db.complete_run(run_id, 'failed', None, str(e))
        raise
    finally:
        writer.close()

    summary = build_summary(config, u0, final, out_dir, status, error)
    if config.diagnostics.audit and status == 'ok':
        table = almost_conservation_audit(u0, config.model, config.solver, config.study.sigmas,
                                          config.study.T, config.study.theta, config.study.b)
        write_audit_table(out_dir / AUDIT, table)
        summary['audit'] = table.to_dict()
    write_json(out_dir / SUMMARY, summary)
    if config.output.plots:
        emit_plot_scripts(out_dir)

    if db:
        db.complete_run(run_id, status, _json_ready(summary), error)
        if 'decay_law' in summary:
            db.record_verdict(run_id, 'lower_bound', summary['decay_law']['verdict'],
                              summary['decay_law'])
    if not quiet:
        if code == EXIT_OK:
            drift = summary['drift']
            message = t('run.done', t=_fmt(final.t), rows=summary['rows'],
                        mass_drift=f"{drift['mass']:.3e}", energy_drift=f"{drift['energy']:.3e}")
            print(f"✅ {message}")
        else:
            print(f"❌ {t('run.failed', step=final.step_count, error=error)}")
    return code


def cli_soliton(config: RunConfig, out_dir: Path) -> int:
    spec = config.soliton
    wave = petviashvili_iteration(config.model, spec.c, config.grid, spec.tol, spec.max_iter)
    out_dir.mkdir(parents=True, exist_ok=True)
    profile_path = out_dir / "profile.dat"
    profile_path.write_text(''.join(f"{_fmt(v)}\n" for v in wave.profile.values), encoding='utf-8')
    (out_dir / "residual.txt").write_text(
        f"residual {_fmt(wave.residual)}\niterations {wave.iterations}\n", encoding='utf-8')
    write_json(out_dir / "soliton.json", {
        'speed': wave.speed,
        'residual': wave.residual,
        'iterations': wave.iterations,
        'stabilizing_factor': wave.stabilizing_factor,
        'residual_history': wave.residual_history,
        'traveling_wave_residual': traveling_wave_residual(config.model, spec.c, wave.profile),
        'model': {'l': config.model.l, 'p': config.model.p},
        'grid': config.grid.describe(),
    })
    print(f"✅ {t('soliton.done', c=spec.c, residual=f'{wave.residual:.3e}', iterations=wave.iterations, path=profile_path)}")
    return EXIT_OK


def _sweep_members(config: RunConfig) -> List[Tuple[str, Dict[str, Any]]]:
    study = config.study
    amplitudes = study.amplitudes or [config.initial_data.params['amplitude']]
    p_values = study.p_values or [config.model.p]
    members = []
    for amplitude, p in itertools.product(amplitudes, p_values):
        label = f"A{amplitude:g}_p{p}"
        members.append((label, {'initial_data.amplitude': amplitude, 'model.p': p}))
    return members


def _run_member(config: RunConfig, kind: str, member_dir: Path) -> Dict[str, Any]:
    """单个扫描成员；只写自己的目录"""
    member_dir.mkdir(parents=True, exist_ok=True)
    if kind == 'runs':
        code = cli_run(config, member_dir, quiet=True)
        summary = json.loads((member_dir / SUMMARY).read_text(encoding='utf-8'))
        if code != EXIT_OK:
            raise SolverError(summary.get('error') or "数值失败", None, summary.get('steps', 0))
        return {
            'mass_drift': summary['drift']['mass'],
            'energy_drift': summary['drift']['energy'],
            'final_sigma': ((summary['radius'] or {}).get('final') or {}).get('sigma'),
            'decay_law': summary.get('decay_law'),
        }

    u0 = config.initial_data.build(config.grid, config.model)
    study = config.study
    if kind == 'sigma_audit':
        table = almost_conservation_audit(u0, config.model, config.solver, study.sigmas,
                                          study.T, study.theta, study.b)
        write_audit_table(member_dir / AUDIT, table)
        write_json(member_dir / "audit.json", table.to_dict())
        return {'audit': table.to_dict()}

    t_max = max(study.t_values)
    cfg = replace(config.solver, t_end=t_max, keep_snapshots=True)
    traj = integrate(u0, config.model, cfg)
    series = radius_timeseries(traj, config.diagnostics.radius, config.diagnostics.running_min)
    verdict = lower_bound_audit(series, config.model, config.diagnostics.epsilon)
    times = np.array([row.t for row in series])
    lines = ["T,sigma"]
    for T in study.t_values:
        row = series[int(np.argmin(np.abs(times - T)))]
        lines.append(f"{_fmt(T)},{_fmt(row.sigma)}")
    (member_dir / "t_scaling.csv").write_text('\n'.join(lines) + '\n', encoding='utf-8')
    write_json(member_dir / "decay.json", verdict.to_dict())
    return {'verdict': verdict.to_dict()}


def cli_sweep(config: RunConfig, out_dir: Path, jobs: int = 1,
              db: Optional[ExperimentDatabase] = None) -> int:
    """并发运行扫描成员；成员失败只记录，不中断其余成员"""
    kind = config.study.kind
    members = _sweep_members(config)
    out_dir.mkdir(parents=True, exist_ok=True)
    print(f"🧪 {t('sweep.start', kind=kind, count=len(members), jobs=jobs)}")
    sweep_id = db.create_run(f'sweep:{kind}', config.hash, str(out_dir)) if db else None

    def run(label: str, overrides: Dict[str, Any]) -> Dict[str, Any]:
        member_dir = out_dir / "members" / label
        try:
            member_cfg = config.with_overrides({**overrides, 'output.directory': str(member_dir)})
            result = _run_member(member_cfg, kind, member_dir)
            return {'label': label, 'status': 'ok', 'error': None, 'result': result}
        except CONFIG_ERRORS + NUMERICAL_ERRORS as e:
            logger.error(f"扫描成员 {label} 失败: {e}")
            return {'label': label, 'status': 'failed', 'error': str(e), 'result': None}

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        futures = [pool.submit(run, label, overrides) for label, overrides in members]
        outcomes = [f.result() for f in futures]

    lines = []
    if kind == 'runs':
        lines.append("label,status,mass_drift,energy_drift,final_sigma,verdict")
    elif kind == 'sigma_audit':
        lines.append("label,status,sigma,delta,bourgain_cubed,ratio")
    else:
        lines.append("label,status,verdict,gamma,gamma_bound")
    for outcome in outcomes:
        label, status, result = outcome['label'], outcome['status'], outcome['result'] or {}
        if status != 'ok':
            print(f"   ❌ {t('sweep.member_failed', label=label, error=outcome['error'])}")
            lines.append(f"{label},{status}")
            if db:
                db.add_member(sweep_id, label, status, str(out_dir / 'members' / label),
                              error=outcome['error'])
            continue
        print(f"   ✅ {t('sweep.member_ok', label=label)}")
        if db:
            db.add_member(sweep_id, label, status, str(out_dir / 'members' / label),
                          summary=_json_ready(result))
        if kind == 'runs':
            decay = result.get('decay_law') or {}
            lines.append(','.join([label, status, _fmt(result['mass_drift']),
                                   _fmt(result['energy_drift']), _fmt(result['final_sigma']),
                                   decay.get('verdict', '')]))
        elif kind == 'sigma_audit':
            audit = result['audit']
            for row in audit['rows']:
                lines.append(','.join([label, status] + [_fmt(row[k]) for k in
                                                         ('sigma', 'delta', 'bourgain_cubed', 'ratio')]))
            lines.append(f"# {label} theta_fit = {_fmt(audit['theta_fit'])}")
            print(f"📐 {t('sweep.theta_fit', label=label, theta_fit=_fmt(audit['theta_fit']), spread=_fmt(audit['ratio_spread']))}")
            if db:
                db.record_verdict(sweep_id, 'almost_conservation', 'REPORTED', audit)
        else:
            verdict = result['verdict']
            fit = verdict.get('fit') or {}
            lines.append(','.join([label, status, verdict['verdict'], _fmt(fit.get('gamma')),
                                   _fmt(verdict['gamma_bound'])]))
            print(f"⚖️ {t('sweep.verdict', label=label, verdict=verdict['verdict'], message=verdict['message'])}")
            if db:
                db.record_verdict(sweep_id, 'lower_bound', verdict['verdict'], verdict)

    (out_dir / "sweep.csv").write_text('\n'.join(lines) + '\n', encoding='utf-8')
    failed = sum(1 for o in outcomes if o['status'] != 'ok')
    write_json(out_dir / "sweep_summary.json", {
        'kind': kind, 'config_hash': config.hash, 'failed': failed, 'members': outcomes,
    })
    if db:
        db.complete_run(sweep_id, 'failed' if failed else 'ok', {'failed': failed})
    print(f"✅ {t('sweep.done', ok=len(outcomes) - failed, count=len(outcomes))}")
    return EXIT_NUMERICAL if failed else EXIT_OK


def run_probe(config: RunConfig, seed: int) -> Dict[str, Any]:
    """在随机 (α, β, σ, θ) 上检查指数不等式；固定种子时结果确定"""
    spec = config.probe
    rng = np.random.default_rng(seed)
    violations = 0
    bracket_opposite = 0
    bracket_same = 0
    opposite_count = 0
    slack_sum = 0.0
    worst = -np.inf
    worst_sample: Optional[Dict[str, float]] = None
    remaining = spec.samples
    while remaining > 0:
        m = min(spec.batch, remaining)
        alpha = rng.uniform(-spec.alpha_max, spec.alpha_max, m)
        beta = rng.uniform(-spec.alpha_max, spec.alpha_max, m)
        sigma = rng.uniform(0.0, spec.sigma_max, m)
        theta = rng.uniform(spec.theta_min, spec.theta_max, m)
        probe = exp_lemma_probe(alpha, beta, sigma, theta)
        holds = np.asarray(probe.holds)
        opposite = np.asarray(probe.opposite_signs)
        bracket_ok = np.asarray(probe.bracket_holds)
        slack = np.asarray(probe.slack)
        violations += int(np.count_nonzero(~holds))
        bracket_opposite += int(np.count_nonzero(~bracket_ok & opposite))
        bracket_same += int(np.count_nonzero(~bracket_ok & ~opposite))
        opposite_count += int(np.count_nonzero(opposite))
        slack_sum += float(np.sum(slack))
        i = int(np.argmax(slack))
        if slack[i] > worst:
            worst = float(slack[i])
            worst_sample = {'alpha': alpha[i], 'beta': beta[i], 'sigma': sigma[i], 'theta': theta[i]}
        remaining -= m

    points = []
    for alpha, beta, sigma, theta in spec.points:
        probe = exp_lemma_probe(alpha, beta, sigma, theta)
        points.append({
            'alpha': alpha, 'beta': beta, 'sigma': sigma, 'theta': theta,
            'lhs': probe.lhs, 'rhs': probe.rhs, 'slack': probe.slack, 'holds': probe.holds,
            'bracket_lhs': probe.bracket_lhs, 'bracket_rhs': probe.bracket_rhs,
            'bracket_holds': probe.bracket_holds, 'opposite_signs': probe.opposite_signs,
        })
    return _json_ready({
        'seed': seed,
        'samples': spec.samples,
        'violations': violations,
        'bracket_violations_opposite_signs': bracket_opposite,
        'bracket_failures_same_sign': bracket_same,
        'opposite_sign_samples': opposite_count,
        'worst_slack': worst,
        'worst_sample': worst_sample,
        'mean_slack': slack_sum / spec.samples,
        'ranges': {'alpha_max': spec.alpha_max, 'sigma_max': spec.sigma_max,
                   'theta': [spec.theta_min, spec.theta_max]},
        'points': points,
    })


def cli_probe(config: RunConfig, seed: int, out_dir: Path,
              db: Optional[ExperimentDatabase] = None) -> int:
    report = run_probe(config, seed)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_json(out_dir / "probe.json", report)
    if db:
        db.record_probe(seed, report['samples'], report['violations'], report['worst_slack'], report)
    print(f"🎲 {t('probe.done', samples=report['samples'], violations=report['violations'], worst=_fmt(report['worst_slack']))}")
    for point in report['points']:
        print(f"   α={point['alpha']:g} β={point['beta']:g} σ={point['sigma']:g} θ={point['theta']:g}: "
              f"lhs={_fmt(point['lhs'])} rhs={_fmt(point['rhs'])} slack={_fmt(point['slack'])}")
    return EXIT_OK


def cli_plots(out_dir: Path) -> int:
    report = emit_plot_scripts(out_dir)
    for path in report.written:
        print(f"📈 {t('plots.written', path=path)}")
    for name, reason in report.skipped:
        print(f"⏭️ {t('plots.skipped', name=name, reason=reason)}")
    if not report.written:
        print(f"⚠️ {t('plots.none')}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', type=Path, help='配置文件 (key = value 或 JSON)')
    common.add_argument('--out', type=Path, help='输出目录，覆盖 output.directory')
    common.add_argument('--seed', type=int, help='随机种子，覆盖配置中的 seed')
    common.add_argument('--jobs', type=int, default=1, help='扫描的并发成员数')
    common.add_argument('--db', type=Path, help='实验登记库 (SQLite) 路径')
    common.add_argument('--locale', help='消息语言，如 zh_CN、en_US')
    common.add_argument('--verbose', '-v', action='store_true', help='输出调试日志')

    parser = argparse.ArgumentParser(
        description='广义 Benjamin 方程伪谱模拟与解析半径诊断',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
示例用法:
  %(prog)s run --config run.cfg --out runs/gauss
  %(prog)s run --config run.cfg --resume runs/gauss/checkpoint.ckpt
  %(prog)s soliton --config soliton.cfg --out runs/soliton
  %(prog)s sweep --config audit.cfg --jobs 4
  %(prog)s probe --seed 7
  %(prog)s plots --out runs/gauss
        """
    )
    sub = parser.add_subparsers(dest='command', required=True)
    run = sub.add_parser('run', parents=[common], help='单次运行')
    run.add_argument('--resume', type=Path, help='从检查点续算')
    sub.add_parser('soliton', parents=[common], help='计算孤立波剖面')
    sub.add_parser('sweep', parents=[common], help='参数扫描')
    sub.add_parser('probe', parents=[common], help='指数不等式探针')
    sub.add_parser('plots', parents=[common], help='生成 gnuplot 脚本')
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.locale:
        set_locale(args.locale)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format='%(asctime)s - %(levelname)s - %(message)s'
    )

    try:
        if args.config:
            config = load_run_config(args.config)
        else:
            config = build_run_config(copy.deepcopy(DEFAULT_SETTINGS))
        if not args.verbose:
            logging.getLogger().setLevel(config.log_level)
        out_dir = Path(args.out) if args.out else None
        seed = args.seed if args.seed is not None else config.seed
        db = ExperimentDatabase(str(args.db)) if args.db else None

        if args.command == 'run':
            return cli_run(config, out_dir, args.resume, db)
        out_dir = out_dir or config.output.directory
        if args.command == 'soliton':
            return cli_soliton(config, out_dir)
        if args.command == 'sweep':
            return cli_sweep(config, out_dir, args.jobs, db)
        if args.command == 'probe':
            return cli_probe(config, seed, out_dir, db)
        return cli_plots(out_dir)
    except CONFIG_ERRORS as e:
        logger.error(f"配置或前置条件错误: {e}")
        print(f"❌ {t('error.config', message=str(e))}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERICAL_ERRORS as e:
        logger.error(f"数值失败: {e}")
        print(f"❌ {t('error.numerical', message=str(e))}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == '__main__':
    sys.exit(main())
