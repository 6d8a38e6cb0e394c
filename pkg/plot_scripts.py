#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
gnuplot 脚本生成
脚本只引用运行目录内的文件；缺少所需数据表时跳过该图并给出提示
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

logger = logging.getLogger(__name__)

TIMESERIES = "timeseries.csv"
SUMMARY = "summary.json"
AUDIT = "audit.csv"
SPECTRA_DIR = "spectra"
PLOTS_DIR = "plots"


@dataclass
class PlotReport:
    written: List[Path] = field(default_factory=list)
    skipped: List[Tuple[str, str]] = field(default_factory=list)


def _load_summary(run_dir: Path) -> Optional[Dict[str, Any]]:
    path = run_dir / SUMMARY
    if not path.is_file():
        return None
    try:
        return json.loads(path.read_text(encoding='utf-8'))
    except json.JSONDecodeError as e:
        logger.warning(f"无法解析 {path}: {e}")
        return None


def _header(run_dir: Path) -> List[str]:
    with open(run_dir / TIMESERIES, 'r', encoding='utf-8') as f:
        return f.readline().strip().split(',')


def _preamble(name: str) -> str:
    return (
        "# generated by plot_scripts.py\n"
        "set terminal pngcairo size 900,600\n"
        f"set output '{PLOTS_DIR}/{name}.png'\n"
        "set datafile separator ','\n"
        "set key outside right\n"
        "set grid\n"
    )


def norms_script(run_dir: Path) -> str:
    columns = _header(run_dir)
    plots = [
        f"'{TIMESERIES}' using 1:{i + 1} with lines title '{name}'"
        for i, name in enumerate(columns)
        if i > 0 and not name.startswith('sigma_')
    ]
    return (
        _preamble("norms")
        + "set xlabel 't'\nset ylabel 'value'\n"
        + "plot " + ", \\\n     ".join(plots) + "\n"
    )


def spectrum_script(run_dir: Path, dump: str, summary: Optional[Dict[str, Any]]) -> str:
    lines = [
        _preamble("spectrum").replace("set datafile separator ','\n", ""),
        "set xlabel 'k'\nset ylabel '|u_hat(k)|'\nset logscale y\n",
    ]
    fit = ((summary or {}).get('radius') or {}).get('final')
    plot = f"plot '{SPECTRA_DIR}/{dump}' using 1:2 with points pt 7 ps 0.4 title '{dump}'"
    if fit:
        lines.append(f"logC = {fit['logC']!r}\nr = {fit['r']!r}\nsigma = {fit['sigma']!r}\n")
        lines.append("f(k) = exp(logC) * k**(-r) * exp(-sigma*k)\n")
        k_lo, k_hi = fit['k_window']
        plot += (f", [{k_lo!r}:{k_hi!r}] f(x) with lines lw 2 "
                 "title sprintf('fit: sigma = %.4g, r = %.3g', sigma, r)")
    lines.append(plot + "\n")
    return "".join(lines)


def sigma_script(run_dir: Path, summary: Optional[Dict[str, Any]]) -> str:
    columns = _header(run_dir)
    col = columns.index('sigma_fit') + 1
    lines = [_preamble("sigma"), "set xlabel 't'\nset ylabel 'sigma(t)'\n"]
    plot = f"plot '{TIMESERIES}' using 1:{col} with linespoints title 'sigma_fit'"
    audit = (summary or {}).get('decay_law') or {}
    fit = audit.get('fit')
    if fit:
        lines.append(f"gamma = {fit['gamma']!r}\nc = {fit['c']!r}\n")
        lines.append("g(t) = c * t**(-gamma)\n")
        lines.append("set label 1 sprintf('gamma = %.6g', gamma) at graph 0.05, graph 0.92\n")
        t_lo, t_hi = fit['t_window']
        plot += f", [{t_lo!r}:{t_hi!r}] g(x) with lines lw 2 title 'c t^(-gamma)'"
    elif audit.get('verdict'):
        lines.append(f"set label 1 '{audit['verdict']}' at graph 0.05, graph 0.92\n")
    lines.append(plot + "\n")
    return "".join(lines)


def audit_script(run_dir: Path) -> str:
    return (
        _preamble("audit")
        + "set xlabel 'sigma'\nset ylabel 'Delta / (sigma^theta B^3)'\nset logscale xy\n"
        + f"plot '{AUDIT}' using 1:4 skip 1 with linespoints title 'ratio'\n"
    )


def emit_plot_scripts(run_dir: Path) -> PlotReport:
    """为运行目录生成最多四个脚本: norms, spectrum, sigma, audit"""
    run_dir = Path(run_dir)
    report = PlotReport()
    summary = _load_summary(run_dir)
    has_table = (run_dir / TIMESERIES).is_file()
    dumps = sorted(p.name for p in (run_dir / SPECTRA_DIR).glob("spectrum_*.dat")) \
        if (run_dir / SPECTRA_DIR).is_dir() else []

    scripts: Dict[str, Optional[str]] = {}
    if has_table:
        scripts['norms'] = norms_script(run_dir)
    else:
        report.skipped.append(('norms', f"缺少 {TIMESERIES}"))
    if dumps:
        scripts['spectrum'] = spectrum_script(run_dir, dumps[-1], summary)
    else:
        report.skipped.append(('spectrum', f"{SPECTRA_DIR}/ 中没有谱快照"))
    if has_table and 'sigma_fit' in _header(run_dir):
        scripts['sigma'] = sigma_script(run_dir, summary)
    else:
        report.skipped.append(('sigma', f"缺少 {TIMESERIES} 的 sigma_fit 列"))
    if (run_dir / AUDIT).is_file():
        scripts['audit'] = audit_script(run_dir)
    else:
        report.skipped.append(('audit', f"缺少 {AUDIT}"))

    if scripts:
        (run_dir / PLOTS_DIR).mkdir(exist_ok=True)
    for name, text in scripts.items():
        path = run_dir / PLOTS_DIR / f"{name}.gp"
        path.write_text(text, encoding='utf-8')
        report.written.append(path)
    for name, reason in report.skipped:
        logger.info(f"跳过 {name} 图: {reason}")
    return report
