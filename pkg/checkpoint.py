#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
检查点文件
布局: 魔数 GBENJCKP | 版本 (uint16) | 头长度 (uint32) | JSON 头 | 半谱系数 (complex128, 小端)
"""

import json
import logging
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np

from spectral_core import Grid, SpectralField
from operators import ModelParams
from solver import SolverState

logger = logging.getLogger(__name__)

MAGIC = b"GBENJCKP"
VERSION = 1
_PREFIX = struct.Struct("<8sHI")


class CheckpointError(ValueError):
    """检查点损坏、版本不符或与当前配置不一致"""


@dataclass
class Checkpoint:
    config_hash: str
    state: SolverState
    rng_state: Dict[str, Any] = field(default_factory=dict)
    cursor: Dict[str, Any] = field(default_factory=dict)

    def header(self) -> Dict[str, Any]:
        grid = self.state.grid
        return {
            'config_hash': self.config_hash,
            't': self.state.t,
            'step_count': self.state.step_count,
            'params': {'l': self.state.params.l, 'p': self.state.params.p},
            'n_points': grid.n_points,
            'length': grid.length,
            'rng_state': self.rng_state,
            'cursor': self.cursor,
        }


def save_checkpoint(path: Path, checkpoint: Checkpoint) -> Path:
    """原子写入: 先写临时文件再替换"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = json.dumps(checkpoint.header(), sort_keys=True).encode('utf-8')
    payload = np.ascontiguousarray(checkpoint.state.u_hat.coeffs, dtype='<c16').tobytes()
    tmp = path.with_suffix(path.suffix + '.tmp')
    with open(tmp, 'wb') as f:
        f.write(_PREFIX.pack(MAGIC, VERSION, len(header)))
        f.write(header)
        f.write(payload)
    os.replace(tmp, path)
    logger.info(f"保存检查点 {path}: 第 {checkpoint.state.step_count} 步, t = {checkpoint.state.t:g}")
    return path


def load_checkpoint(path: Path, expected_hash: Optional[str] = None) -> Checkpoint:
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as e:
        raise CheckpointError(f"无法读取检查点 {path}: {e.strerror}")
    if len(blob) < _PREFIX.size:
        raise CheckpointError(f"检查点 {path} 过短")
    magic, version, header_len = _PREFIX.unpack_from(blob)
    if magic != MAGIC:
        raise CheckpointError(f"{path} 不是检查点文件 (魔数 {magic!r})")
    if version != VERSION:
        raise CheckpointError(f"检查点版本 {version} 不受支持 (当前版本 {VERSION})")
    start = _PREFIX.size
    try:
        header = json.loads(blob[start:start + header_len].decode('utf-8'))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"检查点头损坏: {e}")

    if expected_hash is not None and header['config_hash'] != expected_hash:
        raise CheckpointError(
            f"配置已改变: 检查点哈希 {header['config_hash'][:12]}，当前配置 {expected_hash[:12]}"
        )
    grid = Grid(header['n_points'], header['length'])
    payload = blob[start + header_len:]
    if len(payload) != 16 * grid.n_modes:
        raise CheckpointError(f"检查点数据长度 {len(payload)} 与 {grid.n_modes} 个模式不符")
    coeffs = np.frombuffer(payload, dtype='<c16').astype(complex)
    params = ModelParams(header['params']['l'], header['params']['p'])
    state = SolverState(
        t=header['t'], u_hat=SpectralField(grid, coeffs),
        step_count=header['step_count'], params=params,
    )
    return Checkpoint(
        config_hash=header['config_hash'], state=state,
        rng_state=header.get('rng_state', {}), cursor=header.get('cursor', {}),
    )
