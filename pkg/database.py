#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
实验登记库 (SQLite)
记录单次运行、扫描成员、审计结论与探针报告；不属于确定性输出的一部分
"""

import json
import logging
import sqlite3
import uuid
from pathlib import Path
from typing import Any, Dict, List, Optional

logger = logging.getLogger(__name__)


class ExperimentDatabase:
    """实验记录数据库"""

    def __init__(self, db_path: str = "experiments.db"):
        self.db_path = str(db_path)
        self.init_database()

    def _get_connection(self):
        """获取配置好的数据库连接"""
        conn = sqlite3.connect(self.db_path)
        conn.execute("PRAGMA encoding = 'UTF-8'")
        conn.execute("PRAGMA journal_mode = WAL")
        conn.execute("PRAGMA synchronous = NORMAL")
        conn.execute("PRAGMA foreign_keys = ON")
        conn.text_factory = str
        return conn

    def init_database(self):
        """初始化表结构"""
        with self._get_connection() as conn:
            conn.execute('''
                CREATE TABLE IF NOT EXISTS runs (
                    run_id TEXT PRIMARY KEY,
                    kind TEXT NOT NULL,
                    config_hash TEXT,
                    directory TEXT,
                    status TEXT DEFAULT 'running',
                    summary TEXT,
                    error_message TEXT,
                    created_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP,
                    completed_at TIMESTAMP
                )
            ''')

            conn.execute('''
                CREATE TABLE IF NOT EXISTS sweep_members (
                    member_id TEXT PRIMARY KEY,
                    sweep_id TEXT NOT NULL,
                    label TEXT NOT NULL,
                    directory TEXT,
                    status TEXT DEFAULT 'pending',
                    summary TEXT,
                    error_message TEXT,
                    created_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP,
                    FOREIGN KEY (sweep_id) REFERENCES runs (run_id) ON DELETE CASCADE
                )
            ''')

            conn.execute('''
                CREATE TABLE IF NOT EXISTS verdicts (
                    verdict_id TEXT PRIMARY KEY,
                    run_id TEXT NOT NULL,
                    audit TEXT NOT NULL,
                    verdict TEXT NOT NULL,
                    payload TEXT,
                    created_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP,
                    FOREIGN KEY (run_id) REFERENCES runs (run_id) ON DELETE CASCADE
                )
            ''')

            conn.execute('''
                CREATE TABLE IF NOT EXISTS probes (
                    probe_id TEXT PRIMARY KEY,
                    seed INTEGER,
                    samples INTEGER,
                    violations INTEGER,
                    worst_slack REAL,
                    report TEXT,
                    created_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP
                )
            ''')

            conn.execute('CREATE INDEX IF NOT EXISTS idx_runs_status ON runs (status)')
            conn.execute('CREATE INDEX IF NOT EXISTS idx_members_sweep ON sweep_members (sweep_id)')
            conn.execute('CREATE INDEX IF NOT EXISTS idx_verdicts_run ON verdicts (run_id)')
            conn.commit()

    def create_run(self, kind: str, config_hash: Optional[str] = None,
                   directory: Optional[str] = None) -> str:
        run_id = str(uuid.uuid4())
        with self._get_connection() as conn:
            conn.execute('''
                INSERT INTO runs (run_id, kind, config_hash, directory)
                VALUES (?, ?, ?, ?)
            ''', (run_id, kind, config_hash, directory))
            conn.commit()
        logger.debug(f"登记运行 {run_id} ({kind})")
        return run_id

    def complete_run(self, run_id: str, status: str, summary: Any = None, error: str = None):
        with self._get_connection() as conn:
            conn.execute('''
                UPDATE runs SET status = ?, summary = ?, error_message = ?,
                       completed_at = CURRENT_TIMESTAMP
                WHERE run_id = ?
            ''', (status, json.dumps(summary, sort_keys=True) if summary is not None else None,
                  error, run_id))
            conn.commit()

    def add_member(self, sweep_id: str, label: str, status: str, directory: str = None,
                   summary: Any = None, error: str = None) -> str:
        member_id = str(uuid.uuid4())
        with self._get_connection() as conn:
            conn.execute('''
                INSERT INTO sweep_members (member_id, sweep_id, label, directory, status,
                                           summary, error_message)
                VALUES (?, ?, ?, ?, ?, ?, ?)
            ''', (member_id, sweep_id, label, directory, status,
                  json.dumps(summary, sort_keys=True) if summary is not None else None, error))
            conn.commit()
        return member_id

    def record_verdict(self, run_id: str, audit: str, verdict: str, payload: Any = None) -> str:
        verdict_id = str(uuid.uuid4())
        with self._get_connection() as conn:
            conn.execute('''
                INSERT INTO verdicts (verdict_id, run_id, audit, verdict, payload)
                VALUES (?, ?, ?, ?, ?)
            ''', (verdict_id, run_id, audit, verdict, json.dumps(payload, sort_keys=True)))
            conn.commit()
        return verdict_id

    def record_probe(self, seed: int, samples: int, violations: int, worst_slack: float,
                     report: Dict[str, Any]) -> str:
        probe_id = str(uuid.uuid4())
        with self._get_connection() as conn:
            conn.execute('''
                INSERT INTO probes (probe_id, seed, samples, violations, worst_slack, report)
                VALUES (?, ?, ?, ?, ?, ?)
            ''', (probe_id, seed, samples, violations, worst_slack,
                  json.dumps(report, sort_keys=True)))
            conn.commit()
        return probe_id

    def get_run(self, run_id: str) -> Optional[Dict[str, Any]]:
        with self._get_connection() as conn:
            conn.row_factory = sqlite3.Row
            row = conn.execute('SELECT * FROM runs WHERE run_id = ?', (run_id,)).fetchone()
            if not row:
                return None
            run = dict(row)
            run['summary'] = json.loads(run['summary']) if run['summary'] else None
            members = conn.execute('''
                SELECT label, status, directory, error_message FROM sweep_members
                WHERE sweep_id = ? ORDER BY label
            ''', (run_id,)).fetchall()
            run['members'] = [dict(m) for m in members]
            verdicts = conn.execute('''
                SELECT audit, verdict, payload FROM verdicts WHERE run_id = ? ORDER BY created_at
            ''', (run_id,)).fetchall()
            run['verdicts'] = [
                {'audit': v['audit'], 'verdict': v['verdict'],
                 'payload': json.loads(v['payload']) if v['payload'] else None}
                for v in verdicts
            ]
            return run

    def get_recent_runs(self, limit: int = 10) -> List[Dict[str, Any]]:
        with self._get_connection() as conn:
            results = conn.execute('''
                SELECT run_id, kind, status, directory, created_at FROM runs
                ORDER BY created_at DESC, rowid DESC LIMIT ?
            ''', (limit,)).fetchall()
            return [
                {'run_id': r[0], 'kind': r[1], 'status': r[2], 'directory': r[3], 'created_at': r[4]}
                for r in results
            ]

    def get_database_stats(self) -> Dict[str, Any]:
        """统计信息"""
        with self._get_connection() as conn:
            db_size = Path(self.db_path).stat().st_size if Path(self.db_path).exists() else 0
            runs_count = conn.execute('SELECT COUNT(*) FROM runs').fetchone()[0]
            failed_runs = conn.execute(
                "SELECT COUNT(*) FROM runs WHERE status = 'failed'").fetchone()[0]
            members_count = conn.execute('SELECT COUNT(*) FROM sweep_members').fetchone()[0]
            verdicts_count = conn.execute('SELECT COUNT(*) FROM verdicts').fetchone()[0]
            violations = conn.execute(
                "SELECT COUNT(*) FROM verdicts WHERE verdict = 'VIOLATION'").fetchone()[0]
            probes_count = conn.execute('SELECT COUNT(*) FROM probes').fetchone()[0]
            oldest = conn.execute('SELECT created_at FROM runs ORDER BY created_at ASC LIMIT 1').fetchone()
            newest = conn.execute('SELECT created_at FROM runs ORDER BY created_at DESC LIMIT 1').fetchone()
            return {
                'database_size': db_size,
                'database_size_mb': round(db_size / (1024 * 1024), 2),
                'runs_count': runs_count,
                'failed_runs': failed_runs,
                'members_count': members_count,
                'verdicts_count': verdicts_count,
                'violations': violations,
                'probes_count': probes_count,
                'oldest_run': oldest[0] if oldest else None,
                'newest_run': newest[0] if newest else None,
            }

    def cleanup_old_data(self, days: int = 30) -> int:
        """删除早于 days 天的已完成运行 (级联删除成员与结论)"""
        with self._get_connection() as conn:
            result = conn.execute('''
                DELETE FROM runs
                WHERE status != 'running'
                AND datetime(created_at) < datetime('now', ?)
            ''', (f'-{int(days)} days',))
            conn.execute('''
                DELETE FROM probes WHERE datetime(created_at) < datetime('now', ?)
            ''', (f'-{int(days)} days',))
            conn.commit()
            return result.rowcount

    def cleanup_failed_runs(self) -> int:
        with self._get_connection() as conn:
            result = conn.execute("DELETE FROM runs WHERE status = 'failed'")
            conn.commit()
            return result.rowcount

    def vacuum_database(self) -> Dict[str, Any]:
        """VACUUM 收缩数据库"""
        try:
            before_size = Path(self.db_path).stat().st_size if Path(self.db_path).exists() else 0
            with self._get_connection() as conn:
                conn.execute('VACUUM')
            after_size = Path(self.db_path).stat().st_size if Path(self.db_path).exists() else 0
            return {
                'success': True,
                'before_size_mb': round(before_size / (1024 * 1024), 2),
                'after_size_mb': round(after_size / (1024 * 1024), 2),
                'saved_size_mb': round((before_size - after_size) / (1024 * 1024), 2),
            }
        except sqlite3.Error as e:
            logger.error(f"数据库优化失败: {e}")
            return {'success': False, 'error': str(e)}

    def reset_database(self) -> Dict[str, Any]:
        """清空所有记录"""
        try:
            with self._get_connection() as conn:
                conn.execute('DELETE FROM verdicts')
                conn.execute('DELETE FROM sweep_members')
                conn.execute('DELETE FROM runs')
                conn.execute('DELETE FROM probes')
                conn.commit()
            logger.info("实验登记库已清空")
            return {'success': True}
        except sqlite3.Error as e:
            logger.error(f"数据库重置失败: {e}")
            return {'success': False, 'error': str(e)}
