#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
实验登记库维护工具
查看统计、列出最近运行、清理旧记录与失败运行、压缩数据库
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
    except Exception:
        pass

import argparse
import json

from database import ExperimentDatabase
from i18n_utils import t


def print_stats(db: ExperimentDatabase):
    """显示登记库统计信息"""
    stats = db.get_database_stats()
    print("\n" + "=" * 60)
    print(f"📊 {t('db.stats_title')}")
    print("=" * 60)
    print(f"\n💾 {db.db_path}: {stats['database_size_mb']} MB ({stats['database_size']:,} bytes)")
    print(f"\n📁 {t('db.runs')}: {stats['runs_count']}  ({t('db.failed')}: {stats['failed_runs']})")
    print(f"   {t('db.members')}: {stats['members_count']}")
    print(f"   {t('db.verdicts')}: {stats['verdicts_count']}  (VIOLATION: {stats['violations']})")
    print(f"   {t('db.probes')}: {stats['probes_count']}")
    if stats['oldest_run']:
        print(f"\n📅 {stats['oldest_run']} … {stats['newest_run']}")
    print("\n" + "=" * 60 + "\n")
    return stats


def show_recent(db: ExperimentDatabase, limit: int = 10):
    runs = db.get_recent_runs(limit)
    if not runs:
        print(f"   {t('db.empty')}")
        return runs
    for i, run in enumerate(runs, 1):
        print(f"{i}. [{run['status']}] {run['kind']} {run['run_id']}")
        print(f"   {run['directory'] or '-'}  {run['created_at']}")
    return runs


def show_run(db: ExperimentDatabase, run_id: str) -> bool:
    run = db.get_run(run_id)
    if not run:
        print(f"❌ {t('db.not_found', run_id=run_id)}")
        return False
    print(json.dumps(run, ensure_ascii=False, indent=2, sort_keys=True))
    return True


def main(argv=None):
    parser = argparse.ArgumentParser(
        description='实验登记库维护工具',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
示例用法:
  %(prog)s --db experiments.db --stats          # 统计信息
  %(prog)s --db experiments.db --recent 20      # 最近 20 次运行
  %(prog)s --db experiments.db --cleanup-old 30 # 删除 30 天前的记录
  %(prog)s --db experiments.db --cleanup-failed --vacuum
        """
    )
    parser.add_argument('--db', default='experiments.db', help='登记库路径')
    parser.add_argument('--stats', action='store_true', help='显示统计信息')
    parser.add_argument('--recent', type=int, metavar='N', help='列出最近 N 次运行')
    parser.add_argument('--show', metavar='RUN_ID', help='显示一次运行的全部记录')
    parser.add_argument('--cleanup-old', type=int, metavar='DAYS', help='删除 N 天前的记录')
    parser.add_argument('--cleanup-failed', action='store_true', help='删除失败的运行')
    parser.add_argument('--vacuum', action='store_true', help='压缩数据库 (VACUUM)')
    args = parser.parse_args(argv)

    db = ExperimentDatabase(args.db)
    try:
        if args.stats:
            print_stats(db)
        if args.recent:
            show_recent(db, args.recent)
        if args.show and not show_run(db, args.show):
            return 1
        if args.cleanup_old:
            deleted = db.cleanup_old_data(args.cleanup_old)
            print(f"✅ {t('db.cleaned', count=deleted)}")
        if args.cleanup_failed:
            deleted = db.cleanup_failed_runs()
            print(f"✅ {t('db.cleaned', count=deleted)}")
        if args.vacuum:
            result = db.vacuum_database()
            if result['success']:
                print(f"⚡ {result['before_size_mb']} MB -> {result['after_size_mb']} MB")
            else:
                print(f"❌ {result['error']}")
                return 1
    except KeyboardInterrupt:
        print("\n❌ 操作已中断")
        return 1
    return 0


if __name__ == '__main__':
    sys.exit(main())
