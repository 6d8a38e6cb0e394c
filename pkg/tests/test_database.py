# -*- coding: utf-8 -*-
import pytest

import db_maintenance
from database import ExperimentDatabase


@pytest.fixture
def db(tmp_path):
    return ExperimentDatabase(tmp_path / "experiments.db")


def test_run_lifecycle(db):
    run_id = db.create_run("run", config_hash="abc", directory="runs/a")
    assert db.get_run(run_id)['status'] == 'running'
    db.complete_run(run_id, "ok", summary={'rows': 11})
    run = db.get_run(run_id)
    assert run['status'] == 'ok'
    assert run['summary'] == {'rows': 11}
    assert run['completed_at'] is not None
    assert run['members'] == [] and run['verdicts'] == []
    assert db.get_run("missing") is None


def test_members_and_verdicts(db):
    sweep = db.create_run("sweep")
    db.add_member(sweep, "A2_p1", "ok", directory="runs/s/A2_p1", summary={'theta_fit': 0.5})
    db.add_member(sweep, "A1_p1", "failed", error="boom")
    db.record_verdict(sweep, "lower_bound", "PASS_BOUND", {'gamma': 1.1})
    run = db.get_run(sweep)
    assert [m['label'] for m in run['members']] == ["A1_p1", "A2_p1"]
    assert run['members'][0]['error_message'] == "boom"
    assert run['verdicts'] == [{'audit': 'lower_bound', 'verdict': 'PASS_BOUND', 'payload': {'gamma': 1.1}}]


def test_stats_and_cleanup_cascade(db):
    ok = db.create_run("run")
    db.complete_run(ok, "ok")
    bad = db.create_run("sweep")
    db.add_member(bad, "A1_p1", "failed")
    db.record_verdict(bad, "lower_bound", "VIOLATION")
    db.complete_run(bad, "failed", error="member failed")
    db.record_probe(seed=7, samples=100, violations=0, worst_slack=0.4, report={'points': []})

    stats = db.get_database_stats()
    assert stats['runs_count'] == 2 and stats['failed_runs'] == 1
    assert stats['members_count'] == 1 and stats['verdicts_count'] == 1
    assert stats['violations'] == 1 and stats['probes_count'] == 1

    assert db.cleanup_failed_runs() == 1
    stats = db.get_database_stats()
    assert stats['runs_count'] == 1
    assert stats['members_count'] == 0 and stats['verdicts_count'] == 0
    assert [r['run_id'] for r in db.get_recent_runs()] == [ok]

    assert db.reset_database()['success']
    assert db.get_database_stats()['probes_count'] == 0
    assert db.vacuum_database()['success']


def test_maintenance_cli(tmp_path, capsys):
    path = tmp_path / "experiments.db"
    run_id = ExperimentDatabase(path).create_run("run", directory="runs/x")
    assert db_maintenance.main(['--db', str(path), '--stats', '--recent', '5']) == 0
    out = capsys.readouterr().out
    assert run_id in out
    assert db_maintenance.main(['--db', str(path), '--show', run_id]) == 0
    assert db_maintenance.main(['--db', str(path), '--show', 'nope']) == 1
    assert db_maintenance.main(['--db', str(path), '--cleanup-failed', '--vacuum']) == 0
