from datetime import datetime

import pytest

from history import RunHistory


@pytest.fixture
def history(tmp_path):
    return RunHistory(tmp_path / "runs.json", limit=5)


def test_empty_history(history):
    assert history.load_history() == []
    assert history.last_verdicts() == {}
    assert history.pass_rate("dilation-threshold") is None


def test_record_and_last_verdict(history):
    history.record_run("dilation-threshold", True, 1.23456, when=datetime(2024, 6, 1, 12, 0, 0))
    history.record_run("dilation-threshold", False, 2.0, when=datetime(2024, 6, 2, 12, 0, 0))
    history.record_run("sphi-l2", True, 0.5)

    last = history.last_verdicts()
    assert last["dilation-threshold"]["passed"] is False
    assert last["dilation-threshold"]["date"] == "2024-06-02 12:00:00"
    assert history.load_history()[0]["runtime"] == 1.235


def test_history_keeps_limit(history):
    for k in range(8):
        history.record_run(f"run-{k}", True, k)
    names = [entry["name"] for entry in history.load_history()]
    assert names == [f"run-{k}" for k in range(3, 8)]


def test_pass_rate_skips_exploratory_runs(history):
    for passed in (True, False, True, None):
        history.record_run("composition-svd", passed, 1.0)
    assert history.pass_rate("composition-svd") == pytest.approx(2 / 3)
    assert history.pass_rate("composition-svd", lookback=1) == 1.0


def test_corrupt_file_is_ignored(tmp_path):
    path = tmp_path / "runs.json"
    path.write_text("{broken", encoding="utf-8")
    history = RunHistory(path)
    assert history.load_history() == []
    history.record_run("sphi-wl", True, 3.0)
    assert len(history.load_history()) == 1
