import json
from functools import partial

import pytest

import lab
from history import RunHistory

TRANSLATION = '{"family": "translation", "a": [[1.0, -2.0]]}'


@pytest.fixture(autouse=True)
def isolated_history(tmp_path, monkeypatch):
    ledger = tmp_path / "history.json"
    monkeypatch.setattr(lab, "RunHistory", partial(RunHistory, ledger))
    monkeypatch.setattr(lab.Sampling, "SEED", lab.DEFAULT_SEED)
    return ledger


def test_missing_command_is_usage_error():
    assert lab.main([]) == lab.EXIT_USAGE


def test_pairing_prints_magnitude(capsys):
    code = lab.main(["pairing", "--op", TRANSLATION, "--z", "0,0", "--w", "1,-2"])
    assert code == lab.EXIT_OK
    out = capsys.readouterr().out
    assert "magnitude" in out
    assert "closed_form" in out


def test_berezin_command(capsys):
    assert lab.main(["berezin", "--op", '{"family": "identity"}', "--z", "0.5,0.5"]) == lab.EXIT_OK
    assert "Berezin transform" in capsys.readouterr().out


def test_operator_from_file(tmp_path):
    spec = tmp_path / "op.json"
    spec.write_text(TRANSLATION, encoding="utf-8")
    assert lab.main(["pairing", "--op", str(spec), "--z", "0,0", "--w", "0,0"]) == lab.EXIT_OK


def test_bad_operator_json_is_usage_error(capsys):
    code = lab.main(["pairing", "--op", "{broken", "--z", "0,0", "--w", "0,0"])
    assert code == lab.EXIT_USAGE
    assert "not valid JSON" in capsys.readouterr().err


def test_bad_point_is_usage_error():
    assert lab.main(["berezin", "--op", '{"family": "identity"}', "--z", "0.5"]) == lab.EXIT_USAGE


def test_unknown_experiment_is_usage_error(tmp_path):
    assert lab.main(["experiment", "no-such-experiment", "--out", str(tmp_path)]) == lab.EXIT_USAGE


def test_experiment_needs_name_or_all(tmp_path):
    assert lab.main(["experiment", "--out", str(tmp_path)]) == lab.EXIT_USAGE


def test_list_shows_catalog(capsys):
    assert lab.main(["list"]) == lab.EXIT_OK
    out = capsys.readouterr().out
    assert "dilation-threshold" in out
    assert "never run" in out


def test_experiment_writes_files_and_history(tmp_path, isolated_history):
    code = lab.main(["experiment", "lacunary-berezin", "--out", str(tmp_path), "--threads", "1"])
    assert code == lab.EXIT_OK
    assert (tmp_path / "lacunary-berezin.csv").exists()

    payload = json.loads((tmp_path / "lacunary-berezin.json").read_text(encoding="utf-8"))
    assert payload["passed"] is True
    entries = json.loads(isolated_history.read_text(encoding="utf-8"))
    assert entries[-1]["name"] == "lacunary-berezin"


def test_seed_option_sets_sampling_seed():
    assert lab.main(["list", "--seed", "7"]) == lab.EXIT_OK
    assert lab.Sampling.SEED == 7
