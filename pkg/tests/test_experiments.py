import re

import pytest

import experiments
from config import EXPERIMENTS, SCHEMA_TAG
from exceptions import UnknownExperiment
from operators import CLOSED_FORM


def test_every_catalog_entry_has_a_runner():
    assert set(experiments.available()) == set(EXPERIMENTS)
    assert set(experiments._REGISTRY) == set(EXPERIMENTS)


def test_alias_resolves_to_catalog_name():
    assert experiments.resolve("plocal-crosscheck") == "eq31-crosscheck"
    assert experiments.resolve("eq31-crosscheck") == "eq31-crosscheck"
    with pytest.raises(UnknownExperiment):
        experiments.resolve("eq3-crosscheck")


def test_anchors_start_with_their_reference():
    pattern = re.compile(r"^(Lemma|Thm|Prop\.|Cor\.|Eq\.|Sec\.) \d")
    for name, entry in EXPERIMENTS.items():
        assert pattern.match(entry["anchor"]), name


def test_unknown_experiment():
    with pytest.raises(UnknownExperiment):
        experiments.run("no-such-experiment")


def test_registering_outside_the_catalog_fails():
    with pytest.raises(UnknownExperiment):
        experiments.experiment("not-in-catalog")(lambda cfg, threads: ({}, [], []))


def test_p_grid_steps_from_two():
    assert experiments._p_grid(2.2) == [2.05, 2.1, 2.15, 2.2]


def test_flip_row_accepts_flip_at_threshold():
    grid = [2.5, 2.6, 2.7, 2.8]
    row = experiments._flip_row("case", grid, ["bounded", "bounded", "divergent", "divergent"], 8 / 3, step=0.1)
    assert row["ok"]
    assert row["grid_value"] == 2.7


def test_flip_row_rejects_late_flip():
    grid = [2.5, 2.6, 2.7, 2.8]
    row = experiments._flip_row("case", grid, ["bounded", "bounded", "bounded", "divergent"], 8 / 3, step=0.1)
    assert not row["ok"]


def test_lacunary_berezin_passes():
    result = experiments.run("lacunary-berezin")
    assert result.passed is True
    assert list(result.to_frame().columns) == experiments.ROW_COLUMNS

    payload = result.to_dict()
    assert payload["schema"] == SCHEMA_TAG
    assert "runtime" not in payload


def test_open_probe_is_exploratory():
    result = experiments.run("lacunary-open-probe")
    assert result.passed is None
    assert result.rows


@pytest.mark.slow
@pytest.mark.parametrize("name", ["sphi-window", "sphi-l2", "composition-1d", "composition-svd", "eq31-crosscheck"])
def test_experiment_passes(name):
    result = experiments.run(name)
    failed = [row for row in result.rows if row["ok"] is False]
    assert result.passed, failed


@pytest.mark.slow
def test_crosscheck_compares_two_quadratures():
    result = experiments.run("plocal-crosscheck")
    assert result.name == "eq31-crosscheck"
    sides = [row for row in result.rows if row["section"] == "identity"]
    assert sides and all(row["outcome"] in ("hermite", "ladder") for row in sides)
    closed = [row for row in result.rows if row["section"] == "closed_form"]
    assert all(row["outcome"] == CLOSED_FORM for row in closed)
    assert len(closed) == 4 * 3 * 3
    assert all(row["ok"] for row in result.rows)
