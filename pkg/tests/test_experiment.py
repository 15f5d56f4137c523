import csv
import io

import pytest

from wim.experiment import CSV_COLUMNS, experiment, sample_seed, worker_count
from wim.model import ModelSpec
from wim.statespace import l0_metric


@pytest.fixture(scope="module")
def small():
    return experiment(ModelSpec.of(2, 2), l0_metric([2, 2]), 12, seed=5)


def test_csv_layout(small):
    text = small.to_csv()
    assert "\r" not in text and text.endswith("\n")
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == CSV_COLUMNS
    assert [int(r[0]) for r in rows[1:]] == list(range(12))
    for r in rows[1:]:
        assert float(r[1]) >= 0 and int(r[3]) == 5


def test_deterministic_across_runs_and_workers(small):
    again = experiment(ModelSpec.of(2, 2), l0_metric([2, 2]), 12, seed=5)
    assert again.to_csv() == small.to_csv()
    pooled = experiment(ModelSpec.of(2, 2), l0_metric([2, 2]), 12, seed=5, workers=2)
    assert pooled.to_csv() == small.to_csv()


def test_seed_changes_samples(small):
    other = experiment(ModelSpec.of(2, 2), l0_metric([2, 2]), 12, seed=6)
    assert other.to_csv() != small.to_csv()
    assert sample_seed(5, 0) != sample_seed(5, 1) != sample_seed(6, 1)


def test_summary(small):
    s = small.summary()
    assert s["samples"] == 12 and s["mean_feasible_facets"] == 5.0
    assert abs(sum(s["type_histogram"].values()) - 100.0) < 1e-9


def test_worker_count_env(monkeypatch):
    monkeypatch.setenv("WIM_THREADS", "3")
    assert worker_count() == 3
    monkeypatch.delenv("WIM_THREADS")
    assert worker_count() == 1


def test_rejects_empty():
    with pytest.raises(ValueError):
        experiment(ModelSpec.of(2, 2), l0_metric([2, 2]), 0)
