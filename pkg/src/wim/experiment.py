"""Sampling experiments: type dimensions and feasible-facet counts.

Every sample ``i`` gets its data point from one seeded draw of the whole
batch and its optimizer seed from ``SeedSequence([seed, i])``, so results do
not depend on how samples are distributed over worker processes.
"""

from __future__ import annotations

import csv
import io
import json
import os
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .model import ModelSpec, sample_simplex
from .optimize import Problem, ProjectionOptions, facet_feasibility, project_global
from .statespace import FiniteMetric, metric_from_dict

CSV_COLUMNS = ["sample_id", "value", "type_dim", "feasible_facets", "tie_count"]


@dataclass(frozen=True)
class SampleRecord:
    sample_id: int
    value: float
    type_dim: int | None
    feasible_facets: int
    tie_count: int


@dataclass
class ExperimentReport:
    model: str
    metric: str
    seed: int
    records: list[SampleRecord] = field(default_factory=list)

    @property
    def samples(self) -> int:
        return len(self.records)

    def histogram(self) -> dict[int | None, float]:
        """Percentage of samples per type dimension (``None`` = on the model)."""
        counts = Counter(r.type_dim for r in self.records)
        total = len(self.records)
        return {k: 100.0 * v / total for k, v in sorted(counts.items(), key=lambda kv: (kv[0] is None, kv[0]))}

    @property
    def mean_feasible(self) -> float:
        return float(np.mean([r.feasible_facets for r in self.records]))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.records:
            w.writerow([
                r.sample_id, repr(r.value),
                "" if r.type_dim is None else r.type_dim,
                r.feasible_facets, r.tie_count,
            ])
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "model": self.model,
            "metric": self.metric,
            "seed": self.seed,
            "samples": self.samples,
            "type_histogram": {str(k): v for k, v in self.histogram().items()},
            "mean_feasible_facets": self.mean_feasible,
        }


def sample_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def run_sample(problem: Problem, mu, seed: int, index: int) -> SampleRecord:
    opts = ProjectionOptions(seed=sample_seed(seed, index))
    result = project_global(problem, mu, opts)
    feasible, _ = facet_feasibility(problem, mu, opts)
    return SampleRecord(index, result.value, result.type_dim, len(feasible), len(result.ties))


_WORKER: dict = {}


def _init_worker(model_dict, metric_dict):
    _WORKER["problem"] = Problem(ModelSpec.from_dict(model_dict), metric_from_dict(metric_dict))


def _work(args):
    index, mu, seed = args
    return run_sample(_WORKER["problem"], mu, seed, index)


def worker_count(default: int = 1) -> int:
    value = os.environ.get("WIM_THREADS")
    if value:
        return max(1, int(value))
    return default


def experiment(model: ModelSpec, metric: FiniteMetric, samples: int, seed: int = 0,
               workers: int | None = None, problem: Problem | None = None) -> ExperimentReport:
    if samples < 1:
        raise ValueError("samples must be >= 1")
    workers = worker_count() if workers is None else workers
    mus = sample_simplex(model.n, samples, seed)
    report = ExperimentReport(str(model), json.dumps(metric.to_dict(), sort_keys=True), seed)
    if workers <= 1:
        problem = problem or Problem(model, metric)
        report.records = [run_sample(problem, mu, seed, i) for i, mu in enumerate(mus)]
    else:
        jobs = [(i, mu, seed) for i, mu in enumerate(mus)]
        with ProcessPoolExecutor(
            max_workers=workers, initializer=_init_worker,
            initargs=(model.to_dict(), metric.to_dict()),
        ) as pool:
            records = list(pool.map(_work, jobs, chunksize=max(1, samples // (4 * workers))))
        report.records = sorted(records, key=lambda r: r.sample_id)
    return report
