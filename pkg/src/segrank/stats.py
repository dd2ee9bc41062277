"""Ranking stability: bootstrap over cases and per-case rank frequencies.

Replicate ``r`` of a bootstrap run with seed ``s`` draws its case indices
from a PCG64 generator seeded with ``SeedSequence([s, r])``, so results do
not depend on how replicates are scheduled across workers.
"""
from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError
from .ranking import (
    MetricTable,
    impute_missing,
    quantile,
    significance_aggregates,
)
from .wilcoxon import TestResult, wilcoxon_one_sided

__all__ = [
    "TestResult",
    "wilcoxon_one_sided",
    "BootstrapSummary",
    "replicate_indices",
    "bootstrap_rankings",
    "per_case_rank_frequencies",
    "RANKERS",
]


def _rank_rows(aggregates: np.ndarray) -> np.ndarray:
    # competition ranks, descending, for each row of a (replicates x algorithms) array
    agg = np.atleast_2d(aggregates)
    return 1 + (agg[:, None, :] > agg[:, :, None]).sum(axis=2)


def _significance(values: np.ndarray, alpha: float, percentile: float) -> np.ndarray:
    return significance_aggregates(values, alpha)


def _robustness(values: np.ndarray, alpha: float, percentile: float) -> np.ndarray:
    return np.atleast_1d(quantile(values, percentile, axis=1))


RANKERS: dict[str, Callable[[np.ndarray, float, float], np.ndarray]] = {
    "significance": _significance,
    "robustness": _robustness,
}


@dataclass(frozen=True, eq=False)
class BootstrapSummary:
    b: int
    seed: int
    ranker: str
    algorithms: list[str]
    rank_frequency: np.ndarray
    median_rank: np.ndarray
    interval_95: np.ndarray
    config: dict = field(default_factory=dict)

    def frequency_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["algorithm", "rank", "frequency"])
        for i, algo in enumerate(self.algorithms):
            for r, count in enumerate(self.rank_frequency[i], start=1):
                writer.writerow([algo, r, int(count)])
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {
            "b": self.b,
            "seed": self.seed,
            "ranker": self.ranker,
            "config": self.config,
            "algorithms": [
                {
                    "algorithm": algo,
                    "median_rank": float(self.median_rank[i]),
                    "interval_95": [float(x) for x in self.interval_95[i]],
                    "rank_frequency": [int(x) for x in self.rank_frequency[i]],
                }
                for i, algo in enumerate(self.algorithms)
            ],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def replicate_indices(seed: int, replicate: int, n_cases: int) -> np.ndarray:
    """Case indices (with replacement) drawn for one bootstrap replicate."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, replicate])))
    return rng.integers(0, n_cases, size=n_cases)


def _run_replicates(values, ranker, alpha, percentile, seed, start, stop) -> np.ndarray:
    fn = RANKERS[ranker]
    n_cases = values.shape[1]
    out = np.empty((stop - start, values.shape[0]), dtype=np.int64)
    for k, r in enumerate(range(start, stop)):
        idx = replicate_indices(seed, r, n_cases)
        out[k] = _rank_rows(fn(values[:, idx], alpha, percentile))[0]
    return out


def bootstrap_rankings(
    table: MetricTable,
    ranker: str = "significance",
    b: int = 1000,
    seed: int = 0,
    alpha: float = 0.05,
    percentile: float = 0.05,
    jobs: int = 1,
) -> BootstrapSummary:
    """Recompute the ranking on ``b`` case resamples and summarise rank spread."""
    if b < 1:
        raise ConfigError(f"b must be >= 1, got {b}")
    if ranker not in RANKERS:
        raise ConfigError(f"unknown ranker {ranker!r}; expected one of {sorted(RANKERS)}")
    if not table.cases:
        raise ConfigError("bootstrap needs at least one case")
    if ranker == "significance" and len(table.algorithms) < 2:
        raise ConfigError("significance ranking needs at least two algorithms")
    values = impute_missing(table).values

    if jobs <= 1 or b < 2:
        ranks = _run_replicates(values, ranker, alpha, percentile, seed, 0, b)
    else:
        bounds = np.linspace(0, b, min(jobs, b) + 1).astype(int)
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = pool.map(
                _run_replicates,
                *zip(*[
                    (values, ranker, alpha, percentile, seed, lo, hi)
                    for lo, hi in zip(bounds[:-1], bounds[1:])
                ]),
            )
            ranks = np.concatenate(list(parts))

    k = len(table.algorithms)
    freq = np.zeros((k, k), dtype=np.int64)
    for a in range(k):
        freq[a] = np.bincount(ranks[:, a] - 1, minlength=k)
    median = np.median(ranks, axis=0).astype(np.float64)
    lo = quantile(ranks.T, 0.025, axis=1)
    hi = quantile(ranks.T, 0.975, axis=1)
    return BootstrapSummary(
        b=b,
        seed=seed,
        ranker=ranker,
        algorithms=list(table.algorithms),
        rank_frequency=freq,
        median_rank=median,
        interval_95=np.column_stack([np.atleast_1d(lo), np.atleast_1d(hi)]),
        config={"alpha": alpha, "percentile": percentile},
    )


def per_case_rank_frequencies(table: MetricTable) -> np.ndarray:
    """Counts ``[algorithm, rank - 1]`` of cases where each algorithm took each rank."""
    values = impute_missing(table).values
    k = values.shape[0]
    ranks = _rank_rows(values.T)  # (cases, algorithms)
    freq = np.zeros((k, k), dtype=np.int64)
    for a in range(k):
        freq[a] = np.bincount(ranks[:, a] - 1, minlength=k)
    return freq
