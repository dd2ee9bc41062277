"""Accuracy (significance) and robustness (percentile) leaderboards.

Missing results are imputed with 0, the worst possible value, before any
ranking. Ranks follow competition ("1224") semantics on the raw aggregate;
rounding only happens when exporting.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigError
from .wilcoxon import pairwise_wins

__all__ = [
    "MISSING",
    "MetricTable",
    "LeaderboardEntry",
    "RankingConfig",
    "impute_missing",
    "competition_ranks",
    "quantile",
    "significance_aggregates",
    "significance_rank",
    "robustness_rank",
    "detection_rank",
    "leaderboard_csv",
    "leaderboard_json",
]

MISSING = float("nan")


@dataclass(frozen=True, eq=False)
class MetricTable:
    """Per-algorithm, per-case metric values; NaN marks a missing result."""

    algorithms: list[str]
    cases: list[str]
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.float64, copy=True)
        if vals.shape != (len(self.algorithms), len(self.cases)):
            raise ConfigError(
                f"values shape {vals.shape} does not match "
                f"{len(self.algorithms)} algorithms x {len(self.cases)} cases"
            )
        if len(set(self.algorithms)) != len(self.algorithms):
            raise ConfigError("duplicate algorithm ids")
        if len(set(self.cases)) != len(self.cases):
            raise ConfigError("duplicate case ids")
        vals.flags.writeable = False
        object.__setattr__(self, "algorithms", list(self.algorithms))
        object.__setattr__(self, "cases", list(self.cases))
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_records(
        cls,
        records: Iterable[tuple[str, str, float | None]],
        algorithms: Sequence[str] | None = None,
        cases: Sequence[str] | None = None,
    ) -> "MetricTable":
        """Build a table from ``(algorithm, case, value)`` triples.

        Cells without a record, or whose value is ``None``/NaN, are missing.
        """
        records = list(records)
        algos = list(algorithms) if algorithms is not None else sorted({r[0] for r in records})
        case_ids = list(cases) if cases is not None else sorted({r[1] for r in records})
        a_idx = {a: i for i, a in enumerate(algos)}
        c_idx = {c: j for j, c in enumerate(case_ids)}
        vals = np.full((len(algos), len(case_ids)), np.nan)
        for algo, case, value in records:
            if algo in a_idx and case in c_idx:
                vals[a_idx[algo], c_idx[case]] = np.nan if value is None else value
        return cls(algos, case_ids, vals)

    def missing(self) -> np.ndarray:
        return np.isnan(self.values)

    def row(self, algorithm: str) -> np.ndarray:
        return self.values[self.algorithms.index(algorithm)]

    def take_cases(self, columns: np.ndarray) -> "MetricTable":
        """Table restricted to the given column indices (repeats allowed)."""
        cols = np.asarray(columns, dtype=np.intp)
        return MetricTable(
            self.algorithms,
            [f"{self.cases[c]}#{k}" for k, c in enumerate(cols)],
            self.values[:, cols],
        )


@dataclass(frozen=True)
class LeaderboardEntry:
    team: str
    aggregate: float
    rank: int


@dataclass(frozen=True)
class RankingConfig:
    alpha: float = 0.05
    percentile: float = 0.05
    quantile_method: str = "interpolated-order-statistic"

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not 0 <= self.percentile <= 1:
            raise ConfigError(f"percentile must lie in [0, 1], got {self.percentile}")
        if self.quantile_method != "interpolated-order-statistic":
            raise ConfigError(f"unsupported quantile method {self.quantile_method!r}")

    def as_dict(self) -> dict:
        return {"alpha": self.alpha, "percentile": self.percentile, "quantile_method": self.quantile_method}


def impute_missing(table: MetricTable) -> MetricTable:
    return MetricTable(table.algorithms, table.cases, np.nan_to_num(table.values, nan=0.0))


def competition_ranks(aggregates: Sequence[float], descending: bool = True) -> list[int]:
    """Standard competition ranks: ties share the best rank, the next rank skips."""
    vals = np.asarray(aggregates, dtype=np.float64)
    if not descending:
        vals = -vals
    return [int(1 + np.count_nonzero(vals > v)) for v in vals]


def quantile(values, p: float, axis: int = -1) -> np.ndarray | float:
    """Linear interpolation between order statistics at ``h = (n - 1) p + 1``."""
    x = np.sort(np.asarray(values, dtype=np.float64), axis=axis)
    n = x.shape[axis]
    if n == 0:
        raise ConfigError("quantile of an empty sample")
    h = (n - 1) * p
    lo = int(math.floor(h))
    hi = min(lo + 1, n - 1)
    frac = h - lo
    x_lo = np.take(x, lo, axis=axis)
    x_hi = np.take(x, hi, axis=axis)
    out = x_lo + frac * (x_hi - x_lo)
    return float(out) if np.ndim(out) == 0 else out


def _entries(teams: Sequence[str], aggregates: Sequence[float]) -> list[LeaderboardEntry]:
    ranks = competition_ranks(aggregates)
    entries = [LeaderboardEntry(t, float(a), r) for t, a, r in zip(teams, aggregates, ranks)]
    return sorted(entries, key=lambda e: (e.rank, e.team))


def significance_aggregates(values: np.ndarray, alpha: float = 0.05) -> np.ndarray:
    """Proportion of rivals each row beats in one-sided paired Wilcoxon tests."""
    values = np.nan_to_num(np.asarray(values, dtype=np.float64), nan=0.0)
    k = values.shape[0]
    if k < 2:
        raise ConfigError("significance ranking needs at least two algorithms")
    return pairwise_wins(values, alpha).sum(axis=1) / (k - 1)


def significance_rank(table: MetricTable, alpha: float = 0.05) -> list[LeaderboardEntry]:
    if not 0 < alpha < 1:
        raise ConfigError(f"alpha must lie in (0, 1), got {alpha}")
    if len(table.algorithms) < 2:
        raise ConfigError("significance ranking needs at least two algorithms")
    props = significance_aggregates(impute_missing(table).values, alpha)
    return _entries(table.algorithms, props.tolist())


def robustness_rank(table: MetricTable, percentile: float = 0.05) -> list[LeaderboardEntry]:
    if not table.cases or not table.algorithms:
        raise ConfigError("robustness ranking needs at least one case and one algorithm")
    if not 0 <= percentile <= 1:
        raise ConfigError(f"percentile must lie in [0, 1], got {percentile}")
    agg = quantile(impute_missing(table).values, percentile, axis=1)
    return _entries(table.algorithms, np.atleast_1d(agg).tolist())


def detection_rank(map_values: Mapping[str, float]) -> list[LeaderboardEntry]:
    if not map_values:
        raise ConfigError("detection ranking needs at least one team")
    teams = list(map_values)
    return _entries(teams, [float(map_values[t]) for t in teams])


def leaderboard_csv(entries: Sequence[LeaderboardEntry], digits: int = 3) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["team", "aggregate", "rank"])
    for e in entries:
        writer.writerow([e.team, f"{e.aggregate:.{digits}f}", e.rank])
    return buf.getvalue()


def leaderboard_json(entries: Sequence[LeaderboardEntry], config: Mapping, **meta) -> str:
    doc = {
        **meta,
        "config": dict(config),
        "entries": [{"team": e.team, "aggregate": e.aggregate, "rank": e.rank} for e in entries],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"
