"""Secondary analyses: stratification, worst cases, stage comparison, tau derivation."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigError, InputError
from .masks import CaseRecord, MaskLike
from .metrics import surface_distances
from .ranking import MetricTable, impute_missing, quantile

__all__ = [
    "BUCKETS",
    "StratifiedStats",
    "StageSummary",
    "WorstCaseReport",
    "instrument_bucket",
    "stratify_by_instrument_count",
    "worst_cases",
    "stage_comparison",
    "derive_tau",
]

BUCKETS = ("0", "1", "2", "3", ">3")


@dataclass(frozen=True)
class StratifiedStats:
    bucket: str
    count: int
    mean: float | None = None
    median: float | None = None
    q1: float | None = None
    q3: float | None = None


@dataclass(frozen=True)
class StageSummary:
    stage: int
    team_means: dict[str, float]
    median: float
    min: float
    max: float
    image_median: float
    image_min: float
    image_max: float


@dataclass(frozen=True)
class WorstCaseReport:
    rows: list[dict]
    truncated: bool = False
    aggregate: str = "mean"
    algorithms: list[str] = field(default_factory=list)


def instrument_bucket(count: int) -> str:
    return ">3" if count > 3 else str(count)


def _case_scores(table: MetricTable, how: str = "mean") -> np.ndarray:
    values = impute_missing(table).values
    if how == "mean":
        return values.mean(axis=0)
    if how == "min":
        return values.min(axis=0)
    raise ConfigError(f"unknown case aggregate {how!r}")


def stratify_by_instrument_count(
    table: MetricTable, cases: Mapping[str, CaseRecord]
) -> list[StratifiedStats]:
    """Statistics of the per-case mean over algorithms, grouped by instrument count."""
    missing = [c for c in table.cases if c not in cases]
    if missing:
        raise InputError(f"no metadata for case {missing[0]!r}")
    scores = _case_scores(table)
    groups: dict[str, list[float]] = {b: [] for b in BUCKETS}
    for case_id, score in zip(table.cases, scores):
        groups[instrument_bucket(cases[case_id].instrument_count)].append(float(score))
    out = []
    for bucket in BUCKETS:
        vals = groups[bucket]
        if not vals:
            out.append(StratifiedStats(bucket, 0))
            continue
        out.append(
            StratifiedStats(
                bucket,
                len(vals),
                mean=float(np.mean(vals)),
                median=float(np.median(vals)),
                q1=quantile(vals, 0.25),
                q3=quantile(vals, 0.75),
            )
        )
    return out


def worst_cases(
    table: MetricTable,
    k: int,
    cases: Mapping[str, CaseRecord] | None = None,
    aggregate: str = "mean",
) -> WorstCaseReport:
    """The ``k`` cases with the lowest aggregate over algorithms, ties by case id."""
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    scores = _case_scores(table, aggregate)
    order = sorted(range(len(table.cases)), key=lambda j: (scores[j], table.cases[j]))
    imputed = impute_missing(table).values
    rows = []
    for j in order[:k]:
        case_id = table.cases[j]
        row = {"case_id": case_id, aggregate: float(scores[j])}
        row.update({a: float(imputed[i, j]) for i, a in enumerate(table.algorithms)})
        meta = cases.get(case_id) if cases else None
        if meta is not None:
            row.update(
                stage=meta.stage,
                surgery_type=meta.surgery_type,
                instrument_count=meta.instrument_count,
            )
        rows.append(row)
    return WorstCaseReport(rows, truncated=k > len(table.cases), aggregate=aggregate,
                           algorithms=list(table.algorithms))


def stage_comparison(tables: Mapping[int, MetricTable]) -> list[StageSummary]:
    """Per-stage spread of team means, plus the per-image mean over teams."""
    if not tables:
        raise InputError("stage comparison needs at least one stage table")
    stages = sorted(tables)
    teams = sorted(tables[stages[0]].algorithms)
    out = []
    for stage in stages:
        table = tables[stage]
        if sorted(table.algorithms) != teams:
            raise InputError(f"stage {stage} team set differs from stage {stages[0]}")
        values = impute_missing(table).values
        team_means = dict(zip(table.algorithms, values.mean(axis=1).tolist()))
        means = np.array([team_means[t] for t in teams])
        per_image = values.mean(axis=0)
        out.append(
            StageSummary(
                stage=stage,
                team_means={t: team_means[t] for t in teams},
                median=float(np.median(means)),
                min=float(means.min()),
                max=float(means.max()),
                image_median=float(np.median(per_image)),
                image_min=float(per_image.min()),
                image_max=float(per_image.max()),
            )
        )
    return out


def derive_tau(annotations: Sequence[Sequence[MaskLike | None]], q: float = 0.95) -> int:
    """Integer NSD tolerance from pooled inter-annotator boundary distances.

    ``annotations[i][a]`` is annotator ``a``'s mask of image ``i``. For every
    image and unordered annotator pair, distances from each boundary pixel to
    the other annotator's boundary are pooled in both directions; the result
    is the ``q`` quantile of the pool, rounded up. Pairs where either mask is
    empty contribute nothing.
    """
    if not 0 <= q <= 1:
        raise ConfigError(f"quantile must lie in [0, 1], got {q}")
    if not annotations:
        raise InputError("no annotated images")
    n_annotators = len(annotations[0])
    if n_annotators < 2:
        raise InputError("derive_tau needs at least two annotators")
    pool = []
    for i, masks in enumerate(annotations):
        if len(masks) != n_annotators or any(m is None for m in masks):
            raise InputError(f"image {i} lacks an annotation")
        for a, b in combinations(masks, 2):
            d_ab, d_ba = surface_distances(a, b)
            if np.isinf(d_ab).any() or np.isinf(d_ba).any() or not (d_ab.size and d_ba.size):
                continue
            pool.append(d_ab)
            pool.append(d_ba)
    if not pool:
        return 0
    value = quantile(np.concatenate(pool), q)
    # guard against sqrt rounding just above an integer
    return int(math.ceil(round(value, 9)))
