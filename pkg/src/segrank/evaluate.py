"""Batch evaluation of prediction trees against reference masks.

Layout::

    <root>/references/<stage>/<case_id>.<ext>
    <root>/<team>/<stage>/<case_id>.<ext>
    <root>/<team>/<stage>/detections.csv     (optional, multi-det only)

Every case is evaluated independently; a case that cannot be read is
recorded as missing and reported, and the run continues.
"""
from __future__ import annotations

import csv
import logging
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError, InputError, SegrankError
from .masks import MASK_SUFFIXES, instances, read_mask
from .metrics import DEFAULT_TAU, DEFAULT_XI, MetricConfig, dsc, nsd
from .multi import (
    DetectionRecord,
    case_detection_hits,
    detections_from_mask,
    mi_dsc,
    mi_nsd,
    sweep_precision_recall,
)
from .records import ALL_CASES, MetricRow

log = logging.getLogger(__name__)

__all__ = ["TASKS", "TASK_METRICS", "RunConfig", "EvaluationResult", "evaluate_case", "run_evaluation"]

TASKS = ("binary-seg", "multi-seg", "multi-det")
TASK_METRICS = {
    "binary-seg": ("DSC", "NSD"),
    "multi-seg": ("MI_DSC", "MI_NSD"),
    "multi-det": ("TP", "FP", "FN"),
}
REFERENCE_DIR = "references"
DETECTIONS_FILE = "detections.csv"


@dataclass
class RunConfig:
    task: str = "binary-seg"
    tau: float = DEFAULT_TAU
    xi: float = DEFAULT_XI
    alpha: float = 0.05
    percentile: float = 0.05
    b: int = 1000
    seed: int = 0
    jobs: int = 1
    data_root: Path | None = None
    reference_root: Path | None = None
    team_roots: dict[str, Path] = field(default_factory=dict)
    cases_csv: Path | None = None
    output_dir: Path | None = None
    stages: list[int] | None = None

    def validate(self) -> None:
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}; expected one of {', '.join(TASKS)}")
        MetricConfig(tau=self.tau, xi=self.xi)
        if not 0 < self.alpha < 1 or not 0 <= self.percentile <= 1:
            raise ConfigError("alpha must lie in (0, 1) and percentile in [0, 1]")
        if self.b < 1 or self.jobs < 1:
            raise ConfigError("b and jobs must be >= 1")

    def resolved_reference_root(self) -> Path:
        if self.reference_root is not None:
            return Path(self.reference_root)
        if self.data_root is None:
            raise ConfigError("either a data root or a reference root is required")
        return Path(self.data_root) / REFERENCE_DIR

    def resolved_teams(self) -> dict[str, Path]:
        if self.team_roots:
            return {t: Path(p) for t, p in sorted(self.team_roots.items())}
        if self.data_root is None:
            raise ConfigError("no prediction roots given")
        root = Path(self.data_root)
        return {
            p.name: p
            for p in sorted(root.iterdir())
            if p.is_dir() and p.name != REFERENCE_DIR and not p.name.startswith(".")
        }

    def provenance(self) -> dict:
        return {
            "task": self.task,
            "tau": self.tau,
            "xi": self.xi,
            "alpha": self.alpha,
            "percentile": self.percentile,
            "b": self.b,
            "seed": self.seed,
        }


@dataclass
class EvaluationResult:
    rows: list[MetricRow]
    errors: list[str]

    @property
    def partial(self) -> bool:
        return bool(self.errors)


def _mask_files(directory: Path) -> dict[str, Path]:
    if not directory.is_dir():
        return {}
    found = {}
    for p in sorted(directory.iterdir()):
        if p.is_file() and p.suffix.lower() in MASK_SUFFIXES and p.stem not in found:
            found[p.stem] = p
    return found


def _stage_dirs(root: Path) -> dict[int, Path]:
    stages = {}
    for p in sorted(root.iterdir()):
        if p.is_dir() and p.name.isdigit():
            stages[int(p.name)] = p
    return stages


@dataclass
class _CaseTask:
    team: str
    stage: int
    case_id: str
    ref_path: Path
    pred_path: Path | None
    detections: list[tuple[int, float, Path]] | None = None


@dataclass
class _CaseOutcome:
    rows: list[MetricRow]
    error: str | None = None
    scored: list[tuple[float, str, int, bool]] = field(default_factory=list)
    n_refs: int = 0


def evaluate_case(item: _CaseTask, task: str, tau: float, xi: float) -> _CaseOutcome:
    metrics = TASK_METRICS[task]

    def missing(msg: str) -> _CaseOutcome:
        rows = [MetricRow(item.team, task, item.stage, item.case_id, m, None) for m in metrics]
        return _CaseOutcome(rows, f"{item.team}/{item.stage}/{item.case_id}: {msg}")

    try:
        ref = read_mask(item.ref_path)
    except (OSError, SegrankError) as exc:
        return missing(f"unreadable reference {item.ref_path}: {exc}")
    n_refs = len(instances(ref)) if task == "multi-det" else 0

    if item.detections is None and item.pred_path is None:
        out = missing("missing prediction")
        out.n_refs = n_refs
        return out
    try:
        if task == "multi-det" and item.detections is not None:
            dets = []
            for label, conf, path in item.detections:
                region = read_mask(path).labels == label
                dets.append(DetectionRecord(item.case_id, region, conf, label))
        else:
            pred = read_mask(item.pred_path)
            if pred.shape != ref.shape:
                raise InputError(f"prediction shape {pred.shape} != reference {ref.shape}")
    except (OSError, SegrankError) as exc:
        out = missing(f"unreadable prediction: {exc}")
        out.n_refs = n_refs
        return out

    def row(metric: str, value) -> MetricRow:
        return MetricRow(item.team, task, item.stage, item.case_id, metric, value)

    if task == "binary-seg":
        return _CaseOutcome([row("DSC", dsc(ref, pred)), row("NSD", nsd(ref, pred, tau))])
    if task == "multi-seg":
        return _CaseOutcome([row("MI_DSC", mi_dsc(ref, pred)), row("MI_NSD", mi_nsd(ref, pred, tau))])

    if item.detections is None:
        dets = detections_from_mask(item.case_id, pred)
    dets = sorted(dets, key=lambda d: d.label)
    try:
        hits = case_detection_hits(ref, dets, xi)
    except SegrankError as exc:
        out = missing(str(exc))
        out.n_refs = n_refs
        return out
    tp = sum(hits)
    scored = [(d.confidence, item.case_id, d.label, h) for d, h in zip(dets, hits)]
    rows = [row("TP", tp), row("FP", len(dets) - tp), row("FN", n_refs - tp)]
    return _CaseOutcome(rows, scored=scored, n_refs=n_refs)


def _read_detection_rows(path: Path) -> dict[str, list[tuple[int, float, Path]]]:
    by_case: dict[str, list[tuple[int, float, Path]]] = defaultdict(list)
    with path.open(newline="") as fh:
        for rec in csv.DictReader(fh):
            conf = rec.get("confidence") or "1.0"
            by_case[rec["case_id"]].append(
                (int(rec["instance_label"]), float(conf), (path.parent / rec["mask_path"]).resolve())
            )
    return by_case


def _evaluate_star(args):
    return evaluate_case(*args)


def run_evaluation(config: RunConfig) -> EvaluationResult:
    config.validate()
    ref_root = config.resolved_reference_root()
    if not ref_root.is_dir():
        raise FileNotFoundError(f"reference root {ref_root} does not exist")
    teams = config.resolved_teams()
    for team, path in teams.items():
        if not path.is_dir():
            raise FileNotFoundError(f"prediction root {path} for team {team} does not exist")
    stages = _stage_dirs(ref_root)
    if config.stages:
        stages = {s: p for s, p in stages.items() if s in config.stages}

    errors: list[str] = []
    items: list[_CaseTask] = []
    for team, team_root in teams.items():
        for stage, stage_dir in stages.items():
            refs = _mask_files(stage_dir)
            preds = _mask_files(team_root / str(stage))
            det_rows = None
            det_file = team_root / str(stage) / DETECTIONS_FILE
            if config.task == "multi-det" and det_file.is_file():
                det_rows = _read_detection_rows(det_file)
                for unknown in sorted(set(det_rows) - set(refs)):
                    errors.append(f"{team}/{stage}: detections for unknown case {unknown}")
            for case_id, ref_path in refs.items():
                items.append(
                    _CaseTask(
                        team, stage, case_id, ref_path, preds.get(case_id),
                        det_rows.get(case_id, []) if det_rows is not None else None,
                    )
                )

    args = [(item, config.task, config.tau, config.xi) for item in items]
    if config.jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            chunk = max(1, len(args) // (config.jobs * 8))
            outcomes = list(pool.map(_evaluate_star, args, chunksize=chunk))
    else:
        outcomes = [_evaluate_star(a) for a in args]

    rows: list[MetricRow] = []
    per_team_stage: dict[tuple[str, int], list[_CaseOutcome]] = defaultdict(list)
    for item, outcome in zip(items, outcomes):
        rows.extend(outcome.rows)
        if outcome.error:
            errors.append(outcome.error)
        per_team_stage[(item.team, item.stage)].append(outcome)

    if config.task == "multi-det":
        for (team, stage), outs in sorted(per_team_stage.items()):
            scored = [s for o in outs for s in o.scored]
            curve = sweep_precision_recall(scored, sum(o.n_refs for o in outs))
            rows.append(MetricRow(team, config.task, stage, ALL_CASES, "mAP", curve.ap))

    order = {m: i for i, m in enumerate(TASK_METRICS[config.task] + ("mAP",))}
    rows.sort(key=lambda r: (r.team, r.stage, r.case_id, order.get(r.metric, len(order))))
    for msg in errors:
        log.warning(msg)
    return EvaluationResult(rows, errors)
