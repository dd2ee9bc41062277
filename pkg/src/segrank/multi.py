"""Multi-instance segmentation scores and mean average precision."""
from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass, field
from itertools import groupby
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import InputError, ShapeError
from .masks import MaskLike, as_label_array, instances, read_mask
from .matching import ScoreMatrix, hungarian_match, match_instances
from .metrics import DEFAULT_TAU, DEFAULT_XI, dsc, nsd

__all__ = [
    "DetectionRecord",
    "PRCurve",
    "mi_dsc",
    "mi_nsd",
    "detections_from_mask",
    "case_detection_hits",
    "sweep_precision_recall",
    "average_precision",
    "read_detections_csv",
]


@dataclass(frozen=True, eq=False)
class DetectionRecord:
    case_id: str
    region: np.ndarray
    confidence: float = 1.0
    label: int = 1

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence must lie in [0, 1], got {self.confidence}")
        object.__setattr__(self, "region", np.asarray(self.region, dtype=bool))


@dataclass(frozen=True)
class PRCurve:
    points: list[tuple[float, float]]
    ap: float
    hits: list[bool] = field(default_factory=list)


def _mi_score(ref: MaskLike, pred: MaskLike, pair_score, match_on: str) -> float:
    r = as_label_array(ref)
    p = as_label_array(pred)
    if r.shape != p.shape:
        raise ShapeError(f"mask shapes differ: {r.shape} vs {p.shape}")
    assignment = match_instances(r, p, match_on)
    count = len(assignment.pairs) + len(assignment.unmatched_refs) + len(assignment.unmatched_preds)
    if count == 0:
        return 1.0
    total = sum(pair_score(r == a, p == b, s) for a, b, s in assignment.pairs)
    return total / count


def mi_dsc(ref: MaskLike, pred: MaskLike, match_on: str = "dsc") -> float:
    """Mean DSC over matched instances; unmatched instances on either side score 0."""
    if match_on == "dsc":
        return _mi_score(ref, pred, lambda a, b, s: s, match_on)
    return _mi_score(ref, pred, lambda a, b, s: dsc(a, b), match_on)


def mi_nsd(ref: MaskLike, pred: MaskLike, tau: float = DEFAULT_TAU, match_on: str = "dsc") -> float:
    return _mi_score(ref, pred, lambda a, b, s: nsd(a, b, tau), match_on)


def detections_from_mask(case_id: str, mask: MaskLike, confidence: float = 1.0) -> list[DetectionRecord]:
    """One detection per instance of a predicted label mask."""
    return [
        DetectionRecord(case_id, view.to_mask(), confidence, view.label)
        for view in instances(mask)
    ]


def case_detection_hits(ref: MaskLike, dets: Sequence[DetectionRecord], xi: float = DEFAULT_XI) -> list[bool]:
    """TP flag for each detection of one case (Hungarian on IoU, then IoU > xi)."""
    shape = as_label_array(ref).shape
    views = instances(ref)
    ref_masks = [v.to_mask() for v in views]
    ref_areas = [int(m.sum()) for m in ref_masks]
    score = np.zeros((len(views), len(dets)))
    for j, det in enumerate(dets):
        if det.region.shape != shape:
            raise ShapeError(f"detection shape {det.region.shape} does not match reference {shape}")
        area = int(det.region.sum())
        for i, rm in enumerate(ref_masks):
            inter = int(np.count_nonzero(rm & det.region))
            union = ref_areas[i] + area - inter
            score[i, j] = inter / union if union else 0.0
    assignment = hungarian_match(ScoreMatrix([v.label for v in views], list(range(len(dets))), score))
    hits = [False] * len(dets)
    for _, j, s in assignment.pairs:
        hits[j] = s > xi
    return hits


def sweep_precision_recall(scored: Iterable[tuple[float, str, int, bool]], total_refs: int) -> PRCurve:
    """PR curve and all-point AP from ``(confidence, case_id, label, is_tp)`` tuples."""
    swept = sorted(scored, key=lambda t: (-t[0], t[1], t[2]))
    hits = [t[3] for t in swept]
    if total_refs == 0:
        return PRCurve(points=[], ap=0.0 if swept else 1.0, hits=hits)

    points: list[tuple[float, float]] = []
    tp = seen = 0
    for _, group in groupby(swept, key=lambda t: t[0]):
        for item in group:
            seen += 1
            tp += item[3]
        points.append((tp / total_refs, tp / seen))

    ap = 0.0
    prev_recall = 0.0
    # best precision at any recall >= the current one
    best_right = np.maximum.accumulate([p for _, p in points][::-1])[::-1]
    for (recall, _), envelope in zip(points, best_right):
        ap += (recall - prev_recall) * float(envelope)
        prev_recall = recall
    return PRCurve(points=points, ap=ap, hits=hits)


def average_precision(
    detections: Iterable[DetectionRecord],
    refs: Mapping[str, MaskLike],
    xi: float = DEFAULT_XI,
) -> PRCurve:
    """All-point interpolated AP over every case's detections.

    Detections are matched to reference instances per case (Hungarian on
    IoU); a matched detection with IoU > ``xi`` is a TP. The global sweep
    orders detections by confidence (descending), then case id, then label;
    detections of equal confidence form a single operating point.
    """
    by_case: dict[str, list[DetectionRecord]] = defaultdict(list)
    for det in detections:
        if det.case_id not in refs:
            raise InputError(f"detection for unknown case {det.case_id!r}")
        by_case[det.case_id].append(det)

    total_refs = sum(len(instances(m)) for m in refs.values())
    scored: list[tuple[float, str, int, bool]] = []
    for case_id, dets in by_case.items():
        dets = sorted(dets, key=lambda d: d.label)
        for det, hit in zip(dets, case_detection_hits(refs[case_id], dets, xi)):
            scored.append((det.confidence, case_id, det.label, hit))
    return sweep_precision_recall(scored, total_refs)


def read_detections_csv(path: str | Path) -> list[DetectionRecord]:
    """Read ``case_id,instance_label,confidence,mask_path`` rows.

    ``mask_path`` is resolved relative to the CSV file; the detection region
    is the set of pixels carrying ``instance_label`` in that mask.
    """
    path = Path(path)
    cache: dict[Path, np.ndarray] = {}
    out = []
    with path.open(newline="") as fh:
        for row in csv.DictReader(fh):
            mask_path = (path.parent / row["mask_path"]).resolve()
            if mask_path not in cache:
                cache[mask_path] = read_mask(mask_path).labels
            label = int(row["instance_label"])
            conf = row.get("confidence", "")
            out.append(
                DetectionRecord(
                    case_id=row["case_id"],
                    region=cache[mask_path] == label,
                    confidence=float(conf) if conf not in ("", None) else 1.0,
                    label=label,
                )
            )
    return out
