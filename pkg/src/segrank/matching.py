"""Optimal one-to-one instance matching and TP/FP/FN classification."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .errors import ShapeError
from .masks import MaskLike, as_label_array
from .metrics import DEFAULT_XI

__all__ = [
    "ScoreMatrix",
    "Assignment",
    "DetectionOutcome",
    "hungarian_match",
    "overlap_scores",
    "match_instances",
    "classify_detections",
]

# slack when checking that a constrained sub-assignment is still optimal
_TIE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class ScoreMatrix:
    rows: list[int]
    cols: list[int]
    score: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.score, dtype=np.float64).reshape(len(self.rows), len(self.cols))
        object.__setattr__(self, "score", s)
        object.__setattr__(self, "rows", [int(r) for r in self.rows])
        object.__setattr__(self, "cols", [int(c) for c in self.cols])
        if s.size and (s.min() < 0 or s.max() > 1 or np.isnan(s).any()):
            raise ValueError("scores must lie in [0, 1]")

    @classmethod
    def from_array(cls, score) -> "ScoreMatrix":
        s = np.atleast_2d(np.asarray(score, dtype=np.float64))
        return cls(list(range(s.shape[0])), list(range(s.shape[1])), s)


@dataclass(frozen=True)
class Assignment:
    pairs: list[tuple[int, int, float]]
    unmatched_refs: list[int] = field(default_factory=list)
    unmatched_preds: list[int] = field(default_factory=list)

    @property
    def total(self) -> float:
        return sum(score for _, _, score in self.pairs)

    def __len__(self):
        return len(self.pairs)


@dataclass(frozen=True)
class DetectionOutcome:
    tp: int
    fp: int
    fn: int
    tp_pairs: list[tuple[int, int, float]] = field(default_factory=list)


def _best(score: np.ndarray) -> tuple[float, np.ndarray]:
    """Maximum total score and the chosen column per row (or row per column)."""
    if score.shape[0] == 0 or score.shape[1] == 0:
        return 0.0, np.empty(0, dtype=np.intp)
    if score.shape[0] <= score.shape[1]:
        cols = kernels.linear_assignment(-score)
        return float(sum(score[i, j] for i, j in enumerate(cols))), cols
    rows = kernels.linear_assignment(-score.T)
    pairs = sorted((int(i), j) for j, i in enumerate(rows))
    return float(sum(score[i, j] for i, j in pairs)), rows


def hungarian_match(scores: ScoreMatrix) -> Assignment:
    """Maximum-total-score one-to-one matching.

    Among equally good matchings, the one whose (ref label, pred label) pair
    sequence is lexicographically smallest is returned.
    """
    row_order = sorted(range(len(scores.rows)), key=lambda i: scores.rows[i])
    col_order = sorted(range(len(scores.cols)), key=lambda j: scores.cols[j])
    s = scores.score[np.ix_(row_order, col_order)] if scores.score.size else scores.score
    n_rows, n_cols = len(row_order), len(col_order)

    free_rows = list(range(n_rows))
    free_cols = list(range(n_cols))
    chosen: list[tuple[int, int]] = []
    skipped: list[int] = []
    tol = _TIE_TOL * max(1, n_rows, n_cols)
    while free_rows and free_cols:
        i = free_rows.pop(0)
        target, _ = _best(s[np.ix_([i] + free_rows, free_cols)])
        for j in free_cols:
            rest = [c for c in free_cols if c != j]
            value = s[i, j] + _best(s[np.ix_(free_rows, rest)])[0]
            if value >= target - tol:
                chosen.append((i, j))
                free_cols = rest
                break
        else:
            # only reachable when rows outnumber columns
            skipped.append(i)
    skipped.extend(free_rows)

    pairs = [
        (scores.rows[row_order[i]], scores.cols[col_order[j]], float(s[i, j])) for i, j in chosen
    ]
    matched_cols = {j for _, j in chosen}
    return Assignment(
        pairs=pairs,
        unmatched_refs=[scores.rows[row_order[i]] for i in sorted(skipped)],
        unmatched_preds=[scores.cols[col_order[j]] for j in range(n_cols) if j not in matched_cols],
    )


def overlap_scores(ref: MaskLike, pred: MaskLike, score: str = "iou") -> ScoreMatrix:
    """IoU or DSC for every (reference instance, predicted instance) pair."""
    r = as_label_array(ref)
    p = as_label_array(pred)
    if r.shape != p.shape:
        raise ShapeError(f"mask shapes differ: {r.shape} vs {p.shape}")
    r_ids, r_area = np.unique(r[r != 0], return_counts=True)
    p_ids, p_area = np.unique(p[p != 0], return_counts=True)
    inter = np.zeros((r_ids.size, p_ids.size), dtype=np.int64)
    both = (r != 0) & (p != 0)
    if both.any():
        ri = np.searchsorted(r_ids, r[both])
        pi = np.searchsorted(p_ids, p[both])
        np.add.at(inter, (ri, pi), 1)
    sizes = r_area[:, None] + p_area[None, :]
    if score == "iou":
        values = inter / (sizes - inter) if inter.size else inter.astype(float)
    elif score == "dsc":
        values = 2 * inter / sizes if inter.size else inter.astype(float)
    else:
        raise ValueError(f"unknown matching score {score!r}")
    return ScoreMatrix(r_ids.tolist(), p_ids.tolist(), values)


def match_instances(ref: MaskLike, pred: MaskLike, score: str = "iou") -> Assignment:
    return hungarian_match(overlap_scores(ref, pred, score))


def classify_detections(assignment: Assignment, xi: float = DEFAULT_XI) -> DetectionOutcome:
    """Count TP/FP/FN from an IoU-scored assignment.

    A matched pair is a TP only if its IoU is strictly greater than ``xi``;
    otherwise it contributes one FN and one FP.
    """
    tp_pairs = [pair for pair in assignment.pairs if pair[2] > xi]
    weak = len(assignment.pairs) - len(tp_pairs)
    return DetectionOutcome(
        tp=len(tp_pairs),
        fp=weak + len(assignment.unmatched_preds),
        fn=weak + len(assignment.unmatched_refs),
        tp_pairs=tp_pairs,
    )
