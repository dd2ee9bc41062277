"""Pixel-level binary metrics: DSC, IoU and normalized surface Dice.

Any nonzero pixel counts as foreground. When both masks are empty every
metric is 1.0 (agreement on absence); when exactly one is empty it is 0.0.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .errors import ConfigError, ShapeError
from .masks import MaskLike, as_label_array, boundary_map

__all__ = [
    "MetricConfig",
    "DistanceField",
    "dsc",
    "iou",
    "distance_field",
    "surface_distances",
    "nsd",
    "DEFAULT_TAU",
    "DEFAULT_XI",
]

DEFAULT_TAU = 13.0
DEFAULT_XI = 0.3


@dataclass(frozen=True)
class MetricConfig:
    tau: float = DEFAULT_TAU
    xi: float = DEFAULT_XI
    empty_policy: str = "both-empty-is-one"

    def __post_init__(self):
        if not self.tau >= 0:
            raise ConfigError(f"tau must be >= 0, got {self.tau}")
        if not 0 < self.xi < 1:
            raise ConfigError(f"xi must lie in (0, 1), got {self.xi}")
        if self.empty_policy != "both-empty-is-one":
            raise ConfigError(f"unsupported empty_policy {self.empty_policy!r}")


@dataclass(frozen=True, eq=False)
class DistanceField:
    """Euclidean distance from each pixel center to the nearest source pixel."""

    values: np.ndarray

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


def _pair(y: MaskLike, yhat: MaskLike) -> tuple[np.ndarray, np.ndarray]:
    a = as_label_array(y) != 0
    b = as_label_array(yhat) != 0
    if a.shape != b.shape:
        raise ShapeError(f"mask shapes differ: {a.shape} vs {b.shape}")
    return a, b


def _overlap_ratio(inter: int, total: int) -> float:
    if total == 0:
        return 1.0
    return inter / total


def dsc(y: MaskLike, yhat: MaskLike) -> float:
    """Dice similarity coefficient ``2|Y & Yhat| / (|Y| + |Yhat|)``."""
    a, b = _pair(y, yhat)
    inter = int(np.count_nonzero(a & b))
    return _overlap_ratio(2 * inter, int(np.count_nonzero(a)) + int(np.count_nonzero(b)))


def iou(y: MaskLike, yhat: MaskLike) -> float:
    a, b = _pair(y, yhat)
    inter = int(np.count_nonzero(a & b))
    union = int(np.count_nonzero(a | b))
    return _overlap_ratio(inter, union)


def distance_field(source, width: int, height: int) -> DistanceField:
    """Exact distance field of a set of ``(row, col)`` pixels (or a boolean map).

    An empty source yields ``inf`` everywhere.
    """
    if isinstance(source, np.ndarray) and source.dtype == bool:
        if source.shape != (height, width):
            raise ShapeError(f"source map shape {source.shape} != {(height, width)}")
        src = source
    else:
        src = np.zeros((height, width), dtype=bool)
        pts = list(source)
        if pts:
            rows, cols = np.array(pts, dtype=np.intp).T
            src[rows, cols] = True
    return DistanceField(np.sqrt(kernels.edt_sq(src)))


def _bbox(fg: np.ndarray) -> tuple[slice, slice]:
    rows = np.flatnonzero(fg.any(axis=1))
    cols = np.flatnonzero(fg.any(axis=0))
    return slice(rows[0], rows[-1] + 1), slice(cols[0], cols[-1] + 1)


def surface_distances(y: MaskLike, yhat: MaskLike) -> tuple[np.ndarray, np.ndarray]:
    """Directed boundary distances ``(Y -> Yhat, Yhat -> Y)``.

    Each array holds, for every boundary pixel of one mask (row-major order),
    the distance to the nearest boundary pixel of the other. Distances are
    ``inf`` when the other boundary is empty.
    """
    a, b = _pair(y, yhat)
    ba, bb = boundary_map(a), boundary_map(b)
    na, nb = int(ba.sum()), int(bb.sum())
    if na == 0 or nb == 0:
        return np.full(na, np.inf), np.full(nb, np.inf)
    # the nearest boundary pixel always lies inside the joint bounding box
    box = _bbox(ba | bb)
    ba, bb = ba[box], bb[box]
    d_ab = np.sqrt(kernels.edt_sq(bb)[ba])
    d_ba = np.sqrt(kernels.edt_sq(ba)[bb])
    return d_ab, d_ba


def nsd(y: MaskLike, yhat: MaskLike, tau: float = DEFAULT_TAU) -> float:
    """Normalized surface Dice at tolerance ``tau`` pixels (inclusive)."""
    if not tau >= 0:
        raise ConfigError(f"tau must be >= 0, got {tau}")
    a, b = _pair(y, yhat)
    has_a, has_b = bool(a.any()), bool(b.any())
    if not has_a and not has_b:
        return 1.0
    if not has_a or not has_b:
        return 0.0
    d_ab, d_ba = surface_distances(a, b)
    hits = int(np.count_nonzero(d_ab <= tau)) + int(np.count_nonzero(d_ba <= tau))
    return hits / (d_ab.size + d_ba.size)
