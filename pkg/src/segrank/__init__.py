"""Segmentation and detection metrics with leaderboard ranking for instrument benchmarks."""
from __future__ import annotations

from ._backend import BACKEND, available_backends
from .analysis import derive_tau, stage_comparison, stratify_by_instrument_count, worst_cases
from .errors import (
    ConfigError,
    InputError,
    MaskDecodeError,
    MaskFormatError,
    SegrankError,
    ShapeError,
)
from .masks import CaseRecord, InstanceView, LabelMask, boundary, instances, load_mask, read_mask
from .matching import Assignment, classify_detections, hungarian_match, match_instances
from .metrics import MetricConfig, distance_field, dsc, iou, nsd
from .multi import DetectionRecord, average_precision, mi_dsc, mi_nsd
from .ranking import (
    LeaderboardEntry,
    MetricTable,
    RankingConfig,
    detection_rank,
    robustness_rank,
    significance_rank,
)
from .stats import BootstrapSummary, bootstrap_rankings, per_case_rank_frequencies
from .wilcoxon import TestResult, wilcoxon_one_sided

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "available_backends",
    "SegrankError",
    "MaskDecodeError",
    "MaskFormatError",
    "ShapeError",
    "ConfigError",
    "InputError",
    "LabelMask",
    "InstanceView",
    "CaseRecord",
    "load_mask",
    "read_mask",
    "instances",
    "boundary",
    "MetricConfig",
    "dsc",
    "iou",
    "nsd",
    "distance_field",
    "Assignment",
    "hungarian_match",
    "match_instances",
    "classify_detections",
    "DetectionRecord",
    "mi_dsc",
    "mi_nsd",
    "average_precision",
    "MetricTable",
    "LeaderboardEntry",
    "RankingConfig",
    "significance_rank",
    "robustness_rank",
    "detection_rank",
    "TestResult",
    "wilcoxon_one_sided",
    "BootstrapSummary",
    "bootstrap_rankings",
    "per_case_rank_frequencies",
    "stratify_by_instrument_count",
    "worst_cases",
    "stage_comparison",
    "derive_tau",
]
