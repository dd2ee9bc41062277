"""One-sided Wilcoxon signed-rank test.

Zero differences are discarded, tied magnitudes get mid-ranks. The null
distribution is exact (conditional on the observed ranks) for up to
``EXACT_MAX_N`` nonzero differences; above that a normal approximation
with tie and continuity correction is used.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import ConfigError

__all__ = ["TestResult", "wilcoxon_one_sided", "exact_upper_pvalue", "pairwise_wins", "EXACT_MAX_N"]

EXACT_MAX_N = 25


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    n_effective: int
    significant: bool

    __test__ = False  # keep pytest from collecting this class


def exact_upper_pvalue(ranks: np.ndarray, w_plus: float) -> float:
    """P(W+ >= w_plus) when each rank's sign is an independent fair coin."""
    doubled = np.rint(2 * np.asarray(ranks, dtype=np.float64)).astype(np.int64)
    total = int(doubled.sum())
    counts = np.zeros(total + 1, dtype=np.float64)
    counts[0] = 1.0
    for r in doubled:
        shifted = counts[: total + 1 - r].copy()
        counts[r:] += shifted
    w2 = int(round(2 * w_plus))
    return float(counts[w2:].sum() / 2.0 ** len(doubled))


def _normal_upper_pvalue(n: int, w_plus: float, tie_term: float) -> float:
    mean = n * (n + 1) / 4.0
    var = n * (n + 1) * (2 * n + 1) / 24.0 - tie_term / 48.0
    if var <= 0:
        return 1.0
    z = (w_plus - mean - 0.5) / math.sqrt(var)
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def _tie_term(abs_nonzero: np.ndarray) -> float:
    _, counts = np.unique(abs_nonzero, return_counts=True)
    return float(np.sum(counts.astype(np.float64) ** 3 - counts))


def wilcoxon_one_sided(x, y, alpha: float = 0.05) -> TestResult:
    """Test whether ``x`` tends to exceed ``y`` (paired, one-sided)."""
    if not 0 < alpha < 1:
        raise ConfigError(f"alpha must lie in (0, 1), got {alpha}")
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or x.size == 0:
        raise ValueError("x and y must be 1-D sequences of equal, nonzero length")
    d = x - y
    d = d[d != 0]
    n = int(d.size)
    if n == 0:
        return TestResult(statistic=0.0, p_value=1.0, n_effective=0, significant=False)
    ranks = rankdata(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    if n <= EXACT_MAX_N:
        p = exact_upper_pvalue(ranks, w_plus)
    else:
        p = _normal_upper_pvalue(n, w_plus, _tie_term(np.abs(d)))
    return TestResult(statistic=w_plus, p_value=p, n_effective=n, significant=p < alpha)


def pairwise_wins(values: np.ndarray, alpha: float = 0.05) -> np.ndarray:
    """Boolean matrix ``W`` with ``W[a, b]`` true iff row ``a`` significantly exceeds row ``b``.

    Equivalent to calling :func:`wilcoxon_one_sided` for every ordered pair,
    but the rank computations for all pairs are batched.
    """
    values = np.asarray(values, dtype=np.float64)
    k, n = values.shape
    wins = np.zeros((k, k), dtype=bool)
    if k < 2 or n == 0:
        return wins
    ia, ib = np.triu_indices(k, 1)
    d = values[ia] - values[ib]
    mag = np.abs(d)
    zeros = (d == 0).sum(axis=1)
    # zeros tie at the bottom, so nonzero ranks are shifted by the zero count
    ranks = rankdata(mag, axis=1) - zeros[:, None]
    w_plus = np.where(d > 0, ranks, 0.0).sum(axis=1)
    w_minus = np.where(d < 0, ranks, 0.0).sum(axis=1)
    n_eff = n - zeros

    srt = np.sort(mag, axis=1)
    new_group = np.ones_like(srt, dtype=bool)
    new_group[:, 1:] = srt[:, 1:] != srt[:, :-1]
    group_id = np.cumsum(new_group.ravel()) - 1
    sizes = np.bincount(group_id).astype(np.float64)
    first = np.flatnonzero(new_group.ravel())
    group_row = first // n
    group_is_zero = srt.ravel()[first] == 0
    tie = np.zeros(len(ia))
    np.add.at(tie, group_row[~group_is_zero], (sizes**3 - sizes)[~group_is_zero])

    for p in range(len(ia)):
        a, b, m = ia[p], ib[p], int(n_eff[p])
        if m == 0:
            continue
        if m <= EXACT_MAX_N:
            r = ranks[p][d[p] != 0]
            wins[a, b] = exact_upper_pvalue(r, w_plus[p]) < alpha
            wins[b, a] = exact_upper_pvalue(r, w_minus[p]) < alpha
        else:
            wins[a, b] = _normal_upper_pvalue(m, w_plus[p], tie[p]) < alpha
            wins[b, a] = _normal_upper_pvalue(m, w_minus[p], tie[p]) < alpha
    return wins
