"""Slow, obviously-correct reference implementations used as test oracles."""
from __future__ import annotations

import itertools
import math

import numpy as np


def random_label_mask(rng: np.random.Generator, shape=(32, 32), max_instances: int = 4) -> np.ndarray:
    """Label grid with 0..max_instances instances made of rectangles and noise blobs."""
    h, w = shape
    out = np.zeros(shape, dtype=np.uint16)
    for label in range(1, int(rng.integers(0, max_instances + 1)) + 1):
        kind = rng.integers(3)
        if kind == 0:
            r0, c0 = rng.integers(0, h), rng.integers(0, w)
            r1, c1 = r0 + rng.integers(1, h // 2 + 1), c0 + rng.integers(1, w // 2 + 1)
            region = np.zeros(shape, dtype=bool)
            region[r0:r1, c0:c1] = True
        elif kind == 1:
            region = rng.random(shape) < rng.uniform(0.02, 0.3)
        else:
            rr, cc = np.mgrid[:h, :w]
            r0, c0 = rng.uniform(0, h), rng.uniform(0, w)
            rad = rng.uniform(1, max(h, w) / 3)
            region = (rr - r0) ** 2 + (cc - c0) ** 2 <= rad**2
        out[region] = label
    return out


def pixel_set(fg) -> set[tuple[int, int]]:
    rows, cols = np.nonzero(np.asarray(fg))
    return set(zip(rows.tolist(), cols.tolist()))


def dsc_oracle(a, b) -> float:
    sa, sb = pixel_set(a), pixel_set(b)
    if not sa and not sb:
        return 1.0
    return 2 * len(sa & sb) / (len(sa) + len(sb))


def iou_oracle(a, b) -> float:
    sa, sb = pixel_set(a), pixel_set(b)
    if not sa and not sb:
        return 1.0
    return len(sa & sb) / len(sa | sb)


def boundary_oracle(fg) -> set[tuple[int, int]]:
    fg = np.asarray(fg, dtype=bool)
    h, w = fg.shape
    out = set()
    for r in range(h):
        for c in range(w):
            if not fg[r, c]:
                continue
            for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                rr, cc = r + dr, c + dc
                if not (0 <= rr < h and 0 <= cc < w) or not fg[rr, cc]:
                    out.add((r, c))
                    break
    return out


def distance_oracle(source, shape) -> np.ndarray:
    """All-pairs minimum Euclidean distance from every pixel to ``source``."""
    pts = np.array(sorted(pixel_set(source)), dtype=np.float64).reshape(-1, 2)
    rr, cc = np.mgrid[: shape[0], : shape[1]]
    grid = np.stack([rr.ravel(), cc.ravel()], axis=1).astype(np.float64)
    if len(pts) == 0:
        return np.full(shape, np.inf)
    d = np.sqrt(((grid[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)).min(axis=1)
    return d.reshape(shape)


def nsd_oracle(a, b, tau: float) -> float:
    ba, bb = sorted(boundary_oracle(a)), sorted(boundary_oracle(b))
    if not ba and not bb:
        return 1.0
    if not ba or not bb:
        return 0.0
    pa = np.array(ba, dtype=np.float64)
    pb = np.array(bb, dtype=np.float64)
    d = np.sqrt(((pa[:, None, :] - pb[None, :, :]) ** 2).sum(axis=2))
    ok = (d.min(axis=1) <= tau).sum() + (d.min(axis=0) <= tau).sum()
    return ok / (len(ba) + len(bb))


def best_assignment(score: np.ndarray) -> tuple[float, list[tuple[int, int]]]:
    """Exhaustive maximum; returns the total and the lexicographically smallest optimal pairs."""
    score = np.asarray(score, dtype=np.float64)
    n, m = score.shape
    if n == 0 or m == 0:
        return 0.0, []
    best_total, best_pairs = -math.inf, None
    if n <= m:
        candidates = ([(i, j) for i, j in enumerate(perm)]
                      for perm in itertools.permutations(range(m), n))
    else:
        candidates = (sorted((i, j) for j, i in enumerate(perm))
                      for perm in itertools.permutations(range(n), m))
    for pairs in candidates:
        total = sum(score[i, j] for i, j in pairs)
        if total > best_total or (total == best_total and pairs < best_pairs):
            best_total, best_pairs = total, pairs
    return float(best_total), best_pairs


def wilcoxon_enumeration(d) -> float:
    """Upper-tail p-value of W+ by enumerating all 2^n sign assignments."""
    d = np.asarray(d, dtype=np.float64)
    d = d[d != 0]
    n = d.size
    if n == 0:
        return 1.0
    mag = np.abs(d)
    # mid-ranks by explicit counting
    ranks = np.array([(mag < v).sum() + ((mag == v).sum() + 1) / 2 for v in mag])
    observed = ranks[d > 0].sum()
    signs = ((np.arange(2**n)[:, None] >> np.arange(n)) & 1).astype(bool)
    w = (signs * ranks).sum(axis=1)
    return float(np.count_nonzero(w >= observed - 1e-9)) / 2**n


def competition_ranks_oracle(values) -> list[int]:
    """1224 ranking via sorting and walking the sorted list."""
    order = sorted(range(len(values)), key=lambda i: -values[i])
    ranks = [0] * len(values)
    for pos, i in enumerate(order):
        if pos and values[i] == values[order[pos - 1]]:
            ranks[i] = ranks[order[pos - 1]]
        else:
            ranks[i] = pos + 1
    return ranks


def type7_quantile(values, p: float) -> float:
    x = sorted(values)
    h = (len(x) - 1) * p + 1
    lo = math.floor(h)
    if lo >= len(x):
        return float(x[-1])
    return x[lo - 1] + (h - lo) * (x[lo] - x[lo - 1])


def significance_oracle(values: np.ndarray, alpha: float) -> list[float]:
    """Prop. sign. per row using the enumeration p-value (small case counts only)."""
    k = values.shape[0]
    out = []
    for a in range(k):
        wins = sum(
            wilcoxon_enumeration(values[a] - values[b]) < alpha for b in range(k) if b != a
        )
        out.append(wins / (k - 1))
    return out


def bootstrap_oracle(values: np.ndarray, b: int, seed: int, ranker: str, alpha=0.05, pct=0.05) -> np.ndarray:
    """Independent resampling loop: returns (algorithms x ranks) frequency counts."""
    k, n = values.shape
    freq = np.zeros((k, k), dtype=int)
    for r in range(b):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, r])))
        sample = values[:, rng.integers(0, n, size=n)]
        if ranker == "significance":
            agg = significance_oracle(sample, alpha)
        else:
            agg = [type7_quantile(row.tolist(), pct) for row in sample]
        for a, rank in enumerate(competition_ranks_oracle(agg)):
            freq[a, rank - 1] += 1
    return freq
