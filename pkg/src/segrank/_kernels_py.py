"""Pure numpy/Python versions of the compiled kernels.

Same algorithms and results as ``segrank._kernels``; used when the extension
is not built or when ``SEGRANK_PURE_PYTHON`` is set.
"""
from __future__ import annotations

import numpy as np


def _envelope_lines(f: np.ndarray) -> np.ndarray:
    """Run the 1-D lower-envelope transform along axis 1 for every line at once."""
    n_lines, n = f.shape
    lines = np.arange(n_lines)
    v = np.zeros((n_lines, n + 1), dtype=np.intp)
    z = np.full((n_lines, n + 2), np.inf)
    k = np.full(n_lines, -1, dtype=np.intp)

    for q in range(n):
        fq = f[:, q]
        active = np.isfinite(fq)
        first = active & (k < 0)
        pending = lines[active & (k >= 0)]
        if first.any():
            k[first] = 0
            v[first, 0] = q
            z[first, 0] = -np.inf
            z[first, 1] = np.inf
        while pending.size:
            kk = k[pending]
            vk = v[pending, kk]
            s = ((fq[pending] + q * q) - (f[pending, vk] + vk * vk)) / (2 * q - 2 * vk)
            pop = s <= z[pending, kk]
            done = pending[~pop]
            if done.size:
                kd = k[done] + 1
                k[done] = kd
                v[done, kd] = q
                z[done, kd] = s[~pop]
                z[done, kd + 1] = np.inf
            pending = pending[pop]
            k[pending] -= 1

    out = np.full((n_lines, n), np.inf)
    has_sites = k >= 0
    k = np.zeros(n_lines, dtype=np.intp)
    for q in range(n):
        while True:
            step = z[lines, k + 1] < q
            if not step.any():
                break
            k[step] += 1
        vk = v[lines, k]
        out[:, q] = (q - vk) ** 2 + f[lines, vk]
    out[~has_sites] = np.inf
    return out


def edt_sq(source) -> np.ndarray:
    src = np.asarray(source, dtype=bool)
    h, w = src.shape
    if h == 0 or w == 0:
        return np.empty((h, w))
    f = np.where(src, 0.0, np.inf)
    cols = _envelope_lines(f.T.copy()).T
    return _envelope_lines(np.ascontiguousarray(cols))


def boundary(mask) -> np.ndarray:
    m = np.asarray(mask, dtype=bool)
    padded = np.pad(m, 1, constant_values=False)
    interior = (
        padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:]
    )
    return m & ~interior


def linear_assignment(cost) -> np.ndarray:
    a = np.asarray(cost, dtype=np.float64).tolist()
    n = len(a)
    m = len(a[0]) if n else 0
    if n > m:
        raise ValueError("linear_assignment needs rows <= cols")
    inf = float("inf")
    u = [0.0] * (n + 1)
    v = [0.0] * (m + 1)
    p = [0] * (m + 1)
    way = [0] * (m + 1)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = [inf] * (m + 1)
        used = [False] * (m + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = inf
            j1 = 0
            row = a[i0 - 1]
            for j in range(1, m + 1):
                if not used[j]:
                    cur = row[j - 1] - u[i0] - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(m + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while True:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
            if j0 == 0:
                break
    result = np.full(n, -1, dtype=np.intp)
    for j in range(1, m + 1):
        if p[j]:
            result[p[j] - 1] = j - 1
    return result
