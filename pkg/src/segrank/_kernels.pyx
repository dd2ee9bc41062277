# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: exact squared EDT, 4-connected boundary scan, and a
shortest-augmenting-path linear assignment solver.

``segrank._kernels_py`` mirrors every function here in numpy/Python.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()


cdef void _envelope(double* f, Py_ssize_t n, Py_ssize_t stride, double* out,
                    Py_ssize_t* v, double* z) noexcept nogil:
    # Lower envelope of parabolas (q - v)^2 + f[v]; sites with f = inf are skipped.
    cdef Py_ssize_t q, k = -1
    cdef double s, fq, fv
    for q in range(n):
        fq = f[q * stride]
        if fq == INFINITY:
            continue
        if k < 0:
            k = 0
            v[0] = q
            z[0] = -INFINITY
            z[1] = INFINITY
            continue
        while True:
            fv = f[v[k] * stride]
            s = ((fq + <double>(q * q)) - (fv + <double>(v[k] * v[k]))) / <double>(2 * q - 2 * v[k])
            if s <= z[k]:
                k -= 1
            else:
                break
        k += 1
        v[k] = q
        z[k] = s
        z[k + 1] = INFINITY
    if k < 0:
        for q in range(n):
            out[q * stride] = INFINITY
        return
    k = 0
    for q in range(n):
        while z[k + 1] < q:
            k += 1
        out[q * stride] = <double>((q - v[k]) * (q - v[k])) + f[v[k] * stride]


def edt_sq(source):
    """Squared Euclidean distance from every pixel to the nearest ``source`` pixel.

    ``source`` is a 2-D boolean array. Pixels are unit-spaced; the result is
    exact (integer-valued doubles) and ``inf`` everywhere when ``source`` is empty.
    """
    cdef cnp.uint8_t[:, ::1] src = np.ascontiguousarray(source, dtype=np.uint8)
    cdef Py_ssize_t h = src.shape[0], w = src.shape[1]
    cdef Py_ssize_t r, c, n = max(h, w)
    out = np.empty((h, w), dtype=np.float64)
    tmp = np.empty((h, w), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef double[:, ::1] t = tmp
    cdef Py_ssize_t[::1] v = np.empty(n + 1, dtype=np.intp)
    cdef double[::1] z = np.empty(n + 2, dtype=np.float64)
    if h == 0 or w == 0:
        return out
    with nogil:
        for r in range(h):
            for c in range(w):
                t[r, c] = 0.0 if src[r, c] else INFINITY
        for c in range(w):
            _envelope(&t[0, c], h, w, &o[0, c], &v[0], &z[0])
        for r in range(h):
            _envelope(&o[r, 0], w, 1, &t[r, 0], &v[0], &z[0])
    return tmp


def boundary(mask):
    """Foreground pixels 4-adjacent to background or lying on the image border."""
    arr = np.asarray(mask)
    if arr.dtype != np.bool_:
        arr = arr != 0
    cdef cnp.uint8_t[:, ::1] m = np.ascontiguousarray(arr).view(np.uint8)
    cdef Py_ssize_t h = m.shape[0], w = m.shape[1]
    out = np.zeros((h, w), dtype=np.bool_)
    if h == 0 or w == 0:
        return out
    cdef cnp.uint8_t[:, ::1] o = out.view(np.uint8)
    cdef Py_ssize_t r, c
    with nogil:
        for c in range(w):
            o[0, c] = m[0, c]
            o[h - 1, c] = m[h - 1, c]
        for r in range(1, h - 1):
            o[r, 0] = m[r, 0]
            o[r, w - 1] = m[r, w - 1]
            for c in range(1, w - 1):
                # branch-free so the compiler can vectorise the row
                o[r, c] = m[r, c] & (1 - (m[r - 1, c] & m[r + 1, c] & m[r, c - 1] & m[r, c + 1]))
    return out


def linear_assignment(cost):
    """Minimum-cost assignment of every row to a distinct column.

    Requires ``rows <= cols``. Returns an int array ``col_of_row``.
    """
    cdef double[:, ::1] a = np.ascontiguousarray(cost, dtype=np.float64)
    cdef Py_ssize_t n = a.shape[0], m = a.shape[1]
    if n > m:
        raise ValueError("linear_assignment needs rows <= cols")
    cdef double[::1] u = np.zeros(n + 1)
    cdef double[::1] vv = np.zeros(m + 1)
    cdef double[::1] minv = np.empty(m + 1)
    cdef Py_ssize_t[::1] p = np.zeros(m + 1, dtype=np.intp)
    cdef Py_ssize_t[::1] way = np.zeros(m + 1, dtype=np.intp)
    cdef cnp.uint8_t[::1] used = np.zeros(m + 1, dtype=np.uint8)
    cdef Py_ssize_t i, j, i0, j0, j1
    cdef double delta, cur
    result = np.full(n, -1, dtype=np.intp)
    cdef Py_ssize_t[::1] res = result
    with nogil:
        for i in range(1, n + 1):
            p[0] = i
            j0 = 0
            for j in range(m + 1):
                minv[j] = INFINITY
                used[j] = 0
            while True:
                used[j0] = 1
                i0 = p[j0]
                delta = INFINITY
                j1 = 0
                for j in range(1, m + 1):
                    if not used[j]:
                        cur = a[i0 - 1, j - 1] - u[i0] - vv[j]
                        if cur < minv[j]:
                            minv[j] = cur
                            way[j] = j0
                        if minv[j] < delta:
                            delta = minv[j]
                            j1 = j
                for j in range(m + 1):
                    if used[j]:
                        u[p[j]] += delta
                        vv[j] -= delta
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
        for j in range(1, m + 1):
            if p[j] != 0:
                res[p[j] - 1] = j - 1
    return result
