# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops; signatures mirror ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport log, sqrt, M_PI

cnp.import_array()


def bayes_accumulate(x_events, counts_upto, double sigma_floor):
    cdef const double[:, ::1] x = np.ascontiguousarray(x_events, dtype=np.float64)
    cdef const long long[::1] counts = np.ascontiguousarray(counts_upto, dtype=np.int64)
    cdef Py_ssize_t n_steps = counts.shape[0]
    cdef Py_ssize_t p = x.shape[1]
    out = np.zeros((n_steps, p), dtype=np.float64)
    cdef double[:, ::1] A = out
    if x.shape[0] == 0 or n_steps == 0:
        return out

    cdef double[::1] mean = np.zeros(p)
    cdef double[::1] M2 = np.zeros(p)
    cdef Py_ssize_t j, i, r, n = 0
    cdef Py_ssize_t last = 0
    cdef double delta, sigma, ll, log2pi = log(2.0 * M_PI)

    for j in range(1, n_steps):
        for i in range(p):
            A[j, i] = A[j - 1, i]
        if counts[j] <= last:
            continue
        # Welford updates over the newly observed events
        for r in range(last, counts[j]):
            n = r + 1
            for i in range(p):
                delta = x[r, i] - mean[i]
                mean[i] += delta / n
                M2[i] += delta * (x[r, i] - mean[i])
        last = counts[j]
        for i in range(p):
            sigma = sqrt(M2[i] / n)
            if sigma < sigma_floor:
                sigma = sigma_floor
            ll = 1.0 - 0.5 * n * (log2pi + 2.0 * log(sigma)) - 0.5 * M2[i] / (sigma * sigma)
            A[j, i] += ll
    return out


def concordance_counts(surv, tidx, time, event):
    t_np = np.ascontiguousarray(time, dtype=np.float64)
    order_np = np.argsort(t_np, kind="stable")
    cdef const double[:, ::1] S = np.ascontiguousarray(surv, dtype=np.float64)
    cdef const long long[::1] k = np.ascontiguousarray(np.asarray(tidx)[order_np], dtype=np.int64)
    cdef const double[::1] t = t_np[order_np]
    cdef const long long[::1] d = np.ascontiguousarray(np.asarray(event)[order_np], dtype=np.int64)
    cdef const long long[::1] order = order_np.astype(np.int64)
    cdef Py_ssize_t n = t.shape[0]
    buf_np = np.empty(n, dtype=np.float64)
    cdef double[::1] buf = buf_np
    cdef Py_ssize_t i, j, g, m = 0, first = 0, gathered_first = -1, hi, lo
    cdef bint use_sort = False
    cdef long long kj, gathered_k = -1
    cdef double own, other, conc, ties, num = 0.0, den = 0.0
    for j in range(n):
        if d[j] != 1:
            continue
        if first <= j:
            first = j + 1
        while first < n and t[first] <= t[j]:
            first += 1
        if first == n:
            break
        kj = k[j]
        # comparators of an event are a suffix in time order; gather that
        # column slice once per (time, column) group
        if first != gathered_first or kj != gathered_k:
            m = n - first
            for i in range(m):
                buf[i] = S[order[first + i], kj]
            gathered_first = first
            gathered_k = kj
            g = 0
            for i in range(j, first):
                if d[i] == 1 and k[i] == kj:
                    g += 1
            # many events share the slice: sort once and bisect
            use_sort = g * m > 4 * (m + g) * (1 + <Py_ssize_t>log(m + 1.0))
            if use_sort:
                buf_np[:m].sort()
        own = S[order[j], kj]
        if use_sort:
            hi = _upper(buf, m, own)
            lo = _lower(buf, m, own)
            num += (m - hi) + 0.5 * (hi - lo)
        else:
            conc = 0.0
            ties = 0.0
            for i in range(m):
                other = buf[i]
                if own < other:
                    conc += 1.0
                elif own == other:
                    ties += 1.0
            num += conc + 0.5 * ties
        den += m
    return num, den


cdef Py_ssize_t _upper(double[::1] a, Py_ssize_t n, double v) nogil:
    # first index with a[idx] > v
    cdef Py_ssize_t lo = 0, hi = n, mid
    while lo < hi:
        mid = (lo + hi) // 2
        if a[mid] <= v:
            lo = mid + 1
        else:
            hi = mid
    return lo


cdef Py_ssize_t _lower(double[::1] a, Py_ssize_t n, double v) nogil:
    # first index with a[idx] >= v
    cdef Py_ssize_t lo = 0, hi = n, mid
    while lo < hi:
        mid = (lo + hi) // 2
        if a[mid] < v:
            lo = mid + 1
        else:
            hi = mid
    return lo


def auc_counts(risk, time, event, weight, double t, bint strict):
    cdef const double[::1] f = np.ascontiguousarray(risk, dtype=np.float64)
    cdef const double[::1] tt = np.ascontiguousarray(time, dtype=np.float64)
    cdef const long long[::1] d = np.ascontiguousarray(event, dtype=np.int64)
    cdef const double[::1] w = np.ascontiguousarray(weight, dtype=np.float64)
    cdef double[::1] ctrl = np.sort(np.asarray(risk, dtype=np.float64)[np.asarray(time) > t])
    cdef Py_ssize_t n = f.shape[0], m = ctrl.shape[0], i, le, lt
    cdef double num = 0.0, wsum = 0.0
    for i in range(n):
        if tt[i] <= t and d[i] == 1:
            le = _upper(ctrl, m, f[i])
            if strict:
                lt = _lower(ctrl, m, f[i])
                num += w[i] * (lt + 0.5 * (le - lt))
            else:
                num += w[i] * le
            wsum += w[i]
    return num, m * wsum
