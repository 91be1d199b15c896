# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops. Mirrors liminf._kernels_py exactly."""

import numpy as np
cimport numpy as cnp
from libc.math cimport floor, ceil, fabs

cnp.import_array()

cdef double REL_SLACK = 1e-9


def classify_axis(ps, long long q, q1s, double hq, h1s):
    cdef cnp.int64_t[:] pv = np.ascontiguousarray(ps, dtype=np.int64)
    cdef cnp.int64_t[:] qv = np.ascontiguousarray(q1s, dtype=np.int64)
    cdef double[:] hv = np.ascontiguousarray(h1s, dtype=np.float64)
    out_arr = np.zeros((pv.shape[0], qv.shape[0]), dtype=np.uint8)
    cdef cnp.uint8_t[:, :] out = out_arr
    cdef Py_ssize_t i, j
    cdef long long p, q1, y, ylo, yhi, num
    cdef double rhs, qq1, w, x, lhs
    cdef int state
    for j in range(qv.shape[0]):
        q1 = qv[j]
        rhs = hq + hv[j]
        qq1 = <double>q * <double>q1
        w = q1 * rhs * (1.0 + REL_SLACK) + REL_SLACK
        for i in range(pv.shape[0]):
            p = pv[i]
            x = (<double>p * <double>q1) / <double>q
            ylo = <long long>floor(x - w)
            yhi = <long long>ceil(x + w)
            state = 0
            y = ylo
            while y <= yhi:
                num = p * q1 - y * q
                if num < 0:
                    num = -num
                lhs = <double>num / qq1
                if lhs < rhs * (1.0 - REL_SLACK):
                    state = 1
                    break
                if lhs <= rhs * (1.0 + REL_SLACK):
                    state = 2
                y += 1
            out[i, j] = state
    return out_arr


def shape_scan(member_arr, caps_arr, long long horizon):
    cdef cnp.uint8_t[:] member = member_arr
    cdef cnp.int64_t[:] caps = np.ascontiguousarray(caps_arr, dtype=np.int64)
    removed = []
    witnesses = []
    counts = []
    cdef long long fallback = 0
    cdef long long d = member[2] if member.shape[0] > 2 else 0
    cdef long long prev_top = 0
    cdef long long n, cap, excess, lo, x
    for n in range(1, horizon + 1):
        if n > 1:
            d += member[2 * n - 1] + member[2 * n] - member[n]
        cap = caps[n]
        if d > cap:
            excess = d - cap
            lo = n if n > prev_top else prev_top
            x = 2 * n
            while excess > 0 and x > lo:
                if member[x]:
                    member[x] = 0
                    removed.append(x)
                    excess -= 1
                    d -= 1
                x -= 1
            if excess > 0:
                fallback += 1
                while excess > 0 and x > n:
                    if member[x]:
                        member[x] = 0
                        removed.append(x)
                        excess -= 1
                        d -= 1
                    x -= 1
            witnesses.append(n)
            counts.append(d)
            prev_top = 2 * n
    return removed, witnesses, counts, fallback


def kahan_cumsum(terms):
    cdef double[:] t = np.ascontiguousarray(terms, dtype=np.float64)
    out_arr = np.empty(t.shape[0], dtype=np.float64)
    cdef double[:] out = out_arr
    cdef double s = 0.0, c = 0.0, y, z
    cdef Py_ssize_t i
    for i in range(t.shape[0]):
        y = t[i] - c
        z = s + y
        c = (z - s) - y
        s = z
        out[i] = s
    return out_arr
