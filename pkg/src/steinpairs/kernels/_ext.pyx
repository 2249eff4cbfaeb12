# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled batch kernels; contracts match steinpairs.kernels._pure."""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "compiled"


def circular_run_counts(xi, int d):
    xi = np.ascontiguousarray(xi, dtype=np.uint8)
    cdef const unsigned char[:, ::1] x = xi
    cdef Py_ssize_t B = x.shape[0]
    cdef Py_ssize_t n = x.shape[1]
    out_arr = np.zeros((B, d), dtype=np.int64)
    cdef long long[:, ::1] out = out_arr
    # circular extension removes the modulo from the inner loops
    buf_arr = np.empty(n + d, dtype=np.uint8)
    cdef unsigned char[::1] buf = buf_arr
    run_arr = np.empty(n, dtype=np.uint8)
    cdef unsigned char[::1] run = run_arr
    cdef Py_ssize_t b, m, i
    cdef long long acc
    for b in range(B):
        for m in range(n):
            buf[m] = x[b, m]
        for m in range(d):
            buf[n + m] = x[b, m]
        acc = 0
        for m in range(n):
            run[m] = buf[m]
            acc += run[m]
        out[b, 0] = acc
        for i in range(2, d + 1):
            acc = 0
            for m in range(n):
                run[m] = run[m] * buf[m + i - 1]
                acc += run[m]
            out[b, i - 1] = acc
    return out_arr


def window_replace_deltas(xi, fresh, int d):
    xi = np.ascontiguousarray(xi, dtype=np.uint8)
    fresh = np.ascontiguousarray(fresh, dtype=np.uint8)
    cdef const unsigned char[:, ::1] x = xi
    cdef const unsigned char[:, ::1] f = fresh
    cdef Py_ssize_t B = x.shape[0]
    cdef Py_ssize_t n = x.shape[1]
    if n < 3 * d - 2:
        raise ValueError("sequence too short for unambiguous circular windows")
    out_arr = np.zeros((B, n, d), dtype=np.int16)
    cdef short[:, :, ::1] out = out_arr
    # pad both ends so unwrapped window indices j in [-(d-1), n-1 + 2d-3]
    # map to buf[j + pad] without modulo
    cdef Py_ssize_t pad = d
    cdef Py_ssize_t blen = n + 3 * d
    xbuf_arr = np.empty(blen, dtype=np.uint8)
    fbuf_arr = np.empty(blen, dtype=np.uint8)
    cdef unsigned char[::1] xb = xbuf_arr
    cdef unsigned char[::1] fb = fbuf_arr
    cdef Py_ssize_t b, I, i, m, l, j, k
    cdef Py_ssize_t lo, hi
    cdef int old, new
    cdef short acc
    for b in range(B):
        for k in range(blen):
            j = (k - pad) % n
            if j < 0:
                j += n
            xb[k] = x[b, j]
            fb[k] = f[b, j]
        for I in range(n):
            lo = I
            hi = I + d - 2
            for i in range(1, d + 1):
                acc = 0
                for m in range(I - i + 1, I + d - 1):
                    old = 1
                    new = 1
                    for l in range(i):
                        j = m + l
                        old *= xb[j + pad]
                        if lo <= j <= hi:
                            new *= fb[j + pad]
                        else:
                            new *= xb[j + pad]
                        if old == 0 and new == 0:
                            break
                    acc += <short> (new - old)
                out[b, I, i - 1] = acc
    return out_arr
