# cython: boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled EM kernel for IBM Model 1; bit-identical twin of _kernel_py.

The accumulation order (corpus order, then target position, then source
position with NULL first) and every floating-point expression mirror the
pure kernel exactly, and the extension is built with FP contraction off,
so both backends produce the same bits.
"""

import numpy as np

from libc.math cimport log

BACKEND_NAME = "compiled"


cdef inline Py_ssize_t _find(const long long[::1] row_ptr, const int[::1] col,
                             Py_ssize_t e, int f) nogil:
    cdef Py_ssize_t lo = row_ptr[e]
    cdef Py_ssize_t hi = row_ptr[e + 1]
    cdef Py_ssize_t mid
    while lo < hi:
        mid = (lo + hi) // 2
        if col[mid] < f:
            lo = mid + 1
        else:
            hi = mid
    if lo < row_ptr[e + 1] and col[lo] == f:
        return lo
    return -1


def run_em(src_ids_in, src_off_in, tgt_ids_in, tgt_off_in, row_ptr_in, col_in,
           probs_in, int iterations):
    """Run EM on the CSR probability array; see _kernel_py.run_em."""
    cdef int[::1] src_ids = np.ascontiguousarray(src_ids_in, dtype=np.int32)
    cdef long long[::1] src_off = np.ascontiguousarray(src_off_in, dtype=np.int64)
    cdef int[::1] tgt_ids = np.ascontiguousarray(tgt_ids_in, dtype=np.int32)
    cdef long long[::1] tgt_off = np.ascontiguousarray(tgt_off_in, dtype=np.int64)
    cdef long long[::1] row_ptr = np.ascontiguousarray(row_ptr_in, dtype=np.int64)
    cdef int[::1] col = np.ascontiguousarray(col_in, dtype=np.int32)
    probs_np = np.array(probs_in, dtype=np.float64)
    cdef double[::1] probs = probs_np

    cdef Py_ssize_t n_pairs = src_off.shape[0] - 1
    cdef Py_ssize_t n_rows = row_ptr.shape[0] - 1
    cdef Py_ssize_t nnz = col.shape[0]

    cdef Py_ssize_t max_src = 0
    cdef Py_ssize_t p
    for p in range(n_pairs):
        if src_off[p + 1] - src_off[p] > max_src:
            max_src = src_off[p + 1] - src_off[p]

    count_np = np.zeros(nnz, dtype=np.float64)
    total_np = np.zeros(n_rows, dtype=np.float64)
    ks_np = np.zeros(max(max_src, 1), dtype=np.int64)
    cdef double[::1] count = count_np
    cdef double[::1] total = total_np
    cdef long long[::1] ks = ks_np

    cdef Py_ssize_t s0, s1, t0, t1, jj, ii, idx, k, k0, e
    cdef int f
    cdef double denom, c, ll, log_len, te
    lls = []

    cdef int it
    for it in range(iterations):
        count[:] = 0.0
        total[:] = 0.0
        ll = 0.0
        with nogil:
            for p in range(n_pairs):
                s0 = src_off[p]
                s1 = src_off[p + 1]
                t0 = tgt_off[p]
                t1 = tgt_off[p + 1]
                log_len = log(<double> (s1 - s0 + 1))
                for jj in range(t0, t1):
                    f = tgt_ids[jj]
                    k0 = _find(row_ptr, col, 0, f)
                    denom = probs[k0] if k0 >= 0 else 0.0
                    for ii in range(s0, s1):
                        k = _find(row_ptr, col, src_ids[ii], f)
                        ks[ii - s0] = k
                        if k >= 0:
                            denom += probs[k]
                    ll += log(denom) - log_len
                    if k0 >= 0:
                        c = probs[k0] / denom
                        count[k0] += c
                        total[0] += c
                    for idx in range(s1 - s0):
                        k = ks[idx]
                        if k >= 0:
                            c = probs[k] / denom
                            count[k] += c
                            total[src_ids[s0 + idx]] += c
        lls.append(ll)
        with nogil:
            for e in range(n_rows):
                te = total[e]
                if te > 0.0:
                    for k in range(row_ptr[e], row_ptr[e + 1]):
                        probs[k] = count[k] / te
    return probs_np.tolist(), lls
