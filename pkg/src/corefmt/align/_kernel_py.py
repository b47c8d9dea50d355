"""Pure-Python EM kernel for IBM Model 1.

Reference implementation of the hot loop; corefmt.align._kernel_c is the
compiled twin.  Both run the exact same floating-point operations in the
exact same order (corpus order, then target position, then source position
with NULL first), so their outputs are bit-identical and either backend can
serve any caller.

Data layout: sentences are flattened id arrays with offsets; the table is a
CSR matrix over source rows (row 0 is NULL) with target ids sorted within
each row, probed by binary search.
"""

from __future__ import annotations

from math import log

BACKEND_NAME = "pure"


def _find(row_ptr, col, e, f):
    lo = row_ptr[e]
    hi = row_ptr[e + 1]
    while lo < hi:
        mid = (lo + hi) // 2
        if col[mid] < f:
            lo = mid + 1
        else:
            hi = mid
    if lo < row_ptr[e + 1] and col[lo] == f:
        return lo
    return -1


def run_em(src_ids, src_off, tgt_ids, tgt_off, row_ptr, col, probs, iterations):
    """Run EM in place on the CSR probability array.

    Returns (probs, log_likelihoods); log_likelihoods[k] is the corpus
    log-likelihood under the parameters entering iteration k.
    """
    src_ids = list(src_ids)
    src_off = list(src_off)
    tgt_ids = list(tgt_ids)
    tgt_off = list(tgt_off)
    row_ptr = list(row_ptr)
    col = list(col)
    probs = list(probs)

    n_pairs = len(src_off) - 1
    n_rows = len(row_ptr) - 1
    nnz = len(col)
    lls = []
    ks = []
    for _ in range(iterations):
        count = [0.0] * nnz
        total = [0.0] * n_rows
        ll = 0.0
        for p in range(n_pairs):
            s0 = src_off[p]
            s1 = src_off[p + 1]
            t0 = tgt_off[p]
            t1 = tgt_off[p + 1]
            log_len = log(s1 - s0 + 1)
            for jj in range(t0, t1):
                f = tgt_ids[jj]
                k0 = _find(row_ptr, col, 0, f)
                denom = probs[k0] if k0 >= 0 else 0.0
                del ks[:]
                for ii in range(s0, s1):
                    k = _find(row_ptr, col, src_ids[ii], f)
                    ks.append(k)
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
        for e in range(n_rows):
            te = total[e]
            if te > 0.0:
                for k in range(row_ptr[e], row_ptr[e + 1]):
                    probs[k] = count[k] / te
    return probs, lls
