"""Numpy implementations of the matrix kernels.

Same signatures and results as the compiled ``_ckernels`` module; used when
the extension is not built or when ``TOPFIBER_PURE_PYTHON`` is set.
"""

import numpy as np


def row_counts(indptr, indices, rows, live, colmask):
    n = indptr.shape[0] - 1
    hit = live.astype(bool)
    if colmask is not None:
        hit &= colmask.view(bool)[indices]
    return np.bincount(rows[hit], minlength=n).astype(np.int64)


def col_counts(indptr, indices, rows, live, rowmask, n_cols):
    hit = live.astype(bool)
    if rowmask is not None:
        hit &= rowmask.view(bool)[rows]
    return np.bincount(indices[hit], minlength=n_cols).astype(np.int64)


def _rect_hits(indices, rows, live, rowmask, colmask):
    return live.view(bool) & rowmask.view(bool)[rows] & colmask.view(bool)[indices]


def rect_count(indptr, indices, rows, live, rowmask, colmask):
    return int(np.count_nonzero(_rect_hits(indices, rows, live, rowmask, colmask)))


def clear_rect(indptr, indices, rows, live, rowmask, colmask):
    hit = _rect_hits(indices, rows, live, rowmask, colmask)
    live[hit] = 0
    return int(np.count_nonzero(hit))


def clear_covered(indptr, indices, rows, live, row_bits, col_bits):
    cand = np.flatnonzero(live)
    if cand.size == 0:
        return 0
    shared = row_bits[rows[cand]] & col_bits[indices[cand]]
    hit = cand[shared.any(axis=1)]
    live[hit] = 0
    return int(hit.size)
