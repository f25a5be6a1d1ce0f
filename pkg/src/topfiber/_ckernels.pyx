# cython: language_level=3
"""Compiled inner loops over the CSR-with-live-mask layout of ``BoolMatrix``.

Every function mirrors one in ``_pykernels`` argument for argument. ``live``
flags which stored entries are currently ones; the structure arrays
(``indptr``, ``indices``, ``rows``) are never written.
"""

import numpy as np

cimport numpy as cnp
from libc.stdint cimport int32_t, int64_t, uint8_t, uint64_t

cnp.import_array()


def row_counts(const int64_t[::1] indptr, const int32_t[::1] indices,
               const int32_t[::1] rows, const uint8_t[::1] live, colmask):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t r, p
    cdef int64_t acc
    cdef const uint8_t[::1] cm
    out = np.zeros(n, dtype=np.int64)
    cdef int64_t[::1] o = out
    if colmask is None:
        for r in range(n):
            acc = 0
            for p in range(indptr[r], indptr[r + 1]):
                acc += live[p]
            o[r] = acc
    else:
        cm = colmask
        for r in range(n):
            acc = 0
            for p in range(indptr[r], indptr[r + 1]):
                acc += live[p] & cm[indices[p]]
            o[r] = acc
    return out


def col_counts(const int64_t[::1] indptr, const int32_t[::1] indices,
               const int32_t[::1] rows, const uint8_t[::1] live, rowmask,
               Py_ssize_t n_cols):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t r, p
    cdef const uint8_t[::1] rm
    out = np.zeros(n_cols, dtype=np.int64)
    cdef int64_t[::1] o = out
    if rowmask is None:
        for p in range(indices.shape[0]):
            o[indices[p]] += live[p]
    else:
        rm = rowmask
        for r in range(n):
            if rm[r]:
                for p in range(indptr[r], indptr[r + 1]):
                    o[indices[p]] += live[p]
    return out


def rect_count(const int64_t[::1] indptr, const int32_t[::1] indices,
               const int32_t[::1] rows, const uint8_t[::1] live,
               const uint8_t[::1] rowmask, const uint8_t[::1] colmask):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t r, p
    cdef int64_t acc = 0
    for r in range(n):
        if rowmask[r]:
            for p in range(indptr[r], indptr[r + 1]):
                acc += live[p] & colmask[indices[p]]
    return acc


def clear_rect(const int64_t[::1] indptr, const int32_t[::1] indices,
               const int32_t[::1] rows, uint8_t[::1] live,
               const uint8_t[::1] rowmask, const uint8_t[::1] colmask):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t r, p
    cdef int64_t cleared = 0
    for r in range(n):
        if rowmask[r]:
            for p in range(indptr[r], indptr[r + 1]):
                if live[p] and colmask[indices[p]]:
                    live[p] = 0
                    cleared += 1
    return cleared


def clear_covered(const int64_t[::1] indptr, const int32_t[::1] indices,
                  const int32_t[::1] rows, uint8_t[::1] live,
                  const uint64_t[:, ::1] row_bits,
                  const uint64_t[:, ::1] col_bits):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t w = row_bits.shape[1]
    cdef Py_ssize_t r, p, q, c
    cdef int64_t cleared = 0
    cdef bint any_row
    for r in range(n):
        any_row = False
        for q in range(w):
            if row_bits[r, q]:
                any_row = True
                break
        if not any_row:
            continue
        for p in range(indptr[r], indptr[r + 1]):
            if not live[p]:
                continue
            c = indices[p]
            for q in range(w):
                if row_bits[r, q] & col_bits[c, q]:
                    live[p] = 0
                    cleared += 1
                    break
    return cleared
