"""NaiveCol: greedy from-below factors built from the columns of ``I``.

Candidate ``j`` is the rectangle ``rows(col j) x {j' : col j ⊆ col j'}``;
it never covers a zero of ``I``. Each step takes the candidate covering the
most still-uncovered ones (lowest column index on ties).
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy import sparse

from .boolmat import BoolMatrix, EmptyMatrixError, FactorPair
from .topfiberm import ConfigError


class NaiveColResult(NamedTuple):
    factors: FactorPair
    trace: list


def _csr(m):
    r, c = m.pairs()
    return sparse.csr_matrix((np.ones(r.size, dtype=np.int64), (r, c)), shape=m.shape)


def column_containment(i):
    """Boolean m x m matrix: ``[j, j']`` true iff column j of ``i`` is a nonempty subset of column j'."""
    s = _csr(i)
    counts = np.asarray(s.sum(axis=0)).ravel()
    overlap = (s.T @ s).tocoo()
    keep = (overlap.data == counts[overlap.row]) & (counts[overlap.row] > 0)
    return sparse.csr_matrix(
        (np.ones(int(keep.sum()), dtype=np.int64), (overlap.row[keep], overlap.col[keep])),
        shape=(i.n_cols, i.n_cols),
    )


def candidate_gains(i_csr, contains, x):
    """Uncovered ones of ``x`` inside every column candidate."""
    reach = i_csr.T @ _csr(x)
    return np.asarray(reach.multiply(contains).sum(axis=1)).ravel()


def naivecol(i, k):
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)) or k < 1:
        raise ConfigError(f"rank k must be an integer >= 1, got {k!r}")
    if not isinstance(i, BoolMatrix):
        raise TypeError(f"expected BoolMatrix, got {type(i).__name__}")
    if not i.any():
        raise EmptyMatrixError("input matrix has no ones")

    total = i.nnz()
    i_csr = _csr(i)
    contains = column_containment(i)
    x = i.copy()
    picked = []
    trace = []
    while len(picked) < k and x.any():
        gains = candidate_gains(i_csr, contains, x)
        gains[picked] = -1
        j = int(np.argmax(gains))
        if gains[j] <= 0:
            break
        a = i.col_mask(j)
        b = contains.getrow(j).toarray().ravel().astype(np.uint8)
        covered = x.subtract_rectangle(a, b)
        picked.append(j)
        trace.append({
            "step": len(picked),
            "column": j,
            "gain": covered,
            "coverage": 1.0 - x.nnz() / total,
        })

    n, m = i.shape
    a = np.zeros((n, len(picked)), dtype=bool)
    b = np.zeros((len(picked), m), dtype=bool)
    for l, j in enumerate(picked):
        a[:, l] = i.col_mask(j)
        b[l] = contains.getrow(j).toarray().ravel() > 0
    return NaiveColResult(FactorPair.from_dense(a, b), trace)
