"""Sparse Boolean matrices and Boolean factor pairs.

A ``BoolMatrix`` stores its ones in CSR order together with a per-entry
``live`` flag. Structure arrays are immutable after construction; clearing a
cell flips its flag, so copies that only differ in which ones remain can
share the structure. That is exactly the relation between an input matrix
and its uncovered residual during factorization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels


class DimensionError(ValueError):
    """Shapes or mask lengths do not line up."""


class EmptyMatrixError(ValueError):
    """The operation needs at least one 1 in the input matrix."""


_CHUNK_BYTES = 1 << 24


def as_mask(mask, length, what="mask"):
    """Return ``mask`` as a contiguous uint8 0/1 vector of ``length``."""
    arr = np.asarray(mask)
    if arr.ndim != 1 or arr.shape[0] != length:
        raise DimensionError(f"{what} has shape {arr.shape}, expected ({length},)")
    return np.ascontiguousarray(arr != 0, dtype=np.uint8)


class BoolMatrix:
    """Sparse 0/1 matrix.

    Build one with :meth:`from_pairs`, :meth:`from_dense` or :meth:`zeros`
    rather than calling the constructor, which trusts its arguments.
    """

    __slots__ = ("n_rows", "n_cols", "indptr", "indices", "rows", "live", "_nnz", "_positions")

    def __init__(self, n_rows, n_cols, indptr, indices, rows, live, nnz=None):
        self.n_rows = int(n_rows)
        self.n_cols = int(n_cols)
        self.indptr = indptr
        self.indices = indices
        self.rows = rows
        self.live = live
        self._nnz = int(np.count_nonzero(live)) if nnz is None else int(nnz)
        self._positions = None

    # construction -------------------------------------------------------

    @classmethod
    def from_pairs(cls, n_rows, n_cols, rows, cols):
        """Build from coordinate arrays; duplicate pairs collapse to one."""
        n_rows, n_cols = int(n_rows), int(n_cols)
        if n_rows < 0 or n_cols < 0:
            raise DimensionError(f"negative shape ({n_rows}, {n_cols})")
        r = np.asarray(rows, dtype=np.int64).ravel()
        c = np.asarray(cols, dtype=np.int64).ravel()
        if r.shape != c.shape:
            raise DimensionError("row and column index arrays differ in length")
        if r.size:
            if r.min() < 0 or r.max() >= n_rows or c.min() < 0 or c.max() >= n_cols:
                raise DimensionError(f"index out of range for shape ({n_rows}, {n_cols})")
        keys = np.unique(r * max(n_cols, 1) + c)
        r = keys // max(n_cols, 1)
        c = keys - r * max(n_cols, 1)
        indptr = np.zeros(n_rows + 1, dtype=np.int64)
        np.cumsum(np.bincount(r, minlength=n_rows), out=indptr[1:])
        return cls(
            n_rows,
            n_cols,
            indptr,
            c.astype(np.int32),
            r.astype(np.int32),
            np.ones(keys.size, dtype=np.uint8),
            nnz=keys.size,
        )

    @classmethod
    def from_dense(cls, array):
        arr = np.asarray(array)
        if arr.ndim != 2:
            raise DimensionError(f"expected a 2-D array, got shape {arr.shape}")
        r, c = np.nonzero(arr)
        return cls.from_pairs(arr.shape[0], arr.shape[1], r, c)

    @classmethod
    def zeros(cls, n_rows, n_cols):
        return cls.from_pairs(n_rows, n_cols, [], [])

    def copy(self):
        """Independent ones, shared (read-only) structure."""
        return BoolMatrix(
            self.n_rows, self.n_cols, self.indptr, self.indices, self.rows,
            self.live.copy(), nnz=self._nnz,
        )

    def compact(self):
        """Copy with dead entries dropped from the structure."""
        r, c = self.pairs()
        return BoolMatrix.from_pairs(self.n_rows, self.n_cols, r, c)

    # inspection ---------------------------------------------------------

    @property
    def shape(self):
        return (self.n_rows, self.n_cols)

    def nnz(self):
        return self._nnz

    def any(self):
        return self._nnz > 0

    def pairs(self):
        """Row and column indices of the ones, row-major order."""
        alive = self.live.view(bool)
        return self.rows[alive].astype(np.int64), self.indices[alive].astype(np.int64)

    def to_dense(self, dtype=bool):
        out = np.zeros(self.shape, dtype=dtype)
        r, c = self.pairs()
        out[r, c] = 1
        return out

    def transpose(self):
        r, c = self.pairs()
        return BoolMatrix.from_pairs(self.n_cols, self.n_rows, c, r)

    @property
    def T(self):
        return self.transpose()

    def row(self, i):
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return self.indices[lo:hi][self.live[lo:hi].view(bool)].astype(np.int64)

    def row_mask(self, i):
        """Row ``i`` as a 0/1 vector of length ``n_cols``."""
        out = np.zeros(self.n_cols, dtype=np.uint8)
        out[self.row(i)] = 1
        return out

    def col_mask(self, j):
        """Column ``j`` as a 0/1 vector of length ``n_rows``."""
        hit = self.live.view(bool) & (self.indices == j)
        out = np.zeros(self.n_rows, dtype=np.uint8)
        out[self.rows[hit]] = 1
        return out

    def __contains__(self, cell):
        r, c = cell
        if not (0 <= r < self.n_rows and 0 <= c < self.n_cols):
            return False
        if self._positions is None:
            keys = self.rows.astype(np.int64) * self.n_cols + self.indices
            self._positions = dict(zip(keys.tolist(), range(keys.size)))
        pos = self._positions.get(int(r) * self.n_cols + int(c))
        return pos is not None and bool(self.live[pos])

    def __eq__(self, other):
        if not isinstance(other, BoolMatrix):
            return NotImplemented
        if self.shape != other.shape or self._nnz != other._nnz:
            return False
        (r1, c1), (r2, c2) = self.pairs(), other.pairs()
        return np.array_equal(r1, r2) and np.array_equal(c1, c2)

    __hash__ = None

    def __repr__(self):
        return f"BoolMatrix({self.n_rows}x{self.n_cols}, nnz={self._nnz})"

    # bulk counts --------------------------------------------------------

    def _args(self):
        return self.indptr, self.indices, self.rows, self.live

    def row_sums(self, col_mask=None):
        """Ones per row, restricted to masked columns when a mask is given."""
        if col_mask is not None:
            col_mask = as_mask(col_mask, self.n_cols, "column mask")
        return kernels.row_counts(*self._args(), col_mask)

    def col_sums(self, row_mask=None):
        """Ones per column, restricted to masked rows when a mask is given."""
        if row_mask is not None:
            row_mask = as_mask(row_mask, self.n_rows, "row mask")
        return kernels.col_counts(*self._args(), row_mask, self.n_cols)

    def complement_sums(self, axis, mask):
        """Zeros per row (``axis="row"``) or per column (``axis="col"``).

        Only positions selected by ``mask`` on the other axis are counted.
        """
        if axis in ("row", 0):
            m = as_mask(mask, self.n_cols, "column mask")
            ones = kernels.row_counts(*self._args(), m)
        elif axis in ("col", 1):
            m = as_mask(mask, self.n_rows, "row mask")
            ones = kernels.col_counts(*self._args(), m, self.n_cols)
        else:
            raise ValueError(f"axis must be 'row' or 'col', got {axis!r}")
        return int(np.count_nonzero(m)) - ones

    def rectangle_counts(self, row_set, col_set):
        """``(ones, zeros)`` inside the rectangle ``row_set x col_set``."""
        rm = as_mask(row_set, self.n_rows, "row set")
        cm = as_mask(col_set, self.n_cols, "column set")
        ones = int(kernels.rect_count(*self._args(), rm, cm))
        area = int(np.count_nonzero(rm)) * int(np.count_nonzero(cm))
        return ones, area - ones

    def subtract_rectangle(self, row_set, col_set):
        """Zero every cell of the rectangle in place; returns cells cleared."""
        rm = as_mask(row_set, self.n_rows, "row set")
        cm = as_mask(col_set, self.n_cols, "column set")
        cleared = int(kernels.clear_rect(*self._args(), rm, cm))
        self._nnz -= cleared
        return cleared


def pack_rows(m):
    """Rows of ``m`` as little-endian bitsets: uint64 array ``(n_rows, words)``."""
    words = max(1, -(-m.n_cols // 64))
    bits = np.zeros((m.n_rows, words), dtype=np.uint64)
    r, c = m.pairs()
    if r.size:
        np.bitwise_or.at(bits, (r, c >> 6), np.left_shift(np.uint64(1), (c & 63).astype(np.uint64)))
    return bits


@dataclass
class FactorPair:
    """Boolean factors ``a`` (n x k) and ``b`` (k x m); row l of ``b`` pairs with column l of ``a``."""

    a: BoolMatrix
    b: BoolMatrix

    def __post_init__(self):
        if self.a.n_cols != self.b.n_rows:
            raise DimensionError(
                f"a is {self.a.n_rows}x{self.a.n_cols} but b is {self.b.n_rows}x{self.b.n_cols}"
            )

    @property
    def rank(self):
        return self.a.n_cols

    @property
    def shape(self):
        """Shape of the product."""
        return (self.a.n_rows, self.b.n_cols)

    @classmethod
    def from_dense(cls, a, b):
        return cls(BoolMatrix.from_dense(a), BoolMatrix.from_dense(b))

    @classmethod
    def empty(cls, n_rows, n_cols):
        return cls(BoolMatrix.zeros(n_rows, 0), BoolMatrix.zeros(0, n_cols))

    def empty_factors(self):
        """Indices of factors whose rectangle is empty (contribute nothing)."""
        rows_used = self.a.col_sums() > 0
        cols_used = self.b.row_sums() > 0
        return np.flatnonzero(~(rows_used & cols_used)).tolist()


def _product_chunks(f):
    """Yield ``(row_ids, bitsets)`` for every product row that has a 1."""
    n, m = f.shape
    words = max(1, -(-m // 64))
    a_dense = f.a.to_dense()
    b_bits = pack_rows(f.b)
    active = np.flatnonzero(a_dense.any(axis=1)) if f.rank else np.empty(0, dtype=np.int64)
    step = max(1, _CHUNK_BYTES // (8 * words))
    for start in range(0, active.size, step):
        row_ids = active[start:start + step]
        sub = a_dense[row_ids]
        bits = np.zeros((row_ids.size, words), dtype=np.uint64)
        for l in range(f.rank):
            sel = sub[:, l]
            if sel.any():
                bits[sel] |= b_bits[l]
        yield row_ids, bits


def product_count(f):
    """Number of ones in ``bool_product(f)`` without building it."""
    return int(sum(int(np.bitwise_count(bits).sum()) for _, bits in _product_chunks(f)))


def bool_product(f):
    """Boolean (max-min) product ``a ∘ b`` as a ``BoolMatrix``."""
    n, m = f.shape
    rows, cols = [], []
    for row_ids, bits in _product_chunks(f):
        dense = np.unpackbits(bits.view(np.uint8), axis=1, bitorder="little")[:, :m]
        r, c = np.nonzero(dense)
        rows.append(row_ids[r])
        cols.append(c)
    if not rows:
        return BoolMatrix.zeros(n, m)
    return BoolMatrix.from_pairs(n, m, np.concatenate(rows), np.concatenate(cols))


def residual(i, f):
    """Ones of ``i`` that ``f`` leaves uncovered (false positives are ignored)."""
    if f.shape != i.shape:
        raise DimensionError(f"factors give {f.shape}, matrix is {i.shape}")
    x = i.copy()
    if f.rank == 0 or not x.any():
        return x
    row_bits = pack_rows(f.a)
    col_bits = pack_rows(f.b.transpose())
    x._nnz -= int(kernels.clear_covered(*x._args(), row_bits, col_bits))
    return x
