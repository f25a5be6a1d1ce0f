"""topFiberM: greedy fiber selection with backward factor replacement.

Each iteration takes the densest uncovered row or column ("fiber") of the
residual ``X``, grows it into a rectangle by thresholding the precision of
every other row/column against it, and records the rectangle in the next
search slot. The first ``k`` rectangles are accepted outright. Later ones
(up to the search limit ``sr``) replace the weakest accepted factor when
their gain is larger, otherwise their seed fiber is excluded for the rest
of the run.

Gain counts newly covered ones on ``X`` and false positives on the
original matrix ``I``.
"""

from __future__ import annotations

import enum
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np

from .boolmat import BoolMatrix, DimensionError, EmptyMatrixError, FactorPair, product_count, residual


class ConfigError(ValueError):
    """Invalid algorithm parameters."""


TIE_BREAKS = ("rows-first",)


@dataclass(frozen=True)
class TfmConfig:
    """Parameters of one run.

    ``sr`` defaults to ``k``. ``rtp_on_original`` counts true positives on
    ``I`` instead of the residual when thresholding; it exists for
    experiments and is off by default.
    """

    k: int
    t_p: float = 0.5
    sr: int | None = None
    tie_break: str = "rows-first"
    rtp_on_original: bool = False

    def __post_init__(self):
        if isinstance(self.k, bool) or not isinstance(self.k, (int, np.integer)) or self.k < 1:
            raise ConfigError(f"rank k must be an integer >= 1, got {self.k!r}")
        if not (0 < self.t_p <= 1):
            raise ConfigError(f"t_p must lie in (0, 1], got {self.t_p!r}")
        if self.sr is not None:
            if isinstance(self.sr, bool) or not isinstance(self.sr, (int, np.integer)):
                raise ConfigError(f"sr must be an integer, got {self.sr!r}")
            if self.sr < self.k:
                raise ConfigError(f"sr ({self.sr}) must be >= k ({self.k})")
        if self.tie_break not in TIE_BREAKS:
            raise ConfigError(f"unknown tie_break {self.tie_break!r}; expected one of {TIE_BREAKS}")

    @property
    def search_limit(self):
        return self.k if self.sr is None else int(self.sr)

    def as_dict(self):
        d = asdict(self)
        d["sr"] = self.search_limit
        return d


class FiberType(enum.IntEnum):
    ROW = 1
    COLUMN = 2


class Fiber(NamedTuple):
    fiber_type: FiberType
    index: int
    one_count: int


@dataclass(frozen=True)
class TopFiberEntry:
    slot: int
    fiber_type: FiberType
    fiber_index: int
    gain: int


@dataclass
class TraceRecord:
    iteration: int
    fiber_type: FiberType
    fiber_index: int
    one_count: int
    gain: int
    rect_rows: int
    rect_cols: int
    action: str  # accepted | replaced | excluded
    replaced_slot: int | None
    tf_slots_before: tuple
    min_gain_before: int | None
    gain_sum_before: int
    gain_sum_after: int
    coverage: float
    uncovered: int
    degenerate: bool = False

    def as_dict(self):
        d = asdict(self)
        d["fiber_type"] = int(self.fiber_type)
        d["tf_slots_before"] = list(self.tf_slots_before)
        return d


@dataclass
class TfmTrace:
    records: list = field(default_factory=list)
    effective_k: int = 0
    effective_sr: int = 0
    stop_reason: str = ""

    def gains(self):
        return [r.gain for r in self.records]

    def as_dict(self):
        return {
            "effective_k": self.effective_k,
            "effective_sr": self.effective_sr,
            "stop_reason": self.stop_reason,
            "records": [r.as_dict() for r in self.records],
        }


class TfmResult(NamedTuple):
    factors: FactorPair
    entries: list
    trace: TfmTrace


def select_best_fiber(x, excluded_rows, excluded_cols):
    """Densest non-excluded row or column of ``x``, or ``None``.

    Ties go to rows over columns, then to the lowest index.
    """
    if len(excluded_rows) != x.n_rows or len(excluded_cols) != x.n_cols:
        raise DimensionError("exclusion vectors do not match the matrix shape")
    rs = x.row_sums()
    cs = x.col_sums()
    rs[np.asarray(excluded_rows, dtype=bool)] = -1
    cs[np.asarray(excluded_cols, dtype=bool)] = -1
    best_r = int(np.argmax(rs)) if rs.size else -1
    best_c = int(np.argmax(cs)) if cs.size else -1
    r_val = int(rs[best_r]) if best_r >= 0 else -1
    c_val = int(cs[best_c]) if best_c >= 0 else -1
    if max(r_val, c_val) <= 0:
        return None
    if r_val >= c_val:
        return Fiber(FiberType.ROW, best_r, r_val)
    return Fiber(FiberType.COLUMN, best_c, c_val)


def _passes(tp, fp, t_p):
    # same float division the threshold is defined with; tp > 0 keeps it finite
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = tp / (tp + fp)
    return ((tp > 0) & (ratio >= t_p)).astype(np.uint8)


def _gain(x, i_orig, a, b):
    covered, _ = x.rectangle_counts(a, b)
    _, false_pos = i_orig.rectangle_counts(a, b)
    return covered - false_pos


def extend_row_fiber(x, i_orig, mxr, t_p, rtp_on_original=False):
    """Grow row ``mxr`` of the residual into a rectangle.

    Returns ``(a_col, b_row, gain)`` with the two index sets as 0/1 vectors.
    """
    b = x.row_mask(mxr)
    if not b.any():
        raise ValueError(f"row {mxr} of the residual is empty")
    tp_src = i_orig if rtp_on_original else x
    rtp = tp_src.row_sums(b)
    rfp = i_orig.complement_sums("row", b)
    a = _passes(rtp, rfp, t_p)
    ctp = tp_src.col_sums(a)
    cfp = i_orig.complement_sums("col", a)
    b = _passes(ctp, cfp, t_p)
    return a, b, _gain(x, i_orig, a, b)


def extend_col_fiber(x, i_orig, mxc, t_p, rtp_on_original=False):
    """Column counterpart of :func:`extend_row_fiber` (roles of a and b swapped)."""
    a = x.col_mask(mxc)
    if not a.any():
        raise ValueError(f"column {mxc} of the residual is empty")
    tp_src = i_orig if rtp_on_original else x
    ctp = tp_src.col_sums(a)
    cfp = i_orig.complement_sums("col", a)
    b = _passes(ctp, cfp, t_p)
    rtp = tp_src.row_sums(b)
    rfp = i_orig.complement_sums("row", b)
    a = _passes(rtp, rfp, t_p)
    return a, b, _gain(x, i_orig, a, b)


def _bits(mask):
    words = max(1, -(-mask.size // 64))
    packed = np.zeros(words * 8, dtype=np.uint8)
    p = np.packbits(mask.astype(bool), bitorder="little")
    packed[:p.size] = p
    return packed.view(np.uint64)


class _UnionCount:
    """Running size of the union of accepted rectangles (product ones)."""

    BUDGET_BYTES = 1 << 26

    def __init__(self, n, m):
        self.n, self.m = n, m
        words = max(1, -(-m // 64))
        self.dense = n * words * 8 <= self.BUDGET_BYTES
        self.bits = np.zeros((n, words), dtype=np.uint64) if self.dense else None
        self.rects = []
        self.count = 0

    def add(self, a, b):
        if not self.dense:
            self.rects.append((a, b))
            self.count = self._recount()
            return
        rows = np.flatnonzero(a)
        if rows.size == 0 or not b.any():
            return
        block = self.bits[rows]
        before = int(np.bitwise_count(block).sum())
        block |= _bits(b)
        self.bits[rows] = block
        self.count += int(np.bitwise_count(block).sum()) - before

    def reset(self, rects):
        if self.dense:
            self.bits[:] = 0
        self.rects = []
        self.count = 0
        for a, b in rects:
            if self.dense:
                self.add(a, b)
            else:
                self.rects.append((a, b))
        if not self.dense:
            self.count = self._recount()

    def _recount(self):
        a = np.array([r[0] for r in self.rects], dtype=bool).T.reshape(self.n, len(self.rects))
        b = np.array([r[1] for r in self.rects], dtype=bool).reshape(len(self.rects), self.m)
        return product_count(FactorPair.from_dense(a, b))


def _factors(search_a, search_b, slots):
    return FactorPair.from_dense(search_a[:, slots], search_b[slots, :])


def factorize(i, cfg):
    """Run topFiberM on ``i``; returns ``TfmResult(factors, entries, trace)``.

    Factor order follows the order of ``entries`` (a replacement takes the
    evicted entry's position).
    """
    if not isinstance(i, BoolMatrix):
        raise TypeError(f"expected BoolMatrix, got {type(i).__name__}")
    if not i.any():
        raise EmptyMatrixError("input matrix has no ones")
    n, m = i.shape
    sr = min(cfg.search_limit, n, m)
    k = min(cfg.k, sr)
    total = i.nnz()

    x = i.copy()
    search_a = np.zeros((n, sr), dtype=bool)
    search_b = np.zeros((sr, m), dtype=bool)
    tf = []
    excluded_rows = np.zeros(n, dtype=bool)
    excluded_cols = np.zeros(m, dtype=bool)
    union = _UnionCount(n, m)
    trace = TfmTrace(effective_k=k, effective_sr=sr, stop_reason="search-limit")

    for slot in range(sr):
        fiber = select_best_fiber(x, excluded_rows, excluded_cols)
        if fiber is None:
            trace.stop_reason = "no-fiber"
            break
        extend = extend_row_fiber if fiber.fiber_type is FiberType.ROW else extend_col_fiber
        a, b, gain = extend(x, i, fiber.index, cfg.t_p, cfg.rtp_on_original)
        search_a[:, slot] = a
        search_b[slot, :] = b
        entry = TopFiberEntry(slot, fiber.fiber_type, fiber.index, gain)

        slots_before = tuple(e.slot for e in tf)
        sum_before = sum(e.gain for e in tf)
        min_before = min((e.gain for e in tf), default=None)
        replaced = None
        degenerate = False
        if len(tf) < k:
            x.subtract_rectangle(a, b)
            union.add(a, b)
            tf.append(entry)
            action = "accepted"
            degenerate = gain <= 0 or not (a.any() and b.any())
        elif gain <= min_before:
            if fiber.fiber_type is FiberType.ROW:
                excluded_rows[fiber.index] = True
            else:
                excluded_cols[fiber.index] = True
            action = "excluded"
        else:
            # equal minima: evict the lowest slot
            pos = min(range(len(tf)), key=lambda p: (tf[p].gain, tf[p].slot))
            replaced = tf[pos].slot
            tf[pos] = entry
            slots = [e.slot for e in tf]
            x = residual(i, _factors(search_a, search_b, slots))
            union.reset([(search_a[:, s], search_b[s, :]) for s in slots])
            action = "replaced"

        uncovered = x.nnz()
        false_pos = union.count - (total - uncovered)
        trace.records.append(TraceRecord(
            iteration=slot + 1,
            fiber_type=fiber.fiber_type,
            fiber_index=fiber.index,
            one_count=fiber.one_count,
            gain=gain,
            rect_rows=int(np.count_nonzero(a)),
            rect_cols=int(np.count_nonzero(b)),
            action=action,
            replaced_slot=replaced,
            tf_slots_before=slots_before,
            min_gain_before=min_before,
            gain_sum_before=sum_before,
            gain_sum_after=sum(e.gain for e in tf),
            coverage=1.0 - (uncovered + false_pos) / total,
            uncovered=uncovered,
            degenerate=degenerate,
        ))
        if uncovered == 0:
            trace.stop_reason = "covered"
            break

    slots = [e.slot for e in tf]
    return TfmResult(_factors(search_a, search_b, slots), tf, trace)
