"""Reading and writing Boolean matrices.

Matrix Market coordinate files are the interchange format (1-based
``row col`` pairs). Dense 0/1 CSV and MATLAB ``.mat`` files are read-only
inputs; the benchmark matrices are distributed as ``.mat``.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .boolmat import BoolMatrix

log = logging.getLogger(__name__)

MM_HEADER = "%%MatrixMarket matrix coordinate pattern general"

FORMATS = ("matrix-market", "csv", "mat")
_SUFFIXES = {".mtx": "matrix-market", ".mm": "matrix-market", ".csv": "csv", ".mat": "mat"}


class MatrixParseError(ValueError):
    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        where = f"{path}:{line}" if line else str(path)
        super().__init__(f"{where}: {message}")


@dataclass
class LoadReport:
    path: str
    format: str
    shape: tuple
    nnz: int
    duplicates: int = 0


def write_mtx(path, m, comment=None):
    """Write ``m`` as a coordinate pattern file, row-major order."""
    r, c = m.pairs()
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(MM_HEADER + "\n")
        if comment:
            for line in comment.splitlines():
                fh.write(f"% {line}\n")
        fh.write(f"{m.n_rows} {m.n_cols} {r.size}\n")
        for ri, ci in zip((r + 1).tolist(), (c + 1).tolist()):
            fh.write(f"{ri} {ci}\n")


def read_mtx(path, report=None):
    """Read a Matrix Market coordinate file.

    ``pattern`` is the native field; ``integer``/``real`` files are accepted
    and any nonzero value is taken as a 1. ``report`` (a ``LoadReport``)
    receives the duplicate count when given.
    """
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        tokens = header.lower().split()
        if len(tokens) < 5 or tokens[0] != "%%matrixmarket":
            raise MatrixParseError(path, 1, "missing %%MatrixMarket header")
        if tokens[1] != "matrix" or tokens[2] != "coordinate":
            raise MatrixParseError(path, 1, f"unsupported layout {' '.join(tokens[1:3])!r}")
        field, symmetry = tokens[3], tokens[4]
        if field not in ("pattern", "integer", "real"):
            raise MatrixParseError(path, 1, f"unsupported field {field!r}")
        if symmetry != "general":
            raise MatrixParseError(path, 1, f"unsupported symmetry {symmetry!r}")

        lineno = 1
        size = None
        for raw in fh:
            lineno += 1
            line = raw.strip()
            if line and not line.startswith("%"):
                size = line.split()
                break
        if size is None or len(size) != 3:
            raise MatrixParseError(path, lineno, "missing size line")
        try:
            n_rows, n_cols, declared = (int(t) for t in size)
        except ValueError:
            raise MatrixParseError(path, lineno, f"bad size line {line!r}") from None

        rows, cols = [], []
        want = 2 if field == "pattern" else 3
        for raw in fh:
            lineno += 1
            parts = raw.split()
            if not parts or parts[0].startswith("%"):
                continue
            if len(parts) != want:
                raise MatrixParseError(path, lineno, f"expected {want} fields, got {len(parts)}")
            try:
                r, c = int(parts[0]), int(parts[1])
                value = float(parts[2]) if want == 3 else 1.0
            except ValueError:
                raise MatrixParseError(path, lineno, f"bad entry {raw.strip()!r}") from None
            if not (1 <= r <= n_rows and 1 <= c <= n_cols):
                raise MatrixParseError(path, lineno, f"entry ({r}, {c}) outside {n_rows}x{n_cols}")
            if value != 0:
                rows.append(r - 1)
                cols.append(c - 1)
    if len(rows) > declared:
        raise MatrixParseError(path, lineno, f"{len(rows)} entries but header declares {declared}")
    m = BoolMatrix.from_pairs(n_rows, n_cols, rows, cols)
    _note_duplicates(path, len(rows), m, report)
    return m


def read_csv(path, report=None):
    """Read a dense 0/1 CSV file (no header), one matrix row per line."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, rec in enumerate(csv.reader(fh), start=1):
            if not rec or all(not x.strip() for x in rec):
                continue
            try:
                vals = [int(x) for x in rec]
            except ValueError:
                raise MatrixParseError(path, lineno, f"non-integer value in {rec!r}") from None
            if any(v not in (0, 1) for v in vals):
                raise MatrixParseError(path, lineno, "values must be 0 or 1")
            if rows and len(vals) != len(rows[0]):
                raise MatrixParseError(path, lineno, f"row has {len(vals)} values, expected {len(rows[0])}")
            rows.append(vals)
    if not rows:
        return BoolMatrix.zeros(0, 0)
    return BoolMatrix.from_dense(np.array(rows, dtype=np.uint8))


def read_mat(path, variable=None, report=None):
    """Read a matrix variable from a MATLAB file (dense or sparse).

    With ``variable`` unset the file must hold exactly one 2-D numeric array.
    """
    from scipy import io as sio
    from scipy import sparse

    try:
        contents = sio.loadmat(path)
    except Exception as exc:
        raise MatrixParseError(path, None, f"cannot read MATLAB file: {exc}") from exc
    found = {
        k: v for k, v in contents.items()
        if not k.startswith("__") and (sparse.issparse(v) or (isinstance(v, np.ndarray) and v.ndim == 2 and v.dtype != object))
    }
    if variable is not None:
        if variable not in found:
            raise MatrixParseError(path, None, f"no matrix variable {variable!r}")
        value = found[variable]
    elif len(found) == 1:
        value = next(iter(found.values()))
    else:
        raise MatrixParseError(path, None, f"ambiguous matrix variables {sorted(found)}; pick one")
    if sparse.issparse(value):
        coo = value.tocoo()
        keep = coo.data != 0
        return BoolMatrix.from_pairs(coo.shape[0], coo.shape[1], coo.row[keep], coo.col[keep])
    return BoolMatrix.from_dense(value != 0)


def guess_format(path):
    suffix = Path(path).suffix.lower()
    try:
        return _SUFFIXES[suffix]
    except KeyError:
        raise ValueError(f"cannot infer matrix format from {suffix!r}; pass it explicitly") from None


def load_matrix(path, fmt=None):
    """Load ``path`` in ``fmt`` (inferred from the suffix when omitted).

    Returns ``(matrix, LoadReport)``.
    """
    fmt = fmt or guess_format(path)
    report = LoadReport(path=str(path), format=fmt, shape=(0, 0), nnz=0)
    if fmt == "matrix-market":
        m = read_mtx(path, report)
    elif fmt == "csv":
        m = read_csv(path, report)
    elif fmt == "mat":
        m = read_mat(path, report=report)
    else:
        raise ValueError(f"unknown matrix format {fmt!r}; expected one of {FORMATS}")
    report.shape = m.shape
    report.nnz = m.nnz()
    return m, report


def _note_duplicates(path, n_read, m, report):
    dups = n_read - m.nnz()
    if dups:
        log.warning("%s: dropped %d duplicate entries", path, dups)
    if report is not None:
        report.duplicates = dups
