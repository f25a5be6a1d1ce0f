"""N-Triples ingestion into per-predicate Boolean slices.

Each predicate becomes a subject x object matrix with its own dense
dictionaries (first-seen order), so no slice has an all-zero row or column.
"""

from __future__ import annotations

import gzip
import io
import logging
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

from .boolmat import BoolMatrix
from .harness import coverage
from .matio import write_mtx
from .topfiberm import factorize

log = logging.getLogger(__name__)

DEFAULT_MIN_COUNT = 1000
DEFAULT_T_P = 0.5


class NTriplesError(ValueError):
    def __init__(self, lineno, start, end, message):
        self.lineno = lineno
        self.byte_range = (start, end)
        super().__init__(f"line {lineno}, bytes {start}-{end}: {message}")


class Term(NamedTuple):
    kind: str  # iri | bnode | literal
    value: str
    lang: str | None = None
    datatype: str | None = None

    def n3(self):
        if self.kind == "iri":
            return f"<{self.value}>"
        if self.kind == "bnode":
            return f"_:{self.value}"
        text = '"' + _escape(self.value) + '"'
        if self.lang:
            return f"{text}@{self.lang}"
        if self.datatype:
            return f"{text}^^<{self.datatype}>"
        return text


class Triple(NamedTuple):
    subject: Term
    predicate: Term
    object: Term


_WS = re.compile(r"[ \t]*")
_IRI = re.compile(r"<([^<>\"{}|^`\\\x00-\x20]*)>")
_BNODE = re.compile(r"_:([A-Za-z0-9_](?:[A-Za-z0-9_.\-]*[A-Za-z0-9_\-])?)")
_LITERAL = re.compile(
    r'"((?:[^"\\\n\r]|\\.)*)"'
    r"(?:@([A-Za-z]+(?:-[A-Za-z0-9]+)*)|\^\^<([^<>\"{}|^`\\\x00-\x20]*)>)?"
)
_ESCAPE = re.compile(r"\\(?:u([0-9A-Fa-f]{4})|U([0-9A-Fa-f]{8})|(.))")
_SIMPLE_ESCAPES = {"t": "\t", "b": "\b", "n": "\n", "r": "\r", "f": "\f", '"': '"', "'": "'", "\\": "\\"}


def _unescape(text):
    def sub(m):
        if m.group(1) or m.group(2):
            return chr(int(m.group(1) or m.group(2), 16))
        ch = m.group(3)
        if ch not in _SIMPLE_ESCAPES:
            raise ValueError(f"bad escape \\{ch}")
        return _SIMPLE_ESCAPES[ch]

    return _ESCAPE.sub(sub, text)


def _escape(text):
    return text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\r", "\\r")


def _term(line, pos, allowed):
    if "iri" in allowed:
        m = _IRI.match(line, pos)
        if m:
            return Term("iri", _unescape(m.group(1))), m.end()
    if "bnode" in allowed:
        m = _BNODE.match(line, pos)
        if m:
            return Term("bnode", m.group(1)), m.end()
    if "literal" in allowed:
        m = _LITERAL.match(line, pos)
        if m:
            return Term("literal", _unescape(m.group(1)), m.group(2), m.group(3)), m.end()
    return None, pos


def parse_line(line):
    """Parse one N-Triples line; ``None`` for blank and comment lines.

    Raises ``ValueError`` carrying ``(start, end)`` character offsets.
    """
    pos = _WS.match(line).end()
    if pos == len(line) or line[pos] == "#":
        return None
    terms = []
    for allowed in (("iri", "bnode"), ("iri",), ("iri", "bnode", "literal")):
        try:
            term, end = _term(line, pos, allowed)
        except ValueError as exc:
            raise _LineError(pos, len(line), str(exc)) from None
        if term is None:
            stop = line.find(" ", pos)
            raise _LineError(pos, len(line) if stop < 0 else stop, f"expected {' or '.join(allowed)}")
        terms.append(term)
        pos = _WS.match(line, end).end()
    if pos >= len(line) or line[pos] != ".":
        raise _LineError(pos, len(line), "expected '.' after object")
    pos = _WS.match(line, pos + 1).end()
    if pos < len(line) and line[pos] != "#":
        raise _LineError(pos, len(line), "trailing characters after '.'")
    return Triple(*terms)


class _LineError(ValueError):
    def __init__(self, start, end, message):
        self.start, self.end = start, end
        super().__init__(message)


def _lines(source):
    if isinstance(source, (str, Path)):
        path = Path(source)
        with open(path, "rb") as fh:
            magic = fh.read(2)
        opener = gzip.open if magic == b"\x1f\x8b" else open
        with opener(path, "rb") as fh:
            yield from fh
    else:
        yield from source


def parse_ntriples(source, strict=False, errors=None):
    """Yield triples from a path (plain or gzip), binary/text stream or line iterable.

    Malformed lines raise ``NTriplesError`` in strict mode; otherwise they
    are logged, appended to ``errors`` when a list is given, and skipped.
    """
    for lineno, raw in enumerate(_lines(source), start=1):
        line = raw.decode("utf-8") if isinstance(raw, bytes) else raw
        line = line.rstrip("\r\n")
        try:
            triple = parse_line(line)
        except _LineError as exc:
            start = len(line[:exc.start].encode("utf-8"))
            end = len(line[:exc.end].encode("utf-8"))
            err = NTriplesError(lineno, start, end, str(exc))
            if strict:
                raise err from None
            log.warning("skipping malformed triple: %s", err)
            if errors is not None:
                errors.append(err)
            continue
        if triple is not None:
            yield triple


@dataclass
class PredicateSlice:
    predicate: Term
    matrix: BoolMatrix
    subjects: list
    objects: list
    triple_count: int

    @property
    def predicate_iri(self):
        return self.predicate.value


def build_slices(triples, min_count=DEFAULT_MIN_COUNT):
    """Group triples by predicate into subject x object matrices.

    Predicates with fewer than ``min_count`` distinct triples are dropped.
    Slices come back in first-seen predicate order.
    """
    if min_count < 1:
        raise ValueError(f"min_count must be >= 1, got {min_count}")
    groups = {}
    for s, p, o in triples:
        g = groups.get(p)
        if g is None:
            g = groups[p] = ({}, {}, [], [])
        subj, obj, rows, cols = g
        rows.append(subj.setdefault(s, len(subj)))
        cols.append(obj.setdefault(o, len(obj)))
    slices = []
    for p, (subj, obj, rows, cols) in groups.items():
        m = BoolMatrix.from_pairs(len(subj), len(obj), rows, cols)
        if m.nnz() < min_count:
            continue
        slices.append(PredicateSlice(p, m, list(subj), list(obj), m.nnz()))
    return slices


def _slug(iri):
    tail = re.split(r"[/#:]", iri.rstrip("/#"))[-1] or "predicate"
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", tail)[:60]


def write_slices(slices, directory):
    """Write each slice as ``NNN_<name>.mtx`` plus subject/object dictionaries."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for idx, sl in enumerate(slices):
        base = directory / f"{idx:03d}_{_slug(sl.predicate_iri)}"
        mtx = base.with_suffix(".mtx")
        write_mtx(mtx, sl.matrix, comment=f"predicate {sl.predicate.n3()}\nrows: subjects, columns: objects")
        for suffix, terms in ((".subjects.txt", sl.subjects), (".objects.txt", sl.objects)):
            with open(str(base) + suffix, "w", encoding="utf-8", newline="\n") as fh:
                for t in terms:
                    fh.write(t.n3() + "\n")
        written.append(mtx)
    return written


def _run_one(sl, cfg):
    rec = {
        "predicate": sl.predicate_iri,
        "rows": sl.matrix.n_rows,
        "cols": sl.matrix.n_cols,
        "nnz": sl.matrix.nnz(),
    }
    start = time.perf_counter()
    try:
        f, _, trace = factorize(sl.matrix, cfg)
        rep = coverage(sl.matrix, f)
    except Exception as exc:  # isolate per-slice failures
        rec.update(error=f"{type(exc).__name__}: {exc}", wall_time_ms=round((time.perf_counter() - start) * 1000, 3))
        return rec
    rec.update(
        coverage=rep.coverage,
        fp=rep.false_positives,
        fn=rep.false_negatives,
        rank_used=rep.rank_used,
        stop_reason=trace.stop_reason,
        wall_time_ms=round((time.perf_counter() - start) * 1000, 3),
        error=None,
    )
    return rec


@dataclass
class SliceRunReport:
    slices: list = field(default_factory=list)
    aggregate: dict = field(default_factory=dict)

    def as_dict(self):
        return {"slices": self.slices, "aggregate": self.aggregate}


def run_slices(slices, cfg, workers=1):
    """Factorize every slice; the aggregate weights coverage by slice ones."""
    slices = list(slices)
    if workers > 1 and len(slices) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_one, slices, [cfg] * len(slices)))
    else:
        records = [_run_one(sl, cfg) for sl in slices]
    ok = [r for r in records if r.get("error") is None]
    weight = sum(r["nnz"] for r in ok)
    aggregate = {
        "slices": len(records),
        "failed": len(records) - len(ok),
        "nnz": weight,
        "weighted_coverage": (sum(r["coverage"] * r["nnz"] for r in ok) / weight) if weight else None,
        "wall_time_ms": round(sum(r["wall_time_ms"] for r in records), 3),
        "config": cfg.as_dict(),
    }
    if cfg.t_p == DEFAULT_T_P:
        aggregate["t_p_note"] = "precision threshold for RDF slices is not published; 0.5 assumed"
    return SliceRunReport(records, aggregate)


def read_dictionary(path):
    """Lines of a dictionary file (index = line number - 1), as N-Triples terms."""
    terms = []
    with io.open(path, encoding="utf-8") as fh:
        for line in fh:
            t = parse_line(f"<urn:s> <urn:p> {line.rstrip(chr(10))} .")
            terms.append(t.object)
    return terms
