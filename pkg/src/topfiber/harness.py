"""Coverage metric, DBP/AFP experiment drivers, fixtures and reports."""

from __future__ import annotations

import csv
import hashlib
import json
import os
import time
import urllib.request
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .baselines import naivecol
from .boolmat import DimensionError, product_count, residual
from .matio import load_matrix
from .topfiberm import ConfigError, TfmConfig, factorize

ALGORITHMS = ("topfiberm", "naivecol")
FIXTURE_ENV = "TOPFIBER_FIXTURES"
_FIXTURE_SUFFIXES = {".mat": "mat", ".mtx": "matrix-market", ".csv": "csv"}


class UndefinedCoverageError(ValueError):
    """Coverage needs at least one 1 in the reference matrix."""


class FixtureMissing(FileNotFoundError):
    """A benchmark dataset has not been fetched into the fixture directory."""


@dataclass
class CoverageReport:
    coverage: float
    ones_in_i: int
    false_negatives: int
    false_positives: int
    rank_used: int
    wall_time: float = 0.0
    per_factor_trace: list = field(default_factory=list)
    empty_factors: list = field(default_factory=list)
    factors: object = field(default=None, repr=False, compare=False)


@dataclass
class AfpResult:
    target_coverage: float
    t_p_used: float | None
    min_rank: int | None
    achieved_coverage: float
    scan_trace: list
    reports: list = field(default_factory=list, repr=False, compare=False)

    @property
    def reached(self):
        return self.min_rank is not None


@dataclass
class ValidationReport:
    passed: bool
    observed: dict
    expected: dict
    mismatches: list


def coverage(i, f):
    """One minus (uncovered ones + false positives) over the ones of ``i``."""
    if f.shape != i.shape:
        raise DimensionError(f"factors give {f.shape}, matrix is {i.shape}")
    ones = i.nnz()
    if ones == 0:
        raise UndefinedCoverageError("coverage is undefined for a matrix without ones")
    fn = residual(i, f).nnz()
    fp = product_count(f) - (ones - fn)
    return CoverageReport(
        coverage=1.0 - (fn + fp) / ones,
        ones_in_i=ones,
        false_negatives=fn,
        false_positives=fp,
        rank_used=f.rank,
        empty_factors=f.empty_factors(),
    )


def _check_algorithm(algorithm):
    if algorithm not in ALGORITHMS:
        raise ConfigError(f"unknown algorithm {algorithm!r}; expected one of {ALGORITHMS}")


def run_dbp(i, algorithm, k, t_p=0.5, sr=100):
    """Factorize at fixed rank ``k`` and score the result."""
    _check_algorithm(algorithm)
    start = time.perf_counter()
    if algorithm == "topfiberm":
        f, _, trace = factorize(i, TfmConfig(k=k, t_p=t_p, sr=sr))
        steps = [r.as_dict() for r in trace.records]
    else:
        f, steps = naivecol(i, k)
    elapsed = time.perf_counter() - start
    report = coverage(i, f)
    report.wall_time = elapsed
    report.per_factor_trace = steps
    report.factors = f
    return report


def run_afp(i, algorithm, target_c, t_p=0.5, k_max=None, keep_reports=False):
    """Smallest rank (linear scan from 1) whose coverage reaches ``target_c``.

    topFiberM runs with a search limit of ``k + 10``. When ``k_max`` is
    exhausted the result has ``min_rank=None`` and carries the best coverage
    seen. ``keep_reports`` retains the per-rank CoverageReports.
    """
    _check_algorithm(algorithm)
    if not (0 < target_c <= 1):
        raise ConfigError(f"target coverage must lie in (0, 1], got {target_c!r}")
    n, m = i.shape
    if k_max is None:
        k_max = min(n, m) if algorithm == "topfiberm" else m
    t_p_used = t_p if algorithm == "topfiberm" else None
    scan, reports = [], []
    best = float("-inf")
    for k in range(1, k_max + 1):
        rep = run_dbp(i, algorithm, k, t_p=t_p, sr=k + 10)
        if keep_reports:
            reports.append(rep)
        scan.append((k, rep.coverage))
        best = max(best, rep.coverage)
        if rep.coverage >= target_c:
            return AfpResult(target_c, t_p_used, k, rep.coverage, scan, reports)
    return AfpResult(target_c, t_p_used, None, best, scan, reports)


def dataset_stats(i):
    rows, cols = i.shape
    nnz = i.nnz()
    return {"rows": rows, "cols": cols, "nnz": nnz, "density": nnz / (rows * cols) if rows * cols else 0.0}


def validate_dataset(i, expected, density_tol=0.0005):
    """Compare shape and ones exactly, density within ``density_tol``.

    ``expected`` is a mapping with any of ``rows``, ``cols``, ``nnz``,
    ``density`` (or a ``(rows, cols, nnz, density)`` tuple).
    """
    if not isinstance(expected, dict):
        expected = dict(zip(("rows", "cols", "nnz", "density"), expected))
    observed = dataset_stats(i)
    observed_density = round(observed["density"], 3)
    mismatches = []
    for key in ("rows", "cols", "nnz"):
        if expected.get(key) is not None and observed[key] != expected[key]:
            mismatches.append(f"{key}: expected {expected[key]}, got {observed[key]}")
    if expected.get("density") is not None and abs(observed["density"] - expected["density"]) > density_tol:
        mismatches.append(
            f"density: expected {expected['density']}, got {observed_density} "
            f"({observed['density']:.5f})"
        )
    observed = dict(observed, density=observed_density)
    return ValidationReport(not mismatches, observed, dict(expected), mismatches)


# reference tables -----------------------------------------------------------


def _read_table(name):
    text = resources.files("topfiber").joinpath("data", name).read_text(encoding="utf-8")
    rows = []
    for rec in csv.DictReader(text.splitlines()):
        rows.append({k: _cell(v) for k, v in rec.items()})
    return rows


def _cell(v):
    if v == "NA":
        return None
    for cast in (int, float):
        try:
            return cast(v)
        except ValueError:
            pass
    return v


def dataset_table():
    """Expected shape, ones and density of the benchmark datasets."""
    return {r["name"]: r for r in _read_table("datasets.csv")}


def dbp_reference():
    """Fixed-rank coverages: the topFiberM target plus cited comparison values."""
    return _read_table("dbp_reference.csv")


def afp_reference():
    """Minimum ranks per coverage target: the topFiberM target plus cited values."""
    return _read_table("afp_reference.csv")


# fixtures -------------------------------------------------------------------


@dataclass
class ManifestEntry:
    name: str
    url: str | None
    sha256: str | None
    format: str


def read_manifest(path=None):
    if path is None:
        text = resources.files("topfiber").joinpath("data", "manifest.txt").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    entries = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 4:
            raise ValueError(f"manifest line {lineno}: expected 'name url sha256 format'")
        name, url, digest, fmt = parts
        entries.append(ManifestEntry(name, None if url == "-" else url, None if digest == "-" else digest.lower(), fmt))
    return entries


def fixture_dir():
    return Path(os.environ.get(FIXTURE_ENV, "fixtures"))


def fixture_path(name, directory=None):
    directory = Path(directory) if directory is not None else fixture_dir()
    for suffix in _FIXTURE_SUFFIXES:
        p = directory / f"{name}{suffix}"
        if p.exists():
            return p
    raise FixtureMissing(f"fixture {name!r} not found in {directory} (set {FIXTURE_ENV} or run fetch)")


def load_fixture(name, directory=None):
    p = fixture_path(name, directory)
    m, _ = load_matrix(p, _FIXTURE_SUFFIXES[p.suffix])
    return m


def fetch_fixture(entry, directory=None):
    """Download one manifest entry and verify its checksum when pinned."""
    if entry.url is None:
        raise FixtureMissing(f"manifest has no URL for {entry.name!r}; place the file by hand")
    directory = Path(directory) if directory is not None else fixture_dir()
    directory.mkdir(parents=True, exist_ok=True)
    suffix = {"mat": ".mat", "matrix-market": ".mtx", "csv": ".csv"}[entry.format]
    target = directory / f"{entry.name}{suffix}"
    with urllib.request.urlopen(entry.url, timeout=60) as resp:
        payload = resp.read()
    if entry.sha256 is not None:
        digest = hashlib.sha256(payload).hexdigest()
        if digest != entry.sha256:
            raise ValueError(f"{entry.name}: sha256 {digest} does not match manifest {entry.sha256}")
    target.write_bytes(payload)
    return target


# reports and grids ----------------------------------------------------------

REPORT_FIELDS = ("dataset", "algorithm", "k", "t_p", "sr", "coverage", "fp", "fn", "nnz", "rank_used", "wall_time_ms")


def run_record(dataset, algorithm, k, t_p, sr, report, config=None):
    """One report document for a single run."""
    rec = {
        "dataset": dataset,
        "algorithm": algorithm,
        "k": k,
        "t_p": t_p if algorithm == "topfiberm" else None,
        "sr": sr if algorithm == "topfiberm" else None,
        "coverage": report.coverage,
        "fp": report.false_positives,
        "fn": report.false_negatives,
        "nnz": report.ones_in_i,
        "rank_used": report.rank_used,
        "empty_factors": report.empty_factors,
        "wall_time_ms": round(report.wall_time * 1000.0, 3),
        "trace": report.per_factor_trace,
    }
    if config is not None:
        rec["config"] = config
    return rec


def dumps_report(record, timing=True):
    """Canonical JSON text; ``timing=False`` drops wall-clock fields for byte comparisons."""
    return json.dumps(_strip_timing(record) if not timing else record, sort_keys=True, indent=2) + "\n"


def _strip_timing(obj):
    if isinstance(obj, dict):
        return {k: _strip_timing(v) for k, v in obj.items() if k not in ("wall_time_ms", "wall_time")}
    if isinstance(obj, list):
        return [_strip_timing(v) for v in obj]
    return obj


def write_csv(path, records, extra=()):
    cols = list(REPORT_FIELDS) + [c for c in extra if c not in REPORT_FIELDS]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=cols, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for rec in records:
            w.writerow(rec)


@dataclass(frozen=True)
class GridCell:
    dataset: str
    algorithm: str
    k: int
    t_p: float = 0.5
    sr: int = 100


def _run_cell(cell, matrix=None):
    i = matrix if matrix is not None else load_fixture(cell.dataset)
    rep = run_dbp(i, cell.algorithm, cell.k, t_p=cell.t_p, sr=cell.sr)
    return run_record(cell.dataset, cell.algorithm, cell.k, cell.t_p, cell.sr, rep)


def run_grid(cells, workers=1, matrices=None):
    """Run DBP cells; results come back in input order regardless of ``workers``.

    ``matrices`` maps dataset names to preloaded matrices; other names are
    loaded from the fixture directory.
    """
    matrices = matrices or {}
    cells = list(cells)
    if workers <= 1:
        return [_run_cell(c, matrices.get(c.dataset)) for c in cells]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_run_cell, c, matrices.get(c.dataset)) for c in cells]
        return [f.result() for f in futures]


def dbp_table_records(records):
    """Attach the reference values to DBP grid records for table rendering."""
    ref = {(r["dataset"], r["k"]): r for r in dbp_reference()}
    out = []
    for rec in records:
        row = dict(rec)
        cited = ref.get((rec["dataset"], rec["k"]), {})
        row["reference_topfiberm"] = cited.get("topfiberm")
        row["cited_asso"] = cited.get("asso")
        row["cited_grecond_plus"] = cited.get("grecond_plus")
        row["cited_naivecol"] = cited.get("naivecol")
        out.append(row)
    return out
