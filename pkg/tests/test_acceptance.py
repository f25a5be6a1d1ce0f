"""Acceptance criteria 1-9.

Each test carries a ``criterion`` marker; the terminal summary prints one
verdict line per criterion. Benchmark-dataset checks skip with
"fixture missing" until the matrices are placed in the fixture directory
(``TOPFIBER_FIXTURES``).
"""

import collections
import json
import os
import time

import numpy as np
import pytest

import oracles
from conftest import dataset_or_skip
from topfiber.boolmat import BoolMatrix, FactorPair, bool_product, residual
from topfiber.harness import (
    FixtureMissing,
    afp_reference,
    coverage,
    dataset_table,
    dbp_reference,
    dumps_report,
    load_fixture,
    run_afp,
    run_dbp,
    run_record,
    validate_dataset,
)
from topfiber.rdf import build_slices, parse_ntriples, run_slices
from topfiber.synthetic import block_diagonal, random_matrix, shuffled, synthetic_graph
from topfiber.topfiberm import TfmConfig, factorize

pytestmark = pytest.mark.acceptance

DATASETS = ("chess", "dblp", "firewall1", "mushroom", "paleo")
DBP_TOL = 0.01
AFP_TOL = 2
DBP_BUDGET_S = 5 * 60
AFP_BUDGET_S = 15 * 60
RDF_BUDGET_S = 60
SWDF_ENV = "TOPFIBER_SWDF"


def _all_datasets_or_skip():
    missing = []
    for name in DATASETS:
        try:
            load_fixture(name)
        except FixtureMissing:
            missing.append(name)
    if missing:
        pytest.skip(f"fixture missing: {', '.join(missing)}")


# shared runs ---------------------------------------------------------------


def dbp_runs(name):
    """Reference DBP cells of one dataset: list of (reference row, CoverageReport)."""
    i = dataset_or_skip(name)
    return [(row, run_dbp(i, "topfiberm", row["k"], t_p=0.5, sr=100)) for row in dbp_reference() if row["dataset"] == name]


def afp_runs(name):
    """Reference AFP rows of one dataset: list of (reference row, min_rank, kept reports).

    Rows sharing a t_p share one scan; the linear scan from k=1 makes the
    first k reaching each smaller target identical to a separate run.
    """
    i = dataset_or_skip(name)
    rows = [r for r in afp_reference() if r["dataset"] == name]
    out = []
    for t_p in sorted({r["t_p"] for r in rows}):
        group = [r for r in rows if r["t_p"] == t_p]
        res = run_afp(i, "topfiberm", max(r["target"] for r in group), t_p=t_p, keep_reports=True)
        for r in group:
            hit = next((k for k, c in res.scan_trace if c >= r["target"]), None)
            out.append((r, hit, res.reports))
    return out


_dbp_cache, _afp_cache, _elapsed = {}, {}, collections.defaultdict(float)


def cached_dbp(name):
    if name not in _dbp_cache:
        start = time.perf_counter()
        _dbp_cache[name] = dbp_runs(name)
        _elapsed["dbp", name] = time.perf_counter() - start
    return _dbp_cache[name]


def cached_afp(name):
    if name not in _afp_cache:
        start = time.perf_counter()
        _afp_cache[name] = afp_runs(name)
        _elapsed["afp", name] = time.perf_counter() - start
    return _afp_cache[name]


# 1 -------------------------------------------------------------------------


@pytest.mark.criterion(1, "dataset validation")
@pytest.mark.parametrize("name", DATASETS)
def test_c1_dataset_statistics(name):
    i = dataset_or_skip(name)
    expected = dataset_table()[name]
    rep = validate_dataset(i, {k: expected[k] for k in ("rows", "cols", "nnz", "density")}, density_tol=0.0005)
    assert rep.passed, rep.mismatches


# 2 -------------------------------------------------------------------------


@pytest.mark.criterion(2, "DBP reproduction")
@pytest.mark.parametrize("name", DATASETS)
def test_c2_dbp_cells_within_tolerance(name):
    off = [
        (row["k"], row["topfiberm"], round(rep.coverage, 4))
        for row, rep in cached_dbp(name)
        if abs(rep.coverage - row["topfiberm"]) > DBP_TOL
    ]
    assert not off, f"(k, published, ours) outside ±{DBP_TOL}: {off}"


@pytest.mark.criterion(2, "DBP reproduction")
def test_c2_dbp_beats_naivecol_and_budget():
    _all_datasets_or_skip()
    cells = [pair for name in DATASETS for pair in cached_dbp(name)]
    assert len(cells) == 20
    wins = sum(rep.coverage >= row["naivecol"] for row, rep in cells)
    assert wins >= 14, f"only {wins}/20 cells at or above the NaiveCol column"
    total = sum(_elapsed["dbp", n] for n in DATASETS)
    assert total < DBP_BUDGET_S, f"{total:.1f}s"


# 3 -------------------------------------------------------------------------


@pytest.mark.criterion(3, "AFP reproduction")
@pytest.mark.parametrize("name", DATASETS)
def test_c3_afp_min_rank_within_tolerance(name):
    off = []
    for row, hit, _ in cached_afp(name):
        if hit is None or abs(hit - row["topfiberm"]) > AFP_TOL:
            off.append((row["target"], row["t_p"], row["topfiberm"], hit))
    assert not off, f"(target, t_p, published, ours) outside ±{AFP_TOL}: {off}"


@pytest.mark.criterion(3, "AFP reproduction")
def test_c3_afp_budget():
    _all_datasets_or_skip()
    for name in DATASETS:
        cached_afp(name)
    total = sum(_elapsed["afp", n] for n in DATASETS)
    assert total < AFP_BUDGET_S, f"{total:.1f}s"


# 4 -------------------------------------------------------------------------


def _no_fp_report(n_cases=1000, seed=4):
    rng = np.random.default_rng(seed)
    out = []
    for case in range(n_cases):
        i = random_matrix(rng, 30, 30)
        k = int(rng.integers(1, 11))
        f, _, trace = factorize(i, TfmConfig(k=k, t_p=1.0, sr=k + int(rng.integers(0, 11))))
        fp = bool_product(f).nnz() - (i.nnz() - residual(i, f).nnz())
        out.append({"case": case, "k": k, "fp": fp, "coverage": trace.records[-1].coverage})
    return out


@pytest.mark.criterion(4, "no false positives at t_p=1")
def test_c4_random_matrices():
    report = _no_fp_report()
    assert len(report) == 1000
    bad = [r["case"] for r in report if r["fp"] != 0]
    assert not bad


@pytest.mark.criterion(4, "no false positives at t_p=1")
@pytest.mark.parametrize("name", DATASETS)
def test_c4_datasets(name):
    i = dataset_or_skip(name)
    for k in (1, 2, 5, 10):
        rep = run_dbp(i, "topfiberm", k, t_p=1.0, sr=100)
        assert rep.false_positives == 0
        assert not (bool_product(rep.factors).to_dense() & ~i.to_dense()).any()


# 5 -------------------------------------------------------------------------


def _oracle_cases(n_cases=500, seed=5):
    rng = np.random.default_rng(seed)
    for _ in range(n_cases):
        n, m, k = (int(v) for v in rng.integers(1, 9, size=3))
        p = rng.random()
        yield rng.random((n, m)) < p, rng.random((n, k)) < p, rng.random((k, m)) < p, rng.random(n) < 0.5, rng.random(m) < 0.5


def _oracle_report():
    out = []
    for d, a, b, rmask, cmask in _oracle_cases():
        i = BoolMatrix.from_dense(d)
        f = FactorPair.from_dense(a, b)
        il, al, bl = d.astype(int).tolist(), a.astype(int).tolist(), b.astype(int).tolist()
        prod = oracles.product(al, bl)
        rows, cols = np.flatnonzero(rmask).tolist(), np.flatnonzero(cmask).tolist()
        rec = {
            "product": oracles.dense(bool_product(f)) == prod,
            "rectangle": i.rectangle_counts(rmask, cmask) == oracles.rectangle(il, rows, cols),
            "residual": oracles.dense(residual(i, f)) == oracles.residual(il, prod),
        }
        if d.any():
            rec["coverage"] = coverage(i, f).coverage == oracles.coverage(il, prod)
        out.append(rec)
    return out


@pytest.mark.criterion(5, "oracle equivalence")
def test_c5_oracle_equivalence():
    report = _oracle_report()
    assert len(report) == 500
    failures = collections.Counter(op for rec in report for op, ok in rec.items() if not ok)
    assert not failures, dict(failures)


# 6 -------------------------------------------------------------------------


def _gain_violations(trace):
    bad = []
    for r in trace:
        if r["action"] == "replaced" and not r["gain_sum_after"] > r["gain_sum_before"]:
            bad.append(r["iteration"])
        if r["action"] == "excluded" and not r["gain"] <= r["min_gain_before"]:
            bad.append(r["iteration"])
    return bad


@pytest.mark.criterion(6, "replacement gain")
@pytest.mark.parametrize("name", DATASETS)
def test_c6_table_runs(name):
    traces = [rep.per_factor_trace for _, rep in cached_dbp(name)]
    for _, _, reports in cached_afp(name):
        traces += [rep.per_factor_trace for rep in reports]
    actions = collections.Counter(r["action"] for t in traces for r in t)
    assert actions["accepted"] > 0
    assert all(not _gain_violations(t) for t in traces)


# 7 -------------------------------------------------------------------------


def _blocks_report(seed=7):
    rng = np.random.default_rng(seed)
    out = []
    for b in range(2, 7):
        for trial in range(20):
            sizes = [tuple(int(v) for v in rng.integers(1, 9, size=2)) for _ in range(b)]
            i = block_diagonal(sizes, pad_rows=int(rng.integers(0, 3)), pad_cols=int(rng.integers(0, 3)))
            if trial % 2:
                i = shuffled(i, rng)
            f, _, _ = factorize(i, TfmConfig(k=b, t_p=1.0))
            out.append({"b": b, "trial": trial, "sizes": sizes, "coverage": coverage(i, f).coverage, "exact": bool_product(f) == i})
    return out


@pytest.mark.criterion(7, "exact recovery of planted blocks")
def test_c7_block_diagonal():
    report = _blocks_report()
    bad = [(r["b"], r["sizes"]) for r in report if not (r["exact"] and r["coverage"] == 1.0)]
    assert not bad


# 8 -------------------------------------------------------------------------


def _rdf_report():
    triples, expected = synthetic_graph(seed=0)
    slices = build_slices(triples, min_count=1000)
    start = time.perf_counter()
    run = run_slices(slices, TfmConfig(k=20))
    elapsed = time.perf_counter() - start
    return triples, expected, slices, run, elapsed


@pytest.mark.criterion(8, "RDF pipeline")
def test_c8_synthetic_graph():
    triples, expected, slices, run, elapsed = _rdf_report()
    assert len(triples) == 100_000 and len(expected) == 10
    assert sum(len(v) >= 1000 for v in expected.values()) == 7
    assert len(slices) == 7
    oracle = collections.defaultdict(set)
    for s, p, o in triples:
        oracle[p].add((s, o))
    for sl in slices:
        r, c = sl.matrix.pairs()
        assert {(sl.subjects[x], sl.objects[y]) for x, y in zip(r.tolist(), c.tolist())} == oracle[sl.predicate]
    assert run.aggregate["failed"] == 0
    assert elapsed < RDF_BUDGET_S, f"{elapsed:.1f}s"
    again = run_slices(slices, TfmConfig(k=20))
    assert dumps_report(run.as_dict(), timing=False) == dumps_report(again.as_dict(), timing=False)


@pytest.mark.criterion(8, "RDF pipeline")
def test_c8_swdf_informational(capsys):
    path = os.environ.get(SWDF_ENV)
    if not path or not os.path.exists(path):
        pytest.skip(f"fixture missing: set {SWDF_ENV} to an N-Triples dump to compare against 0.4538")
    slices = build_slices(parse_ntriples(path), min_count=1000)
    agg = run_slices(slices, TfmConfig(k=100)).aggregate
    ok = agg["weighted_coverage"] is not None and abs(agg["weighted_coverage"] - 0.4538) <= 0.01
    with capsys.disabled():
        print(f"\nSWDF aggregate coverage {agg['weighted_coverage']} vs 0.4538: {'within' if ok else 'outside'} ±0.01")


# 9 -------------------------------------------------------------------------


def _canonical(n):
    if n == 1:
        return json.dumps([validate_dataset(dataset_or_skip(d), dataset_table()[d]).observed for d in DATASETS], sort_keys=True)
    if n == 2:
        return "".join(
            dumps_report(run_record(row["dataset"], "topfiberm", row["k"], 0.5, 100, rep), timing=False)
            for d in DATASETS for row, rep in dbp_runs(d)
        )
    if n == 3:
        return json.dumps([(row["dataset"], row["target"], hit) for d in DATASETS for row, hit, _ in afp_runs(d)])
    if n == 4:
        return json.dumps(_no_fp_report(), sort_keys=True)
    if n == 5:
        return json.dumps(_oracle_report(), sort_keys=True)
    if n == 6:
        return json.dumps([
            [rep.per_factor_trace for _, rep in dbp_runs(d)] + [[rep.per_factor_trace for rep in reps] for _, _, reps in afp_runs(d)]
            for d in DATASETS
        ], sort_keys=True)
    if n == 7:
        return json.dumps(_blocks_report(), sort_keys=True)
    if n == 8:
        _, _, slices, run, _ = _rdf_report()
        return dumps_report({"slices": [s.predicate_iri for s in slices], **run.as_dict()}, timing=False)
    raise ValueError(n)


@pytest.mark.criterion(9, "determinism")
@pytest.mark.parametrize("n", range(1, 9))
def test_c9_byte_identical_reports(n):
    if n in (1, 2, 3, 6):
        _all_datasets_or_skip()
    assert _canonical(n) == _canonical(n)
