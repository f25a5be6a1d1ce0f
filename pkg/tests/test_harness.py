import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

import oracles
from conftest import dataset_or_skip
from topfiber.boolmat import BoolMatrix, DimensionError, FactorPair
from topfiber.harness import (
    FixtureMissing,
    GridCell,
    ManifestEntry,
    UndefinedCoverageError,
    afp_reference,
    coverage,
    dataset_table,
    dbp_reference,
    dbp_table_records,
    dumps_report,
    fetch_fixture,
    load_fixture,
    read_manifest,
    run_afp,
    run_dbp,
    run_grid,
    run_record,
    validate_dataset,
    write_csv,
)
from topfiber.matio import write_mtx
from topfiber.synthetic import block_diagonal, planted_matrix, random_matrix
from topfiber.topfiberm import ConfigError


class TestCoverage:
    def test_exact(self):
        i = block_diagonal([2, 1])
        f = FactorPair.from_dense([[1, 0], [1, 0], [0, 1]], [[1, 1, 0], [0, 0, 1]])
        rep = coverage(i, f)
        assert (rep.coverage, rep.false_negatives, rep.false_positives) == (1.0, 0, 0)

    def test_all_zero_factors(self):
        i = block_diagonal([2])
        assert coverage(i, FactorPair.empty(2, 2)).coverage == 0.0

    def test_three_of_four(self):
        i = BoolMatrix.from_dense(np.ones((2, 2), dtype=bool))
        f = FactorPair.from_dense([[1, 0], [0, 1]], [[1, 1], [1, 0]])
        rep = coverage(i, f)
        assert rep.coverage == 0.75 and rep.false_negatives == 1 and rep.false_positives == 0

    def test_false_positives_can_go_negative(self):
        i = BoolMatrix.from_pairs(3, 3, [0], [0])
        f = FactorPair.from_dense(np.ones((3, 1), bool), np.ones((1, 3), bool))
        rep = coverage(i, f)
        assert rep.false_positives == 8 and rep.coverage == -7.0

    def test_errors(self):
        with pytest.raises(UndefinedCoverageError):
            coverage(BoolMatrix.zeros(2, 2), FactorPair.empty(2, 2))
        with pytest.raises(DimensionError):
            coverage(block_diagonal([2]), FactorPair.empty(2, 3))

    @settings(max_examples=200, deadline=None)
    @given(st.integers(1, 50), st.integers(0, 6), st.integers(1, 50), st.data())
    def test_matches_cell_by_cell_count(self, n, k, m, data):
        i = data.draw(hnp.arrays(bool, (n, m)).filter(np.any))
        a = data.draw(hnp.arrays(bool, (n, k)))
        b = data.draw(hnp.arrays(bool, (k, m)))
        rep = coverage(BoolMatrix.from_dense(i), FactorPair.from_dense(a, b))
        p = (a.astype(int) @ b.astype(int)) > 0
        mismatch = int((p != i).sum())
        assert rep.coverage == 1 - mismatch / int(i.sum())
        assert rep.coverage == 1 - (rep.false_negatives + rep.false_positives) / rep.ones_in_i
        assert rep.false_negatives <= rep.ones_in_i


class TestDrivers:
    def test_run_dbp_naivecol_rejects_k0(self):
        with pytest.raises(ConfigError):
            run_dbp(block_diagonal([2]), "naivecol", 0)

    def test_unknown_algorithm(self):
        with pytest.raises(ConfigError):
            run_dbp(block_diagonal([2]), "asso", 1)

    def test_run_dbp_report(self):
        i = block_diagonal([3, 2])
        rep = run_dbp(i, "topfiberm", 2, t_p=0.5, sr=2)
        assert rep.coverage == 1.0 and rep.rank_used == 2 and len(rep.per_factor_trace) == 2
        assert rep.factors.rank == 2

    def test_two_blocks_min_rank(self):
        res = run_afp(block_diagonal([3, 2]), "topfiberm", 1.0, t_p=1.0)
        assert res.reached and res.min_rank == 2 and res.achieved_coverage == 1.0
        assert [k for k, _ in res.scan_trace] == [1, 2]

    def test_not_reached(self):
        i = BoolMatrix.from_dense(np.eye(4, dtype=bool))
        res = run_afp(i, "topfiberm", 1.0, t_p=1.0, k_max=2)
        assert not res.reached and res.achieved_coverage == 0.5

    def test_bad_target(self):
        for t in (0, 1.5):
            with pytest.raises(ConfigError):
                run_afp(block_diagonal([2]), "topfiberm", t)

    @pytest.mark.parametrize("algorithm", ["topfiberm", "naivecol"])
    @pytest.mark.parametrize("seed", range(6))
    def test_scan_equals_dbp_and_is_minimal(self, algorithm, seed):
        rng = np.random.default_rng(seed)
        i = planted_matrix(rng, 30, 25, 5, 8, 6, noise=0.03)
        target = float(rng.choice([0.6, 0.8, 0.95]))
        res = run_afp(i, algorithm, target, t_p=0.7)
        for k, c in res.scan_trace:
            assert c == run_dbp(i, algorithm, k, t_p=0.7, sr=k + 10).coverage
        if res.reached:
            assert res.achieved_coverage >= target
            assert all(c < target for k, c in res.scan_trace if k < res.min_rank)


class TestValidation:
    def test_pass_and_fail(self):
        i = block_diagonal([2, 2])
        assert validate_dataset(i, (4, 4, 8, 0.5)).passed
        rep = validate_dataset(i, (4, 5, 8, None))
        assert not rep.passed and rep.mismatches == ["cols: expected 5, got 4"]

    def test_empty_matrix_fails_on_nnz(self):
        rep = validate_dataset(BoolMatrix.zeros(501, 139), (501, 139, 3537, 0.051))
        assert not rep.passed and rep.mismatches[0].startswith("nnz")

    def test_density_tolerance(self):
        i = BoolMatrix.from_pairs(1, 1000, [0] * 487, range(487))
        assert validate_dataset(i, {"density": 0.4874}).passed
        assert not validate_dataset(i, {"density": 0.488}).passed

    def test_table_arithmetic(self):
        # shape and ones determine density; two table rows round differently
        drift = {}
        for name, row in dataset_table().items():
            exact = row["nnz"] / (row["rows"] * row["cols"])
            drift[name] = abs(exact - row["density"])
        assert {n for n, d in drift.items() if d > 0.0005} == {"dblp", "firewall1"}

    def test_reference_tables(self):
        dbp, afp = dbp_reference(), afp_reference()
        assert len(dbp) == 20 and len(afp) == 20
        assert any(r["dataset"] == "paleo" and r["k"] == 1 and r["topfiberm"] == 0.027 for r in dbp)
        assert any(r["dataset"] == "chess" and r["target"] == 0.8 and r["topfiberm"] == 19 and r["t_p"] == 0.7 for r in afp)
        assert sorted(r["dataset"] for r in afp if r["target"] == 1) == ["chess", "dblp", "firewall1", "mushroom", "paleo"]


class TestFixtures:
    def test_manifest(self, tmp_path):
        names = [e.name for e in read_manifest()]
        assert names == ["chess", "dblp", "firewall1", "mushroom", "paleo"]
        p = tmp_path / "m.txt"
        p.write_text("# c\nfoo http://x/y.mtx ABC matrix-market\n")
        assert read_manifest(p) == [ManifestEntry("foo", "http://x/y.mtx", "abc", "matrix-market")]
        p.write_text("foo bar\n")
        with pytest.raises(ValueError):
            read_manifest(p)

    def test_fetch_without_url(self, tmp_path):
        with pytest.raises(FixtureMissing):
            fetch_fixture(ManifestEntry("chess", None, None, "mat"), tmp_path)

    def test_load_from_directory(self, tmp_path, monkeypatch):
        m = block_diagonal([2, 3])
        write_mtx(tmp_path / "toy.mtx", m)
        assert load_fixture("toy", tmp_path) == m
        monkeypatch.setenv("TOPFIBER_FIXTURES", str(tmp_path))
        assert load_fixture("toy") == m
        with pytest.raises(FixtureMissing):
            load_fixture("absent")


class TestReports:
    def test_record_fields_and_timing_strip(self):
        rep = run_dbp(block_diagonal([3, 2]), "topfiberm", 2, sr=2)
        rec = run_record("toy", "topfiberm", 2, 0.5, 2, rep, config={"k": 2})
        for key in ("dataset", "algorithm", "k", "t_p", "sr", "coverage", "fp", "fn", "nnz", "wall_time_ms", "trace"):
            assert key in rec
        assert "wall_time_ms" not in json.loads(dumps_report(rec, timing=False))
        rep2 = run_dbp(block_diagonal([3, 2]), "topfiberm", 2, sr=2)
        rec2 = run_record("toy", "topfiberm", 2, 0.5, 2, rep2, config={"k": 2})
        assert dumps_report(rec, timing=False) == dumps_report(rec2, timing=False)

    def test_grid_parallel_equals_sequential(self, rng, tmp_path):
        mats = {f"m{j}": random_matrix(rng, 20, 20) for j in range(3)}
        cells = [GridCell(name, algo, k) for name in mats for algo in ("topfiberm", "naivecol") for k in (1, 3)]
        seq = run_grid(cells, 1, mats)
        par = run_grid(cells, 2, mats)
        assert [dumps_report(r, timing=False) for r in seq] == [dumps_report(r, timing=False) for r in par]
        out = tmp_path / "grid.csv"
        write_csv(out, dbp_table_records(seq), extra=("reference_topfiberm",))
        lines = out.read_text().splitlines()
        assert lines[0].startswith("dataset,algorithm,k,") and lines[0].endswith(",reference_topfiberm")
        assert len(lines) == len(cells) + 1


@pytest.mark.parametrize("name, k, want", [("firewall1", 5, 0.953), ("paleo", 1, 0.027)])
def test_dataset_examples(name, k, want):
    i = dataset_or_skip(name)
    assert run_dbp(i, "topfiberm", k, t_p=0.5, sr=100).coverage == pytest.approx(want, abs=0.01)
