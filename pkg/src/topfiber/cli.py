"""Command-line entry point.

Exit codes: 0 ok, 1 a validation check failed, 2 bad arguments, 3 input
could not be read or parsed, 4 algorithm precondition failed, 5 internal
error. Reports go to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from . import __version__, harness, rdf
from .boolmat import DimensionError, EmptyMatrixError
from .kernels import active_backend
from .matio import FORMATS, MatrixParseError, load_matrix, write_mtx
from .topfiberm import ConfigError, TfmConfig

log = logging.getLogger("topfiber")

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE, EXIT_INPUT, EXIT_PRECONDITION, EXIT_INTERNAL = 0, 1, 2, 3, 4, 5


class UsageError(ValueError):
    pass


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {v}")
    return v


def _add_input(p, formats=FORMATS):
    src = p.add_argument_group("input")
    src.add_argument("--input", type=Path, help="matrix file")
    src.add_argument("--dataset", help="benchmark dataset name, looked up in the fixture directory")
    src.add_argument("--fixtures", type=Path, help=f"fixture directory (default: ${harness.FIXTURE_ENV} or ./fixtures)")
    src.add_argument("--format", choices=formats, help="input format (default: from the file suffix)")


def _add_tfm(p, tp_default=0.5, sr_default=None):
    p.add_argument("--tp", type=float, default=tp_default, help="precision threshold in (0, 1] (default %(default)s)")
    p.add_argument("--sr", type=int, default=sr_default, help="search limit (default: %(default)s, raised to the rank if smaller)")


def build_parser():
    parser = argparse.ArgumentParser(prog="topfiber", description="Boolean matrix factorization with topFiberM")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("factorize", help="factorize at a fixed rank")
    _add_input(p)
    p.add_argument("--algo", choices=harness.ALGORITHMS, default="topfiberm")
    p.add_argument("--rank", "-k", type=_positive_int, required=True)
    _add_tfm(p, sr_default=None)
    p.add_argument("--output-dir", type=Path, default=Path("topfiber_out"))
    p.add_argument("--report-format", choices=("json", "csv"), default="json")

    p = sub.add_parser("afp", help="smallest rank reaching a coverage target")
    _add_input(p)
    p.add_argument("--algo", choices=harness.ALGORITHMS, default="topfiberm")
    p.add_argument("--target", type=float, required=True)
    p.add_argument("--tp", type=float, default=0.5)
    p.add_argument("--k-max", type=_positive_int)
    p.add_argument("--report-format", choices=("json", "csv"), default="json")

    p = sub.add_parser("validate", help="check a dataset against expected statistics")
    _add_input(p)
    p.add_argument("--expect", help="ROWSxCOLS:NNZ[:DENSITY]; default: the published statistics of --dataset")

    p = sub.add_parser("grid", help="fixed-rank grid over benchmark datasets (table reproduction)")
    p.add_argument("--datasets", default="chess,dblp,firewall1,mushroom,paleo")
    p.add_argument("--ranks", default="1,2,5,10")
    p.add_argument("--algo", choices=harness.ALGORITHMS, default="topfiberm")
    _add_tfm(p, sr_default=100)
    p.add_argument("--fixtures", type=Path)
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--output-dir", type=Path, default=Path("topfiber_out"))

    p = sub.add_parser("rdf", help="slice an N-Triples graph by predicate and factorize each slice")
    p.add_argument("--input", type=Path, required=True, help="N-Triples file, optionally gzip-compressed")
    p.add_argument("--min-count", type=_positive_int, default=rdf.DEFAULT_MIN_COUNT)
    p.add_argument("--rank", "-k", type=_positive_int, default=100)
    _add_tfm(p, tp_default=rdf.DEFAULT_T_P)
    p.add_argument("--strict", action="store_true", help="abort on the first malformed line")
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--output-dir", type=Path, default=Path("topfiber_out"))
    p.add_argument("--report-format", choices=("json", "csv"), default="json")

    p = sub.add_parser("fetch", help="download benchmark datasets listed in a manifest")
    p.add_argument("--manifest", type=Path, help="manifest file (default: bundled)")
    p.add_argument("--fixtures", type=Path)
    p.add_argument("names", nargs="*")
    return parser


def _load(args):
    if args.input is not None:
        if not args.input.exists():
            raise FileNotFoundError(f"input file not found: {args.input}")
        m, report = load_matrix(args.input, args.format)
        if report.duplicates:
            log.warning("dropped %d duplicate entries from %s", report.duplicates, args.input)
        return m, str(args.input)
    if args.dataset:
        p = harness.fixture_path(args.dataset, args.fixtures)
        return harness.load_fixture(args.dataset, args.fixtures), str(p)
    raise UsageError("give --input or --dataset")


def _effective_config(args):
    cfg = {k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(vars(args).items()) if k != "verbose"}
    cfg["version"] = __version__
    return cfg


def _emit(record, path=None):
    text = json.dumps(record, sort_keys=True, indent=2) + "\n"
    if path is not None:
        path.write_text(text, encoding="utf-8")
    sys.stdout.write(text)


def cmd_factorize(args):
    if args.sr is None:
        args.sr = max(100, args.rank)
    if args.algo == "topfiberm":
        TfmConfig(k=args.rank, t_p=args.tp, sr=args.sr)
    i, source = _load(args)
    report = harness.run_dbp(i, args.algo, args.rank, t_p=args.tp, sr=args.sr)
    factors = report.factors
    out = args.output_dir
    out.mkdir(parents=True, exist_ok=True)
    write_mtx(out / "A.mtx", factors.a, comment="factor matrix A (rows x k)")
    write_mtx(out / "B.mtx", factors.b, comment="factor matrix B stored k x cols: one row per factor")
    name = args.dataset or Path(source).stem
    record = harness.run_record(name, args.algo, args.rank, args.tp, args.sr, report, config=_effective_config(args))
    record["backend"] = active_backend()
    if args.report_format == "csv":
        harness.write_csv(out / "report.csv", [record])
        (out / "report.json").write_text(json.dumps(record, sort_keys=True, indent=2) + "\n", encoding="utf-8")
        sys.stdout.write(str(out / "report.csv") + "\n")
    else:
        _emit(record, out / "report.json")
    return EXIT_OK


def cmd_afp(args):
    if not (0 < args.target <= 1):
        raise ConfigError(f"--target must lie in (0, 1], got {args.target}")
    if not (0 < args.tp <= 1):
        raise ConfigError(f"--tp must lie in (0, 1], got {args.tp}")
    i, source = _load(args)
    res = harness.run_afp(i, args.algo, args.target, t_p=args.tp, k_max=args.k_max)
    record = {
        "dataset": args.dataset or Path(source).stem,
        "algorithm": args.algo,
        "target_coverage": res.target_coverage,
        "t_p": res.t_p_used,
        "min_rank": res.min_rank,
        "reached": res.reached,
        "achieved_coverage": res.achieved_coverage,
        "scan_trace": [{"k": k, "coverage": c} for k, c in res.scan_trace],
        "config": _effective_config(args),
    }
    if args.report_format == "csv":
        w = sys.stdout
        w.write("k,coverage\n")
        for k, c in res.scan_trace:
            w.write(f"{k},{c!r}\n")
    else:
        _emit(record)
    return EXIT_OK


def _parse_expect(text):
    try:
        dims, _, rest = text.partition(":")
        rows, cols = (int(x) for x in dims.lower().split("x"))
        parts = rest.split(":") if rest else []
        expected = {"rows": rows, "cols": cols}
        if parts:
            expected["nnz"] = int(parts[0])
        if len(parts) > 1:
            expected["density"] = float(parts[1])
        if len(parts) > 2:
            raise ValueError
    except ValueError:
        raise UsageError(f"--expect must look like ROWSxCOLS:NNZ[:DENSITY], got {text!r}") from None
    return expected


def cmd_validate(args):
    if args.expect:
        expected = _parse_expect(args.expect)
    elif args.dataset:
        table = harness.dataset_table()
        if args.dataset not in table:
            raise UsageError(f"no published statistics for {args.dataset!r}; give --expect")
        row = table[args.dataset]
        expected = {k: row[k] for k in ("rows", "cols", "nnz", "density")}
    else:
        raise UsageError("give --expect or --dataset")
    i, source = _load(args)
    rep = harness.validate_dataset(i, expected)
    _emit({
        "input": source,
        "passed": rep.passed,
        "observed": rep.observed,
        "expected": rep.expected,
        "mismatches": rep.mismatches,
    })
    return EXIT_OK if rep.passed else EXIT_CHECK_FAILED


def cmd_grid(args):
    TfmConfig(k=1, t_p=args.tp, sr=args.sr)
    try:
        ranks = [int(x) for x in args.ranks.split(",")]
    except ValueError:
        raise UsageError(f"--ranks must be comma-separated integers, got {args.ranks!r}") from None
    names = [d for d in args.datasets.split(",") if d]
    matrices = {}
    for name in names:
        try:
            matrices[name] = harness.load_fixture(name, args.fixtures)
        except harness.FixtureMissing as exc:
            log.warning("skipping %s: %s", name, exc)
    cells = [harness.GridCell(d, args.algo, k, args.tp, args.sr) for d in names if d in matrices for k in ranks]
    records = harness.run_grid(cells, workers=args.workers, matrices=matrices)
    rows = harness.dbp_table_records(records)
    out = args.output_dir
    out.mkdir(parents=True, exist_ok=True)
    harness.write_csv(out / "grid.csv", rows, extra=("reference_topfiberm", "cited_asso", "cited_grecond_plus", "cited_naivecol"))
    _emit({"cells": records, "skipped": [d for d in names if d not in matrices], "config": _effective_config(args)}, out / "grid.json")
    return EXIT_OK


def cmd_rdf(args):
    if args.sr is None:
        args.sr = args.rank
    cfg = TfmConfig(k=args.rank, t_p=args.tp, sr=args.sr)
    if not args.input.exists():
        raise FileNotFoundError(f"input file not found: {args.input}")
    errors = []
    slices = rdf.build_slices(rdf.parse_ntriples(args.input, strict=args.strict, errors=errors), args.min_count)
    out = args.output_dir
    rdf.write_slices(slices, out / "slices")
    report = rdf.run_slices(slices, cfg, workers=args.workers)
    record = report.as_dict()
    record["aggregate"]["malformed_lines"] = [e.lineno for e in errors]
    record["config"] = _effective_config(args)
    if args.report_format == "csv":
        cols = ("predicate", "rows", "cols", "nnz", "coverage", "fp", "fn", "rank_used", "wall_time_ms", "error")
        with open(out / "report.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=cols, extrasaction="ignore", lineterminator="\n")
            w.writeheader()
            w.writerows(report.slices)
        (out / "report.json").write_text(json.dumps(record, sort_keys=True, indent=2) + "\n", encoding="utf-8")
        sys.stdout.write(str(out / "report.csv") + "\n")
    else:
        _emit(record, out / "report.json")
    return EXIT_OK


def cmd_fetch(args):
    entries = harness.read_manifest(args.manifest)
    if args.names:
        entries = [e for e in entries if e.name in args.names]
    fetched = []
    for e in entries:
        fetched.append(str(harness.fetch_fixture(e, args.fixtures)))
    _emit({"fetched": fetched})
    return EXIT_OK


COMMANDS = {
    "factorize": cmd_factorize,
    "afp": cmd_afp,
    "validate": cmd_validate,
    "grid": cmd_grid,
    "rdf": cmd_rdf,
    "fetch": cmd_fetch,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, UsageError) as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    except (FileNotFoundError, MatrixParseError, rdf.NTriplesError, UnicodeDecodeError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    except (EmptyMatrixError, DimensionError, harness.UndefinedCoverageError) as exc:
        log.error("%s", exc)
        return EXIT_PRECONDITION
    except Exception:
        log.exception("internal error")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
