"""Compare the compiled and pure-Python kernel backends.

    python3 benchmarks/bench_kernels.py [--rows 8000 --cols 120 --density 0.2 --repeat 5]

Prints one line per (operation, backend) with the best time of ``--repeat``
runs, plus the speedup of the compiled backend.
"""

import argparse
import time

import numpy as np

from topfiber import kernels
from topfiber.boolmat import FactorPair, pack_rows, residual
from topfiber.synthetic import planted_matrix
from topfiber.topfiberm import TfmConfig, factorize


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def workloads(args):
    rng = np.random.default_rng(args.seed)
    blocks = max(1, int(args.density * 30))
    i = planted_matrix(rng, args.rows, args.cols, blocks, args.rows // 5, max(2, args.cols // 6), noise=0.01)
    rmask = (rng.random(args.rows) < 0.3).astype(np.uint8)
    cmask = (rng.random(args.cols) < 0.3).astype(np.uint8)
    a = rng.random((args.rows, 20)) < 0.1
    b = rng.random((20, args.cols)) < 0.2
    f = FactorPair.from_dense(a, b)
    bits_a, bits_bt = pack_rows(f.a), pack_rows(f.b.T)
    raw = (i.indptr, i.indices, i.rows, i.live)

    def cleared():
        live = i.live.copy()
        kernels.clear_covered(i.indptr, i.indices, i.rows, live, bits_a, bits_bt)

    return i, {
        "row_counts": lambda: kernels.row_counts(*raw, cmask),
        "col_counts": lambda: kernels.col_counts(*raw, rmask, i.n_cols),
        "rect_count": lambda: kernels.rect_count(*raw, rmask, cmask),
        "clear_covered": cleared,
        "residual": lambda: residual(i, f),
        "factorize k=10 sr=20": lambda: factorize(i, TfmConfig(k=10, t_p=0.5, sr=20)),
    }


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--rows", type=int, default=8000)
    p.add_argument("--cols", type=int, default=120)
    p.add_argument("--density", type=float, default=0.2)
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    i, ops = workloads(args)
    print(f"matrix {i.n_rows}x{i.n_cols}, {i.nnz()} ones; backends: {', '.join(sorted(kernels.BACKENDS))}")
    before = kernels.active_backend()
    results = {}
    try:
        for name in sorted(kernels.BACKENDS):
            kernels.use_backend(name)
            for op, fn in ops.items():
                results[op, name] = best_of(fn, args.repeat)
    finally:
        kernels.use_backend(before)
    for op in ops:
        line = "  ".join(f"{name} {results[op, name] * 1e3:9.3f} ms" for name in sorted(kernels.BACKENDS))
        if {"compiled", "python"} <= kernels.BACKENDS.keys():
            line += f"  speedup {results[op, 'python'] / results[op, 'compiled']:6.1f}x"
        print(f"{op:22s} {line}")


if __name__ == "__main__":
    main()
