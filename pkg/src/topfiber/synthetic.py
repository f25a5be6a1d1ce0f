"""Generated fixtures: planted block matrices and synthetic RDF graphs."""

from __future__ import annotations

import numpy as np

from .boolmat import BoolMatrix
from .rdf import Term, Triple


def block_diagonal(sizes, pad_rows=0, pad_cols=0):
    """Disjoint all-ones blocks along the diagonal.

    ``sizes`` is a list of ``(rows, cols)`` (or ints for square blocks).
    """
    sizes = [(s, s) if isinstance(s, (int, np.integer)) else tuple(s) for s in sizes]
    n = sum(r for r, _ in sizes) + pad_rows
    m = sum(c for _, c in sizes) + pad_cols
    dense = np.zeros((n, m), dtype=bool)
    r0 = c0 = 0
    for r, c in sizes:
        dense[r0:r0 + r, c0:c0 + c] = True
        r0 += r
        c0 += c
    return BoolMatrix.from_dense(dense)


def shuffled(m, rng):
    """Same matrix with rows and columns randomly permuted."""
    pr = rng.permutation(m.n_rows)
    pc = rng.permutation(m.n_cols)
    r, c = m.pairs()
    return BoolMatrix.from_pairs(m.n_rows, m.n_cols, pr[r], pc[c])


def random_matrix(rng, max_rows=8, max_cols=8, density=None, nonempty=True):
    """Random 0/1 matrix with shape in ``[1, max]``; retries until it has a 1."""
    while True:
        n = int(rng.integers(1, max_rows + 1))
        m = int(rng.integers(1, max_cols + 1))
        p = rng.random() if density is None else density
        dense = rng.random((n, m)) < p
        if dense.any() or not nonempty:
            return BoolMatrix.from_dense(dense)


def planted_matrix(rng, n, m, n_blocks, block_rows, block_cols, noise=0.0):
    """Overlapping random rectangles plus symmetric bit-flip noise."""
    dense = np.zeros((n, m), dtype=bool)
    for _ in range(n_blocks):
        rows = rng.choice(n, size=min(n, block_rows), replace=False)
        cols = rng.choice(m, size=min(m, block_cols), replace=False)
        dense[np.ix_(rows, cols)] = True
    if noise:
        dense ^= rng.random((n, m)) < noise
    return BoolMatrix.from_dense(dense)


_RDF = "http://example.org/"


def synthetic_graph(seed=0, total=100_000, big_predicates=7, small_counts=(5, 200, 999),
                    n_subjects=2000, n_objects=500, literal_every=3):
    """Distinct triples over ``big_predicates + len(small_counts)`` predicates.

    Small predicates carry exactly the given triple counts; the big ones
    share the rest, drawn mostly from planted subject x object blocks.
    Returns ``(triples, expected)`` where ``expected`` maps each predicate
    term to its set of ``(subject, object)`` term pairs.
    """
    rng = np.random.default_rng(seed)
    remaining = total - sum(small_counts)
    big_counts = [remaining // big_predicates] * big_predicates
    big_counts[0] += remaining - sum(big_counts)
    counts = big_counts + list(small_counts)
    triples = []
    expected = {}
    for idx, count in enumerate(counts):
        pred = Term("iri", f"{_RDF}p{idx}")
        weights = np.full(n_subjects * n_objects, 1.0)
        for _ in range(12):
            rows = rng.choice(n_subjects, size=min(n_subjects, int(rng.integers(20, 200))), replace=False)
            cols = rng.choice(n_objects, size=min(n_objects, int(rng.integers(5, 40))), replace=False)
            weights[(rows[:, None] * n_objects + cols[None, :]).ravel()] = 40.0
        cells = rng.choice(weights.size, size=count, replace=False, p=weights / weights.sum())
        pairs = set()
        for cell in cells.tolist():
            s_i, o_i = divmod(cell, n_objects)
            subj = Term("bnode", f"b{s_i}") if s_i % 17 == 0 else Term("iri", f"{_RDF}s{s_i}")
            if literal_every and idx % literal_every == 2:
                obj = Term("literal", f"value {o_i}", lang="en")
            else:
                obj = Term("iri", f"{_RDF}o{o_i}")
            triples.append(Triple(subj, pred, obj))
            pairs.add((subj, obj))
        expected[pred] = pairs
    order = rng.permutation(len(triples))
    return [triples[j] for j in order], expected


def to_ntriples(triples):
    return "".join(f"{s.n3()} {p.n3()} {o.n3()} .\n" for s, p, o in triples)
