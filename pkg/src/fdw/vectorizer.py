"""Bag-of-features vocabulary and tf-idf weighting over unit streams.

The weighting is the smoothed standard: ``tf * (ln((1 + N) / (1 + df)) + 1)``
followed by L2 row normalization. Matrices are SciPy CSR in canonical form
(sorted column indices, no explicit zeros); rows that lose every unit to
filtering stay all-zero rather than erroring.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import IO, Iterable, Sequence

import numpy as np
from scipy import sparse


@dataclass(frozen=True)
class Vocabulary:
    """Surface-to-column map with per-surface document frequencies.

    Columns are assigned in first-appearance order over the fitting stream,
    so identical corpora always produce identical matrices.
    """

    index: dict[str, int]
    df: np.ndarray
    n_docs: int

    def __len__(self) -> int:
        return len(self.index)

    def idf(self) -> np.ndarray:
        return np.log((1.0 + self.n_docs) / (1.0 + self.df)) + 1.0


def fit_vocabulary(
    unit_streams: Iterable[Sequence[str]],
    min_df: int = 1,
    max_features: int | None = None,
) -> Vocabulary:
    """Build a vocabulary over per-document surface streams.

    ``min_df`` drops surfaces seen in fewer documents; ``max_features`` keeps
    the most frequent surfaces by total count (ties by first appearance).
    Neither cutoff is applied by default.
    """
    index: dict[str, int] = {}
    df_counts: list[int] = []
    totals: list[int] = []
    n_docs = 0
    for stream in unit_streams:
        n_docs += 1
        seen_here = set()
        for surface in stream:
            col = index.get(surface)
            if col is None:
                col = len(index)
                index[surface] = col
                df_counts.append(0)
                totals.append(0)
            totals[col] += 1
            seen_here.add(col)
        for col in seen_here:
            df_counts[col] += 1
    if n_docs == 0:
        raise ValueError("cannot fit a vocabulary on zero documents")

    keep = np.ones(len(index), dtype=bool)
    if min_df > 1:
        keep &= np.asarray(df_counts) >= min_df
    if max_features is not None and keep.sum() > max_features:
        order = sorted(
            (c for c in range(len(index)) if keep[c]),
            key=lambda c: (-totals[c], c),
        )
        keep = np.zeros(len(index), dtype=bool)
        keep[order[:max_features]] = True

    if keep.all():
        df = np.asarray(df_counts, dtype=np.int64)
        return Vocabulary(index=index, df=df, n_docs=n_docs)
    new_index = {}
    new_df = []
    for surface, col in index.items():  # dict preserves first-appearance order
        if keep[col]:
            new_index[surface] = len(new_index)
            new_df.append(df_counts[col])
    return Vocabulary(index=new_index, df=np.asarray(new_df, dtype=np.int64), n_docs=n_docs)


def transform_tfidf(
    vocab: Vocabulary, unit_streams: Iterable[Sequence[str]]
) -> sparse.csr_matrix:
    """tf-idf weight the streams against a fitted vocabulary.

    Surfaces absent from the vocabulary are ignored; idf always comes from
    the fitting corpus, never from the transformed one.
    """
    idf = vocab.idf()
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    for stream in unit_streams:
        counts: dict[int, int] = {}
        for surface in stream:
            col = vocab.index.get(surface)
            if col is not None:
                counts[col] = counts.get(col, 0) + 1
        cols = sorted(counts)
        row = np.array([counts[c] * idf[c] for c in cols], dtype=np.float64)
        norm = math.sqrt(float(np.dot(row, row)))
        if norm > 0:
            row /= norm
        indices.extend(cols)
        data.extend(row.tolist())
        indptr.append(len(indices))
    mat = sparse.csr_matrix(
        (np.asarray(data), np.asarray(indices, dtype=np.int32), np.asarray(indptr, dtype=np.int32)),
        shape=(len(indptr) - 1, len(vocab)),
    )
    mat.sort_indices()
    return mat


def canonicalize(mat: sparse.spmatrix) -> sparse.csr_matrix:
    """CSR with sorted indices, merged duplicates and no explicit zeros."""
    out = sparse.csr_matrix(mat)
    out.sum_duplicates()
    out.eliminate_zeros()
    out.sort_indices()
    return out


def dump_matrix(mat: sparse.csr_matrix, dest: str | os.PathLike[str] | IO[str]) -> None:
    """Write the optional dump format: ``row_index col:weight ...`` per row,
    weights to 6 significant digits."""
    own = isinstance(dest, (str, os.PathLike))
    fh = open(dest, "w", encoding="utf-8") if own else dest
    try:
        mat = canonicalize(mat)
        for i in range(mat.shape[0]):
            lo, hi = mat.indptr[i], mat.indptr[i + 1]
            cells = " ".join(
                f"{col}:{val:.6g}" for col, val in zip(mat.indices[lo:hi], mat.data[lo:hi])
            )
            fh.write(f"{i} {cells}".rstrip() + "\n")
    finally:
        if own:
            fh.close()
