"""Minority-class oversampling with synthetic interpolated rows (SMOTE).

Each synthetic row sits on the segment between a uniformly drawn minority
row and one of its k nearest minority neighbors by Euclidean distance.
Applied inside each training fold only; never touch held-out rows with it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .vectorizer import canonicalize


@dataclass(frozen=True)
class SmoteConfig:
    k: int = 5
    target_ratio: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError(f"neighbor count must be >= 1, got {self.k}")
        if not 0.0 < self.target_ratio <= 1.0:
            raise ValueError(f"target_ratio must be in (0, 1], got {self.target_ratio}")


def smote_oversample(
    rows: sparse.csr_matrix, labels: np.ndarray, cfg: SmoteConfig
) -> tuple[sparse.csr_matrix, np.ndarray]:
    """Append synthetic minority rows until the minority class reaches
    ``round(target_ratio * majority_count)``.

    Original rows are returned unchanged, in order, ahead of the synthetics.
    Deterministic given ``cfg.seed``: per synthetic row the generator draws a
    base row, a neighbor choice, then an interpolation factor in [0, 1).
    With a single minority row the method degrades to duplication.
    """
    labels = np.asarray(labels)
    classes, counts = np.unique(labels, return_counts=True)
    if len(classes) != 2:
        raise ValueError(f"need exactly two classes, got {len(classes)}")
    minority = classes[int(np.argmin(counts))]
    n_minority = int(counts.min())
    n_majority = int(counts.max())
    target = int(round(cfg.target_ratio * n_majority))
    n_new = max(0, target - n_minority)
    if n_new == 0:
        return rows, labels

    rng = np.random.default_rng(cfg.seed)
    min_idx = np.flatnonzero(labels == minority)
    minority_rows = rows[min_idx]
    neighbors = _nearest_neighbors(minority_rows, min(cfg.k, n_minority - 1))

    synth = []
    for _ in range(n_new):
        base = int(rng.integers(0, n_minority))
        if neighbors is None:
            synth.append(minority_rows[base])  # single minority row: duplicate
            continue
        nn = int(neighbors[base][int(rng.integers(0, neighbors.shape[1]))])
        lam = rng.random()
        a = minority_rows[base]
        b = minority_rows[nn]
        synth.append(a + lam * (b - a))

    out_rows = canonicalize(sparse.vstack([rows] + synth, format="csr"))
    out_labels = np.concatenate([labels, np.full(n_new, minority, dtype=labels.dtype)])
    return out_rows, out_labels


def _nearest_neighbors(rows: sparse.csr_matrix, k: int) -> np.ndarray | None:
    """Exact brute-force Euclidean k-NN among rows, excluding self.

    Returns an (n, k) index array, or None when there is no neighbor to use
    (single-row input). Ties break by row index for determinism.
    """
    if k < 1:
        return None
    n = rows.shape[0]
    sq = np.asarray(rows.multiply(rows).sum(axis=1)).ravel()
    gram = (rows @ rows.T).toarray()
    d2 = sq[:, None] + sq[None, :] - 2.0 * gram
    np.fill_diagonal(d2, np.inf)
    order = np.lexsort((np.broadcast_to(np.arange(n), (n, n)), d2), axis=1)
    return order[:, :k]
