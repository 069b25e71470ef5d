"""Stratified cross-validation driver, F1 metrics, and the correlation
between feature density and measured F1.

Per fold, the vocabulary and tf-idf weights are fitted on training documents
only, oversampling sees only training rows, and the held-out fold is scored
with the positive-class F1. A leakage probe can record exactly which
documents fed the vocabulary and the oversampler in every fold.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import time
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .balance import SmoteConfig, smote_oversample
from .corpus import Corpus
from .density import DensityRecord
from .learners import ClassifierSpec, fit, predict
from .pipelines import PipelineSpec, apply_pipeline, pipeline_name
from .vectorizer import fit_vocabulary, transform_tfidf

RESULTS_CSV_HEADER = ("pipeline", "classifier", "fold", "precision", "recall", "f1", "runtime_s")


def derive_seed(global_seed: int, *parts: object) -> int:
    """Stable per-task seed from the global seed and task coordinates.

    Uses a keyed blake2 digest rather than ``hash()`` so results do not
    depend on interpreter hash randomization.
    """
    key = ":".join([str(global_seed), *map(str, parts)]).encode("utf-8")
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "big")


@dataclass(frozen=True)
class FoldPlan:
    k: int
    heldout: tuple[tuple[int, ...], ...]
    seed: int

    def training(self, fold: int) -> tuple[int, ...]:
        held = set(self.heldout[fold])
        n = sum(len(f) for f in self.heldout)
        return tuple(i for i in range(n) if i not in held)


def stratified_folds(labels: Sequence[int], k: int = 10, seed: int = 0) -> FoldPlan:
    """Shuffle each class and deal its members round-robin over k folds.

    Per-fold counts of each class differ by at most one. Raises when a class
    has fewer than k members, since every fold then cannot hold the class.
    """
    if k < 2:
        raise ValueError(f"need k >= 2 folds, got {k}")
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    for cls in (0, 1):
        members = np.flatnonzero(labels == cls)
        if len(members) < k:
            raise ValueError(
                f"class {cls} has only {len(members)} documents but {k} folds were "
                f"requested; lower --folds or add data"
            )
        members = members[rng.permutation(len(members))]
        for pos, idx in enumerate(members):
            folds[pos % k].append(int(idx))
    return FoldPlan(k=k, heldout=tuple(tuple(sorted(f)) for f in folds), seed=seed)


def f1_score(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    """(precision, recall, f1) with the 0/0 -> 0 convention."""
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


@dataclass(frozen=True)
class FoldMetrics:
    f1: float
    precision: float
    recall: float
    runtime_s: float
    counts: tuple[int, int, int] | None = None  # (tp, fp, fn); absent on CSV read-back


@dataclass(frozen=True)
class ExperimentResult:
    pipeline: str
    classifier: str
    folds: tuple[FoldMetrics, ...]
    mean_f1: float
    runtime_s: float
    seed: int
    config_fingerprint: str


class LeakageProbe:
    """Records which documents fed the vocabulary fit and the oversampler in
    each (pipeline, fold), so tests can prove the held-out fold stayed out."""

    def __init__(self) -> None:
        self.records: dict[tuple[str, int], dict[str, list[int]]] = {}

    def record(
        self,
        pipeline: str,
        fold: int,
        vocab_docs: Sequence[int],
        smote_docs: Sequence[int],
        heldout_docs: Sequence[int],
    ) -> None:
        entry = {
            "vocab_docs": sorted(int(i) for i in vocab_docs),
            "smote_docs": sorted(int(i) for i in smote_docs),
            "heldout_docs": sorted(int(i) for i in heldout_docs),
        }
        key = (pipeline, fold)
        if key in self.records and self.records[key] != entry:
            raise AssertionError(f"leakage probe saw conflicting records for {key}")
        self.records[key] = entry

    def to_json(self) -> str:
        payload = {f"{p}:{f}": entry for (p, f), entry in sorted(self.records.items())}
        return json.dumps(payload, indent=1, sort_keys=True)


def cross_validate(
    corpus: Corpus,
    spec: PipelineSpec,
    clf: ClassifierSpec,
    plan: FoldPlan,
    smote: SmoteConfig | None,
    probe: LeakageProbe | None = None,
) -> ExperimentResult:
    """Run one (pipeline, classifier) experiment over the fold plan.

    F1 is computed on the positive class and averaged over folds; runtime is
    the summed wall time of the folds. Seeds for the oversampler and the
    classifier derive from (plan seed, pipeline, classifier, fold).
    """
    name = pipeline_name(spec)
    docs = corpus.usable_docs
    streams = [tuple(u.surface for u in apply_pipeline(spec, d)) for d in docs]
    labels = np.array([d.label for d in docs], dtype=np.int64)

    fold_metrics = []
    for fold in range(plan.k):
        t0 = time.perf_counter()
        test_idx = list(plan.heldout[fold])
        train_idx = list(plan.training(fold))
        y_train = labels[train_idx]
        y_test = labels[test_idx]
        if len(np.unique(y_train)) < 2:
            raise ValueError(
                f"{name}/{clf.kind} fold {fold}: training partition lost a class "
                f"(counts: {np.bincount(y_train, minlength=2).tolist()})"
            )

        train_streams = [streams[i] for i in train_idx]
        vocab = fit_vocabulary(train_streams)
        X_train = transform_tfidf(vocab, train_streams)
        X_test = transform_tfidf(vocab, (streams[i] for i in test_idx))

        smote_docs: Sequence[int] = ()
        task_seed = derive_seed(plan.seed, name, clf.kind, fold)
        if smote is not None:
            X_train, y_train = smote_oversample(
                X_train,
                y_train,
                SmoteConfig(k=smote.k, target_ratio=smote.target_ratio, seed=task_seed),
            )
            smote_docs = train_idx

        model = fit(
            ClassifierSpec(kind=clf.kind, params=clf.params, seed=task_seed), X_train, y_train
        )
        pred, _scores = predict(model, X_test)
        tp = int(np.sum((pred == 1) & (y_test == 1)))
        fp = int(np.sum((pred == 1) & (y_test == 0)))
        fn = int(np.sum((pred == 0) & (y_test == 1)))
        precision, recall, f1 = f1_score(tp, fp, fn)
        fold_metrics.append(
            FoldMetrics(f1=f1, precision=precision, recall=recall,
                        runtime_s=time.perf_counter() - t0, counts=(tp, fp, fn))
        )
        if probe is not None:
            probe.record(name, fold, vocab_docs=train_idx, smote_docs=smote_docs,
                         heldout_docs=test_idx)

    fingerprint = config_fingerprint(
        {
            "pipeline": name,
            "classifier": clf.kind,
            "params": clf.params,
            "folds": plan.k,
            "seed": plan.seed,
            "smote": None if smote is None else
                     {"k": smote.k, "target_ratio": smote.target_ratio},
        }
    )
    return ExperimentResult(
        pipeline=name,
        classifier=clf.kind,
        folds=tuple(fold_metrics),
        mean_f1=float(np.mean([m.f1 for m in fold_metrics])),
        runtime_s=float(sum(m.runtime_s for m in fold_metrics)),
        seed=plan.seed,
        config_fingerprint=fingerprint,
    )


def config_fingerprint(config: Mapping) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.blake2b(blob.encode("utf-8"), digest_size=8).hexdigest()


def pooled_f1(result: ExperimentResult) -> float:
    """F1 from confusion counts pooled over the folds (the micro variant of
    the default macro-over-folds report)."""
    if any(m.counts is None for m in result.folds):
        raise ValueError("pooled F1 needs per-fold confusion counts (in-memory results only)")
    tp = sum(m.counts[0] for m in result.folds)
    fp = sum(m.counts[1] for m in result.folds)
    fn = sum(m.counts[2] for m in result.folds)
    return f1_score(tp, fp, fn)[2]


def _sweep_task(task):
    corpus, spec, clf, plan, smote, want_probe = task
    probe = LeakageProbe() if want_probe else None
    result = cross_validate(corpus, spec, clf, plan, smote, probe)
    return result, (probe.records if probe is not None else None)


def run_sweep(
    corpus: Corpus,
    pipeline_specs: Sequence[PipelineSpec],
    classifier_specs: Sequence[ClassifierSpec],
    plan: FoldPlan,
    smote: SmoteConfig | None,
    jobs: int | None = None,
    probe: LeakageProbe | None = None,
) -> list[ExperimentResult]:
    """Run the (pipeline x classifier) grid, optionally across processes.

    Task seeds derive from (plan seed, pipeline, classifier, fold), so the
    results are identical whatever the worker count, and aggregation follows
    the task order rather than completion order.
    """
    tasks = [
        (corpus, spec, clf, plan, smote, probe is not None)
        for spec in pipeline_specs
        for clf in classifier_specs
    ]
    if jobs is None:
        jobs = os.cpu_count() or 1
    if jobs <= 1 or len(tasks) <= 1:
        outputs = [_sweep_task(t) for t in tasks]
    else:
        from concurrent.futures import ProcessPoolExecutor

        chunk = max(1, len(tasks) // (jobs * 4))
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outputs = list(pool.map(_sweep_task, tasks, chunksize=chunk))

    results = []
    for result, records in outputs:
        results.append(result)
        if probe is not None and records:
            for (pname, fold), entry in records.items():
                probe.record(pname, fold, entry["vocab_docs"], entry["smote_docs"],
                             entry["heldout_docs"])
    return results


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Sample Pearson correlation, clamped into [-1, 1].

    Raises on fewer than two points or when either side has zero variance.
    """
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape:
        raise ValueError(f"length mismatch: {xs.shape} vs {ys.shape}")
    if xs.size < 2:
        raise ValueError("need at least two points")
    dx = xs - xs.mean()
    dy = ys - ys.mean()
    sx2 = float(dx @ dx)
    sy2 = float(dy @ dy)
    if sx2 == 0.0 or sy2 == 0.0:
        raise ValueError("undefined correlation: an input has zero variance")
    # single square root of the product keeps exact-linear inputs at +-1
    rho = float(dx @ dy) / math.sqrt(sx2 * sy2)
    return max(-1.0, min(1.0, rho))


@dataclass(frozen=True)
class CorrelationRow:
    classifier: str
    best_f1: float
    best_pipeline: str
    best_fd: float
    rho: float | None
    n_pipelines: int


def exclude_poss_family(name: str) -> bool:
    """Default exclusion for correlation: the bare-POS-tag variants."""
    return name.startswith("POSS")


def correlate_results(
    results: Iterable[ExperimentResult],
    densities: Iterable[DensityRecord],
    exclude: Callable[[str], bool] | None = exclude_poss_family,
) -> tuple[list[CorrelationRow], list[str]]:
    """Join results to density records by pipeline name and report, per
    classifier, the best mean F1, its pipeline, and rho(FD, F1).

    Ties for best F1 break toward the lower-FD pipeline. Returns the rows
    (sorted by descending best F1) and a list of warnings for pipelines
    without a density record.
    """
    fd_by_name = {r.name: r.fd for r in densities}
    warnings: list[str] = []
    by_clf: dict[str, list[tuple[float, float, str]]] = {}
    for res in results:
        fd = fd_by_name.get(res.pipeline)
        if fd is None:
            msg = f"no density record for pipeline {res.pipeline}; row skipped"
            if msg not in warnings:
                warnings.append(msg)
            continue
        if exclude is not None and exclude(res.pipeline):
            continue
        by_clf.setdefault(res.classifier, []).append((fd, res.mean_f1, res.pipeline))

    rows = []
    for clf, points in by_clf.items():
        best_fd, best_f1, best_name = max(points, key=lambda p: (p[1], -p[0]))
        rho: float | None
        try:
            rho = pearson([p[0] for p in points], [p[1] for p in points])
        except ValueError:
            rho = None
        rows.append(
            CorrelationRow(
                classifier=clf,
                best_f1=best_f1,
                best_pipeline=best_name,
                best_fd=best_fd,
                rho=rho,
                n_pipelines=len(points),
            )
        )
    rows.sort(key=lambda r: (-r.best_f1, r.classifier))
    return rows, warnings


# ---------------------------------------------------------------------------
# Report files
# ---------------------------------------------------------------------------

def format_results_csv(results: Sequence[ExperimentResult]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RESULTS_CSV_HEADER)
    for res in results:
        for fold, m in enumerate(res.folds):
            writer.writerow(
                [res.pipeline, res.classifier, fold,
                 f"{m.precision:.6f}", f"{m.recall:.6f}", f"{m.f1:.6f}", f"{m.runtime_s:.6f}"]
            )
    return buf.getvalue()


def write_results_csv(results: Sequence[ExperimentResult], path: str | os.PathLike[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_results_csv(results))


def read_results_csv(path: str | os.PathLike[str]) -> list[ExperimentResult]:
    """Rebuild per-experiment results from the per-fold CSV rows."""
    grouped: dict[tuple[str, str], list[tuple[int, FoldMetrics]]] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            key = (row["pipeline"], row["classifier"])
            grouped.setdefault(key, []).append(
                (
                    int(row["fold"]),
                    FoldMetrics(
                        f1=float(row["f1"]),
                        precision=float(row["precision"]),
                        recall=float(row["recall"]),
                        runtime_s=float(row["runtime_s"]),
                    ),
                )
            )
    results = []
    for (pipeline, classifier), folds in grouped.items():
        folds.sort(key=lambda pair: pair[0])
        metrics = tuple(m for _, m in folds)
        results.append(
            ExperimentResult(
                pipeline=pipeline,
                classifier=classifier,
                folds=metrics,
                mean_f1=float(np.mean([m.f1 for m in metrics])),
                runtime_s=float(sum(m.runtime_s for m in metrics)),
                seed=0,
                config_fingerprint="",
            )
        )
    return results


def format_correlation_csv(rows: Sequence[CorrelationRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["classifier", "best_f1", "best_pipeline", "rho", "n_pipelines"])
    for r in rows:
        writer.writerow(
            [r.classifier, f"{r.best_f1:.6f}", r.best_pipeline,
             "" if r.rho is None else f"{r.rho:.4f}", r.n_pipelines]
        )
    return buf.getvalue()


def format_f1_matrix_csv(results: Sequence[ExperimentResult]) -> str:
    """Mean-F1 matrix, one row per pipeline and one column per classifier."""
    classifiers = sorted({r.classifier for r in results})
    cells: dict[tuple[str, str], float] = {}
    pipelines: list[str] = []
    for r in results:
        if r.pipeline not in pipelines:
            pipelines.append(r.pipeline)
        cells[(r.pipeline, r.classifier)] = r.mean_f1
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["pipeline", *classifiers])
    for p in pipelines:
        writer.writerow(
            [p, *(
                "" if (p, c) not in cells else f"{cells[(p, c)]:.6f}"
                for c in classifiers
            )]
        )
    return buf.getvalue()
