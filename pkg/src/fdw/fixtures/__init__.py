"""Machine-readable transcriptions of the reference result tables.

Four CSVs ship with the package: per-variant density counts (``table2``),
per-classifier best scores with FD correlations (``table3``), training
runtime and power usage (``table4``), and the full variant-by-classifier F1
matrix (``table5``). The source tables contain OCR noise: garbled and
duplicated row labels were resolved to canonical pipeline names using count
structure and column maxima, and every non-identity mapping is documented in
``label_map.csv`` with its evidence. A checksum manifest guards the files
against silent edits.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass
from importlib import resources

FIXTURES_VERSION = "1"

_FILES = ("table2.csv", "table3.csv", "table4.csv", "table5.csv", "label_map.csv")

TABLE5_CLASSIFIERS = (
    "lbfgs_lr",
    "newton_lr",
    "linear_svm",
    "sgd_svm",
    "knn",
    "naive_bayes",
    "random_forest",
    "adaboost",
    "xgboost",
    "mlp",
    "cnn1",
    "cnn2",
)


class FixtureError(ValueError):
    """Fixture data failed validation (checksum, row count, or range)."""


@dataclass(frozen=True)
class Table2Row:
    row: int
    source_label: str
    pipeline: str
    unique: int
    total: int
    fd: float


@dataclass(frozen=True)
class Table3Row:
    classifier: str
    best_f1: float
    best_pipeline: str
    rho: float


@dataclass(frozen=True)
class Table4Row:
    classifier: str
    runtime_s: float
    power_watts: float
    power_wh: float
    best_f1: float


@dataclass(frozen=True)
class PaperTables:
    table2: tuple[Table2Row, ...]
    table3: tuple[Table3Row, ...]
    table4: tuple[Table4Row, ...]
    table5: dict[str, dict[str, float]]  # pipeline -> classifier -> f1

    def fd_by_pipeline(self) -> dict[str, float]:
        return {r.pipeline: r.fd for r in self.table2}


def _read_text(name: str) -> str:
    return resources.files("fdw.fixtures").joinpath(name).read_text("utf-8")


def verify_checksums() -> None:
    """Check every fixture CSV against the bundled sha256 manifest."""
    manifest = {}
    for line in _read_text("sha256sums.txt").splitlines():
        line = line.strip()
        if line:
            digest, name = line.split()
            manifest[name] = digest
    for name in _FILES:
        actual = hashlib.sha256(_read_text(name).encode("utf-8")).hexdigest()
        expected = manifest.get(name)
        if expected is None:
            raise FixtureError(f"fixture {name} missing from checksum manifest")
        if actual != expected:
            raise FixtureError(
                f"fixture {name} does not match its recorded checksum; "
                f"expected {expected}, got {actual}"
            )


def load_tables(verify: bool = True) -> PaperTables:
    """Parse and validate all fixture tables."""
    if verify:
        verify_checksums()

    t2 = []
    for row in csv.DictReader(_read_text("table2.csv").splitlines()):
        t2.append(
            Table2Row(
                row=int(row["row"]),
                source_label=row["source_label"],
                pipeline=row["pipeline"],
                unique=int(row["unique"]),
                total=int(row["total"]),
                fd=float(row["fd"]),
            )
        )
    if len(t2) != 68:
        raise FixtureError(f"table2 must have 68 rows, found {len(t2)}")
    names2 = [r.pipeline for r in t2]
    if len(set(names2)) != 68:
        raise FixtureError("table2 pipeline names are not distinct")
    for r in t2:
        if not (0 < r.unique <= r.total and 0.0 <= r.fd <= 1.0):
            raise FixtureError(f"table2 row {r.row} out of range: {r}")

    t3 = []
    for row in csv.DictReader(_read_text("table3.csv").splitlines()):
        t3.append(
            Table3Row(
                classifier=row["classifier"],
                best_f1=float(row["best_f1"]),
                best_pipeline=row["best_pipeline"],
                rho=float(row["rho"]),
            )
        )
    if len(t3) != 12:
        raise FixtureError(f"table3 must have 12 rows, found {len(t3)}")

    t4 = []
    for row in csv.DictReader(_read_text("table4.csv").splitlines()):
        t4.append(
            Table4Row(
                classifier=row["classifier"],
                runtime_s=float(row["runtime_s"]),
                power_watts=float(row["power_watts"]),
                power_wh=float(row["power_wh"]),
                best_f1=float(row["best_f1"]),
            )
        )
    if len(t4) != 12:
        raise FixtureError(f"table4 must have 12 rows, found {len(t4)}")

    t5: dict[str, dict[str, float]] = {}
    for row in csv.DictReader(_read_text("table5.csv").splitlines()):
        name = row["pipeline"]
        t5[name] = {clf: float(row[clf]) for clf in TABLE5_CLASSIFIERS}
    if len(t5) != 68:
        raise FixtureError(f"table5 must have 68 rows, found {len(t5)}")
    unmatched = set(t5) - set(names2)
    if unmatched:
        raise FixtureError(f"table5 pipelines missing from table2: {sorted(unmatched)}")
    for name, cells in t5.items():
        for clf, f1 in cells.items():
            if not 0.0 <= f1 <= 1.0:
                raise FixtureError(f"table5 cell ({name}, {clf}) out of range: {f1}")

    return PaperTables(table2=tuple(t2), table3=tuple(t3), table4=tuple(t4), table5=t5)


def load_label_map() -> list[dict[str, str]]:
    """The audited mapping of garbled source labels to canonical names."""
    return list(csv.DictReader(_read_text("label_map.csv").splitlines()))
