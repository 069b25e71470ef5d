"""Feature Density: unique feature units over total feature units.

Density is the cheap pre-training statistic this toolkit is built around.
A density report mirrors the shape of a per-variant density table; band
filtering splits variants into a keep set inside an FD range and a skip set
outside it.
"""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass
from typing import Iterable, Sequence

from .corpus import Corpus
from .pipelines import PipelineSpec, apply_pipeline, parse_pipeline_name, pipeline_name

CSV_HEADER = ("pipeline", "unique", "total", "fd")


@dataclass(frozen=True)
class DensityRecord:
    pipeline: PipelineSpec
    unique_count: int
    total_count: int
    fd: float

    @property
    def name(self) -> str:
        return pipeline_name(self.pipeline)


def compute_density(spec: PipelineSpec, corpus: Corpus) -> DensityRecord:
    """Count unique and total feature units over the whole corpus.

    Uniqueness is exact byte equality of surfaces. An empty unit stream has
    density 0 rather than being an error, so degenerate variants still show
    up in reports.
    """
    seen: set[str] = set()
    total = 0
    for doc in corpus.docs:
        units = apply_pipeline(spec, doc)
        total += len(units)
        seen.update(u.surface for u in units)
    fd = len(seen) / total if total else 0.0
    return DensityRecord(pipeline=spec, unique_count=len(seen), total_count=total, fd=fd)


def density_report(corpus: Corpus, specs: Iterable[PipelineSpec]) -> list[DensityRecord]:
    """One record per variant, sorted by ascending FD (ties by name)."""
    records = [compute_density(spec, corpus) for spec in specs]
    records.sort(key=lambda r: (r.fd, r.name))
    return records


def band_filter(
    records: Sequence[DensityRecord], lo: float, hi: float
) -> tuple[list[DensityRecord], list[DensityRecord]]:
    """Partition records into (keep, skip) by inclusive FD band membership.

    Input order is preserved on both sides; every record lands in exactly
    one of the two lists.
    """
    if lo > hi:
        raise ValueError(f"band lower bound {lo} exceeds upper bound {hi}")
    keep = [r for r in records if lo <= r.fd <= hi]
    skip = [r for r in records if not lo <= r.fd <= hi]
    return keep, skip


def format_density_csv(records: Sequence[DensityRecord]) -> str:
    """Render the report CSV: ``pipeline,unique,total,fd`` with 4-decimal FD."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in records:
        writer.writerow([r.name, r.unique_count, r.total_count, f"{r.fd:.4f}"])
    return buf.getvalue()


def write_density_csv(records: Sequence[DensityRecord], path: str | os.PathLike[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_density_csv(records))


def read_density_csv(path: str | os.PathLike[str]) -> list[DensityRecord]:
    """Parse a density report CSV back into records."""
    records = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            records.append(
                DensityRecord(
                    pipeline=parse_pipeline_name(row["pipeline"]),
                    unique_count=int(row["unique"]),
                    total_count=int(row["total"]),
                    fd=float(row["fd"]),
                )
            )
    return records
