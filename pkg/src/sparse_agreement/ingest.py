"""Dataset ingestion and validation.

Input is long-format CSV with the exact header ``item_id,annotator_id,label``
(UTF-8, RFC-4180 quoting). A matrix layout (one column per annotator, blank
cells for missing annotations) is accepted through ``ingest_matrix_csv``.
Duplicate (item, annotator) pairs are resolved here, once, so that trial
randomness downstream never touches ingestion.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Union

import numpy as np

from .errors import DuplicateAnnotationError, EmptyTableError, FormatError
from .tables import AnnotationTable

EXPECTED_HEADER = ("item_id", "annotator_id", "label")
DUPLICATE_POLICIES = ("error", "first", "random")

Source = Union[str, Path, IO[str]]


@dataclass(frozen=True)
class IngestPolicy:
    duplicate_resolution: str = "error"
    seed: int = 0
    label_universe: tuple[str, ...] | None = None
    min_annotations_warn: int = 2

    def __post_init__(self) -> None:
        if self.duplicate_resolution not in DUPLICATE_POLICIES:
            raise ValueError(
                f"duplicate_resolution must be one of {DUPLICATE_POLICIES}, "
                f"got {self.duplicate_resolution!r}"
            )

    def as_dict(self) -> dict:
        return {
            "duplicate_resolution": self.duplicate_resolution,
            "seed": self.seed,
            "label_universe": list(self.label_universe) if self.label_universe else None,
            "min_annotations_warn": self.min_annotations_warn,
        }


@dataclass(frozen=True)
class IngestResult:
    table: AnnotationTable
    warnings: tuple[str, ...]


@dataclass(frozen=True)
class TableDiagnostics:
    num_items: int
    num_annotators: int
    num_classes: int
    num_annotations: int
    depth_histogram: dict[int, int]
    items_below_pairable: int


def _read_rows(source: Source) -> list[tuple[int, list[str]]]:
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8", newline="") as handle:
            reader = csv.reader(handle)
            return [(reader.line_num, row) for row in reader]
    reader = csv.reader(source)
    return [(reader.line_num, row) for row in reader]


def _resolve_duplicates(
    rows: list[tuple[int, tuple[str, str, str]]], policy: IngestPolicy
) -> tuple[list[tuple[str, str, str]], list[str]]:
    """Collapse repeated (item, annotator) pairs per the policy, preserving
    first-appearance order of the pairs."""
    grouped: dict[tuple[str, str], list[tuple[int, str]]] = {}
    for line, (item, annotator, label) in rows:
        grouped.setdefault((item, annotator), []).append((line, label))
    warnings: list[str] = []
    rng = np.random.default_rng([policy.seed, 0xD0B]) if policy.duplicate_resolution == "random" else None
    records: list[tuple[str, str, str]] = []
    for (item, annotator), entries in grouped.items():
        if len(entries) == 1:
            records.append((item, annotator, entries[0][1]))
            continue
        if policy.duplicate_resolution == "error":
            line = entries[1][0]
            raise DuplicateAnnotationError(
                f"duplicate annotation for item={item!r} annotator={annotator!r}", line=line
            )
        if policy.duplicate_resolution == "first":
            records.append((item, annotator, entries[0][1]))
            warnings.append(
                f"dropped {len(entries) - 1} duplicate annotation(s) for "
                f"item={item!r} annotator={annotator!r}; kept the first"
            )
        else:
            assert rng is not None
            pick = int(rng.integers(len(entries)))
            records.append((item, annotator, entries[pick][1]))
            warnings.append(
                f"picked 1 of {len(entries)} duplicate annotations at random for "
                f"item={item!r} annotator={annotator!r}"
            )
    return records, warnings


def _finish(
    rows: list[tuple[int, tuple[str, str, str]]], policy: IngestPolicy
) -> IngestResult:
    if not rows:
        raise EmptyTableError("no annotation rows in input")
    records, warnings = _resolve_duplicates(rows, policy)
    first_line: dict[str, int] = {}
    for line, (_, _, label) in rows:
        first_line.setdefault(label, line)
    try:
        table = AnnotationTable.from_records(records, label_universe=policy.label_universe)
    except ValueError as exc:
        message = str(exc)
        line = None
        if "not in declared universe" in message:
            offending = [lab for lab in first_line if policy.label_universe and lab not in policy.label_universe]
            if offending:
                line = first_line[offending[0]]
        raise FormatError(message, line=line) from exc
    shallow = [
        (item_id, int(n))
        for item_id, n in zip(table.item_ids, table.count_matrix.sum(axis=1))
        if n < policy.min_annotations_warn
    ]
    for item_id, n in shallow:
        warnings.append(
            f"item {item_id!r} has {n} annotation(s), below the warning threshold "
            f"of {policy.min_annotations_warn}"
        )
    return IngestResult(table, tuple(warnings))


def ingest_csv(source: Source, policy: IngestPolicy = IngestPolicy()) -> IngestResult:
    """Parse long-format CSV into an annotation table.

    Raises FormatError (with a line number where possible) on structural
    problems, DuplicateAnnotationError under the ``error`` policy, and
    EmptyTableError when no data rows exist.
    """
    raw = _read_rows(source)
    if not raw:
        raise EmptyTableError("input file is empty")
    header_line, header = raw[0]
    if tuple(header) != EXPECTED_HEADER:
        raise FormatError(
            f"expected header {','.join(EXPECTED_HEADER)!r}, got {','.join(header)!r}",
            line=header_line,
        )
    rows: list[tuple[int, tuple[str, str, str]]] = []
    for line, row in raw[1:]:
        if not row:
            continue
        if len(row) != 3:
            raise FormatError(f"expected 3 fields, got {len(row)}", line=line)
        if any(not field.strip() for field in row):
            raise FormatError("empty field", line=line)
        rows.append((line, (row[0], row[1], row[2])))
    return _finish(rows, policy)


def ingest_matrix_csv(source: Source, policy: IngestPolicy = IngestPolicy()) -> IngestResult:
    """Parse matrix-format CSV (header ``item_id,<annotator>,...``; blank
    cells mean missing) by converting it to long form."""
    raw = _read_rows(source)
    if not raw:
        raise EmptyTableError("input file is empty")
    header_line, header = raw[0]
    if len(header) < 2 or header[0] != "item_id":
        raise FormatError(
            "matrix header must start with item_id followed by annotator columns",
            line=header_line,
        )
    annotators = header[1:]
    if len(set(annotators)) != len(annotators):
        raise FormatError("annotator columns must be distinct", line=header_line)
    rows: list[tuple[int, tuple[str, str, str]]] = []
    for line, row in raw[1:]:
        if not row:
            continue
        if len(row) != len(header):
            raise FormatError(f"expected {len(header)} fields, got {len(row)}", line=line)
        item = row[0]
        if not item.strip():
            raise FormatError("empty item_id", line=line)
        for annotator, cell in zip(annotators, row[1:]):
            if cell.strip():
                rows.append((line, (item, annotator, cell)))
    return _finish(rows, policy)


def table_to_csv(table: AnnotationTable) -> str:
    """Serialize back to the long-format CSV accepted by ``ingest_csv``."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(EXPECTED_HEADER)
    for record in table.records:
        writer.writerow(record)
    return buffer.getvalue()


def diagnostics(table: AnnotationTable) -> TableDiagnostics:
    depths = table.count_matrix.sum(axis=1)
    histogram: dict[int, int] = {}
    for depth in depths:
        histogram[int(depth)] = histogram.get(int(depth), 0) + 1
    return TableDiagnostics(
        num_items=table.num_items,
        num_annotators=table.num_annotators,
        num_classes=table.num_classes,
        num_annotations=table.num_annotations,
        depth_histogram=dict(sorted(histogram.items())),
        items_below_pairable=int((depths < 2).sum()),
    )
