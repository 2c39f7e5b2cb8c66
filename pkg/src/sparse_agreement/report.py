"""Agreement report assembly and serialization.

The JSON schema is stable: every declared field appears in every report,
with null for metrics that are undefined on the given table (never
omission). Numbers serialize with 12 significant digits so outputs are
byte-reproducible across platforms.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Sequence

from ._version import __version__
from .errors import (
    ChanceDegenerateError,
    FullAnnotationViolation,
    UndefinedAgreementError,
)
from .ingest import IngestPolicy
from .metrics import (
    class_distribution,
    fleiss_kappa,
    item_agreement,
    joint_pa,
    observed_disagreement_nominal,
    spa,
)
from .tables import AnnotationTable, ClassDistribution
from .weighting import SCHEME_KINDS, SIMPLE_SCHEME_KINDS, WeightScheme, compute_weights


@dataclass(frozen=True)
class PerItemRow:
    item_id: str
    n: int
    agreement: float | None
    weights: dict[str, float]


@dataclass(frozen=True)
class AgreementReport:
    pa: float | None
    spa_by_scheme: dict[str, float]
    fleiss_kappa: float | None
    observed_disagreement: float
    per_item: tuple[PerItemRow, ...]
    items_excluded: int
    labels: tuple[str, ...]
    class_distribution: ClassDistribution


@dataclass(frozen=True)
class Provenance:
    input_sha256: str
    tool_version: str
    ingest_policy: dict
    timestamp: str


@dataclass(frozen=True)
class ReportDocument:
    report: AgreementReport
    provenance: Provenance
    warnings: tuple[str, ...]


def resolve_schemes(
    table: AnnotationTable,
    kinds: Sequence[str],
    class_dist: ClassDistribution | None = None,
) -> tuple[list[WeightScheme], list[str]]:
    """Turn scheme names into concrete schemes bound to this table.

    inv_var takes the table's class count; inv_var_class takes the supplied
    distribution, falling back to the table estimate. Schemes a degenerate
    table cannot support are skipped with a warning rather than failing the
    whole report.
    """
    warnings: list[str] = []
    schemes: list[WeightScheme] = []
    for kind in kinds:
        if kind in SIMPLE_SCHEME_KINDS:
            schemes.append(WeightScheme(kind))
        elif kind == "inv_var":
            if table.num_classes < 2:
                warnings.append("inv_var skipped: table has a single label class")
                continue
            schemes.append(WeightScheme("inv_var", num_classes=table.num_classes))
        elif kind == "inv_var_class":
            dist = class_dist if class_dist is not None else class_distribution(table.item_counts())
            schemes.append(WeightScheme("inv_var_class", class_dist=dist))
        else:
            raise ValueError(f"unknown scheme {kind!r}; expected one of {SCHEME_KINDS}")
    return schemes, warnings


def build_report(
    table: AnnotationTable,
    scheme_kinds: Sequence[str],
    class_dist: ClassDistribution | None = None,
) -> tuple[AgreementReport, list[str]]:
    items = table.item_counts()
    if class_dist is not None and class_dist.num_classes != table.num_classes:
        raise ValueError(
            f"class distribution has {class_dist.num_classes} entries for "
            f"{table.num_classes} labels"
        )
    warnings: list[str] = []
    schemes, scheme_warnings = resolve_schemes(table, scheme_kinds, class_dist)
    warnings.extend(scheme_warnings)

    try:
        pa = joint_pa(items)
    except (FullAnnotationViolation, UndefinedAgreementError) as exc:
        pa = None
        warnings.append(f"pa unavailable: {exc}")
    try:
        kappa = fleiss_kappa(items)
    except (FullAnnotationViolation, UndefinedAgreementError, ChanceDegenerateError) as exc:
        kappa = None
        warnings.append(f"fleiss_kappa unavailable: {exc}")

    disagreement = observed_disagreement_nominal(items)

    weight_vectors = {s.name: compute_weights(s, items) for s in schemes}
    spa_by_scheme = {
        name: spa(items, vector) for name, vector in weight_vectors.items()
    }

    per_item = []
    excluded = 0
    for idx, (item_id, it) in enumerate(zip(table.item_ids, items)):
        if it.n < 2:
            excluded += 1
            agreement = None
        else:
            agreement = item_agreement(it)
        per_item.append(
            PerItemRow(
                item_id,
                it.n,
                agreement,
                {name: vector[idx] for name, vector in weight_vectors.items()},
            )
        )

    dist = class_dist if class_dist is not None else class_distribution(items)
    report = AgreementReport(
        pa=pa,
        spa_by_scheme=spa_by_scheme,
        fleiss_kappa=kappa,
        observed_disagreement=disagreement,
        per_item=tuple(per_item),
        items_excluded=excluded,
        labels=table.label_universe,
        class_distribution=dist,
    )
    return report, warnings


def _timestamp() -> str:
    """UTC timestamp; honors SOURCE_DATE_EPOCH for reproducible outputs."""
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is not None:
        moment = datetime.fromtimestamp(int(epoch), tz=timezone.utc)
    else:
        moment = datetime.now(tz=timezone.utc)
    return moment.replace(microsecond=0).isoformat()


def make_provenance(input_bytes: bytes, policy: IngestPolicy) -> Provenance:
    return Provenance(
        input_sha256=hashlib.sha256(input_bytes).hexdigest(),
        tool_version=__version__,
        ingest_policy=policy.as_dict(),
        timestamp=_timestamp(),
    )


def _sig12(value: float | None) -> float | None:
    if value is None:
        return None
    if not math.isfinite(value):
        return value
    return float(f"{value:.12g}")


def document_to_dict(doc: ReportDocument) -> dict:
    report = doc.report
    return {
        "pa": _sig12(report.pa),
        "spa_by_scheme": {k: _sig12(v) for k, v in report.spa_by_scheme.items()},
        "fleiss_kappa": _sig12(report.fleiss_kappa),
        "observed_disagreement": _sig12(report.observed_disagreement),
        "items_excluded": report.items_excluded,
        "class_distribution": {
            label: _sig12(p) for label, p in zip(report.labels, report.class_distribution.probs)
        },
        "per_item": [
            {
                "item_id": row.item_id,
                "n": row.n,
                "agreement": _sig12(row.agreement),
                "weights": {k: _sig12(v) for k, v in row.weights.items()},
            }
            for row in report.per_item
        ],
        "provenance": {
            "input_sha256": doc.provenance.input_sha256,
            "tool_version": doc.provenance.tool_version,
            "ingest_policy": doc.provenance.ingest_policy,
            "timestamp": doc.provenance.timestamp,
        },
        "warnings": list(doc.warnings),
    }


def document_to_json(doc: ReportDocument) -> str:
    return json.dumps(document_to_dict(doc), indent=2) + "\n"


def document_to_csv(doc: ReportDocument) -> str:
    """Flat summary: one metric,scheme,value row per reported number."""
    report = doc.report

    def fmt(value: float | None) -> str:
        return "" if value is None else f"{value:.12g}"

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(("metric", "scheme", "value"))
    writer.writerow(("pa", "", fmt(report.pa)))
    for name, value in report.spa_by_scheme.items():
        writer.writerow(("spa", name, fmt(value)))
    writer.writerow(("fleiss_kappa", "", fmt(report.fleiss_kappa)))
    writer.writerow(("observed_disagreement", "", fmt(report.observed_disagreement)))
    writer.writerow(("items_excluded", "", str(report.items_excluded)))
    for label, p in zip(report.labels, report.class_distribution.probs):
        writer.writerow(("class_prob", label, fmt(p)))
    return buffer.getvalue()


def curves_to_csv(curves) -> str:
    """Serialize variance curves: scheme,annotation_count,variance,variance_minus_flat."""
    lines = ["scheme,annotation_count,variance,variance_minus_flat"]
    for curve in curves:
        deltas = dict(curve.baseline_delta) if curve.baseline_delta is not None else {}
        for point in curve.points:
            delta = deltas.get(point.annotation_count)
            delta_txt = "" if delta is None else f"{delta:.12g}"
            lines.append(
                f"{curve.scheme},{point.annotation_count},{point.variance:.12g},{delta_txt}"
            )
    return "\n".join(lines) + "\n"


def weight_curve_to_csv(points: Sequence[tuple[int, float]]) -> str:
    lines = ["n,normalized_weight"]
    for n, weight in points:
        lines.append(f"{n},{weight:.12g}")
    return "\n".join(lines) + "\n"
