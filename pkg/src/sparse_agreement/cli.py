"""Command-line surface: validate, compute, weight-curve, simulate.

Exit codes: 0 success, 2 data/validation error, 3 simulation infeasible,
64 usage error. Validation failures print a machine-readable JSON error
object to stderr. All outputs are deterministic for fixed inputs and seed
(set SOURCE_DATE_EPOCH to also pin the report timestamp).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from pathlib import Path
from typing import Sequence

from ._backend import BACKEND_NAME
from ._version import __version__
from .errors import (
    DegenerateExperimentError,
    EmptySubsampleError,
    SparseAgreementError,
)
from .ingest import (
    DUPLICATE_POLICIES,
    IngestPolicy,
    IngestResult,
    diagnostics,
    ingest_csv,
    ingest_matrix_csv,
)
from .report import (
    build_report,
    curves_to_csv,
    document_to_csv,
    document_to_json,
    make_provenance,
    resolve_schemes,
    weight_curve_to_csv,
    ReportDocument,
)
from .simulation import (
    RemovalPolicy,
    TrialConfig,
    constant_k_comparison,
    synth_table,
    unbiasedness_experiments,
    variance_curves,
)
from .tables import AnnotationTable, ClassDistribution
from .weighting import SCHEME_KINDS, WeightScheme, weight_curve

EXIT_OK = 0
EXIT_DATA = 2
EXIT_INFEASIBLE = 3
EXIT_USAGE = 64

DEFAULT_SIMULATION_SCHEMES = "flat,annotations,annotations_m1,edge,inv_var"


class UsageError(Exception):
    """Semantic flag conflict; maps to exit 64 like a parse error."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # noqa: D102 - argparse hook
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _resolve_seed(value: int | None) -> int:
    if value is not None:
        return value
    env = os.environ.get("SPA_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError as exc:
        raise UsageError(f"SPA_SEED={env!r} is not an integer") from exc


def _ingest(args) -> tuple[IngestResult, bytes, IngestPolicy]:
    path = Path(args.input)
    data = path.read_bytes()
    policy = IngestPolicy(
        duplicate_resolution=args.duplicates,
        seed=_resolve_seed(args.seed),
        min_annotations_warn=2,
    )
    reader = ingest_matrix_csv if getattr(args, "matrix", False) else ingest_csv
    with open(path, "r", encoding="utf-8", newline="") as handle:
        result = reader(handle, policy)
    return result, data, policy


def _load_class_dist(path: str, labels: Sequence[str]) -> ClassDistribution:
    """Class distribution JSON: an object mapping label -> probability over
    exactly the table's label universe, summing to 1 within 1e-9."""
    with open(path, "r", encoding="utf-8") as handle:
        try:
            payload = json.load(handle)
        except json.JSONDecodeError as exc:
            raise SparseAgreementError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(payload, dict) or not all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in payload.values()
    ):
        raise SparseAgreementError(f"{path}: expected an object mapping label to probability")
    if set(payload) != set(labels):
        raise SparseAgreementError(
            f"{path}: distribution labels {sorted(payload)} do not match "
            f"table labels {sorted(labels)}"
        )
    values = [float(payload[label]) for label in labels]
    if any(v < 0 for v in values):
        raise SparseAgreementError(f"{path}: probabilities must be non-negative")
    total = math.fsum(values)
    if abs(total - 1.0) > 1e-9:
        raise SparseAgreementError(f"{path}: probabilities sum to {total!r}, expected 1 within 1e-9")
    return ClassDistribution.from_weights(values)


def _parse_synthetic(spec: str) -> AnnotationTable:
    """items=I,annotators=A,classes=C[,seed=S][,skew=X][,dist=p1:p2:...]"""
    fields: dict[str, str] = {}
    for chunk in spec.split(","):
        if "=" not in chunk:
            raise UsageError(f"bad synthetic spec field {chunk!r}")
        key, value = chunk.split("=", 1)
        fields[key.strip()] = value.strip()
    unknown = set(fields) - {"items", "annotators", "classes", "seed", "skew", "dist"}
    if unknown:
        raise UsageError(f"unknown synthetic spec keys {sorted(unknown)}")
    try:
        items = int(fields["items"])
        annotators = int(fields["annotators"])
        seed = int(fields.get("seed", "0"))
        skew = float(fields["skew"]) if "skew" in fields else None
        if "dist" in fields:
            probs = [float(p) for p in fields["dist"].split(":")]
            dist = ClassDistribution.from_weights(probs)
            if "classes" in fields and int(fields["classes"]) != len(probs):
                raise UsageError("synthetic spec: classes does not match dist length")
        else:
            dist = ClassDistribution.uniform(int(fields["classes"]))
    except KeyError as exc:
        raise UsageError(f"synthetic spec needs {exc.args[0]}") from exc
    except ValueError as exc:
        raise UsageError(f"bad synthetic spec: {exc}") from exc
    try:
        return synth_table(items, annotators, dist, per_annotator_skew=skew, seed=seed)
    except ValueError as exc:
        raise UsageError(f"bad synthetic spec: {exc}") from exc


def _write(path_or_dash: str | None, text: str) -> None:
    if path_or_dash is None or path_or_dash == "-":
        sys.stdout.write(text)
    else:
        Path(path_or_dash).write_text(text, encoding="utf-8")


def cmd_validate(args) -> int:
    result, _, _ = _ingest(args)
    info = diagnostics(result.table)
    print(f"items: {info.num_items}")
    print(f"annotators: {info.num_annotators}")
    print(f"labels: {info.num_classes} ({', '.join(result.table.label_universe)})")
    print(f"annotations: {info.num_annotations}")
    print("annotations-per-item histogram:")
    for depth, count in info.depth_histogram.items():
        print(f"  n={depth}: {count} item(s)")
    print(f"{info.items_below_pairable} items below pairable threshold (n < 2)")
    for warning in result.warnings:
        print(f"warning: {warning}")
    return EXIT_OK


def cmd_compute(args) -> int:
    kinds = list(SCHEME_KINDS) if args.scheme == "all" else [args.scheme]
    if args.class_dist is not None and "inv_var_class" not in kinds:
        raise UsageError("--class-dist requires inv_var_class among the schemes")
    result, data, policy = _ingest(args)
    dist = (
        _load_class_dist(args.class_dist, result.table.label_universe)
        if args.class_dist is not None
        else None
    )
    report, warnings = build_report(result.table, kinds, class_dist=dist)
    doc = ReportDocument(
        report=report,
        provenance=make_provenance(data, policy),
        warnings=tuple(result.warnings) + tuple(warnings),
    )
    text = document_to_json(doc) if args.format == "json" else document_to_csv(doc)
    _write(args.output, text)
    return EXIT_OK


def cmd_weight_curve(args) -> int:
    kind = args.scheme
    if kind == "inv_var":
        if args.classes is None:
            raise UsageError("inv_var needs --classes")
        if args.class_dist is not None:
            raise UsageError("--class-dist is only for inv_var_class")
        scheme = WeightScheme("inv_var", num_classes=args.classes)
    elif kind == "inv_var_class":
        if args.class_dist is None:
            raise UsageError("inv_var_class needs --class-dist")
        if args.classes is not None:
            raise UsageError("--classes is only for inv_var")
        with open(args.class_dist, "r", encoding="utf-8") as handle:
            try:
                payload = json.load(handle)
            except json.JSONDecodeError as exc:
                raise SparseAgreementError(f"{args.class_dist}: invalid JSON: {exc}") from exc
        if not isinstance(payload, dict) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in payload.values()
        ):
            raise SparseAgreementError(f"{args.class_dist}: expected a label->probability object")
        labels = sorted(payload)
        total = math.fsum(float(payload[k]) for k in labels)
        if abs(total - 1.0) > 1e-9:
            raise SparseAgreementError(
                f"{args.class_dist}: probabilities sum to {total!r}, expected 1 within 1e-9"
            )
        scheme = WeightScheme(
            "inv_var_class",
            class_dist=ClassDistribution.from_weights([float(payload[k]) for k in labels]),
        )
    else:
        if args.classes is not None or args.class_dist is not None:
            raise UsageError(f"--classes/--class-dist do not apply to {kind}")
        scheme = WeightScheme(kind)
    points = weight_curve(scheme, (1, args.n_max))
    _write(args.output, weight_curve_to_csv(points))
    return EXIT_OK


def _simulation_table(args) -> tuple[AnnotationTable, dict, tuple[str, ...]]:
    if args.input is not None:
        result, data, policy = _ingest(args)
        source = {"input": args.input, "sha256": hashlib.sha256(data).hexdigest(),
                  "ingest_policy": policy.as_dict()}
        return result.table, source, result.warnings
    table = _parse_synthetic(args.synthetic)
    return table, {"synthetic": args.synthetic}, ()


def _parse_budgets(text: str | None, total: int) -> tuple[int, ...] | None:
    if text is None:
        return None
    try:
        budgets = tuple(int(b) for b in text.split(","))
    except ValueError as exc:
        raise UsageError(f"--budgets {text!r} is not a comma-separated int list") from exc
    if any(b < 2 or b > total for b in budgets):
        raise UsageError(f"budgets must lie in [2, {total}]")
    return budgets


def _parse_removals(text: str, total: int) -> int:
    if text.endswith("%"):
        fraction = float(text[:-1]) / 100.0
        if not 0 <= fraction <= 1:
            raise UsageError(f"removal percentage {text!r} out of range")
        return int(round(fraction * total))
    try:
        removals = int(text)
    except ValueError as exc:
        raise UsageError(f"--removals {text!r} is not a count or percentage") from exc
    if not 0 <= removals <= total:
        raise UsageError(f"--removals must lie in [0, {total}]")
    return removals


def _load_bias(path: str, table: AnnotationTable) -> tuple[float, ...]:
    with open(path, "r", encoding="utf-8") as handle:
        try:
            payload = json.load(handle)
        except json.JSONDecodeError as exc:
            raise SparseAgreementError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise SparseAgreementError(f"{path}: expected an object mapping item_id to multiplier")
    missing = [item for item in table.item_ids if item not in payload]
    if missing:
        raise SparseAgreementError(f"{path}: no bias multiplier for items {missing[:5]}")
    return tuple(float(payload[item]) for item in table.item_ids)


def cmd_simulate(args) -> int:
    table, source, ingest_warnings = _simulation_table(args)
    seed = _resolve_seed(args.seed)
    kinds = [k.strip() for k in args.schemes.split(",") if k.strip()]
    schemes, scheme_warnings = resolve_schemes(table, kinds)
    if not schemes:
        raise SparseAgreementError("no usable scheme for this table")
    if args.policy == "item-biased":
        if args.bias is None:
            raise UsageError("--policy item-biased needs --bias")
        removal = RemovalPolicy.item_biased(_load_bias(args.bias, table))
    else:
        if args.bias is not None:
            raise UsageError("--bias only applies to --policy item-biased")
        removal = RemovalPolicy.uniform()

    cfg = TrialConfig(
        trials=args.trials, seed=seed, removal=removal, scheme_set=tuple(schemes)
    )
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest: dict = {
        "mode": args.mode,
        "source": source,
        "trials": cfg.trials,
        "seed": cfg.seed,
        "removal_policy": {"kind": removal.kind, "bias_inducing": removal.bias_inducing},
        "schemes": [s.name for s in schemes],
        "tool_version": __version__,
        "backend": BACKEND_NAME,
        "warnings": list(ingest_warnings) + list(scheme_warnings),
    }

    exit_code = EXIT_OK
    if args.mode == "unbiasedness":
        removals = _parse_removals(args.removals, table.num_annotations)
        manifest["removals"] = removals
        results = unbiasedness_experiments(table, removals, schemes, cfg)
        lines = ["scheme,mean,stderr,reference,deviation_sigmas,within_3_stderr"]
        for res in results:
            verdict = "pass" if res.within_three_stderr else "FAIL"
            deviation = "inf" if math.isinf(res.deviation) else f"{res.deviation:.3g}"
            print(
                f"{res.scheme}: mean={res.mean:.6f} stderr={res.stderr:.2e} "
                f"reference={res.reference:.6f} |delta|={deviation} sigma -> {verdict}"
            )
            lines.append(
                f"{res.scheme},{res.mean:.12g},{res.stderr:.12g},{res.reference:.12g},"
                f"{res.deviation:.12g},{str(res.within_three_stderr).lower()}"
            )
        (out_dir / "unbiasedness.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
        manifest["results"] = [
            {
                "scheme": r.scheme,
                "mean": float(f"{r.mean:.12g}"),
                "stderr": float(f"{r.stderr:.12g}"),
                "reference": float(f"{r.reference:.12g}"),
                "within_3_stderr": r.within_three_stderr,
                "trials_used": r.trials_used,
                "trials_skipped": r.trials_skipped,
            }
            for r in results
        ]
    elif args.mode == "variance-curves":
        budgets = _parse_budgets(args.budgets, table.num_annotations)
        curves = variance_curves(table, cfg, budgets=budgets)
        manifest["budgets"] = [p.annotation_count for p in curves[0].points]
        (out_dir / "variance_curves.csv").write_text(curves_to_csv(curves), encoding="utf-8")
        manifest["sum_under_curve"] = {
            c.scheme: float(f"{c.sum_under_curve:.12g}") for c in curves
        }
        for curve in curves:
            print(f"{curve.scheme}: sum-under-curve {curve.sum_under_curve:.6g}")
    elif args.mode == "constant-k":
        try:
            k_values = [int(k) for k in args.k_values.split(",")]
        except ValueError as exc:
            raise UsageError(f"--k-values {args.k_values!r} is not an int list") from exc
        budgets = _parse_budgets(args.budgets, table.num_annotations)
        try:
            curves = constant_k_comparison(table, k_values, cfg, budgets=budgets)
        except EmptySubsampleError as exc:
            print(f"infeasible: {exc}", file=sys.stderr)
            return EXIT_INFEASIBLE
        (out_dir / "constant_k_curves.csv").write_text(curves_to_csv(curves), encoding="utf-8")
        notes = {c.scheme: c.note for c in curves if c.note}
        manifest["skipped"] = notes
        manifest["k_values"] = k_values
        for curve in curves:
            if curve.note:
                print(f"warning: {curve.scheme}: {curve.note}")
            else:
                print(f"{curve.scheme}: {len(curve.points)} gridpoint(s)")
        if all(c.note for c in curves if c.scheme.startswith("k=")):
            exit_code = EXIT_INFEASIBLE
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError(f"unknown mode {args.mode!r}")

    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2) + "\n", encoding="utf-8"
    )
    return exit_code


def build_parser() -> _Parser:
    parser = _Parser(prog="spa", description="Sparse probability of agreement toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_ingest_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--input", required=True, help="annotation CSV path")
        p.add_argument("--matrix", action="store_true", help="input uses the matrix layout")
        p.add_argument(
            "--duplicates",
            choices=DUPLICATE_POLICIES,
            default="error",
            help="duplicate (item, annotator) resolution policy",
        )
        p.add_argument("--seed", type=int, default=None, help="seed (falls back to SPA_SEED, then 0)")

    p_validate = sub.add_parser("validate", help="ingest and describe a dataset")
    add_ingest_flags(p_validate)
    p_validate.set_defaults(func=cmd_validate)

    p_compute = sub.add_parser("compute", help="compute agreement metrics")
    add_ingest_flags(p_compute)
    p_compute.add_argument(
        "--scheme", choices=SCHEME_KINDS + ("all",), default="all", help="weighting scheme"
    )
    p_compute.add_argument("--class-dist", default=None, help="class distribution JSON path")
    p_compute.add_argument("--format", choices=("json", "csv"), default="json")
    p_compute.add_argument("--output", default=None, help="output path (default stdout)")
    p_compute.set_defaults(func=cmd_compute)

    p_curve = sub.add_parser("weight-curve", help="normalized weight over annotation count")
    p_curve.add_argument("--scheme", choices=SCHEME_KINDS, required=True)
    p_curve.add_argument("--n-max", type=int, required=True)
    p_curve.add_argument("--classes", type=int, default=None, help="class count for inv_var")
    p_curve.add_argument("--class-dist", default=None, help="distribution JSON for inv_var_class")
    p_curve.add_argument("--output", default=None)
    p_curve.set_defaults(func=cmd_weight_curve)

    p_sim = sub.add_parser("simulate", help="Monte Carlo experiments")
    group = p_sim.add_mutually_exclusive_group(required=True)
    group.add_argument("--input", default=None, help="annotation CSV path")
    group.add_argument(
        "--synthetic",
        default=None,
        help="items=I,annotators=A,classes=C[,seed=S][,skew=X][,dist=p1:p2:...]",
    )
    p_sim.add_argument("--matrix", action="store_true")
    p_sim.add_argument("--duplicates", choices=DUPLICATE_POLICIES, default="error")
    p_sim.add_argument(
        "--mode", choices=("unbiasedness", "variance-curves", "constant-k"), required=True
    )
    p_sim.add_argument("--trials", type=int, default=3000)
    p_sim.add_argument("--seed", type=int, default=None)
    p_sim.add_argument("--schemes", default=DEFAULT_SIMULATION_SCHEMES)
    p_sim.add_argument("--output-dir", required=True)
    p_sim.add_argument(
        "--removals", default="40%", help="annotations to remove per trial (count or percent)"
    )
    p_sim.add_argument("--k-values", default="2,4", help="constant-k depths")
    p_sim.add_argument("--budgets", default=None, help="comma-separated annotation budgets")
    p_sim.add_argument("--policy", choices=("uniform", "item-biased"), default="uniform")
    p_sim.add_argument("--bias", default=None, help="item_id->multiplier JSON (item-biased)")
    p_sim.set_defaults(func=cmd_simulate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"spa: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DegenerateExperimentError, EmptySubsampleError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except SparseAgreementError as exc:
        error = {"error": {"type": type(exc).__name__, "message": str(exc)}}
        print(json.dumps(error), file=sys.stderr)
        return EXIT_DATA
    except (OSError, UnicodeDecodeError) as exc:
        error = {"error": {"type": type(exc).__name__, "message": str(exc)}}
        print(json.dumps(error), file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        # invalid values that slipped past argparse (bad ranges, counts, ...)
        print(f"spa: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
