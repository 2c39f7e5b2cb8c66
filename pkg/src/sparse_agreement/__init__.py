"""Inter-annotator agreement for sparsely annotated datasets.

Estimates the probability that two random annotators agree on a random
item when not every annotator labels every item, via a weighted mean of
per-item agreements. Ships six item-weighting schemes (including two
inverse-variance weightings with closed-form item variances), a Monte
Carlo harness that checks the estimator's unbiasedness and compares scheme
variances, CSV ingestion, and a CLI (``spa``).
"""

from ._backend import BACKEND_NAME, available_backends
from ._version import __version__
from .errors import (
    ChanceDegenerateError,
    DegenerateCurveError,
    DegenerateExperimentError,
    DuplicateAnnotationError,
    EmptySubsampleError,
    EmptyTableError,
    EnumerationTooLargeError,
    FormatError,
    FullAnnotationViolation,
    InvalidClassCountError,
    NoComputableItemsError,
    NothingToRemoveError,
    SparseAgreementError,
    UndefinedAgreementError,
)
from .ingest import (
    IngestPolicy,
    IngestResult,
    TableDiagnostics,
    diagnostics,
    ingest_csv,
    ingest_matrix_csv,
    table_to_csv,
)
from .metrics import (
    class_distribution,
    edge_count,
    expected_chance_agreement,
    fleiss_kappa,
    item_agreement,
    joint_pa,
    observed_disagreement_nominal,
    spa,
)
from .report import (
    AgreementReport,
    PerItemRow,
    Provenance,
    ReportDocument,
    build_report,
    document_to_csv,
    document_to_json,
)
from .simulation import (
    CurvePoint,
    ExperimentResult,
    RemovalPolicy,
    SubsampleTarget,
    TrialConfig,
    VarianceCurve,
    constant_k_comparison,
    default_budget_grid,
    remove_one,
    subsample_to,
    synth_table,
    unbiasedness_experiment,
    unbiasedness_experiments,
    variance_curves,
)
from .tables import Annotation, AnnotationTable, ClassDistribution, ItemCounts
from .variance import (
    VarianceResult,
    enumerate_variance,
    item_variance_classdist,
    item_variance_uniform,
)
from .weighting import (
    SCHEME_KINDS,
    SIMPLE_SCHEME_KINDS,
    WeightScheme,
    WeightVector,
    compute_weights,
    simple_weight,
    weight_curve,
    weight_for_n,
)

__all__ = [
    "__version__",
    "BACKEND_NAME",
    "available_backends",
    # tables
    "Annotation",
    "AnnotationTable",
    "ClassDistribution",
    "ItemCounts",
    # metrics
    "class_distribution",
    "edge_count",
    "expected_chance_agreement",
    "fleiss_kappa",
    "item_agreement",
    "joint_pa",
    "observed_disagreement_nominal",
    "spa",
    # variance
    "VarianceResult",
    "enumerate_variance",
    "item_variance_classdist",
    "item_variance_uniform",
    # weighting
    "SCHEME_KINDS",
    "SIMPLE_SCHEME_KINDS",
    "WeightScheme",
    "WeightVector",
    "compute_weights",
    "simple_weight",
    "weight_curve",
    "weight_for_n",
    # simulation
    "CurvePoint",
    "ExperimentResult",
    "RemovalPolicy",
    "SubsampleTarget",
    "TrialConfig",
    "VarianceCurve",
    "constant_k_comparison",
    "default_budget_grid",
    "remove_one",
    "subsample_to",
    "synth_table",
    "unbiasedness_experiment",
    "unbiasedness_experiments",
    "variance_curves",
    # ingest / report
    "IngestPolicy",
    "IngestResult",
    "TableDiagnostics",
    "diagnostics",
    "ingest_csv",
    "ingest_matrix_csv",
    "table_to_csv",
    "AgreementReport",
    "PerItemRow",
    "Provenance",
    "ReportDocument",
    "build_report",
    "document_to_csv",
    "document_to_json",
    # errors
    "SparseAgreementError",
    "UndefinedAgreementError",
    "FullAnnotationViolation",
    "EmptyTableError",
    "ChanceDegenerateError",
    "NoComputableItemsError",
    "InvalidClassCountError",
    "EnumerationTooLargeError",
    "DegenerateCurveError",
    "NothingToRemoveError",
    "EmptySubsampleError",
    "DegenerateExperimentError",
    "FormatError",
    "DuplicateAnnotationError",
]
