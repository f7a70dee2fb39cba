"""oproj: rank a black-box model's dependence on each input feature by
iterative orthogonal projection."""

from .adapters import (
    InProcessModel,
    ModelHandle,
    SubprocessModel,
    SubprocessSpec,
    capture_outputs,
    predict_batch,
)
from .dataio import (
    AffineMap,
    ColumnSpec,
    DatasetSchema,
    NonlinearTerm,
    SyntheticSpec,
    generate_synthetic,
    load_csv,
    parse_schema_file,
    parse_synthetic_spec,
    save_csv,
    standardize,
)
from .errors import (
    AdapterError,
    AuditFailedError,
    DataError,
    DegenerateFeatureError,
    DegenerateSubspaceError,
    DimensionError,
    FeatureLookupError,
    MalformedOutputError,
    ModelExitError,
    ModelTimeoutError,
    NonFinitePredictionError,
    OprojError,
    RowCountMismatchError,
    SingularSystemError,
    SyntheticSpecError,
)
from .linalg import (
    FeatureMatrix,
    FeatureVector,
    ProjectionBasis,
    dot,
    orthonormalize,
    project_out,
    transform_against_feature,
    transform_against_vector,
)
from .oracle import loco_refit_importances, spearman_rank_correlation
from .ranking import (
    AuditConfig,
    AuditOutcome,
    DependenceReport,
    FeatureResult,
    PerformanceMetric,
    audit_feature,
    baseline_performance,
    compute_metric,
    rank_all,
)
from .report import (
    GroupAggregate,
    ReportDocument,
    aggregate_categorical_groups,
    build_document,
    document_to_dict,
    document_to_json,
    render_svg,
    write_csv,
    write_json,
    write_svg,
)
from .surrogate import (
    FidelityScore,
    LogisticModel,
    RidgeModel,
    SurrogateFit,
    fit_logistic,
    fit_ridge,
    surrogate_handle,
    train_surrogate,
)
from .transforms import TransformSet, build_removal_candidates, expand_feature

__version__ = "0.1.0"
