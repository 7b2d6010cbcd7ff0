"""Consensus engine for feature-attribution explanations.

Merges the outputs of several interpretability sources (global importance
vectors, local per-sample attribution matrices) into a single robust
feature ranking, and evaluates the result against benchmarks with known
ground truth.
"""

from .consensus import (
    ALL_FUNCTIONS,
    ARITHMETIC_MEAN,
    GEOMETRIC_MEAN,
    HARMONIC_MEAN,
    RELATIVE_POSITION,
    VOTING,
    WISCA,
    ConsensusConfig,
    ConsensusRun,
    SourceAggregate,
    WiscaConfig,
    aggregate_source,
    arithmetic_mean,
    geometric_mean,
    harmonic_mean,
    relative_position,
    run_all,
    voting,
    wisca,
)
from .errors import BundleFormatError, DomainError, MetricError, TrainingError
from .metrics import (
    DistanceConfig,
    EvaluationReport,
    HitRateConfig,
    evaluate_suite,
    hit_rate,
    jensen_shannon,
    separation_distance,
    spearman,
)
from .models import (
    DeskModel,
    Hyperparams,
    ModelKind,
    OcclusionBaseline,
    TrainReport,
    lr_coefficient_ranking,
    occlusion_attribution,
    permutation_importance,
    predictions_for,
    train,
)
from .scaling import (
    ClassificationFactor,
    FactorFamily,
    RegressionFactor,
    ScalingMode,
    ScalingPolicy,
    class_factor,
    minmax_scale,
    regression_factor,
)
from .synth import (
    DatasetId,
    SyntheticDatasetSpec,
    TabularDataset,
    apply_formula,
    class_balance,
    generate,
)
from .types import (
    AttributionBundle,
    AttributionSource,
    ConsensusResult,
    Direction,
    FeatureCatalog,
    GroundTruth,
    PredictionRecord,
    Scope,
    Task,
    ValidationReport,
    Violation,
    validate_bundle,
)

__version__ = "0.1.0"
