"""Shared data model for the consensus engine.

Feature catalogs, attribution sources, prediction metadata, consensus
results and ground truth are immutable value objects.  ``validate_bundle``
is the single gate that turns raw parsed inputs into trusted ones: a bundle
it accepts is accepted by every downstream operation without error.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Scope",
    "Task",
    "Direction",
    "FeatureCatalog",
    "AttributionSource",
    "PredictionRecord",
    "ConsensusResult",
    "GroundTruth",
    "AttributionBundle",
    "Violation",
    "ValidationReport",
    "validate_bundle",
    "rank_descending",
    "readonly_array",
]


class Scope(enum.Enum):
    """Whether a source explains the whole model or each sample."""

    GLOBAL = "global"
    LOCAL = "local"


class Task(enum.Enum):
    BINARY_CLASSIFICATION = "binary_classification"
    MULTICLASS_CLASSIFICATION = "multiclass_classification"
    REGRESSION = "regression"

    @property
    def is_classification(self) -> bool:
        return self is not Task.REGRESSION


class Direction(enum.Enum):
    """Which end of a score scale marks an important feature."""

    HIGHER_IS_BETTER = "higher_is_better"
    LOWER_IS_BETTER = "lower_is_better"


def readonly_array(values, dtype=float) -> np.ndarray:
    """Copy ``values`` into a locked numpy array so holders stay immutable."""
    arr = np.array(values, dtype=dtype, copy=True)
    arr.flags.writeable = False
    return arr


def rank_descending(
    scores: np.ndarray, direction: Direction = Direction.HIGHER_IS_BETTER
) -> np.ndarray:
    """Feature indices from most to least important.

    Ties are broken by ascending feature index so rankings never depend on
    sort-order accidents.
    """
    scores = np.asarray(scores, dtype=float)
    keys = -scores if direction is Direction.HIGHER_IS_BETTER else scores
    # stable sort keeps lower indices first among equal keys
    return np.argsort(keys, kind="stable")


@dataclass(frozen=True)
class FeatureCatalog:
    """Ordered, unique feature names; fixes the index every vector uses."""

    names: tuple[str, ...]

    def __post_init__(self) -> None:
        names = tuple(str(n) for n in self.names)
        object.__setattr__(self, "names", names)
        if not names:
            raise ValueError("feature catalog must not be empty")
        if any(n == "" for n in names):
            raise ValueError("feature names must be non-empty")
        if len(set(names)) != len(names):
            raise ValueError("feature names must be unique")

    @property
    def count(self) -> int:
        return len(self.names)

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown feature: {name!r}") from None

    @classmethod
    def default(cls, n_features: int) -> "FeatureCatalog":
        """Catalog named F1..Fn, the convention of the synthetic benchmarks."""
        return cls(tuple(f"F{i + 1}" for i in range(n_features)))


@dataclass(frozen=True)
class AttributionSource:
    """One explainer's raw output: a feature vector (global scope) or a
    samples x features matrix (local scope).

    Values are unscaled, may carry any sign and are unitless.  Structural
    shape is enforced here; data-level problems (non-finite entries, widths
    that disagree with the catalog) are reported by :func:`validate_bundle`.
    """

    source_id: str
    scope: Scope
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float, copy=True)
        want = 1 if self.scope is Scope.GLOBAL else 2
        if values.ndim != want:
            raise ValueError(
                f"{self.scope.value} source {self.source_id!r} needs a "
                f"{want}-d value array, got {values.ndim}-d"
            )
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def n_features(self) -> int:
        return int(self.values.shape[-1])

    @property
    def n_samples(self) -> int | None:
        """Row count for local sources, None for global ones."""
        return None if self.scope is Scope.GLOBAL else int(self.values.shape[0])


@dataclass(frozen=True)
class PredictionRecord:
    """Per-sample prediction metadata feeding the confidence weights.

    Classification records carry the probability of the predicted class per
    sample; regression records carry (y_true, y_pred) pairs.
    """

    task: Task
    probabilities: np.ndarray | None = None
    y_true: np.ndarray | None = None
    y_pred: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.task.is_classification:
            if self.probabilities is None:
                raise ValueError("classification record needs probabilities")
            if self.y_true is not None or self.y_pred is not None:
                raise ValueError("classification record takes no y_true/y_pred")
            probs = readonly_array(self.probabilities)
            if probs.ndim != 1:
                raise ValueError("probabilities must be one value per sample")
            object.__setattr__(self, "probabilities", probs)
        else:
            if self.y_true is None or self.y_pred is None:
                raise ValueError("regression record needs y_true and y_pred")
            if self.probabilities is not None:
                raise ValueError("regression record takes no probabilities")
            y_true = readonly_array(self.y_true)
            y_pred = readonly_array(self.y_pred)
            if y_true.ndim != 1 or y_pred.ndim != 1:
                raise ValueError("y_true and y_pred must be vectors")
            if y_true.shape != y_pred.shape:
                raise ValueError("y_true and y_pred lengths differ")
            object.__setattr__(self, "y_true", y_true)
            object.__setattr__(self, "y_pred", y_pred)

    @property
    def sample_count(self) -> int:
        if self.task.is_classification:
            return int(self.probabilities.shape[0])
        return int(self.y_true.shape[0])


@dataclass(frozen=True)
class ConsensusResult:
    """Per-feature consensus scores plus the ranking they induce.

    The ranking is always consistent with the scores under the declared
    direction, ties broken by ascending feature index; construction through
    :meth:`from_scores` guarantees it and ``__post_init__`` re-checks it.
    """

    function_id: str
    scores: np.ndarray
    ranking: np.ndarray
    direction: Direction

    def __post_init__(self) -> None:
        scores = readonly_array(self.scores)
        ranking = readonly_array(self.ranking, dtype=np.int64)
        if scores.ndim != 1:
            raise ValueError("scores must be a vector")
        if ranking.shape != scores.shape:
            raise ValueError("ranking length must match scores")
        if not np.array_equal(np.sort(ranking), np.arange(scores.shape[0])):
            raise ValueError("ranking must be a permutation of 0..F-1")
        if not np.array_equal(ranking, rank_descending(scores, self.direction)):
            raise ValueError("ranking inconsistent with scores and direction")
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "ranking", ranking)

    @classmethod
    def from_scores(
        cls, function_id: str, scores, direction: Direction = Direction.HIGHER_IS_BETTER
    ) -> "ConsensusResult":
        scores = np.asarray(scores, dtype=float)
        return cls(function_id, scores, rank_descending(scores, direction), direction)

    @property
    def n_features(self) -> int:
        return int(self.scores.shape[0])

    @property
    def descending_scores(self) -> np.ndarray:
        """Scores on a shared higher-is-better axis.

        Rank-style results (lower is better, scores are mean ranks r) map
        through (F - r + 1) / F; the induced ordering is unchanged.
        """
        if self.direction is Direction.HIGHER_IS_BETTER:
            return self.scores
        f = float(self.n_features)
        out = (f - self.scores + 1.0) / f
        out.flags.writeable = False
        return out


@dataclass(frozen=True)
class GroundTruth:
    """Names of the features a benchmark's target actually uses."""

    expected_features: frozenset[str]

    def __post_init__(self) -> None:
        expected = frozenset(str(n) for n in self.expected_features)
        if not expected:
            raise ValueError("expected feature set must not be empty")
        object.__setattr__(self, "expected_features", expected)

    def expected_indices(self, catalog: FeatureCatalog) -> np.ndarray:
        """Ascending catalog indices of the expected features.

        Raises ValueError when a feature is unknown to the catalog or no
        noise feature remains (the benchmarks always include noise).
        """
        unknown = self.expected_features - set(catalog.names)
        if unknown:
            raise ValueError(f"expected features not in catalog: {sorted(unknown)}")
        if len(self.expected_features) >= catalog.count:
            raise ValueError("ground truth must leave at least one noise feature")
        return np.array(
            sorted(catalog.index_of(n) for n in self.expected_features), dtype=np.int64
        )


@dataclass(frozen=True)
class AttributionBundle:
    """A catalog, the sources explaining one model and optional predictions."""

    catalog: FeatureCatalog
    sources: tuple[AttributionSource, ...]
    predictions: PredictionRecord | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "sources", tuple(self.sources))

    def validate(self) -> "ValidationReport":
        return validate_bundle(self.catalog, list(self.sources), self.predictions)


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    source_id: str | None = None

    def __str__(self) -> str:
        where = f" [{self.source_id}]" if self.source_id else ""
        return f"{self.code}{where}: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.violations

    def messages(self) -> list[str]:
        return [str(v) for v in self.violations]


def validate_bundle(
    catalog: FeatureCatalog,
    sources: list[AttributionSource],
    preds: PredictionRecord | None = None,
) -> ValidationReport:
    """Check a bundle against the shared-shape contract.

    Never raises for bad data: every problem becomes a report item.  An OK
    report means all type invariants hold and every consensus function will
    accept the bundle (WISCA additionally requires predictions when local
    sources are present).
    """
    items: list[Violation] = []
    if not sources:
        items.append(Violation("no_sources", "bundle contains no attribution sources"))

    seen: set[str] = set()
    for src in sources:
        if src.source_id in seen:
            items.append(
                Violation(
                    "duplicate_source_id",
                    f"source id {src.source_id!r} appears more than once",
                    src.source_id,
                )
            )
        seen.add(src.source_id)

        if src.n_features != catalog.count:
            items.append(
                Violation(
                    "dimension_mismatch",
                    f"source has {src.n_features} feature columns, catalog has {catalog.count}",
                    src.source_id,
                )
            )
        if not np.isfinite(src.values).all():
            items.append(
                Violation(
                    "non_finite_values",
                    "attribution values contain NaN or infinity",
                    src.source_id,
                )
            )

    # all local sources (and predictions, when present) must agree on the
    # number of dataset samples
    sample_ref: int | None = preds.sample_count if preds is not None else None
    for src in sources:
        if src.scope is not Scope.LOCAL:
            continue
        if sample_ref is None:
            sample_ref = src.n_samples
        elif src.n_samples != sample_ref:
            items.append(
                Violation(
                    "sample_count_mismatch",
                    f"local source has {src.n_samples} rows, expected {sample_ref}",
                    src.source_id,
                )
            )

    if preds is not None:
        if preds.task.is_classification:
            probs = preds.probabilities
            if not np.isfinite(probs).all():
                items.append(
                    Violation("non_finite_predictions", "probabilities contain NaN or infinity")
                )
            elif ((probs < 0.0) | (probs > 1.0)).any():
                items.append(
                    Violation(
                        "probability_out_of_range",
                        "class probabilities must lie in [0, 1]",
                    )
                )
        else:
            if not (np.isfinite(preds.y_true).all() and np.isfinite(preds.y_pred).all()):
                items.append(
                    Violation(
                        "non_finite_predictions",
                        "regression targets or predictions contain NaN or infinity",
                    )
                )

    return ValidationReport(tuple(items))
