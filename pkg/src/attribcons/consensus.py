"""The six consensus functions.

Arithmetic, harmonic and geometric means operate on per-source aggregate
vectors; voting and relative position operate on rankings; the weighted
scaled consensus (wisca) combines min-max scaled attributions with
per-sample confidence weights so that accurate predictions count more and
local sources do not outvote global ones.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .scaling import (
    ClassificationFactor,
    RegressionFactor,
    ScalingPolicy,
    class_factor,
    minmax_scale,
    regression_factor,
)
from .types import (
    AttributionBundle,
    AttributionSource,
    ConsensusResult,
    Direction,
    PredictionRecord,
    Scope,
)

logger = logging.getLogger(__name__)

__all__ = [
    "ARITHMETIC_MEAN",
    "HARMONIC_MEAN",
    "GEOMETRIC_MEAN",
    "VOTING",
    "RELATIVE_POSITION",
    "WISCA",
    "ALL_FUNCTIONS",
    "ConsensusConfig",
    "WiscaConfig",
    "SourceAggregate",
    "ConsensusRun",
    "aggregate_source",
    "arithmetic_mean",
    "harmonic_mean",
    "geometric_mean",
    "voting",
    "relative_position",
    "wisca",
    "run_all",
]

ARITHMETIC_MEAN = "arithmetic_mean"
HARMONIC_MEAN = "harmonic_mean"
GEOMETRIC_MEAN = "geometric_mean"
VOTING = "voting"
RELATIVE_POSITION = "relative_position"
WISCA = "wisca"

ALL_FUNCTIONS = (
    ARITHMETIC_MEAN,
    HARMONIC_MEAN,
    GEOMETRIC_MEAN,
    VOTING,
    RELATIVE_POSITION,
    WISCA,
)


@dataclass(frozen=True)
class WiscaConfig:
    """Scaling policy and correction factors used by the wisca function."""

    scaling: ScalingPolicy = ScalingPolicy()
    class_factor: ClassificationFactor = ClassificationFactor()
    reg_factor: RegressionFactor = RegressionFactor()


@dataclass(frozen=True)
class ConsensusConfig:
    """Knobs shared by the consensus functions.

    ``voting_top_n`` is the ballot size N (choosing it is a judgment call;
    10 is the default and it must not exceed the feature count).
    ``epsilon_clamp`` protects the harmonic and geometric means from zero
    or negative attributions unless ``strict_domain`` turns such inputs
    into hard errors.
    """

    voting_top_n: int = 10
    epsilon_clamp: float = 1e-9
    strict_domain: bool = False
    wisca: WiscaConfig = field(default_factory=WiscaConfig)

    def __post_init__(self) -> None:
        if self.voting_top_n < 1:
            raise ValueError("voting_top_n must be at least 1")
        if self.epsilon_clamp <= 0.0:
            raise ValueError("epsilon_clamp must be positive")


@dataclass(frozen=True)
class SourceAggregate:
    """One vector per source: global values as-is, local column means."""

    source_id: str
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float, copy=True)
        if values.ndim != 1:
            raise ValueError("aggregate must be a vector")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)


def aggregate_source(source: AttributionSource) -> SourceAggregate:
    """Collapse a source to one value per feature.

    Local sources average each feature's attribution across all samples;
    global sources pass through unchanged.
    """
    if source.scope is Scope.GLOBAL:
        return SourceAggregate(source.source_id, source.values)
    return SourceAggregate(source.source_id, source.values.mean(axis=0))


def _stack(aggregates: list[SourceAggregate]) -> np.ndarray:
    if not aggregates:
        raise ValueError("at least one source aggregate is required")
    widths = {a.values.shape[0] for a in aggregates}
    if len(widths) != 1:
        raise ValueError(f"aggregates disagree on feature count: {sorted(widths)}")
    return np.stack([a.values for a in aggregates])


def arithmetic_mean(aggregates: list[SourceAggregate]) -> ConsensusResult:
    """Plain per-feature average of the source aggregates."""
    matrix = _stack(aggregates)
    return ConsensusResult.from_scores(
        ARITHMETIC_MEAN, matrix.mean(axis=0), Direction.HIGHER_IS_BETTER
    )


def _clamped(matrix: np.ndarray, cfg: ConsensusConfig, function_id: str) -> np.ndarray:
    if cfg.strict_domain:
        if (matrix <= 0.0).any():
            raise DomainError(
                f"{function_id} requires strictly positive attributions in "
                "strict mode; found zero or negative values"
            )
        return matrix
    low = matrix <= cfg.epsilon_clamp
    if low.any():
        features = np.flatnonzero(low.any(axis=0))
        logger.debug(
            "%s: clamped %d attribution(s) up to %.3g in feature column(s) %s",
            function_id,
            int(low.sum()),
            cfg.epsilon_clamp,
            features.tolist(),
        )
    return np.maximum(matrix, cfg.epsilon_clamp)


def harmonic_mean(
    aggregates: list[SourceAggregate], cfg: ConsensusConfig = ConsensusConfig()
) -> ConsensusResult:
    """Per-feature n / sum(1/x) across sources.

    Intolerant of small values by construction: one near-zero attribution
    collapses that feature's consensus no matter what the other sources say.
    """
    matrix = _clamped(_stack(aggregates), cfg, HARMONIC_MEAN)
    scores = matrix.shape[0] / (1.0 / matrix).sum(axis=0)
    return ConsensusResult.from_scores(HARMONIC_MEAN, scores, Direction.HIGHER_IS_BETTER)


def geometric_mean(
    aggregates: list[SourceAggregate], cfg: ConsensusConfig = ConsensusConfig()
) -> ConsensusResult:
    """Per-feature n-th root of the product across sources.

    Computed as exp(mean(log x)) for stability; a single (near-)zero
    attribution forces the feature's consensus toward zero.
    """
    matrix = _clamped(_stack(aggregates), cfg, GEOMETRIC_MEAN)
    scores = np.exp(np.log(matrix).mean(axis=0))
    return ConsensusResult.from_scores(GEOMETRIC_MEAN, scores, Direction.HIGHER_IS_BETTER)


def _ballots(source: AttributionSource) -> np.ndarray:
    """Ballot matrix of a source: its vector, or one row per sample."""
    if source.scope is Scope.GLOBAL:
        return source.values[np.newaxis, :]
    return source.values


def voting(
    sources: list[AttributionSource], cfg: ConsensusConfig = ConsensusConfig()
) -> ConsensusResult:
    """Count how often each feature lands in a ballot's top N.

    A global source casts one ballot; a local source casts one ballot per
    sample, so all local explanations vote equally.  Within a ballot the
    top N features by descending attribution (ties to lower index) each
    receive one vote.
    """
    if not sources:
        raise ValueError("at least one source is required")
    n_features = sources[0].n_features
    if any(s.n_features != n_features for s in sources):
        raise ValueError("sources disagree on feature count")
    if cfg.voting_top_n > n_features:
        raise DomainError(
            f"voting_top_n={cfg.voting_top_n} exceeds the feature count {n_features}"
        )

    counts = np.zeros(n_features, dtype=float)
    for source in sources:
        ballots = _ballots(source)
        order = np.argsort(-ballots, axis=1, kind="stable")
        top = order[:, : cfg.voting_top_n]
        counts += np.bincount(top.ravel(), minlength=n_features)
    return ConsensusResult.from_scores(VOTING, counts, Direction.HIGHER_IS_BETTER)


def _rank_positions(values: np.ndarray) -> np.ndarray:
    """1-based position of each feature when sorted by descending value."""
    order = np.argsort(-values, kind="stable")
    positions = np.empty(values.shape[0], dtype=float)
    positions[order] = np.arange(1, values.shape[0] + 1)
    return positions


def relative_position(aggregates: list[SourceAggregate]) -> ConsensusResult:
    """Mean 1-based rank of each feature across sources; lower is better.

    Ignores attribution magnitudes entirely, which normalizes scales for
    free but makes ties (common with sparse explainers) fall back to the
    deterministic index tie-break.
    """
    matrix = _stack(aggregates)
    ranks = np.stack([_rank_positions(row) for row in matrix])
    return ConsensusResult.from_scores(
        RELATIVE_POSITION, ranks.mean(axis=0), Direction.LOWER_IS_BETTER
    )


def _wisca_source_value(
    source: AttributionSource,
    preds: PredictionRecord | None,
    cfg: WiscaConfig,
) -> np.ndarray:
    scaled = minmax_scale(source, cfg.scaling).values
    if source.scope is Scope.GLOBAL:
        return scaled

    if preds is None:
        raise DomainError(
            f"local source {source.source_id!r} requires prediction metadata "
            "for the confidence weights"
        )
    n_samples = scaled.shape[0]
    if preds.sample_count != n_samples:
        raise DomainError(
            f"local source {source.source_id!r} has {n_samples} rows but the "
            f"prediction record covers {preds.sample_count} samples"
        )
    if preds.task.is_classification:
        weights = class_factor(preds.probabilities, cfg.class_factor)
    else:
        weights = regression_factor(preds.y_true, preds.y_pred, cfg.reg_factor)
    # sum of per-sample scaled attributions, confidence weighted, divided by
    # the sample count so local sources weigh the same as global ones
    return (scaled * weights[:, np.newaxis]).sum(axis=0) / n_samples


def wisca(
    sources: list[AttributionSource],
    preds: PredictionRecord | None = None,
    cfg: ConsensusConfig = ConsensusConfig(),
) -> ConsensusResult:
    """Weighted scaled consensus attributions.

    Every source is min-max scaled first.  Global sources contribute their
    scaled vector unchanged.  Local sources contribute the sample-count
    normalized sum of scaled rows, each row weighted by the correction
    factor of its prediction (probability curve for classification,
    exp(-alpha |y - y_pred|) for regression).  Per-source vectors are then
    averaged with equal weight.
    """
    if not sources:
        raise ValueError("at least one source is required")
    widths = {s.n_features for s in sources}
    if len(widths) != 1:
        raise ValueError(f"sources disagree on feature count: {sorted(widths)}")
    per_source = [_wisca_source_value(s, preds, cfg.wisca) for s in sources]
    scores = np.stack(per_source).mean(axis=0)
    return ConsensusResult.from_scores(WISCA, scores, Direction.HIGHER_IS_BETTER)


def _canonical_order(entries: dict) -> dict:
    ordered = {fid: entries[fid] for fid in ALL_FUNCTIONS if fid in entries}
    ordered.update({fid: v for fid, v in entries.items() if fid not in ordered})
    return ordered


@dataclass(frozen=True)
class ConsensusRun:
    """Outcome of running every consensus function on one bundle.

    Entries keep the canonical function order no matter how the run was
    assembled, so downstream tables are stable across entry points.
    """

    results: dict[str, ConsensusResult]
    failures: dict[str, str]

    def __post_init__(self) -> None:
        object.__setattr__(self, "results", _canonical_order(self.results))
        object.__setattr__(self, "failures", _canonical_order(self.failures))


def run_all(bundle: AttributionBundle, cfg: ConsensusConfig = ConsensusConfig()) -> ConsensusRun:
    """Run all six consensus functions over a validated bundle.

    Per-function errors become failure entries instead of aborting the
    batch, so a bundle without predictions still yields the five functions
    that do not need them.
    """
    sources = list(bundle.sources)
    aggregates = [aggregate_source(s) for s in sources]

    runners = {
        ARITHMETIC_MEAN: lambda: arithmetic_mean(aggregates),
        HARMONIC_MEAN: lambda: harmonic_mean(aggregates, cfg),
        GEOMETRIC_MEAN: lambda: geometric_mean(aggregates, cfg),
        VOTING: lambda: voting(sources, cfg),
        RELATIVE_POSITION: lambda: relative_position(aggregates),
        WISCA: lambda: wisca(sources, bundle.predictions, cfg),
    }

    results: dict[str, ConsensusResult] = {}
    failures: dict[str, str] = {}
    for function_id in ALL_FUNCTIONS:
        try:
            results[function_id] = runners[function_id]()
        except ValueError as exc:  # DomainError is a ValueError
            logger.warning("consensus function %s failed: %s", function_id, exc)
            failures[function_id] = str(exc)
    return ConsensusRun(results, failures)
