"""Metrics that judge a consensus ranking against known ground truth.

The hit rate is a position-weighted precision: each expected feature found
at rank i contributes 1/i, normalized so a ranking that puts all expected
features first scores exactly 1.  The separation distance measures, in
percent, the score gap between the weakest expected feature and the
strongest noise feature.  Spearman correlation and Jensen-Shannon
divergence compare a consensus score vector against individual sources.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .consensus import SourceAggregate, WISCA
from .errors import MetricError
from .types import (
    ConsensusResult,
    Direction,
    FeatureCatalog,
    GroundTruth,
    rank_descending,
)

__all__ = [
    "HitRateConfig",
    "DistanceConfig",
    "hit_rate",
    "hit_rate_from_ranking",
    "separation_distance",
    "average_ranks",
    "spearman",
    "jensen_shannon",
    "FunctionEvaluation",
    "SourceEvaluation",
    "EvaluationReport",
    "evaluate_suite",
]


@dataclass(frozen=True)
class HitRateConfig:
    """How many ranked positions the hit rate examines.

    ``top_n=None`` scans the full ranking (the default), letting late hits
    still contribute their decayed 1/i weight instead of being clipped.
    """

    top_n: int | None = None

    def __post_init__(self) -> None:
        if self.top_n is not None and self.top_n < 1:
            raise ValueError("top_n must be at least 1")


@dataclass(frozen=True)
class DistanceConfig:
    """Division guard for the separation distance."""

    epsilon: float = 1e-6

    def __post_init__(self) -> None:
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be positive")


def hit_rate_from_ranking(
    ranking, expected_indices, top_n: int | None = None
) -> float:
    """Position-weighted precision of a ranking, in [0, 1].

    ``ranking`` lists feature indices from most to least important.  Each
    of the first ``top_n`` positions holding an expected feature adds 1/i;
    the total is normalized by sum(1/i, i=1..min(n, top_n)) where n is the
    number of expected features.
    """
    ranked = [int(i) for i in ranking]
    expected = {int(i) for i in expected_indices}
    n_expected = len(expected)
    window = len(ranked) if top_n is None else top_n
    if not 1 <= window <= len(ranked):
        raise ValueError("top_n must lie in 1..F")
    # fsum keeps the perfect case exactly 1: numerator and denominator then
    # accumulate the same terms
    numerator = math.fsum(
        1.0 / i for i, feat in enumerate(ranked[:window], start=1) if feat in expected
    )
    denominator = math.fsum(1.0 / i for i in range(1, min(n_expected, window) + 1))
    return numerator / denominator


def hit_rate(
    result: ConsensusResult,
    truth: GroundTruth,
    catalog: FeatureCatalog,
    cfg: HitRateConfig = HitRateConfig(),
) -> float:
    """Hit rate of a consensus result against the expected feature set."""
    if result.n_features != catalog.count:
        raise ValueError("result and catalog disagree on feature count")
    expected = truth.expected_indices(catalog)
    return hit_rate_from_ranking(result.ranking, expected, cfg.top_n)


def separation_distance(
    result: ConsensusResult,
    truth: GroundTruth,
    catalog: FeatureCatalog,
    cfg: DistanceConfig = DistanceConfig(),
) -> float:
    """Percent gap between expected and noise features.

    dist = (min expected score - max noise score) / max(min expected score,
    epsilon) * 100, computed on the higher-is-better view of the scores.
    Positive iff every expected feature outscores every noise feature.
    """
    if result.n_features != catalog.count:
        raise ValueError("result and catalog disagree on feature count")
    expected = truth.expected_indices(catalog)
    scores = result.descending_scores
    mask = np.zeros(catalog.count, dtype=bool)
    mask[expected] = True
    expected_min = float(scores[mask].min())
    noise_max = float(scores[~mask].max())
    # scores go to percent before differencing; keeps round decimal gaps exact
    return (expected_min * 100.0 - noise_max * 100.0) / max(expected_min, cfg.epsilon)


def average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks, ties sharing the average of their positions."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.shape[0], dtype=float)
    sorted_vals = values[order]
    i = 0
    while i < values.shape[0]:
        j = i
        while j + 1 < values.shape[0] and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman(x, y) -> float:
    """Spearman rank correlation with average ranks for ties, in [-1, 1]."""
    x_arr = np.asarray(x, dtype=float)
    y_arr = np.asarray(y, dtype=float)
    if x_arr.ndim != 1 or y_arr.ndim != 1 or x_arr.shape != y_arr.shape:
        raise ValueError("inputs must be equally long vectors")
    if x_arr.shape[0] < 2:
        raise MetricError("spearman needs at least two observations")
    rx = average_ranks(x_arr)
    ry = average_ranks(y_arr)
    rx -= rx.mean()
    ry -= ry.mean()
    denom = math.sqrt(float((rx * rx).sum()) * float((ry * ry).sum()))
    if denom == 0.0:
        raise MetricError("spearman is undefined for constant rankings")
    return float((rx * ry).sum() / denom)


def _as_distribution(values: np.ndarray) -> np.ndarray:
    # signed attributions are shifted into [0, 1] first; a vector with no
    # mass left cannot be normalized
    if (values < 0.0).any():
        lo, hi = values.min(), values.max()
        values = (values - lo) / (hi - lo) if hi > lo else np.zeros_like(values)
    total = values.sum()
    if not total > 0.0:
        raise MetricError("vector has no positive mass to form a distribution")
    return values / total


def jensen_shannon(x, y) -> float:
    """Base-2 Jensen-Shannon divergence of two attribution vectors, in [0, 1].

    Inputs are converted to distributions (min-max shift if any entry is
    negative, then normalization to unit sum).  Zero entries are handled
    exactly (0 log 0 = 0), so identical inputs give 0 and disjoint supports
    give 1.
    """
    x_arr = np.asarray(x, dtype=float)
    y_arr = np.asarray(y, dtype=float)
    if x_arr.ndim != 1 or y_arr.ndim != 1 or x_arr.shape != y_arr.shape:
        raise ValueError("inputs must be equally long vectors")
    if not (np.isfinite(x_arr).all() and np.isfinite(y_arr).all()):
        raise ValueError("inputs must be finite")
    p = _as_distribution(x_arr)
    q = _as_distribution(y_arr)
    mix = 0.5 * (p + q)

    def half_divergence(dist: np.ndarray) -> float:
        nz = dist > 0.0
        return float((dist[nz] * np.log2(dist[nz] / mix[nz])).sum())

    return 0.5 * half_divergence(p) + 0.5 * half_divergence(q)


@dataclass(frozen=True)
class FunctionEvaluation:
    """Metric row for one consensus function; ``error`` marks failed cells."""

    function_id: str
    hit_rate: float | None = None
    separation_distance: float | None = None
    error: str | None = None


@dataclass(frozen=True)
class SourceEvaluation:
    """Metric row for one attribution source, compared against wisca."""

    source_id: str
    hit_rate: float | None = None
    spearman_vs_wisca: float | None = None
    jsd_vs_wisca: float | None = None
    error: str | None = None


@dataclass(frozen=True)
class EvaluationReport:
    functions: tuple[FunctionEvaluation, ...]
    sources: tuple[SourceEvaluation, ...]

    def function_row(self, function_id: str) -> FunctionEvaluation:
        for row in self.functions:
            if row.function_id == function_id:
                return row
        raise KeyError(function_id)

    def source_row(self, source_id: str) -> SourceEvaluation:
        for row in self.sources:
            if row.source_id == source_id:
                return row
        raise KeyError(source_id)

    def to_json_dict(self) -> dict:
        return {
            "functions": [
                {
                    "function_id": r.function_id,
                    "hit_rate": r.hit_rate,
                    "separation_distance": r.separation_distance,
                    "error": r.error,
                }
                for r in self.functions
            ],
            "sources": [
                {
                    "source_id": r.source_id,
                    "hit_rate": r.hit_rate,
                    "spearman_vs_wisca": r.spearman_vs_wisca,
                    "jsd_vs_wisca": r.jsd_vs_wisca,
                    "error": r.error,
                }
                for r in self.sources
            ],
        }


def evaluate_suite(
    results: dict[str, ConsensusResult],
    truth: GroundTruth,
    catalog: FeatureCatalog,
    aggregates: list[SourceAggregate],
    hit_cfg: HitRateConfig = HitRateConfig(),
    dist_cfg: DistanceConfig = DistanceConfig(),
    failures: dict[str, str] | None = None,
) -> EvaluationReport:
    """Score every consensus function and source against the ground truth.

    Produces hit rate and separation distance per function, hit rate per
    source aggregate, and Spearman / Jensen-Shannon agreement between the
    wisca score vector and each source.  Metric errors mark the affected
    cell instead of aborting the report.
    """
    function_rows: list[FunctionEvaluation] = []
    for function_id, result in results.items():
        try:
            function_rows.append(
                FunctionEvaluation(
                    function_id,
                    hit_rate(result, truth, catalog, hit_cfg),
                    separation_distance(result, truth, catalog, dist_cfg),
                )
            )
        except ValueError as exc:
            function_rows.append(FunctionEvaluation(function_id, error=str(exc)))
    for function_id, message in (failures or {}).items():
        function_rows.append(FunctionEvaluation(function_id, error=message))

    wisca_result = results.get(WISCA)
    source_rows: list[SourceEvaluation] = []
    for aggregate in aggregates:
        ranking = rank_descending(aggregate.values, Direction.HIGHER_IS_BETTER)
        row_hit: float | None = None
        row_spearman: float | None = None
        row_jsd: float | None = None
        errors: list[str] = []
        try:
            expected = truth.expected_indices(catalog)
            row_hit = hit_rate_from_ranking(ranking, expected, hit_cfg.top_n)
        except ValueError as exc:
            errors.append(str(exc))
        if wisca_result is None:
            errors.append("wisca unavailable")
        else:
            try:
                row_spearman = spearman(wisca_result.scores, aggregate.values)
            except ValueError as exc:
                errors.append(f"spearman: {exc}")
            try:
                row_jsd = jensen_shannon(wisca_result.scores, aggregate.values)
            except ValueError as exc:
                errors.append(f"jsd: {exc}")
        source_rows.append(
            SourceEvaluation(
                aggregate.source_id,
                row_hit,
                row_spearman,
                row_jsd,
                "; ".join(errors) if errors else None,
            )
        )

    return EvaluationReport(tuple(function_rows), tuple(source_rows))
