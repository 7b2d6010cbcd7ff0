"""Min-max attribution scaling and the confidence correction factors.

Scaling maps every attribution into [0, 1] via (x - min) / (max - min) so
sources with different output ranges become comparable.  Correction factors
down-weight samples the model was unsure about: a family of curves over the
predicted-class probability for classification, and an exponential decay of
the absolute residual for regression.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .types import AttributionSource, Scope

__all__ = [
    "ScalingMode",
    "ScalingPolicy",
    "FactorFamily",
    "ClassificationFactor",
    "RegressionFactor",
    "minmax_scale",
    "minmax_scale_array",
    "class_factor",
    "regression_factor",
]


class ScalingMode(enum.Enum):
    """Grouping over which one min/max pair is taken."""

    PER_SOURCE_MATRIX = "per_source_matrix"
    PER_SAMPLE = "per_sample"


@dataclass(frozen=True)
class ScalingPolicy:
    """How to min-max scale a source.

    ``degenerate_value`` replaces every entry of a constant group (max ==
    min): a source that cannot distinguish features contributes nothing by
    default.
    """

    mode: ScalingMode = ScalingMode.PER_SOURCE_MATRIX
    degenerate_value: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.degenerate_value <= 1.0:
            raise ValueError("degenerate_value must lie in [0, 1]")


def minmax_scale_array(
    values: np.ndarray, axis: int | None = None, degenerate_value: float = 0.0
) -> np.ndarray:
    """Scale an array to [0, 1] with one min/max per group along ``axis``.

    ``axis=None`` treats the whole array as one group.  Constant groups map
    to ``degenerate_value``.  Order within a group is preserved.
    """
    values = np.asarray(values, dtype=float)
    lo = values.min(axis=axis, keepdims=True)
    hi = values.max(axis=axis, keepdims=True)
    span = hi - lo
    with np.errstate(invalid="ignore", divide="ignore"):
        scaled = (values - lo) / span
    return np.where(span > 0.0, scaled, degenerate_value)


def minmax_scale(
    source: AttributionSource, policy: ScalingPolicy = ScalingPolicy()
) -> AttributionSource:
    """Return ``source`` with values min-max scaled into [0, 1].

    Global vectors always form a single group.  Local matrices use one
    min/max over the whole matrix (PER_SOURCE_MATRIX, the default, which
    preserves cross-sample magnitude relations) or one per row (PER_SAMPLE).
    """
    if source.scope is Scope.LOCAL and policy.mode is ScalingMode.PER_SAMPLE:
        axis: int | None = 1
    else:
        axis = None
    scaled = minmax_scale_array(source.values, axis=axis, degenerate_value=policy.degenerate_value)
    return AttributionSource(source.source_id, source.scope, scaled)


class FactorFamily(enum.Enum):
    PARABOLA = "parabola"
    POWER = "power"
    COSINE = "cosine"
    COSINE_CORRECTED = "cosine2"
    EXPONENTIAL = "exp"
    NEGATIVE_ENTROPY = "negentropy"


@dataclass(frozen=True)
class ClassificationFactor:
    """Correction-factor curve over the predicted-class probability.

    All families map [0, 1] into [0, 1].  Parabola, power, exponential,
    negative entropy and the corrected cosine are symmetric around p = 0.5
    where they vanish; the plain cosine is the monotone-decreasing variant,
    kept verbatim next to its symmetric correction.

    Parabola is the default family.
    """

    family: FactorFamily = FactorFamily.PARABOLA
    power_exponent: float = 2.0
    exp_steepness: float = 5.0

    def __post_init__(self) -> None:
        if self.power_exponent <= 0.0:
            raise ValueError("power exponent must be positive")
        if self.exp_steepness <= 0.0:
            raise ValueError("exponential steepness must be positive")


@dataclass(frozen=True)
class RegressionFactor:
    """Exponential decay rate for the regression residual weight."""

    alpha: float = 1.0

    def __post_init__(self) -> None:
        if self.alpha <= 0.0:
            raise ValueError("alpha must be positive")


def class_factor(p, cfg: ClassificationFactor = ClassificationFactor()):
    """Evaluate the selected correction factor at probability ``p``.

    Accepts a scalar or array; returns the same shape.  Values outside
    [0, 1] raise DomainError.  0 * log2(0) is treated as 0.
    """
    arr = np.asarray(p, dtype=float)
    if arr.size and (not np.isfinite(arr).all() or arr.min() < 0.0 or arr.max() > 1.0):
        raise DomainError("probabilities must lie in [0, 1]")

    fam = cfg.family
    if fam is FactorFamily.PARABOLA:
        out = 1.0 - 4.0 * arr * (1.0 - arr)
    elif fam is FactorFamily.POWER:
        out = np.abs(2.0 * arr - 1.0) ** cfg.power_exponent
    elif fam is FactorFamily.COSINE:
        out = (1.0 + np.cos(np.pi * arr)) / 2.0
    elif fam is FactorFamily.COSINE_CORRECTED:
        out = (1.0 + np.cos(2.0 * np.pi * arr)) / 2.0
    elif fam is FactorFamily.EXPONENTIAL:
        out = 1.0 - np.exp(-cfg.exp_steepness * (2.0 * arr - 1.0) ** 2)
    elif fam is FactorFamily.NEGATIVE_ENTROPY:
        safe = np.clip(arr, np.finfo(float).tiny, 1.0)
        safe_c = np.clip(1.0 - arr, np.finfo(float).tiny, 1.0)
        out = 1.0 + np.where(arr > 0.0, arr * np.log2(safe), 0.0) + np.where(
            arr < 1.0, (1.0 - arr) * np.log2(safe_c), 0.0
        )
    else:  # pragma: no cover - enum is closed
        raise ValueError(f"unknown factor family: {fam}")

    # absorb last-ulp rounding so the [0, 1] range invariant holds exactly
    out = np.clip(out, 0.0, 1.0)
    return float(out) if arr.ndim == 0 else out


def regression_factor(y_true, y_pred, cfg: RegressionFactor = RegressionFactor()):
    """Residual weight exp(-alpha * |y_true - y_pred|), in (0, 1].

    Equals 1 exactly when the prediction is perfect and decays strictly with
    the absolute residual.
    """
    y_true_arr = np.asarray(y_true, dtype=float)
    y_pred_arr = np.asarray(y_pred, dtype=float)
    out = np.exp(-cfg.alpha * np.abs(y_true_arr - y_pred_arr))
    return float(out) if out.ndim == 0 else out
