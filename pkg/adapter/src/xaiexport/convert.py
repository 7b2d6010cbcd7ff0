"""Normalization of raw explainer outputs to dense attribution arrays.

The engine requires dense rows, one value per catalog feature.  This
module densifies LIME-style sparse weight lists and reduces multiclass
attribution tensors to the predicted class's slice, leaving all scaling to
the engine.
"""

from __future__ import annotations

import numpy as np

from .schema import ExportError

__all__ = ["densify_weight_lists", "reduce_multiclass", "normalize_output"]


def densify_weight_lists(per_sample, feature_names: list[str]) -> np.ndarray:
    """Dense samples x features matrix from per-sample (feature, weight)
    pairs; features a sample does not mention get 0.

    Features may be named (catalog names) or indexed (integers).
    """
    index = {name: i for i, name in enumerate(feature_names)}
    n_features = len(feature_names)
    matrix = np.zeros((len(per_sample), n_features))
    for row, pairs in enumerate(per_sample):
        for feature, weight in pairs:
            if isinstance(feature, str):
                if feature not in index:
                    raise ExportError(f"sample {row}: unknown feature {feature!r}")
                col = index[feature]
            else:
                col = int(feature)
                if not 0 <= col < n_features:
                    raise ExportError(f"sample {row}: feature index {col} out of range")
            matrix[row, col] = float(weight)
    return matrix


def reduce_multiclass(tensor: np.ndarray, predicted_class_idx: np.ndarray) -> np.ndarray:
    """samples x features matrix from a samples x features x classes tensor
    by taking each sample's predicted-class slice."""
    tensor = np.asarray(tensor, dtype=float)
    if tensor.ndim != 3:
        raise ExportError(f"expected a 3-axis tensor, got {tensor.ndim} axes")
    predicted = np.asarray(predicted_class_idx, dtype=np.int64)
    if predicted.shape[0] != tensor.shape[0]:
        raise ExportError(
            f"{tensor.shape[0]} attribution rows but {predicted.shape[0]} predictions"
        )
    if predicted.min() < 0 or predicted.max() >= tensor.shape[2]:
        raise ExportError("predicted class index outside the tensor's class axis")
    return tensor[np.arange(tensor.shape[0]), :, predicted]


def normalize_output(values, predicted_class_idx: np.ndarray | None = None) -> np.ndarray:
    """Vector or matrix from an arbitrary explainer output array.

    3-axis outputs need the predicted classes for the slice reduction.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim in (1, 2):
        return values
    if values.ndim == 3:
        if predicted_class_idx is None:
            raise ExportError(
                "multiclass attribution tensor needs predicted classes to reduce"
            )
        return reduce_multiclass(values, predicted_class_idx)
    raise ExportError(f"cannot interpret an attribution array with {values.ndim} axes")
