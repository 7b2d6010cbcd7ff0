"""Assembly of attribution-bundle documents (schema_version "1").

The consensus engine consumes a single JSON interchange format; this
module builds and writes such documents without depending on the engine
itself.  Scope tagging is purely dimensional: a vector is a global source,
a samples x features matrix is a local source.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

SCHEMA_VERSION = "1"

TASK_BINARY = "binary_classification"
TASK_MULTICLASS = "multiclass_classification"
TASK_REGRESSION = "regression"


class ExportError(ValueError):
    """The explainer outputs cannot form a valid bundle."""


def source_entry(source_id: str, values: np.ndarray, n_features: int) -> dict:
    """Bundle source entry for an attribution array, scope by dimensionality.

    Raises ExportError for shapes that disagree with the dataset before
    anything is written.
    """
    values = np.asarray(values, dtype=float)
    if not np.isfinite(values).all():
        raise ExportError(f"source {source_id!r}: attributions contain NaN or infinity")
    if values.ndim == 1:
        if values.shape[0] != n_features:
            raise ExportError(
                f"source {source_id!r}: vector length {values.shape[0]} "
                f"does not match {n_features} features"
            )
        return {"source_id": source_id, "scope": "global", "values": values.tolist()}
    if values.ndim == 2:
        if values.shape[1] != n_features:
            raise ExportError(
                f"source {source_id!r}: matrix width {values.shape[1]} "
                f"does not match {n_features} features"
            )
        return {"source_id": source_id, "scope": "local", "values": values.tolist()}
    raise ExportError(
        f"source {source_id!r}: expected a vector or matrix, got {values.ndim} axes"
    )


def bundle_document(
    feature_names: list[str],
    task: str,
    sources: list[dict],
    predictions: dict | None,
) -> dict:
    if task not in (TASK_BINARY, TASK_MULTICLASS, TASK_REGRESSION):
        raise ExportError(f"unknown task: {task!r}")
    if not sources:
        raise ExportError("a bundle needs at least one source")
    doc: dict = {
        "schema_version": SCHEMA_VERSION,
        "task": task,
        "features": list(feature_names),
        "sources": sources,
    }
    if predictions is not None:
        doc["predictions"] = predictions
    return doc


def write_document(doc: dict, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path
