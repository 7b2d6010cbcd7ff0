"""Export job: run/collect explainer outputs and write one bundle file.

The model handle is opaque: anything with the usual predict /
predict_proba protocol works, which covers the mainstream toolkits.
Explainers are never re-implemented here; selections either call the
ecosystem implementation (permutation, impurity, shap, lime) or ingest
precomputed outputs from memory or disk.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .convert import densify_weight_lists, normalize_output
from .schema import (
    ExportError,
    TASK_BINARY,
    TASK_MULTICLASS,
    TASK_REGRESSION,
    bundle_document,
    source_entry,
    write_document,
)

__all__ = ["ExplainerSelection", "ExportJob", "export_bundle", "parse_selection"]

_RUNNER_NAMES = ("permutation", "impurity", "shap", "lime")


@dataclass(frozen=True)
class ExplainerSelection:
    """One requested source: a named ecosystem explainer or a precomputed
    output (inline array, LIME-style weight lists, or a .npy/.json file)."""

    name: str
    source_id: str | None = None
    values: object = None
    path: str | None = None

    @property
    def effective_id(self) -> str:
        if self.source_id:
            return self.source_id
        if self.path:
            return Path(self.path).stem
        return self.name


def parse_selection(text: str) -> ExplainerSelection:
    """Selection from CLI syntax: an explainer name or ``file:PATH``."""
    text = text.strip()
    if text.startswith("file:"):
        return ExplainerSelection("precomputed", path=text[len("file:"):])
    if text in _RUNNER_NAMES:
        return ExplainerSelection(text)
    raise ExportError(
        f"unknown explainer {text!r}; expected one of {', '.join(_RUNNER_NAMES)} or file:PATH"
    )


@dataclass(frozen=True)
class ExportJob:
    model: object
    data: np.ndarray
    feature_names: list[str]
    explainers: list[ExplainerSelection]
    out_path: str | Path
    y: np.ndarray | None = None
    seed: int = 0
    permutation_repeats: int = 5
    extras: dict = field(default_factory=dict)


def _is_classifier(model) -> bool:
    return hasattr(model, "predict_proba")


def _predictions(job: ExportJob) -> tuple[str, dict, np.ndarray | None]:
    """Task name, predictions section, and predicted class indices."""
    X = job.data
    if _is_classifier(job.model):
        proba = np.asarray(job.model.predict_proba(X), dtype=float)
        if proba.ndim != 2 or proba.shape[0] != X.shape[0]:
            raise ExportError("predict_proba returned an unexpected shape")
        predicted_idx = proba.argmax(axis=1)
        task = TASK_BINARY if proba.shape[1] == 2 else TASK_MULTICLASS
        section = {
            "probabilities": proba[np.arange(X.shape[0]), predicted_idx].tolist()
        }
        return task, section, predicted_idx
    if job.y is None:
        raise ExportError("regression export needs the true targets (y)")
    y_pred = np.asarray(job.model.predict(X), dtype=float)
    if y_pred.shape[0] != X.shape[0]:
        raise ExportError("predict returned an unexpected shape")
    section = {
        "y_true": np.asarray(job.y, dtype=float).tolist(),
        "y_pred": y_pred.tolist(),
    }
    return TASK_REGRESSION, section, None


def _load_precomputed(path: str):
    file = Path(path)
    if not file.exists():
        raise ExportError(f"precomputed attribution file not found: {file}")
    if file.suffix == ".npy":
        return np.load(file)
    if file.suffix == ".json":
        return json.loads(file.read_text(encoding="utf-8"))
    raise ExportError(f"unsupported precomputed format: {file.suffix!r}")


def _looks_like_weight_lists(raw) -> bool:
    # LIME-style: list of samples, each a list of (feature, weight) pairs
    # with named or indexed features; distinguished from plain matrices by
    # the pair structure
    if not isinstance(raw, (list, tuple)) or not raw:
        return False
    first = raw[0]
    if not isinstance(first, (list, tuple)):
        return False
    return all(
        isinstance(item, (list, tuple)) and len(item) == 2
        and isinstance(item[0], (str, int)) and not isinstance(item[0], bool)
        and isinstance(item[1], (int, float))
        for sample in raw for item in sample
    )


def _run_permutation(job: ExportJob) -> np.ndarray:
    if job.y is None:
        raise ExportError("permutation importance needs the true targets (y)")
    import sklearn.inspection

    result = sklearn.inspection.permutation_importance(
        job.model,
        job.data,
        job.y,
        n_repeats=job.permutation_repeats,
        random_state=job.seed,
    )
    return result.importances_mean


def _run_impurity(job: ExportJob) -> np.ndarray:
    importances = getattr(job.model, "feature_importances_", None)
    if importances is None:
        raise ExportError("model exposes no impurity-based feature importances")
    return np.asarray(importances, dtype=float)


def _run_shap(job: ExportJob):
    try:
        import shap
    except ImportError:
        raise ExportError(
            "shap is not installed; install the 'explainers' extra or pass file:PATH"
        ) from None
    explainer = shap.Explainer(job.model, job.data)
    return np.asarray(explainer(job.data).values, dtype=float)


def _run_lime(job: ExportJob):
    try:
        import lime.lime_tabular
    except ImportError:
        raise ExportError(
            "lime is not installed; install the 'explainers' extra or pass file:PATH"
        ) from None
    explainer = lime.lime_tabular.LimeTabularExplainer(
        job.data,
        feature_names=job.feature_names,
        mode="classification" if _is_classifier(job.model) else "regression",
        random_state=job.seed,
    )
    predict = job.model.predict_proba if _is_classifier(job.model) else job.model.predict
    lists = []
    for row in job.data:
        explanation = explainer.explain_instance(
            row, predict, num_features=len(job.feature_names)
        )
        lists.append(explanation.as_map()[explanation.available_labels()[0]])
    return lists


def _raw_output(selection: ExplainerSelection, job: ExportJob):
    if selection.name == "permutation":
        return _run_permutation(job)
    if selection.name == "impurity":
        return _run_impurity(job)
    if selection.name == "shap":
        return _run_shap(job)
    if selection.name == "lime":
        return _run_lime(job)
    if selection.name == "precomputed":
        if selection.values is not None:
            return selection.values
        if selection.path is not None:
            return _load_precomputed(selection.path)
        raise ExportError("precomputed selection carries neither values nor a path")
    raise ExportError(f"unknown explainer: {selection.name!r}")


def export_bundle(job: ExportJob) -> Path:
    """Convert every selected explainer output and write the bundle.

    All shape checks happen before anything is written; the emitted file
    always satisfies the consensus engine's validation.
    """
    X = np.asarray(job.data, dtype=float)
    if X.ndim != 2:
        raise ExportError("dataset must be a samples x features matrix")
    if X.shape[1] != len(job.feature_names):
        raise ExportError(
            f"dataset has {X.shape[1]} columns but {len(job.feature_names)} feature names"
        )
    if not job.explainers:
        raise ExportError("no explainers selected")

    task, predictions, predicted_idx = _predictions(job)

    entries = []
    seen: set[str] = set()
    for selection in job.explainers:
        source_id = selection.effective_id
        if source_id in seen:
            raise ExportError(f"duplicate source id: {source_id!r}")
        seen.add(source_id)
        raw = _raw_output(selection, job)
        if _looks_like_weight_lists(raw):
            if len(raw) != X.shape[0]:
                raise ExportError(
                    f"source {source_id!r}: {len(raw)} weight lists for "
                    f"{X.shape[0]} samples"
                )
            values = densify_weight_lists(raw, job.feature_names)
        else:
            values = normalize_output(raw, predicted_idx)
        if values.ndim == 2 and values.shape[0] != X.shape[0]:
            raise ExportError(
                f"source {source_id!r}: {values.shape[0]} attribution rows for "
                f"{X.shape[0]} samples"
            )
        entries.append(source_entry(source_id, values, len(job.feature_names)))

    doc = bundle_document(job.feature_names, task, entries, predictions)
    return write_document(doc, job.out_path)
