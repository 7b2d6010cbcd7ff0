"""Serialization of the interchange formats.

One JSON bundle schema carries attribution sources from any origin (the
built-in explainers or external toolkits) into the engine; datasets travel
as plain CSV with an expected-features JSON sidecar.  Writing is canonical
(sorted keys, fixed indentation, shortest round-trip floats) so identical
inputs always produce identical bytes.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import BundleFormatError
from .models import DeskModel
from .types import (
    AttributionBundle,
    AttributionSource,
    FeatureCatalog,
    GroundTruth,
    PredictionRecord,
    Scope,
    Task,
    validate_bundle,
)
from .synth import TabularDataset

__all__ = [
    "BUNDLE_SCHEMA_VERSION",
    "read_bundle",
    "write_bundle",
    "bundle_to_json_dict",
    "bundle_from_json_dict",
    "write_dataset_csv",
    "read_dataset_csv",
    "write_truth_json",
    "read_truth_json",
    "write_model_json",
    "read_model_json",
    "canonical_json",
]

BUNDLE_SCHEMA_VERSION = "1"


def canonical_json(obj) -> str:
    """Canonical JSON text: sorted keys, 2-space indent, trailing newline."""
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# --- bundle files ---------------------------------------------------------


def bundle_to_json_dict(bundle: AttributionBundle, task: Task | None = None) -> dict:
    """JSON document for a bundle; task defaults to the prediction record's."""
    if task is None:
        if bundle.predictions is None:
            raise BundleFormatError("task must be given when no predictions are present")
        task = bundle.predictions.task
    doc: dict = {
        "schema_version": BUNDLE_SCHEMA_VERSION,
        "task": task.value,
        "features": list(bundle.catalog.names),
        "sources": [
            {
                "source_id": s.source_id,
                "scope": s.scope.value,
                "values": s.values.tolist(),
            }
            for s in bundle.sources
        ],
    }
    preds = bundle.predictions
    if preds is not None:
        if preds.task.is_classification:
            doc["predictions"] = {"probabilities": preds.probabilities.tolist()}
        else:
            doc["predictions"] = {
                "y_true": preds.y_true.tolist(),
                "y_pred": preds.y_pred.tolist(),
            }
    return doc


def _parse_matrix(raw, source_id: str) -> np.ndarray:
    if not isinstance(raw, list) or not raw or not all(isinstance(r, list) for r in raw):
        raise BundleFormatError(
            f"source {source_id!r}: local values must be a non-empty list of rows"
        )
    width = len(raw[0])
    for i, row in enumerate(raw):
        if len(row) != width:
            raise BundleFormatError(
                f"source {source_id!r}: row {i} has {len(row)} values, expected {width}"
            )
    return np.asarray(raw, dtype=float)


def bundle_from_json_dict(doc: dict) -> tuple[AttributionBundle, Task]:
    """Parse and structurally check a bundle document (no validation yet)."""
    if not isinstance(doc, dict):
        raise BundleFormatError("bundle document must be a JSON object")
    version = doc.get("schema_version")
    if version != BUNDLE_SCHEMA_VERSION:
        raise BundleFormatError(f"unsupported schema_version: {version!r}")
    try:
        task = Task(doc["task"])
    except (KeyError, ValueError):
        raise BundleFormatError(f"unknown task: {doc.get('task')!r}") from None

    features = doc.get("features")
    if not isinstance(features, list) or not features:
        raise BundleFormatError("bundle must list its feature names")
    try:
        catalog = FeatureCatalog(tuple(features))
    except ValueError as exc:
        raise BundleFormatError(f"bad feature list: {exc}") from None

    raw_sources = doc.get("sources")
    if not isinstance(raw_sources, list):
        raise BundleFormatError("bundle must carry a list of sources")
    sources = []
    for entry in raw_sources:
        if not isinstance(entry, dict):
            raise BundleFormatError("each source must be a JSON object")
        source_id = str(entry.get("source_id", ""))
        if not source_id:
            raise BundleFormatError("each source needs a non-empty source_id")
        scope_raw = entry.get("scope")
        if scope_raw not in (Scope.GLOBAL.value, Scope.LOCAL.value):
            raise BundleFormatError(
                f"source {source_id!r}: scope must be 'global' or 'local', got {scope_raw!r}"
            )
        scope = Scope(scope_raw)
        raw_values = entry.get("values")
        try:
            if scope is Scope.GLOBAL:
                if not isinstance(raw_values, list) or any(
                    isinstance(v, list) for v in raw_values
                ):
                    raise BundleFormatError(
                        f"source {source_id!r}: global values must be a flat list"
                    )
                values = np.asarray(raw_values, dtype=float)
            else:
                values = _parse_matrix(raw_values, source_id)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, BundleFormatError):
                raise
            raise BundleFormatError(
                f"source {source_id!r}: values hold a non-numeric cell"
            ) from None
        sources.append(AttributionSource(source_id, scope, values))

    preds = None
    raw_preds = doc.get("predictions")
    if raw_preds is not None:
        if not isinstance(raw_preds, dict):
            raise BundleFormatError("predictions must be a JSON object")
        try:
            if task.is_classification:
                preds = PredictionRecord(
                    task, probabilities=np.asarray(raw_preds["probabilities"], dtype=float)
                )
            else:
                preds = PredictionRecord(
                    task,
                    y_true=np.asarray(raw_preds["y_true"], dtype=float),
                    y_pred=np.asarray(raw_preds["y_pred"], dtype=float),
                )
        except KeyError as exc:
            raise BundleFormatError(f"predictions are missing the {exc} field") from None
        except ValueError as exc:
            raise BundleFormatError(f"bad predictions: {exc}") from None

    return AttributionBundle(catalog, tuple(sources), preds), task


def write_bundle(bundle: AttributionBundle, path, task: Task | None = None) -> None:
    Path(path).write_text(canonical_json(bundle_to_json_dict(bundle, task)), encoding="utf-8")


def read_bundle(path) -> tuple[AttributionBundle, Task]:
    """Load, parse and validate a bundle file.

    Raises BundleFormatError with parse context for malformed documents and
    with the full violation list when validation fails.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise BundleFormatError(
            f"{path.name}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from None
    bundle, task = bundle_from_json_dict(doc)
    report = validate_bundle(bundle.catalog, list(bundle.sources), bundle.predictions)
    if not report.ok:
        raise BundleFormatError(
            f"{path.name}: bundle failed validation: " + "; ".join(report.messages())
        )
    return bundle, task


# --- dataset files ---------------------------------------------------------


def _format_value(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_dataset_csv(ds: TabularDataset, path) -> None:
    """Dataset CSV: header F1..Fn,target; UTF-8, LF endings, decimal points."""
    lines = [",".join(list(ds.catalog.names) + ["target"])]
    classification = ds.task.is_classification
    for row, target in zip(ds.X, ds.y):
        cells = [repr(float(v)) for v in row]
        cells.append(str(int(target)) if classification else repr(float(target)))
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def read_dataset_csv(path) -> tuple[FeatureCatalog, np.ndarray, np.ndarray]:
    """Read a dataset CSV back into (catalog, X, target values)."""
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise BundleFormatError(f"{path.name}: empty dataset file")
    header = lines[0].split(",")
    if header[-1] != "target" or len(header) < 2:
        raise BundleFormatError(f"{path.name}: header must be F1..Fn,target")
    catalog = FeatureCatalog(tuple(header[:-1]))
    rows, targets = [], []
    for i, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        cells = line.split(",")
        if len(cells) != len(header):
            raise BundleFormatError(
                f"{path.name}: line {i} has {len(cells)} cells, expected {len(header)}"
            )
        try:
            rows.append([float(c) for c in cells[:-1]])
            targets.append(float(cells[-1]))
        except ValueError:
            raise BundleFormatError(f"{path.name}: line {i} holds a non-numeric cell") from None
    if not rows:
        raise BundleFormatError(f"{path.name}: dataset has no rows")
    return catalog, np.asarray(rows), np.asarray(targets)


def write_truth_json(truth: GroundTruth, path) -> None:
    doc = {"expected_features": sorted(truth.expected_features)}
    Path(path).write_text(canonical_json(doc), encoding="utf-8")


def read_truth_json(path) -> GroundTruth:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise BundleFormatError(
            f"{path.name}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from None
    expected = doc.get("expected_features") if isinstance(doc, dict) else None
    if not isinstance(expected, list) or not expected:
        raise BundleFormatError(f"{path.name}: expected_features must be a non-empty list")
    return GroundTruth(frozenset(str(n) for n in expected))


def write_model_json(model: DeskModel, path) -> None:
    Path(path).write_text(canonical_json(model.to_json_dict()), encoding="utf-8")


def read_model_json(path) -> DeskModel:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise BundleFormatError(
            f"{path.name}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from None
    return DeskModel.from_json_dict(doc)
