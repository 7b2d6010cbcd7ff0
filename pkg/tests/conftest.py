import numpy as np
import pytest

from attribcons import (
    AttributionBundle,
    AttributionSource,
    FeatureCatalog,
    PredictionRecord,
    Scope,
    Task,
)


@pytest.fixture
def catalog3() -> FeatureCatalog:
    return FeatureCatalog(("A", "B", "C"))


def make_global(values, source_id="g") -> AttributionSource:
    return AttributionSource(source_id, Scope.GLOBAL, np.asarray(values, dtype=float))


def make_local(matrix, source_id="l") -> AttributionSource:
    return AttributionSource(source_id, Scope.LOCAL, np.asarray(matrix, dtype=float))


def classification_preds(probabilities, task=Task.BINARY_CLASSIFICATION) -> PredictionRecord:
    return PredictionRecord(task, probabilities=np.asarray(probabilities, dtype=float))


def regression_preds(y_true, y_pred) -> PredictionRecord:
    return PredictionRecord(
        Task.REGRESSION,
        y_true=np.asarray(y_true, dtype=float),
        y_pred=np.asarray(y_pred, dtype=float),
    )


def random_bundle(rng, n_features=6, n_samples=8, with_preds=True) -> AttributionBundle:
    """A valid bundle with one global and one local source."""
    catalog = FeatureCatalog.default(n_features)
    sources = (
        make_global(rng.normal(size=n_features), "perm"),
        make_local(rng.normal(size=(n_samples, n_features)), "occ"),
    )
    preds = classification_preds(rng.uniform(0.0, 1.0, n_samples)) if with_preds else None
    return AttributionBundle(catalog, sources, preds)
