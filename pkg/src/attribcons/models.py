"""Desk-scale model trainers and built-in model-agnostic explainers.

Linear and logistic regression are trained by full-batch gradient descent
with a small L2 penalty, deterministically from a seed; k-nearest
neighbors stores its training split.  Training runs several restarts and
keeps the instance with the best validation AUC (classification) or R2
(regression).  Two explainers make the pipeline self-contained: permutation
importance (global) and occlusion attribution (local).
"""

from __future__ import annotations

import dataclasses
import enum
from dataclasses import dataclass

import numpy as np

from .errors import TrainingError
from .metrics import average_ranks
from .types import (
    AttributionSource,
    ConsensusResult,
    Direction,
    PredictionRecord,
    Scope,
    Task,
    readonly_array,
)
from .synth import TabularDataset

__all__ = [
    "ModelKind",
    "OcclusionBaseline",
    "Hyperparams",
    "DeskModel",
    "TrainReport",
    "train",
    "permutation_importance",
    "occlusion_attribution",
    "lr_coefficient_ranking",
    "predictions_for",
]

MODEL_SCHEMA_VERSION = "1"


class ModelKind(enum.Enum):
    LINEAR = "linear"
    LOGISTIC = "logistic"
    KNN = "knn"


class OcclusionBaseline(enum.Enum):
    MEAN = "mean"
    ZERO = "zero"


@dataclass(frozen=True)
class Hyperparams:
    learning_rate: float = 1.5
    iterations: int = 2000
    l2_penalty: float = 1e-4
    restarts: int = 3
    k_neighbors: int = 5
    train_fraction: float = 0.8

    def __post_init__(self) -> None:
        if self.iterations < 1:
            raise ValueError("iterations must be at least 1")
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if self.k_neighbors < 1:
            raise ValueError("k_neighbors must be at least 1")
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie in (0, 1)")


@dataclass(frozen=True)
class TrainReport:
    """Validation metrics of the selected training instance."""

    auc: float | None = None
    f1: float | None = None
    r2: float | None = None
    mae: float | None = None
    train_fraction: float = 0.8
    iterations: int = 0
    restarts: int = 1


@dataclass(frozen=True)
class DeskModel:
    """A trained model; immutable, queryable, JSON-serializable.

    Linear and logistic models carry weights and bias (per class for
    multiclass, normalized with softmax).  k-NN carries its training split.
    ``feature_means`` are the training-split column means, the default
    occlusion baseline.
    """

    kind: ModelKind
    task: Task
    feature_means: np.ndarray
    seed: int
    weights: np.ndarray | None = None
    bias: np.ndarray | None = None
    classes: tuple[int, ...] | None = None
    train_X: np.ndarray | None = None
    train_y: np.ndarray | None = None
    k_neighbors: int | None = None
    hyperparams: Hyperparams | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "feature_means", readonly_array(self.feature_means))
        if self.weights is not None:
            object.__setattr__(self, "weights", readonly_array(self.weights))
        if self.bias is not None:
            object.__setattr__(self, "bias", readonly_array(self.bias))
        if self.train_X is not None:
            object.__setattr__(self, "train_X", readonly_array(self.train_X))
        if self.train_y is not None:
            y_dtype = np.int64 if self.task.is_classification else float
            object.__setattr__(self, "train_y", readonly_array(self.train_y, dtype=y_dtype))

    @property
    def n_features(self) -> int:
        return int(self.feature_means.shape[0])

    # --- prediction -----------------------------------------------------

    def predict_value(self, X: np.ndarray) -> np.ndarray:
        """Regression output per sample."""
        if self.task.is_classification:
            raise TrainingError("predict_value needs a regression model")
        X = np.asarray(X, dtype=float)
        if self.kind is ModelKind.LINEAR:
            return X @ self.weights + self.bias[0]
        return self._knn_regress(X)

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        """Class probabilities per sample, rows summing to 1."""
        if not self.task.is_classification:
            raise TrainingError("predict_proba needs a classification model")
        X = np.asarray(X, dtype=float)
        if self.kind is ModelKind.LOGISTIC:
            if len(self.classes) == 2:
                p1 = _sigmoid(X @ self.weights[0] + self.bias[0])
                return np.column_stack([1.0 - p1, p1])
            logits = X @ self.weights.T + self.bias
            return _softmax(logits)
        return self._knn_proba(X)

    def predict_label(self, X: np.ndarray) -> np.ndarray:
        proba = self.predict_proba(X)
        idx = proba.argmax(axis=1)
        return np.asarray(self.classes, dtype=np.int64)[idx]

    def _knn_neighbor_idx(self, X: np.ndarray) -> np.ndarray:
        train = self.train_X
        # squared euclidean via the expansion; argpartition keeps prediction
        # O(n) per row (votes and means only need the neighbor set, not its
        # order) and is deterministic for identical inputs
        d2 = (
            (X * X).sum(axis=1)[:, np.newaxis]
            + (train * train).sum(axis=1)[np.newaxis, :]
            - 2.0 * X @ train.T
        )
        k = self.k_neighbors
        if k >= train.shape[0]:
            return np.broadcast_to(np.arange(train.shape[0]), (X.shape[0], train.shape[0]))
        return np.argpartition(d2, kth=k - 1, axis=1)[:, :k]

    def _knn_proba(self, X: np.ndarray) -> np.ndarray:
        neighbor_labels = self.train_y[self._knn_neighbor_idx(X)]
        classes = np.asarray(self.classes, dtype=np.int64)
        votes = (neighbor_labels[:, :, np.newaxis] == classes).sum(axis=1)
        return votes / float(self.k_neighbors)

    def _knn_regress(self, X: np.ndarray) -> np.ndarray:
        return self.train_y[self._knn_neighbor_idx(X)].mean(axis=1)

    # --- serialization --------------------------------------------------

    def to_json_dict(self) -> dict:
        doc: dict = {
            "schema_version": MODEL_SCHEMA_VERSION,
            "kind": self.kind.value,
            "task": self.task.value,
            "seed": self.seed,
            "feature_means": self.feature_means.tolist(),
        }
        if self.hyperparams is not None:
            doc["hyperparams"] = dataclasses.asdict(self.hyperparams)
        if self.weights is not None:
            doc["weights"] = self.weights.tolist()
            doc["bias"] = self.bias.tolist()
        if self.classes is not None:
            doc["classes"] = list(self.classes)
        if self.train_X is not None:
            doc["train_X"] = self.train_X.tolist()
            doc["train_y"] = self.train_y.tolist()
            doc["k_neighbors"] = self.k_neighbors
        return doc

    @classmethod
    def from_json_dict(cls, doc: dict) -> "DeskModel":
        version = doc.get("schema_version")
        if version != MODEL_SCHEMA_VERSION:
            raise TrainingError(f"unsupported model schema version: {version!r}")
        return cls(
            kind=ModelKind(doc["kind"]),
            task=Task(doc["task"]),
            feature_means=np.asarray(doc["feature_means"], dtype=float),
            seed=int(doc["seed"]),
            weights=None if "weights" not in doc else np.asarray(doc["weights"], dtype=float),
            bias=None if "bias" not in doc else np.asarray(doc["bias"], dtype=float),
            classes=None if "classes" not in doc else tuple(int(c) for c in doc["classes"]),
            train_X=None if "train_X" not in doc else np.asarray(doc["train_X"], dtype=float),
            train_y=None if "train_y" not in doc else np.asarray(doc["train_y"]),
            k_neighbors=doc.get("k_neighbors"),
            hyperparams=None if "hyperparams" not in doc else Hyperparams(**doc["hyperparams"]),
        )


# --- numerics -----------------------------------------------------------


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    ez = np.exp(shifted)
    return ez / ez.sum(axis=1, keepdims=True)


def _fit_gd_binary(X, target, hp: Hyperparams, rng) -> tuple[np.ndarray, float]:
    """Logistic fit of a 0/1 target; features centered during descent."""
    mu = X.mean(axis=0)
    Xc = X - mu
    m, n_feat = X.shape
    w = rng.normal(0.0, 0.01, n_feat)
    b = 0.0
    for _ in range(hp.iterations):
        err = _sigmoid(Xc @ w + b) - target
        w -= hp.learning_rate * (Xc.T @ err / m + hp.l2_penalty * w)
        b -= hp.learning_rate * err.mean()
    return w, b - float(w @ mu)


def _fit_gd_linear(X, y, hp: Hyperparams, rng) -> tuple[np.ndarray, float]:
    """Least-squares fit by gradient descent; features and target centered.

    Uses the half-MSE gradient so the centered bias direction (curvature 1)
    stays stable for any learning rate below 2.
    """
    mu = X.mean(axis=0)
    y_mu = y.mean()
    Xc = X - mu
    yc = y - y_mu
    m, n_feat = X.shape
    w = rng.normal(0.0, 0.01, n_feat)
    b = 0.0
    for _ in range(hp.iterations):
        err = Xc @ w + b - yc
        w -= hp.learning_rate * (Xc.T @ err / m + hp.l2_penalty * w)
        b -= hp.learning_rate * err.mean()
    return w, b + y_mu - float(w @ mu)


def _binary_auc(scores: np.ndarray, positive: np.ndarray) -> float:
    n_pos = int(positive.sum())
    n_neg = int(positive.shape[0] - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise TrainingError("AUC undefined: validation split has a single class")
    ranks = average_ranks(scores)
    return float((ranks[positive].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def _macro_auc(proba: np.ndarray, y: np.ndarray, classes: tuple[int, ...]) -> float:
    parts = []
    for idx, label in enumerate(classes):
        positive = y == label
        if 0 < positive.sum() < y.shape[0]:
            parts.append(_binary_auc(proba[:, idx], positive))
    if not parts:
        raise TrainingError("AUC undefined: validation split has a single class")
    return float(np.mean(parts))


def _f1_for(y_true: np.ndarray, y_pred: np.ndarray, label: int) -> float:
    tp = int(((y_pred == label) & (y_true == label)).sum())
    fp = int(((y_pred == label) & (y_true != label)).sum())
    fn = int(((y_pred != label) & (y_true == label)).sum())
    denom = 2 * tp + fp + fn
    return 2.0 * tp / denom if denom else 0.0


def _f1(y_true: np.ndarray, y_pred: np.ndarray, classes: tuple[int, ...]) -> float:
    if len(classes) == 2:
        return _f1_for(y_true, y_pred, classes[1])
    return float(np.mean([_f1_for(y_true, y_pred, c) for c in classes]))


def _r2(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    ss_tot = float(((y_true - y_true.mean()) ** 2).sum())
    if ss_tot == 0.0:
        raise TrainingError("R2 undefined: constant target")
    ss_res = float(((y_true - y_pred) ** 2).sum())
    return 1.0 - ss_res / ss_tot


def _accuracy(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    return float((y_true == y_pred).mean())


# --- training -----------------------------------------------------------


def _split(n_samples: int, fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    if n_samples < 2:
        raise TrainingError("need at least two samples to hold out a validation split")
    rng = np.random.default_rng([seed, 0])
    perm = rng.permutation(n_samples)
    n_train = int(round(fraction * n_samples))
    n_train = min(max(n_train, 1), n_samples - 1)
    return perm[:n_train], perm[n_train:]


def _fit_one(
    ds: TabularDataset,
    kind: ModelKind,
    hp: Hyperparams,
    seed: int,
    restart: int,
    train_idx: np.ndarray,
    classes: tuple[int, ...] | None,
) -> DeskModel:
    X_train = ds.X[train_idx]
    y_train = ds.y[train_idx]
    feature_means = X_train.mean(axis=0)
    rng = np.random.default_rng([seed, 1, restart])

    if kind is ModelKind.KNN:
        k = min(hp.k_neighbors, X_train.shape[0])
        return DeskModel(
            kind=kind,
            task=ds.task,
            feature_means=feature_means,
            seed=seed,
            classes=classes,
            train_X=X_train,
            train_y=y_train,
            k_neighbors=k,
            hyperparams=hp,
        )
    if kind is ModelKind.LINEAR:
        w, b = _fit_gd_linear(X_train, y_train, hp, rng)
        return DeskModel(
            kind=kind,
            task=ds.task,
            feature_means=feature_means,
            seed=seed,
            weights=w,
            bias=np.array([b]),
            hyperparams=hp,
        )
    # logistic: one binary fit per class (one-vs-rest), softmax-normalized
    # for multiclass
    weights = []
    biases = []
    targets = [classes[1]] if len(classes) == 2 else classes
    for label in targets:
        w, b = _fit_gd_binary(X_train, (y_train == label).astype(float), hp, rng)
        weights.append(w)
        biases.append(b)
    return DeskModel(
        kind=kind,
        task=ds.task,
        feature_means=feature_means,
        seed=seed,
        weights=np.stack(weights),
        bias=np.array(biases),
        classes=classes,
        hyperparams=hp,
    )


def _validation_score(model: DeskModel, X_val: np.ndarray, y_val: np.ndarray) -> float:
    if model.task.is_classification:
        proba = model.predict_proba(X_val)
        if len(model.classes) == 2:
            return _binary_auc(proba[:, 1], y_val == model.classes[1])
        return _macro_auc(proba, y_val, model.classes)
    return _r2(y_val, model.predict_value(X_val))


def train(
    ds: TabularDataset,
    kind: ModelKind,
    hyperparams: Hyperparams = Hyperparams(),
    seed: int = 0,
) -> tuple[DeskModel, TrainReport]:
    """Train a model on a dataset, deterministically from the seed.

    Runs ``hyperparams.restarts`` independently initialized fits on a fixed
    train/validation split and returns the instance with the best
    validation AUC (classification) or R2 (regression), together with its
    validation metrics.
    """
    if kind is ModelKind.LINEAR and ds.task.is_classification:
        raise TrainingError("linear regression needs a regression dataset")
    if kind is ModelKind.LOGISTIC and not ds.task.is_classification:
        raise TrainingError("logistic regression needs a classification dataset")

    classes: tuple[int, ...] | None = None
    if ds.task.is_classification:
        classes = tuple(int(c) for c in np.unique(ds.y))
        if len(classes) < 2:
            raise TrainingError("degenerate dataset: a single class cannot be learned")

    train_idx, val_idx = _split(ds.n_samples, hyperparams.train_fraction, seed)
    X_val, y_val = ds.X[val_idx], ds.y[val_idx]

    best_model: DeskModel | None = None
    best_score = -np.inf
    for restart in range(hyperparams.restarts):
        model = _fit_one(ds, kind, hyperparams, seed, restart, train_idx, classes)
        score = _validation_score(model, X_val, y_val)
        if np.isfinite(score) and score > best_score:
            best_model, best_score = model, score
    if best_model is None:
        raise TrainingError(
            "training diverged on every restart; lower the learning rate"
        )

    if ds.task.is_classification:
        y_hat = best_model.predict_label(X_val)
        report = TrainReport(
            auc=best_score,
            f1=_f1(y_val, y_hat, classes),
            train_fraction=hyperparams.train_fraction,
            iterations=0 if kind is ModelKind.KNN else hyperparams.iterations,
            restarts=hyperparams.restarts,
        )
    else:
        y_hat = best_model.predict_value(X_val)
        report = TrainReport(
            r2=best_score,
            mae=float(np.abs(y_val - y_hat).mean()),
            train_fraction=hyperparams.train_fraction,
            iterations=0 if kind is ModelKind.KNN else hyperparams.iterations,
            restarts=hyperparams.restarts,
        )
    return best_model, report


# --- explainers ----------------------------------------------------------


def _task_metric(model: DeskModel, X: np.ndarray, y: np.ndarray) -> float:
    if model.task.is_classification:
        return _accuracy(y, model.predict_label(X))
    return _r2(y, model.predict_value(X))


def permutation_importance(
    model: DeskModel, ds: TabularDataset, repeats: int = 5, seed: int = 0
) -> AttributionSource:
    """Global importances: mean metric drop over seeded column permutations.

    The metric is accuracy for classification and R2 for regression.  A
    feature the model never reads scores exactly 0 because permuting its
    column cannot change any prediction.
    """
    if repeats < 1:
        raise ValueError("repeats must be at least 1")
    X, y = ds.X, ds.y
    baseline = _task_metric(model, X, y)
    rng = np.random.default_rng([seed, 2])
    importances = np.zeros(ds.n_features)
    for feature in range(ds.n_features):
        drops = np.empty(repeats)
        for r in range(repeats):
            X_perm = X.copy()
            X_perm[:, feature] = X[rng.permutation(ds.n_samples), feature]
            drops[r] = baseline - _task_metric(model, X_perm, y)
        importances[feature] = drops.mean()
    return AttributionSource("permutation_importance", Scope.GLOBAL, importances)


def occlusion_attribution(
    model: DeskModel,
    ds: TabularDataset,
    baseline: OcclusionBaseline = OcclusionBaseline.MEAN,
) -> AttributionSource:
    """Local attributions: output change when one feature is occluded.

    attribution[s][f] = output(x_s) - output(x_s with feature f replaced by
    the baseline), where the output is the predicted-class probability for
    classification (class fixed per sample) or the predicted value for
    regression.  The mean baseline keeps occluded samples in-distribution
    for [0, 1) features.
    """
    X = ds.X
    if baseline is OcclusionBaseline.MEAN:
        base = model.feature_means
    else:
        base = np.zeros(model.n_features)

    if model.task.is_classification:
        proba = model.predict_proba(X)
        class_idx = proba.argmax(axis=1)
        rows = np.arange(X.shape[0])
        out_orig = proba[rows, class_idx]

        def output_for(X_mod: np.ndarray) -> np.ndarray:
            return model.predict_proba(X_mod)[rows, class_idx]

    else:
        out_orig = model.predict_value(X)
        output_for = model.predict_value

    attributions = np.empty_like(X)
    for feature in range(X.shape[1]):
        X_mod = X.copy()
        X_mod[:, feature] = base[feature]
        attributions[:, feature] = out_orig - output_for(X_mod)
    return AttributionSource("occlusion", Scope.LOCAL, attributions)


def lr_coefficient_ranking(model: DeskModel) -> ConsensusResult:
    """Baseline ranking by descending coefficient magnitude.

    Magnitudes rather than raw coefficients: a strongly negative weight is
    as informative as a strongly positive one.  Multiclass models average
    the magnitude across the per-class weight rows.
    """
    if model.kind is ModelKind.KNN:
        raise TrainingError("coefficient ranking needs a linear or logistic model")
    magnitudes = np.abs(model.weights)
    if magnitudes.ndim == 2:
        magnitudes = magnitudes.mean(axis=0)
    return ConsensusResult.from_scores(
        "lr_coefficients", magnitudes, Direction.HIGHER_IS_BETTER
    )


def predictions_for(model: DeskModel, ds: TabularDataset) -> PredictionRecord:
    """Prediction metadata pairing a dataset with a trained model."""
    if model.task.is_classification:
        proba = model.predict_proba(ds.X)
        p_predicted = proba[np.arange(ds.n_samples), proba.argmax(axis=1)]
        return PredictionRecord(ds.task, probabilities=p_predicted)
    return PredictionRecord(ds.task, y_true=ds.y, y_pred=model.predict_value(ds.X))
