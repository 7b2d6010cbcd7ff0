import numpy as np
import pytest

from attribcons import (
    DatasetId,
    FeatureCatalog,
    GroundTruth,
    Hyperparams,
    ModelKind,
    OcclusionBaseline,
    SyntheticDatasetSpec,
    Task,
    TrainingError,
    generate,
    lr_coefficient_ranking,
    occlusion_attribution,
    permutation_importance,
    predictions_for,
    train,
)
from attribcons.models import DeskModel
from attribcons.synth import TabularDataset


def toy_regression(weights, n_samples=120, seed=0, noise=0.0):
    """Dataset with a known linear target."""
    weights = np.asarray(weights, dtype=float)
    rng = np.random.default_rng(seed)
    X = rng.random((n_samples, weights.shape[0]))
    y = X @ weights + noise * rng.normal(size=n_samples)
    return TabularDataset(
        dataset_id=DatasetId.CUSTOM,
        formula_id="d4",
        task=Task.REGRESSION,
        catalog=FeatureCatalog.default(weights.shape[0]),
        X=X,
        y=y,
        truth=GroundTruth(frozenset({"F1"})),
        seed=seed,
    )


def linear_model(weights, bias=0.0, feature_means=None):
    weights = np.asarray(weights, dtype=float)
    means = np.zeros(weights.shape[0]) if feature_means is None else feature_means
    return DeskModel(
        kind=ModelKind.LINEAR,
        task=Task.REGRESSION,
        feature_means=means,
        seed=0,
        weights=weights,
        bias=np.array([bias]),
    )


FAST = Hyperparams(iterations=400, restarts=2)


class TestTrain:
    def test_deterministic(self):
        ds = generate(SyntheticDatasetSpec(DatasetId.D4, n_samples=300))
        m1, r1 = train(ds, ModelKind.LINEAR, FAST, seed=5)
        m2, r2 = train(ds, ModelKind.LINEAR, FAST, seed=5)
        assert np.array_equal(m1.weights, m2.weights)
        assert np.array_equal(m1.bias, m2.bias)
        assert r1 == r2

    def test_recovers_noiseless_linear_target(self):
        ds = toy_regression([2.0, 0.0, 0.0])
        model, report = train(ds, ModelKind.LINEAR, Hyperparams(iterations=4000), seed=1)
        assert model.weights[0] == pytest.approx(2.0, abs=0.02)
        assert abs(model.weights[1]) < 0.02 and abs(model.weights[2]) < 0.02
        assert report.r2 == pytest.approx(1.0, abs=1e-3)
        assert report.mae < 0.01

    def test_knn_memorizes_training_points(self):
        ds = generate(SyntheticDatasetSpec(DatasetId.D5, n_samples=80))
        model, _ = train(ds, ModelKind.KNN, Hyperparams(k_neighbors=1), seed=2)
        labels = model.predict_label(model.train_X)
        assert np.array_equal(labels, model.train_y)

    def test_task_compatibility(self):
        clf = generate(SyntheticDatasetSpec(DatasetId.D1, n_samples=100))
        reg = generate(SyntheticDatasetSpec(DatasetId.D4, n_samples=100))
        with pytest.raises(TrainingError):
            train(clf, ModelKind.LINEAR, FAST)
        with pytest.raises(TrainingError):
            train(reg, ModelKind.LOGISTIC, FAST)

    def test_degenerate_single_class(self):
        ds = generate(SyntheticDatasetSpec(DatasetId.D1, n_samples=100))
        flat = TabularDataset(
            ds.dataset_id, ds.formula_id, ds.task, ds.catalog, ds.X,
            np.zeros(ds.n_samples, dtype=np.int64), ds.truth, ds.seed,
        )
        with pytest.raises(TrainingError):
            train(flat, ModelKind.LOGISTIC, FAST)

    def test_report_metric_ranges(self):
        ds = generate(SyntheticDatasetSpec(DatasetId.D1, n_samples=400))
        _, report = train(ds, ModelKind.LOGISTIC, FAST, seed=3)
        assert 0.0 <= report.auc <= 1.0
        assert 0.0 <= report.f1 <= 1.0
        assert report.train_fraction == 0.8

    def test_multiclass_probabilities_normalized(self):
        ds = generate(SyntheticDatasetSpec(DatasetId.D6, n_samples=400))
        model, _ = train(ds, ModelKind.LOGISTIC, FAST, seed=4)
        proba = model.predict_proba(ds.X[:50])
        assert np.max(np.abs(proba.sum(axis=1) - 1.0)) <= 1e-9
        assert proba.min() >= 0.0

    def test_json_round_trip(self):
        ds = generate(SyntheticDatasetSpec(DatasetId.D1, n_samples=100))
        for kind in (ModelKind.LOGISTIC, ModelKind.KNN):
            model, _ = train(ds, kind, FAST, seed=6)
            clone = DeskModel.from_json_dict(model.to_json_dict())
            assert np.array_equal(
                clone.predict_proba(ds.X[:10]), model.predict_proba(ds.X[:10])
            )

    def test_unsupported_schema_version(self):
        with pytest.raises(TrainingError):
            DeskModel.from_json_dict({"schema_version": "0"})


class TestModelMetricsOracle:
    def test_auc_and_f1_match_sklearn(self):
        import sklearn.metrics

        from attribcons.models import _binary_auc, _f1, _macro_auc

        rng = np.random.default_rng(21)
        for _ in range(20):
            scores = np.round(rng.uniform(0.0, 1.0, 60), 2)  # force ties
            y = rng.integers(0, 2, 60)
            if y.min() == y.max():
                continue
            want = sklearn.metrics.roc_auc_score(y, scores)
            assert _binary_auc(scores, y == 1) == pytest.approx(want, abs=1e-12)
            y_pred = (scores > 0.5).astype(np.int64)
            want_f1 = sklearn.metrics.f1_score(y, y_pred, zero_division=0)
            assert _f1(y, y_pred, (0, 1)) == pytest.approx(want_f1, abs=1e-12)

        # multiclass: macro one-vs-rest AUC and macro F1
        proba = rng.dirichlet(np.ones(3), size=90)
        y = rng.integers(0, 3, 90)
        want = sklearn.metrics.roc_auc_score(y, proba, multi_class="ovr", average="macro")
        assert _macro_auc(proba, y, (0, 1, 2)) == pytest.approx(want, abs=1e-12)
        y_pred = proba.argmax(axis=1)
        want_f1 = sklearn.metrics.f1_score(y, y_pred, average="macro", zero_division=0)
        assert _f1(y, y_pred, (0, 1, 2)) == pytest.approx(want_f1, abs=1e-12)


class TestPermutationImportance:
    def test_zero_weight_feature_scores_zero(self):
        ds = toy_regression([2.0, 0.0, 0.0])
        model = linear_model([2.0, 0.0, 0.0])
        source = permutation_importance(model, ds, repeats=3, seed=0)
        assert source.values[0] > 0.0
        assert source.values[1] == 0.0 and source.values[2] == 0.0

    def test_constant_model_scores_all_zero(self):
        ds = toy_regression([1.0, 1.0])
        model = linear_model([0.0, 0.0], bias=0.7)
        source = permutation_importance(model, ds, repeats=3, seed=0)
        assert not source.values.any()

    def test_deterministic(self):
        ds = toy_regression([1.0, -1.0, 0.5])
        model = linear_model([1.0, -1.0, 0.5])
        a = permutation_importance(model, ds, repeats=5, seed=9)
        b = permutation_importance(model, ds, repeats=5, seed=9)
        assert np.array_equal(a.values, b.values)

    def test_repeats_must_be_positive(self):
        ds = toy_regression([1.0])
        with pytest.raises(ValueError):
            permutation_importance(linear_model([1.0]), ds, repeats=0)

    @pytest.mark.parametrize(
        "dataset_id,kind",
        [
            (DatasetId.D1, ModelKind.LOGISTIC),
            (DatasetId.D2, ModelKind.LOGISTIC),
            (DatasetId.D3, ModelKind.LINEAR),
            (DatasetId.D4, ModelKind.LINEAR),
        ],
    )
    def test_expected_features_dominate(self, dataset_id, kind):
        # every expected feature clears 5% of the top importance and no
        # noise feature does (d5/d6 are excluded: their rules give some
        # expected features inherently sub-5% signal, see the weaker check)
        ds = generate(SyntheticDatasetSpec(dataset_id))
        model, _ = train(ds, kind, seed=7)
        source = permutation_importance(model, ds, repeats=5, seed=7)
        strong = set(np.flatnonzero(source.values > 0.05 * source.values.max()))
        expected = set(int(i) for i in ds.truth.expected_indices(ds.catalog))
        assert strong == expected

    @pytest.mark.parametrize("dataset_id", [DatasetId.D5, DatasetId.D6])
    def test_expected_features_are_positive(self, dataset_id):
        ds = generate(SyntheticDatasetSpec(dataset_id))
        model, _ = train(ds, ModelKind.LOGISTIC, seed=7)
        source = permutation_importance(model, ds, repeats=5, seed=7)
        expected = [int(i) for i in ds.truth.expected_indices(ds.catalog)]
        assert all(source.values[i] > 0.0 for i in expected)


class TestOcclusion:
    def test_linear_closed_form(self):
        ds = toy_regression([2.0, -1.0, 0.5], n_samples=40)
        model = linear_model([2.0, -1.0, 0.5], feature_means=ds.X.mean(axis=0))
        source = occlusion_attribution(model, ds, OcclusionBaseline.MEAN)
        want = model.weights * (ds.X - model.feature_means)
        assert np.max(np.abs(source.values - want)) <= 1e-9

    def test_zero_baseline_example(self):
        ds = toy_regression([2.0, 0.0], n_samples=3)
        X = ds.X.copy()
        X[0] = [0.5, 0.7]
        ds = TabularDataset(ds.dataset_id, ds.formula_id, ds.task, ds.catalog, X,
                            X @ np.array([2.0, 0.0]), ds.truth, ds.seed)
        model = linear_model([2.0, 0.0])
        source = occlusion_attribution(model, ds, OcclusionBaseline.ZERO)
        assert source.values[0] == pytest.approx([1.0, 0.0])

    def test_constant_model_rows_zero(self):
        ds = toy_regression([1.0, 1.0], n_samples=20)
        model = linear_model([0.0, 0.0], bias=3.0)
        source = occlusion_attribution(model, ds)
        assert not source.values.any()

    def test_sample_equal_to_baseline_gets_zero_row(self):
        ds = toy_regression([1.0, 2.0], n_samples=9)
        model = linear_model([1.0, 2.0], feature_means=ds.X[4])
        source = occlusion_attribution(model, ds, OcclusionBaseline.MEAN)
        assert source.values[4] == pytest.approx([0.0, 0.0], abs=1e-12)

    def test_classification_uses_predicted_class_probability(self):
        ds = generate(SyntheticDatasetSpec(DatasetId.D1, n_samples=60))
        model, _ = train(ds, ModelKind.LOGISTIC, FAST, seed=1)
        source = occlusion_attribution(model, ds)
        assert source.scope.value == "local"
        assert source.values.shape == (60, 20)
        assert np.isfinite(source.values).all()


class TestCoefficientRanking:
    def test_magnitude_order(self):
        model = linear_model([3.0, -5.0, 1.0])
        res = lr_coefficient_ranking(model)
        assert list(res.ranking) == [1, 0, 2]

    def test_single_feature(self):
        res = lr_coefficient_ranking(linear_model([0.4]))
        assert list(res.ranking) == [0]

    def test_tied_weights_index_break(self):
        res = lr_coefficient_ranking(linear_model([2.0, -2.0, 1.0]))
        assert list(res.ranking) == [0, 1, 2]

    def test_knn_rejected(self):
        ds = generate(SyntheticDatasetSpec(DatasetId.D5, n_samples=50))
        model, _ = train(ds, ModelKind.KNN, FAST, seed=0)
        with pytest.raises(TrainingError):
            lr_coefficient_ranking(model)


class TestPredictionsFor:
    def test_record_length_matches(self):
        ds = generate(SyntheticDatasetSpec(DatasetId.D1, n_samples=120))
        model, _ = train(ds, ModelKind.LOGISTIC, FAST, seed=2)
        record = predictions_for(model, ds)
        assert record.sample_count == 120
        assert record.probabilities.min() >= 0.0 and record.probabilities.max() <= 1.0

    def test_exact_regression_model(self):
        ds = toy_regression([1.5, -0.5], n_samples=30)
        model = linear_model([1.5, -0.5])
        record = predictions_for(model, ds)
        assert np.max(np.abs(record.y_true - record.y_pred)) <= 1e-12

    def test_separable_toy_probabilities(self):
        rng = np.random.default_rng(12)
        X = np.vstack([rng.normal(0.15, 0.03, (40, 1)), rng.normal(0.85, 0.03, (40, 1))])
        y = np.array([0] * 40 + [1] * 40)
        ds = TabularDataset(
            DatasetId.CUSTOM, "d1", Task.BINARY_CLASSIFICATION,
            FeatureCatalog.default(1), X, y,
            GroundTruth(frozenset({"F1"})), 0,
        )
        # ground truth needs a noise feature, but training only reads X/y
        model, report = train(ds, ModelKind.LOGISTIC,
                              Hyperparams(iterations=3000, learning_rate=1.9), seed=0)
        record = predictions_for(model, ds)
        assert report.auc == 1.0
        assert record.probabilities.mean() > 0.9
