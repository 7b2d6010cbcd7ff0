"""Acceptance suite.

One test per acceptance criterion, each at its stated tolerance and time
budget, printing one PASS line when it holds.  Expected values come from
independent oracles: brute-force formula transcriptions, exhaustive
enumeration, or closed-form constants, never from the code under test.
"""

import itertools
import math
import time

import numpy as np
import pytest

from attribcons import (
    AttributionBundle,
    ClassificationFactor,
    ConsensusConfig,
    ConsensusResult,
    DatasetId,
    FactorFamily,
    ModelKind,
    SyntheticDatasetSpec,
    aggregate_source,
    arithmetic_mean,
    class_factor,
    generate,
    geometric_mean,
    harmonic_mean,
    hit_rate,
    jensen_shannon,
    lr_coefficient_ranking,
    occlusion_attribution,
    permutation_importance,
    predictions_for,
    run_all,
    separation_distance,
    spearman,
    train,
    wisca,
)
from attribcons.cli import main
from attribcons.consensus import SourceAggregate
from attribcons.metrics import hit_rate_from_ranking

from conftest import classification_preds, make_global, make_local

SEED = 7


def _passed(name: str) -> None:
    print(f"ACCEPTANCE PASS: {name}")


@pytest.fixture(scope="module")
def d1_run():
    ds = generate(SyntheticDatasetSpec(DatasetId.D1, seed=SEED))
    model, report = train(ds, ModelKind.LOGISTIC, seed=SEED)
    sources = (
        permutation_importance(model, ds, repeats=5, seed=SEED),
        occlusion_attribution(model, ds),
    )
    bundle = AttributionBundle(ds.catalog, sources, predictions_for(model, ds))
    assert bundle.validate().ok
    run = run_all(bundle)
    return {"ds": ds, "model": model, "report": report, "bundle": bundle, "run": run}


@pytest.fixture(scope="module")
def d4_run():
    ds = generate(SyntheticDatasetSpec(DatasetId.D4, seed=SEED))
    model, report = train(ds, ModelKind.LINEAR, seed=SEED)
    sources = (
        permutation_importance(model, ds, repeats=5, seed=SEED),
        occlusion_attribution(model, ds),
    )
    bundle = AttributionBundle(ds.catalog, sources, predictions_for(model, ds))
    assert bundle.validate().ok
    run = run_all(bundle)
    return {"ds": ds, "model": model, "report": report, "bundle": bundle, "run": run}


def test_correction_factor_suite():
    """Symmetric families: range in [0,1], mirror symmetry, zero at 0.5,
    and power(n=2) identical to the parabola, all on a 1e-3 grid."""
    start = time.perf_counter()
    grid = np.linspace(0.0, 1.0, 1001)
    families = {
        "parabola": ClassificationFactor(FactorFamily.PARABOLA),
        "power2": ClassificationFactor(FactorFamily.POWER, power_exponent=2.0),
        "exponential": ClassificationFactor(FactorFamily.EXPONENTIAL),
        "negative_entropy": ClassificationFactor(FactorFamily.NEGATIVE_ENTROPY),
        "cosine_corrected": ClassificationFactor(FactorFamily.COSINE_CORRECTED),
    }
    for name, cfg in families.items():
        values = class_factor(grid, cfg)
        assert values.min() >= 0.0 and values.max() <= 1.0, name
        mirrored = class_factor(1.0 - grid, cfg)
        assert np.max(np.abs(values - mirrored)) <= 1e-12, name
        assert abs(class_factor(0.5, cfg)) <= 1e-12, name
    power = class_factor(grid, families["power2"])
    parabola = class_factor(grid, families["parabola"])
    assert np.max(np.abs(power - parabola)) <= 1e-12
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0, f"took {elapsed:.2f}s"
    _passed("correction-factor suite")


def test_hit_rate_matches_brute_force_enumeration():
    """Exhaustive equivalence against a literal transcription of the
    position-weighted precision formula, for every ranking of up to 7
    features and every expected set of size up to 3."""

    def brute_force(ranking, expected, window):
        total = 0.0
        hits = []
        for i in range(1, window + 1):
            if ranking[i - 1] in expected:
                hits.append(1.0 / i)
        norm = [1.0 / i for i in range(1, min(len(expected), window) + 1)]
        return math.fsum(hits) / math.fsum(norm)

    start = time.perf_counter()
    checked = 0
    for n_features in range(2, 8):
        features = range(n_features)
        subsets = [
            frozenset(combo)
            for size in range(1, min(3, n_features - 1) + 1)
            for combo in itertools.combinations(features, size)
        ]
        for ranking in itertools.permutations(features):
            for expected in subsets:
                got = hit_rate_from_ranking(ranking, expected, None)
                want = brute_force(ranking, expected, n_features)
                assert got == want, (ranking, expected)
                if set(ranking[: len(expected)]) == expected:
                    assert got == 1.0, (ranking, expected)
                checked += 1
    elapsed = time.perf_counter() - start
    assert elapsed < 10.0, f"took {elapsed:.2f}s"
    assert checked == 350416
    _passed(f"hit-rate oracle equivalence ({checked} cases)")


def test_mean_inequality_property():
    """harmonic <= geometric <= arithmetic per feature on random positive
    bundles; geometric == sqrt(arithmetic * harmonic) for 2 sources."""
    rng = np.random.default_rng(123)
    cfg = ConsensusConfig(strict_domain=True)
    for _ in range(1000):
        n_sources = int(rng.integers(2, 6))
        n_features = int(rng.integers(1, 9))
        values = rng.uniform(1e-3, 10.0, size=(n_sources, n_features))
        aggregates = [SourceAggregate(f"s{i}", values[i]) for i in range(n_sources)]
        am = arithmetic_mean(aggregates).scores
        hm = harmonic_mean(aggregates, cfg).scores
        gm = geometric_mean(aggregates, cfg).scores
        assert np.all(hm <= gm + 1e-12)
        assert np.all(gm <= am + 1e-12)
        if n_sources == 2:
            assert np.max(np.abs(gm - np.sqrt(am * hm))) <= 1e-9
    _passed("mean inequality on 1000 random bundles")


def test_wisca_local_global_fairness():
    """A local source of identical rows with unit correction factors equals
    its global twin: the sample-count division makes scopes comparable."""
    rng = np.random.default_rng(42)
    for n_samples in (1, 4, 25):
        vector = rng.uniform(0.0, 1.0, 6)
        vector[0], vector[1] = 0.0, 1.0  # scaling fixed point
        local = make_local(np.tile(vector, (n_samples, 1)))
        preds = classification_preds(np.ones(n_samples))  # parabola factor 1
        local_phi = wisca([local], preds).scores
        global_phi = wisca([make_global(vector)]).scores
        assert np.max(np.abs(local_phi - global_phi)) <= 1e-9
    _passed("wisca local/global fairness")


def test_d1_binary_classification_reproduction(d1_run):
    """Benchmark 1 qualitative claim: voting and the weighted scaled
    consensus place all expected features first; arithmetic mean close."""
    start = time.perf_counter()
    ds, run = d1_run["ds"], d1_run["run"]
    assert not run.failures
    assert d1_run["report"].auc >= 0.9

    rates = {
        fid: hit_rate(result, ds.truth, ds.catalog) for fid, result in run.results.items()
    }
    assert rates["wisca"] >= 0.9, rates
    assert rates["voting"] >= 0.9, rates
    assert rates["arithmetic_mean"] >= 0.9, rates

    top4 = {ds.catalog.names[i] for i in run.results["wisca"].ranking[:4]}
    assert top4 == {"F2", "F3", "F9", "F17"}
    elapsed = time.perf_counter() - start
    assert elapsed < 120.0, f"took {elapsed:.2f}s"
    _passed("benchmark-1 desk-scale reproduction")


def test_d4_regression_reproduction(d4_run):
    """Benchmark 4 qualitative claim: the weighted scaled consensus finds
    all expected features and is not beaten by voting."""
    start = time.perf_counter()
    ds, run = d4_run["ds"], d4_run["run"]
    assert not run.failures

    wisca_rate = hit_rate(run.results["wisca"], ds.truth, ds.catalog)
    voting_rate = hit_rate(run.results["voting"], ds.truth, ds.catalog)
    assert wisca_rate >= voting_rate

    top4 = {ds.catalog.names[i] for i in run.results["wisca"].ranking[:4]}
    assert top4 == {"F19", "F21", "F24", "F26"}
    elapsed = time.perf_counter() - start
    assert elapsed < 120.0, f"took {elapsed:.2f}s"
    _passed("benchmark-4 desk-scale reproduction")


def test_wisca_aligns_with_best_source(d1_run):
    """The source the consensus correlates with most is one with the best
    hit rate, and their score distributions stay close (JSD <= 0.2)."""
    ds, run = d1_run["ds"], d1_run["run"]
    wisca_scores = run.results["wisca"].scores
    aggregates = [aggregate_source(s) for s in d1_run["bundle"].sources]

    rates = {
        a.source_id: hit_rate_from_ranking(
            np.argsort(-a.values, kind="stable"), ds.truth.expected_indices(ds.catalog), None
        )
        for a in aggregates
    }
    correlations = {a.source_id: spearman(wisca_scores, a.values) for a in aggregates}
    divergences = {a.source_id: jensen_shannon(wisca_scores, a.values) for a in aggregates}

    best_rate = max(rates.values())
    best_sources = {sid for sid, rate in rates.items() if rate == best_rate}
    most_correlated = max(correlations, key=correlations.get)
    assert most_correlated in best_sources, (rates, correlations)
    assert all(
        correlations[most_correlated] >= c for c in correlations.values()
    )
    assert divergences[most_correlated] <= 0.2, divergences
    _passed("alignment with the best source")


def test_wisca_close_to_coefficient_ranking(d1_run):
    """Consensus hit rate within 0.1 of the model's own coefficient-
    magnitude ranking."""
    ds, run = d1_run["ds"], d1_run["run"]
    lr_rank = lr_coefficient_ranking(d1_run["model"])
    lr_rate = hit_rate(lr_rank, ds.truth, ds.catalog)
    wisca_rate = hit_rate(run.results["wisca"], ds.truth, ds.catalog)
    assert abs(wisca_rate - lr_rate) <= 0.1
    _passed("coefficient-ranking parity")


def test_pipeline_determinism(tmp_path_factory):
    """Two full CLI runs with the same seed produce byte-identical trees."""
    base = tmp_path_factory.mktemp("determinism")
    out1, out2 = base / "r1", base / "r2"
    for out in (out1, out2):
        code = main(["all", "--dataset", "d1", "--seed", "7", "--out", str(out)])
        assert code == 0
    names1 = sorted(p.name for p in out1.iterdir())
    names2 = sorted(p.name for p in out2.iterdir())
    assert names1 == names2
    for name in names1:
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name
    _passed("full-pipeline determinism")


def test_metric_unit_oracles():
    """Frozen anchors: reversed ranking correlates -1, disjoint
    distributions diverge exactly 1, a 0.8/0.6 split separates by 25%."""
    assert spearman([1.0, 2.0, 3.0, 4.0], [4.0, 3.0, 2.0, 1.0]) == -1.0
    assert abs(jensen_shannon([1.0, 0.0], [0.0, 1.0]) - 1.0) <= 1e-12

    from attribcons import FeatureCatalog, GroundTruth

    catalog = FeatureCatalog(("A", "B", "X"))
    truth = GroundTruth(frozenset({"A", "B"}))
    result = ConsensusResult.from_scores("f", [0.9, 0.8, 0.6])
    assert separation_distance(result, truth, catalog) == 25.0
    _passed("metric unit oracles")
