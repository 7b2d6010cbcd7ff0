"""Command-line pipeline.

Subcommands chain through files in the output directory:

    synth -> train -> explain -> consensus -> evaluate -> report

``all`` runs the whole chain.  Every artifact is a deterministic function
of the configuration and seed, so reruns are byte-identical.  Errors leave
a single-line JSON object on stderr and a nonzero exit code.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import bundleio, report as report_mod
from .consensus import (
    ConsensusConfig,
    ConsensusRun,
    WiscaConfig,
    aggregate_source,
    run_all,
)
from .errors import BundleFormatError
from .metrics import (
    DistanceConfig,
    EvaluationReport,
    FunctionEvaluation,
    HitRateConfig,
    SourceEvaluation,
    evaluate_suite,
)
from .models import (
    DeskModel,
    Hyperparams,
    ModelKind,
    OcclusionBaseline,
    occlusion_attribution,
    permutation_importance,
    predictions_for,
    train,
)
from .scaling import (
    ClassificationFactor,
    FactorFamily,
    RegressionFactor,
    ScalingMode,
    ScalingPolicy,
)
from .synth import (
    DatasetId,
    FORMULAS,
    SyntheticDatasetSpec,
    TabularDataset,
    class_balance,
    generate,
)
from .types import (
    AttributionBundle,
    ConsensusResult,
    Direction,
    FeatureCatalog,
    GroundTruth,
    Task,
)

logger = logging.getLogger(__name__)

_LOG_LEVELS = {
    "error": logging.ERROR,
    "warn": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}


class CliError(Exception):
    """Pipeline failure with the stage it happened in."""

    def __init__(self, stage: str, message: str):
        super().__init__(message)
        self.stage = stage


@dataclass(frozen=True)
class RunConfig:
    """Resolved settings of one pipeline run.

    Built from CLI flags over config-file values over these defaults; flags
    always win.
    """

    dataset: str = "d1"
    samples: int | None = None
    features: int | None = None
    formula: str | None = None
    seed: int | None = None
    model: str = "logistic"
    restarts: int = 3
    voting_top_n: int | None = None
    alpha: float = 1.0
    factor: str = "parabola"
    power_exponent: float = 2.0
    exp_steepness: float = 5.0
    hit_n: int | None = None
    epsilon: float = 1e-6
    epsilon_clamp: float = 1e-9
    strict_domain: bool = False
    scaling_mode: str = "per_source_matrix"
    degenerate_value: float = 0.0
    baseline: str = "mean"
    repeats: int = 5
    learning_rate: float = 1.5
    iterations: int = 2000
    l2_penalty: float = 1e-4
    k_neighbors: int = 5
    train_fraction: float = 0.8
    out: str = "out"
    bundle: str | None = None
    truth: str | None = None

    @property
    def pipeline_seed(self) -> int:
        return 0 if self.seed is None else self.seed

    def dataset_spec(self) -> SyntheticDatasetSpec:
        try:
            dataset_id = DatasetId(self.dataset)
        except ValueError:
            raise CliError("config", f"unknown dataset: {self.dataset!r}") from None
        return SyntheticDatasetSpec(
            dataset_id, self.samples, self.features, self.seed, self.formula
        )

    def hyperparams(self) -> Hyperparams:
        return Hyperparams(
            learning_rate=self.learning_rate,
            iterations=self.iterations,
            l2_penalty=self.l2_penalty,
            restarts=self.restarts,
            k_neighbors=self.k_neighbors,
            train_fraction=self.train_fraction,
        )

    def consensus_config(self, n_features: int) -> ConsensusConfig:
        # the ballot size defaults to 10 clipped to the feature count; an
        # explicit value is used as given and may fail voting's domain check
        top_n = self.voting_top_n
        if top_n is None:
            top_n = min(10, n_features)
        return ConsensusConfig(
            voting_top_n=top_n,
            epsilon_clamp=self.epsilon_clamp,
            strict_domain=self.strict_domain,
            wisca=WiscaConfig(
                scaling=ScalingPolicy(ScalingMode(self.scaling_mode), self.degenerate_value),
                class_factor=ClassificationFactor(
                    FactorFamily(self.factor), self.power_exponent, self.exp_steepness
                ),
                reg_factor=RegressionFactor(self.alpha),
            ),
        )

    def hit_config(self) -> HitRateConfig:
        return HitRateConfig(self.hit_n)

    def distance_config(self) -> DistanceConfig:
        return DistanceConfig(self.epsilon)


def build_config(args: argparse.Namespace) -> RunConfig:
    file_values: dict = {}
    if getattr(args, "config", None):
        path = Path(args.config)
        try:
            file_values = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise CliError("config", f"cannot read config file: {exc}") from None
        except json.JSONDecodeError as exc:
            raise CliError(
                "config", f"{path.name}: invalid JSON at line {exc.lineno}: {exc.msg}"
            ) from None
        if not isinstance(file_values, dict):
            raise CliError("config", "config file must hold a JSON object")

    field_names = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = set(file_values) - field_names
    if unknown:
        raise CliError("config", f"unknown config keys: {sorted(unknown)}")

    merged: dict = {}
    for name in field_names:
        flag_value = getattr(args, name, None)
        if flag_value is not None:
            merged[name] = flag_value
        elif name in file_values:
            merged[name] = file_values[name]
    try:
        return RunConfig(**merged)
    except (TypeError, ValueError) as exc:
        raise CliError("config", str(exc)) from None


# --- stage implementations -------------------------------------------------


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def stage_synth(cfg: RunConfig) -> TabularDataset:
    ds = generate(cfg.dataset_spec())
    out = _out_dir(cfg)
    bundleio.write_dataset_csv(ds, out / "dataset.csv")
    bundleio.write_truth_json(ds.truth, out / "truth.json")
    meta = {
        "dataset_id": ds.dataset_id.value,
        "formula_id": ds.formula_id,
        "task": ds.task.value,
        "seed": ds.seed,
        "n_samples": ds.n_samples,
        "n_features": ds.n_features,
    }
    (out / "meta.json").write_text(bundleio.canonical_json(meta), encoding="utf-8")
    logger.info("synth: wrote %d x %d dataset to %s", ds.n_samples, ds.n_features, out)
    if ds.task.is_classification:
        logger.info("synth: class balance %s", class_balance(ds))
    return ds


def _load_dataset(cfg: RunConfig) -> TabularDataset:
    """Dataset from prior synth output, regenerated from the settings otherwise."""
    out = Path(cfg.out)
    csv_path = out / "dataset.csv"
    meta_path = out / "meta.json"
    if not (csv_path.exists() and meta_path.exists()):
        return generate(cfg.dataset_spec())
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    catalog, X, y = bundleio.read_dataset_csv(csv_path)
    truth = bundleio.read_truth_json(out / "truth.json")
    return TabularDataset(
        dataset_id=DatasetId(meta["dataset_id"]),
        formula_id=meta["formula_id"],
        task=Task(meta["task"]),
        catalog=catalog,
        X=X,
        y=y,
        truth=truth,
        seed=int(meta["seed"]),
    )


def stage_train(cfg: RunConfig, ds: TabularDataset) -> DeskModel:
    try:
        kind = ModelKind(cfg.model)
    except ValueError:
        raise CliError("train", f"unknown model kind: {cfg.model!r}") from None
    model, train_report = train(ds, kind, cfg.hyperparams(), cfg.pipeline_seed)
    out = _out_dir(cfg)
    bundleio.write_model_json(model, out / "model.json")
    (out / "train_report.json").write_text(
        bundleio.canonical_json(dataclasses.asdict(train_report)), encoding="utf-8"
    )
    logger.info("train: %s model ready (restarts=%d)", kind.value, cfg.restarts)
    return model


def _load_model(cfg: RunConfig) -> DeskModel:
    path = Path(cfg.out) / "model.json"
    if not path.exists():
        raise CliError("explain", f"no trained model at {path}; run the train stage first")
    return bundleio.read_model_json(path)


def stage_explain(cfg: RunConfig, ds: TabularDataset, model: DeskModel) -> AttributionBundle:
    perm = permutation_importance(model, ds, cfg.repeats, cfg.pipeline_seed)
    occ = occlusion_attribution(model, ds, OcclusionBaseline(cfg.baseline))
    preds = predictions_for(model, ds)
    bundle = AttributionBundle(ds.catalog, (perm, occ), preds)
    report = bundle.validate()
    if not report.ok:
        raise CliError("explain", "; ".join(report.messages()))
    bundleio.write_bundle(bundle, _out_dir(cfg) / "bundle.json", ds.task)
    logger.info("explain: bundle with %d sources written", len(bundle.sources))
    return bundle


def _load_bundle(cfg: RunConfig, stage: str) -> tuple[AttributionBundle, Task]:
    path = Path(cfg.bundle) if cfg.bundle else Path(cfg.out) / "bundle.json"
    if not path.exists():
        raise CliError(stage, f"no attribution bundle at {path}")
    return bundleio.read_bundle(path)


def consensus_run_to_json_dict(
    run: ConsensusRun, catalog: FeatureCatalog, task: Task
) -> dict:
    return {
        "schema_version": "1",
        "task": task.value,
        "features": list(catalog.names),
        "functions": {
            fid: {
                "scores": result.scores.tolist(),
                "ranking": result.ranking.tolist(),
                "direction": result.direction.value,
            }
            for fid, result in run.results.items()
        },
        "failures": dict(run.failures),
    }


def consensus_run_from_json_dict(doc: dict) -> tuple[ConsensusRun, FeatureCatalog, Task]:
    try:
        catalog = FeatureCatalog(tuple(doc["features"]))
        task = Task(doc["task"])
        results = {
            fid: ConsensusResult.from_scores(
                fid, np.asarray(entry["scores"], dtype=float), Direction(entry["direction"])
            )
            for fid, entry in doc["functions"].items()
        }
        failures = {str(k): str(v) for k, v in doc.get("failures", {}).items()}
    except (KeyError, TypeError, ValueError) as exc:
        raise BundleFormatError(f"bad consensus document: {exc}") from None
    return ConsensusRun(results, failures), catalog, task


def stage_consensus(
    cfg: RunConfig, bundle: AttributionBundle, task: Task
) -> ConsensusRun:
    run = run_all(bundle, cfg.consensus_config(bundle.catalog.count))
    out = _out_dir(cfg)
    (out / "consensus_scores.csv").write_text(
        report_mod.consensus_scores_csv_text(run.results, bundle.catalog),
        encoding="utf-8",
        newline="\n",
    )
    (out / "consensus.json").write_text(
        bundleio.canonical_json(consensus_run_to_json_dict(run, bundle.catalog, task)),
        encoding="utf-8",
    )
    if run.failures:
        logger.warning("consensus: %d function(s) failed: %s", len(run.failures), run.failures)
    return run


def _load_truth(cfg: RunConfig, stage: str) -> GroundTruth:
    path = Path(cfg.truth) if cfg.truth else Path(cfg.out) / "truth.json"
    if not path.exists():
        raise CliError(
            stage,
            f"missing ground truth: no expected-features file at {path}",
        )
    return bundleio.read_truth_json(path)


def stage_evaluate(
    cfg: RunConfig,
    run: ConsensusRun,
    bundle: AttributionBundle,
    truth: GroundTruth,
) -> EvaluationReport:
    aggregates = [aggregate_source(s) for s in bundle.sources]
    evaluation = evaluate_suite(
        run.results,
        truth,
        bundle.catalog,
        aggregates,
        cfg.hit_config(),
        cfg.distance_config(),
        failures=run.failures,
    )
    out = _out_dir(cfg)
    (out / "metrics.csv").write_text(
        report_mod.metrics_csv_text(evaluation), encoding="utf-8", newline="\n"
    )
    (out / "metrics.json").write_text(
        bundleio.canonical_json(evaluation.to_json_dict()), encoding="utf-8"
    )
    return evaluation


def _evaluation_from_json_dict(doc: dict) -> EvaluationReport:
    functions = tuple(
        FunctionEvaluation(
            r["function_id"], r.get("hit_rate"), r.get("separation_distance"), r.get("error")
        )
        for r in doc.get("functions", [])
    )
    sources = tuple(
        SourceEvaluation(
            r["source_id"],
            r.get("hit_rate"),
            r.get("spearman_vs_wisca"),
            r.get("jsd_vs_wisca"),
            r.get("error"),
        )
        for r in doc.get("sources", [])
    )
    return EvaluationReport(functions, sources)


def stage_report(
    cfg: RunConfig,
    run: ConsensusRun,
    evaluation: EvaluationReport,
    catalog: FeatureCatalog,
    truth: GroundTruth | None,
) -> list[Path]:
    manifest = report_mod.write_report(run.results, evaluation, cfg.out, catalog, truth)
    logger.info("report: wrote %s", ", ".join(p.name for p in manifest))
    return manifest


# --- subcommand drivers ------------------------------------------------------


def _cmd_synth(cfg: RunConfig) -> None:
    stage_synth(cfg)


def _cmd_train(cfg: RunConfig) -> None:
    stage_train(cfg, _load_dataset(cfg))


def _cmd_explain(cfg: RunConfig) -> None:
    ds = _load_dataset(cfg)
    stage_explain(cfg, ds, _load_model(cfg))


def _cmd_consensus(cfg: RunConfig) -> None:
    bundle, task = _load_bundle(cfg, "consensus")
    stage_consensus(cfg, bundle, task)


def _cmd_evaluate(cfg: RunConfig) -> None:
    bundle, task = _load_bundle(cfg, "evaluate")
    consensus_path = Path(cfg.out) / "consensus.json"
    if consensus_path.exists():
        doc = json.loads(consensus_path.read_text(encoding="utf-8"))
        run, catalog, _ = consensus_run_from_json_dict(doc)
        if tuple(catalog.names) != tuple(bundle.catalog.names):
            raise CliError("evaluate", "consensus results and bundle disagree on features")
    else:
        run = stage_consensus(cfg, bundle, task)
    truth = _load_truth(cfg, "evaluate")
    stage_evaluate(cfg, run, bundle, truth)


def _cmd_report(cfg: RunConfig) -> None:
    consensus_path = Path(cfg.out) / "consensus.json"
    metrics_path = Path(cfg.out) / "metrics.json"
    if not consensus_path.exists():
        raise CliError("report", f"no consensus results at {consensus_path}")
    if not metrics_path.exists():
        raise CliError("report", f"no evaluation metrics at {metrics_path}")
    run, catalog, _ = consensus_run_from_json_dict(
        json.loads(consensus_path.read_text(encoding="utf-8"))
    )
    evaluation = _evaluation_from_json_dict(
        json.loads(metrics_path.read_text(encoding="utf-8"))
    )
    truth_path = Path(cfg.truth) if cfg.truth else Path(cfg.out) / "truth.json"
    truth = bundleio.read_truth_json(truth_path) if truth_path.exists() else None
    stage_report(cfg, run, evaluation, catalog, truth)


def _cmd_all(cfg: RunConfig) -> None:
    ds = stage_synth(cfg)
    model = stage_train(cfg, ds)
    bundle = stage_explain(cfg, ds, model)
    run = stage_consensus(cfg, bundle, ds.task)
    evaluation = stage_evaluate(cfg, run, bundle, ds.truth)
    stage_report(cfg, run, evaluation, ds.catalog, ds.truth)


_COMMANDS = {
    "synth": _cmd_synth,
    "train": _cmd_train,
    "explain": _cmd_explain,
    "consensus": _cmd_consensus,
    "evaluate": _cmd_evaluate,
    "report": _cmd_report,
    "all": _cmd_all,
}


class _JsonArgumentParser(argparse.ArgumentParser):
    """Argument errors answer in the same machine-readable shape as the rest."""

    def error(self, message: str):  # noqa: D102 - argparse contract
        print(json.dumps({"error": message, "kind": "UsageError", "stage": "args"}),
              file=sys.stderr)
        raise SystemExit(2)


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--dataset", choices=[d.value for d in DatasetId])
    common.add_argument("--samples", type=int)
    common.add_argument("--features", type=int)
    common.add_argument("--formula", choices=sorted(FORMULAS))
    common.add_argument("--seed", type=int)
    common.add_argument("--model", choices=[k.value for k in ModelKind])
    common.add_argument("--restarts", type=int)
    common.add_argument("--voting-top-n", type=int)
    common.add_argument("--alpha", type=float)
    common.add_argument("--factor", choices=[f.value for f in FactorFamily])
    common.add_argument("--hit-n", type=int)
    common.add_argument("--epsilon", type=float)
    common.add_argument("--repeats", type=int)
    common.add_argument("--baseline", choices=[b.value for b in OcclusionBaseline])
    common.add_argument("--bundle", help="attribution bundle file (consensus/evaluate)")
    common.add_argument("--truth", help="expected-features JSON file (evaluate/report)")
    common.add_argument("--out", help="output directory (default: out)")
    common.add_argument("--config", help="JSON config file; flags override it")

    parser = _JsonArgumentParser(
        prog="attribcons",
        description="Consensus over feature-attribution explanations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("synth", "generate a benchmark dataset (CSV + expected-features JSON)"),
        ("train", "train the desk-scale model on the dataset"),
        ("explain", "run the built-in explainers and write the bundle"),
        ("consensus", "run all consensus functions over a bundle"),
        ("evaluate", "score consensus functions against the ground truth"),
        ("report", "emit CSV/SVG reports"),
        ("all", "run the full chain"),
    ]:
        sub.add_parser(name, parents=[common], help=help_text, add_help=True)
    return parser


def _configure_logging() -> None:
    level_name = os.environ.get("ATTRIBCONS_LOG", "warn").lower()
    logging.basicConfig(
        level=_LOG_LEVELS.get(level_name, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )


def main(argv: list[str] | None = None) -> int:
    _configure_logging()
    parser = _build_parser()
    args = parser.parse_args(argv)
    stage = args.command
    try:
        cfg = build_config(args)
        _COMMANDS[stage](cfg)
    except CliError as exc:
        print(
            json.dumps({"error": str(exc), "kind": "CliError", "stage": exc.stage}),
            file=sys.stderr,
        )
        return 1
    except (ValueError, OSError) as exc:
        print(
            json.dumps({"error": str(exc), "kind": type(exc).__name__, "stage": stage}),
            file=sys.stderr,
        )
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
