"""Command-line entry: export a model's explanations as one bundle file."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import joblib
import numpy as np

from .export import ExportJob, export_bundle, parse_selection
from .schema import ExportError


def _read_csv(path: Path, target: str | None):
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ExportError(f"{path.name}: empty dataset file")
    header = lines[0].split(",")
    y_col = None
    if target is not None:
        if target not in header:
            raise ExportError(f"{path.name}: no column named {target!r}")
        y_col = header.index(target)
    rows = []
    for i, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        cells = line.split(",")
        if len(cells) != len(header):
            raise ExportError(f"{path.name}: line {i} has {len(cells)} cells")
        try:
            rows.append([float(c) for c in cells])
        except ValueError:
            raise ExportError(f"{path.name}: line {i} holds a non-numeric cell") from None
    data = np.asarray(rows)
    if data.size == 0:
        raise ExportError(f"{path.name}: dataset has no rows")
    if y_col is None:
        return header, data, None
    feature_cols = [i for i in range(len(header)) if i != y_col]
    names = [header[i] for i in feature_cols]
    return names, data[:, feature_cols], data[:, y_col]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xaiexport",
        description="Convert explainer outputs into an attribution bundle.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    export = sub.add_parser("export", help="run/collect explainers and write a bundle")
    export.add_argument("--model", required=True, help="joblib/pickle model file")
    export.add_argument("--data", required=True, help="CSV dataset with a header row")
    export.add_argument(
        "--explainers",
        required=True,
        help="comma-separated list: permutation, impurity, shap, lime, file:PATH",
    )
    export.add_argument("--out", required=True, help="bundle file to write")
    export.add_argument("--target", help="name of the label column in the CSV")
    export.add_argument("--seed", type=int, default=0)
    export.add_argument("--repeats", type=int, default=5,
                        help="permutation importance repeats")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        model = joblib.load(args.model)
        names, X, y = _read_csv(Path(args.data), args.target)
        selections = [parse_selection(part) for part in args.explainers.split(",")]
        job = ExportJob(
            model=model,
            data=X,
            feature_names=names,
            explainers=selections,
            out_path=args.out,
            y=y,
            seed=args.seed,
            permutation_repeats=args.repeats,
        )
        path = export_bundle(job)
    except (ExportError, OSError, ValueError) as exc:
        print(
            json.dumps({"error": str(exc), "kind": type(exc).__name__, "stage": "export"}),
            file=sys.stderr,
        )
        return 1
    print(str(path))
    return 0


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
