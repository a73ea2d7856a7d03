"""Experiments: train black boxes, extract, normalize, score, report."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import BlackBoxSpec, ExperimentConfig
from .errors import AllUncovered, SkqError
from .evaluation import (
    MAE, R2, Dataset, QualityReport, compute_metric, dataset_coverage, load_dataset,
    score_knowledge_base, uncovered_report,
)
from .extractors import cart_extract, gridex_extract, gridrex_extract, train_forest, train_linear
from .extractors.blackbox import Predictor
from .model import KnowledgeBase, predict_batch
from .normalize import simplify_knowledge_base
from .parser import render_theory

EXTRACTORS = {"cart": cart_extract, "gridex": gridex_extract, "gridrex": gridrex_extract}
REPORT_VERSION = 1


def _clean(value):
    """JSON-safe value: NaN/inf become None, numpy scalars become Python ones."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def dump_report(document: dict) -> str:
    """Deterministic structured text: sorted keys, fixed indentation."""
    return json.dumps(_clean(document), sort_keys=True, indent=2, allow_nan=False) + "\n"


def train_blackbox(spec: BlackBoxSpec, train: Dataset) -> Predictor:
    s = dict(spec.settings)
    if spec.kind == "linear":
        if s:
            raise ValueError(f"the linear black box takes no settings, got {sorted(s)}")
        return train_linear(train)
    trees = int(s.pop("trees", 100))
    depth = s.pop("max depth", "unbounded")
    depth = None if depth.lower() in ("unbounded", "none") else int(depth)
    features = s.pop("features", "sqrt")
    features = features if features in ("sqrt", "all") else int(features)
    seed = int(s.pop("seed", 0))
    bootstrap = s.pop("bootstrap", "true").lower() in ("1", "true", "yes", "on")
    if s:
        raise ValueError(f"unknown forest settings {sorted(s)}")
    return train_forest(train, trees, depth, features, seed, bootstrap)


def evaluate_predictions(values, targets) -> dict:
    return {m: compute_metric(list(values), targets, m) for m in (MAE, R2)}


@dataclass
class RowResult:
    name: str
    predictor: str
    extractor: str
    parameters: str
    kb: KnowledgeBase | None = None
    report: QualityReport | None = None
    coverage: float | None = None
    error: str = ""

    def to_dict(self) -> dict:
        out = {"name": self.name, "predictor": self.predictor, "extractor": self.extractor,
               "parameters": self.parameters}
        if self.error:
            out.update(status="error", error=self.error)
            return out
        ev = self.report.evaluation
        out.update(
            status="ok",
            rules=self.report.rules,
            mae_data=ev.data[MAE] if ev else None,
            mae_bb=ev.fidelity[MAE] if ev else None,
            r2_data=ev.data[R2] if ev else None,
            r2_bb=ev.fidelity[R2] if ev else None,
            covered=ev.covered if ev else 0,
            uncovered=ev.uncovered if ev else None,
            coverage=self.coverage,
            performance_score=self.report.performance_score,
            readability_score=self.report.readability_score,
            completeness_score=self.report.completeness_score,
            composite=self.report.composite,
            note=self.report.note,
            theory=render_theory(self.kb, precision=None),
        )
        return out


def run_row(row, blackboxes: dict, train: Dataset, test: Dataset, config: ExperimentConfig,
            seed: int) -> RowResult:
    result = RowResult(row.name, "", "", row.text)
    try:
        bb_name, extractor, params = row.parse(seed)
        result.predictor, result.extractor = bb_name, extractor
        if bb_name not in blackboxes:
            raise ValueError(f"unknown black box {bb_name!r}")
        bb = blackboxes[bb_name]
        if isinstance(bb, str):
            raise ValueError(f"black box {bb_name} failed: {bb}")
        if extractor not in EXTRACTORS:
            raise ValueError(f"unknown extractor {extractor!r}")
        kb = EXTRACTORS[extractor](bb, train, params)
        kb = simplify_knowledge_base(kb)
        result.kb = kb
        bb_test = bb.predict_dataset(test)
        result.coverage = dataset_coverage(kb, test)
        try:
            result.report = score_knowledge_base(kb, test, bb_test, config.score)
        except AllUncovered:
            result.report = uncovered_report(kb, config.score)
    except (SkqError, ValueError, KeyError, ArithmeticError) as exc:
        result.error = f"{type(exc).__name__}: {exc}"
    return result


def prediction_grid(predict, train: Dataset, features: tuple, resolution: int) -> list:
    """Rows ``(f1, f2, prediction)`` over a grid spanning the training range of
    two features, all other features held at their training means."""
    a, b = features
    xs = np.linspace(train.columns[a].min(), train.columns[a].max(), resolution)
    ys = np.linspace(train.columns[b].min(), train.columns[b].max(), resolution)
    ga, gb = np.meshgrid(xs, ys, indexing="ij")
    cols = {n: np.full(ga.size, float(train.columns[n].mean())) for n in train.schema.input_names}
    cols[a], cols[b] = ga.ravel(), gb.ravel()
    values = predict(cols)
    return [(float(p), float(q), v) for p, q, v in zip(cols[a], cols[b], values)]


def write_grid(rows: list, features: tuple, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([*features, "prediction"])
        for p, q, v in rows:
            missing = v is None or (isinstance(v, float) and math.isnan(v))
            writer.writerow([repr(p), repr(q), "" if missing else repr(float(v))])


def run_experiment(config: ExperimentConfig, only: tuple = ()) -> dict:
    """Run every configured row (or those named in ``only``) and build the report."""
    data = load_dataset(config.dataset, config.output_column, drop=config.drop,
                        functor=config.functor)
    train, test = data.split(config.split_ratio, config.split_seed)

    blackboxes: dict = {}
    bb_rows = []
    for spec in config.blackboxes:
        entry = {"name": spec.name, "type": spec.kind}
        try:
            bb = train_blackbox(spec, train)
            blackboxes[spec.name] = bb
            entry.update(status="ok", test=evaluate_predictions(bb.predict_dataset(test), test.targets),
                         importances=bb.importances)
        except (SkqError, ValueError, KeyError, ArithmeticError) as exc:
            blackboxes[spec.name] = str(exc)
            entry.update(status="error", error=f"{type(exc).__name__}: {exc}")
        bb_rows.append(entry)

    rows = [r for r in config.rows if not only or r.name in only]
    results = [run_row(r, blackboxes, train, test, config, config.split_seed) for r in rows]

    if config.grid_export is not None:
        export_grids(config, train, blackboxes, results)

    return {
        "version": REPORT_VERSION,
        "dataset": {"path": config.dataset.name, "output": data.schema.output.name,
                    "instances": len(data), "train": len(train), "test": len(test),
                    "split_seed": config.split_seed, "split_ratio": config.split_ratio},
        "blackboxes": bb_rows,
        "rows": [r.to_dict() for r in results],
        "succeeded": sum(1 for r in results if not r.error),
        "failed": sum(1 for r in results if r.error),
    }


def export_grids(config: ExperimentConfig, train: Dataset, blackboxes: dict, results: list) -> None:
    features = config.grid_features
    if len(features) != 2 or any(f not in train.schema.input_names for f in features):
        return
    out = Path(config.grid_export)
    out.mkdir(parents=True, exist_ok=True)
    for name, bb in blackboxes.items():
        if not isinstance(bb, str):
            rows = prediction_grid(bb.predict_columns, train, features, config.grid_resolution)
            write_grid(rows, features, out / f"bb_{name}.csv")
    for r in results:
        if r.kb is not None:
            kb = r.kb
            rows = prediction_grid(lambda cols: predict_batch(kb, cols).values, train, features,
                                   config.grid_resolution)
            write_grid(rows, features, out / f"{r.name}.csv")


def _fmt(value, digits: int = 2) -> str:
    return "-" if value is None else f"{value:.{digits}f}"


def report_table(document: dict) -> str:
    """Text table mirroring the published results layout plus indicator scores."""
    lines = []
    for bb in document["blackboxes"]:
        if bb["status"] == "ok":
            lines.append(f"{bb['name']:<6} {bb['type']:<8} MAE {_fmt(bb['test']['mae'], 4)}  "
                         f"R2 {_fmt(bb['test']['r2'], 2)}")
        else:
            lines.append(f"{bb['name']:<6} {bb['type']:<8} FAILED {bb['error']}")
    header = (f"{'row':<16} {'BB':<5} {'extractor':<9} {'rules':>5} {'MAE data (BB)':>16} "
              f"{'R2 data (BB)':>14} {'cover':>6} {'read':>6} {'score':>6}")
    lines += ["", header, "-" * len(header)]
    for row in document["rows"]:
        if row["status"] != "ok":
            lines.append(f"{row['name']:<16} {row['predictor']:<5} {row['extractor']:<9} "
                         f"FAILED {row['error']}")
            continue
        mae = f"{_fmt(row['mae_data'], 4)} ({_fmt(row['mae_bb'], 4)})"
        r2 = f"{_fmt(row['r2_data'])} ({_fmt(row['r2_bb'])})"
        lines.append(f"{row['name']:<16} {row['predictor']:<5} {row['extractor']:<9} "
                     f"{row['rules']:>5} {mae:>16} {r2:>14} {_fmt(row['coverage']):>6} "
                     f"{_fmt(row['readability_score']):>6} {_fmt(row['composite']):>6}")
    return "\n".join(lines) + "\n"
