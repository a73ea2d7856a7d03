"""Predictive performance, fidelity, completeness and the composite score."""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass, field, fields
from functools import cached_property
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import AllUncovered, SampleBudgetExceeded, SchemaError, SkqError, ZeroVariance
from .model import (
    CATEGORICAL, CONTINUOUS, Feature, FeatureSchema, FuzzyTable, KnowledgeBase, predict_batch,
)
from .readability import ComplexityReport, WeightConfig, complexity_report, readability_score
from .regions import Categories, Region, Span

MAE, MSE, R2, ACCURACY, F1 = "mae", "mse", "r2", "accuracy", "f1_macro"
REGRESSION_METRICS = (MAE, MSE, R2)
CLASSIFICATION_METRICS = (ACCURACY, F1)

SKIP, WORST = "skip", "worst"
GRID_BUDGET = 10**7


# ---------------------------------------------------------------------------
# Datasets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Dataset:
    """Tabular instances: one column per input feature plus the targets."""

    schema: FeatureSchema
    columns: Mapping[str, np.ndarray]
    targets: np.ndarray

    def __post_init__(self):
        n = len(self.targets)
        if n == 0:
            raise SchemaError("a dataset needs at least one instance")
        cols = {}
        for f in self.schema.inputs:
            if f.name not in self.columns:
                raise SchemaError(f"dataset lacks column {f.name}")
            col = np.asarray(self.columns[f.name])
            col = col.astype(float) if f.kind == CONTINUOUS else col.astype(str)
            if len(col) != n:
                raise SchemaError(f"column {f.name} has {len(col)} values, expected {n}")
            if f.kind == CONTINUOUS and not np.all(np.isfinite(col)):
                raise SchemaError(f"column {f.name} has missing or infinite values")
            cols[f.name] = col
        object.__setattr__(self, "columns", cols)
        targets = np.asarray(self.targets)
        if self.schema.output.kind == CONTINUOUS:
            targets = targets.astype(float)
        else:
            targets = targets.astype(str).astype(object)
        object.__setattr__(self, "targets", targets)

    def __len__(self):
        return len(self.targets)

    @cached_property
    def bounds(self) -> Region:
        dims = {}
        for f in self.schema.inputs:
            col = self.columns[f.name]
            if f.kind == CONTINUOUS:
                dims[f.name] = Span(float(col.min()), float(col.max()), True, True)
            else:
                dims[f.name] = Categories(frozenset(col.tolist()))
        return Region(dims)

    def matrix(self) -> np.ndarray:
        names = [f.name for f in self.schema.inputs]
        if any(f.kind != CONTINUOUS for f in self.schema.inputs):
            raise SchemaError("a numeric matrix needs continuous inputs only")
        return np.column_stack([self.columns[n] for n in names])

    def instances(self):
        names = self.schema.input_names
        for i in range(len(self)):
            yield {n: (self.columns[n][i].item() if hasattr(self.columns[n][i], "item")
                       else self.columns[n][i]) for n in names}

    def subset(self, index) -> "Dataset":
        index = np.asarray(index)
        return Dataset(self.schema, {n: c[index] for n, c in self.columns.items()},
                       self.targets[index])

    def with_targets(self, targets) -> "Dataset":
        return Dataset(self.schema, self.columns, np.asarray(targets))

    def split(self, ratio: float = 0.8, seed: int = 0) -> tuple:
        """Seeded shuffle, then the first ``ratio`` share for training."""
        if not 0.0 < ratio < 1.0:
            raise ValueError("split ratio must lie in (0, 1)")
        order = np.random.default_rng(seed).permutation(len(self))
        cut = int(round(ratio * len(self)))
        return self.subset(np.sort(order[:cut])), self.subset(np.sort(order[cut:]))


def _is_number(text: str) -> bool:
    try:
        float(text)
        return True
    except ValueError:
        return False


def load_dataset(path, output_column: str | None = None, delimiter: str = ",",
                 drop: Sequence[str] = (), functor: str | None = None) -> Dataset:
    """Read a delimiter-separated file with a header row.

    The output column is the last one unless named. Columns whose values all
    parse as numbers are continuous; anything else is categorical.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        header = [h.strip() for h in next(reader)]
        rows = [[cell.strip() for cell in row] for row in reader if any(c.strip() for c in row)]
    for row in rows:
        if len(row) != len(header):
            raise SchemaError(f"{path}: row with {len(row)} cells, header has {len(header)}")
    keep = [h for h in header if h not in set(drop)]
    output = output_column or keep[-1]
    if output not in keep:
        raise SchemaError(f"{path}: no column named {output!r}")
    raw = {h: [row[header.index(h)] for row in rows] for h in keep}

    def kind(name):
        return CONTINUOUS if all(_is_number(v) for v in raw[name]) else CATEGORICAL

    inputs = tuple(Feature(h, kind(h)) for h in keep if h != output)
    if functor is None:
        functor = output.lower() if re.fullmatch(r"[a-z][A-Za-z0-9_]*", output.lower()) else "f"
    schema = FeatureSchema(inputs, Feature(output, kind(output)), functor)
    columns = {f.name: np.asarray(raw[f.name], dtype=float if f.kind == CONTINUOUS else str)
               for f in inputs}
    targets = np.asarray(raw[output], dtype=float if schema.output.kind == CONTINUOUS else str)
    return Dataset(schema, columns, targets)


def write_dataset(dataset: Dataset, path) -> None:
    names = list(dataset.schema.input_names) + [dataset.schema.output.name]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for i in range(len(dataset)):
            row = [dataset.columns[n][i] for n in dataset.schema.input_names]
            row.append(dataset.targets[i])
            writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v
                             for v in row])


def check_compatible(kb: KnowledgeBase, dataset: Dataset) -> None:
    # column order is irrelevant: instances are looked up by feature name
    if set(kb.schema.input_names) != set(dataset.schema.input_names):
        raise SchemaError(f"knowledge base inputs {kb.schema.input_names} differ from "
                          f"dataset inputs {dataset.schema.input_names}")
    if kb.schema.output.kind != dataset.schema.output.kind:
        raise SchemaError("knowledge base and dataset disagree on the output kind")


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------


def _uncovered(value) -> bool:
    return value is None or (isinstance(value, (float, np.floating)) and math.isnan(value))


class _Uncovered:
    def __repr__(self):
        return "<uncovered>"


_UNCOVERED = _Uncovered()


def compute_metric(predictions, targets, metric: str, uncovered_policy: str = SKIP) -> float:
    """Score predictions (``None``/NaN for no prediction) against targets.

    ``skip`` ignores uncovered pairs. ``worst`` substitutes, for regression,
    the target extreme farthest from the true value (used for MAE, MSE and
    R2 alike) and, for classification, a prediction matching no class.
    """
    predictions = list(predictions)
    targets = list(np.asarray(targets).tolist())
    if len(predictions) != len(targets):
        raise ValueError("predictions and targets differ in length")
    covered = [not _uncovered(p) for p in predictions]
    regression = metric in REGRESSION_METRICS
    if metric not in REGRESSION_METRICS + CLASSIFICATION_METRICS:
        raise ValueError(f"unknown metric {metric!r}")

    if uncovered_policy == SKIP:
        pairs = [(p, t) for p, t, c in zip(predictions, targets, covered) if c]
    elif uncovered_policy == WORST:
        if regression:
            lo, hi = min(targets), max(targets)
            pairs = [(p if c else (lo if abs(t - lo) > abs(t - hi) else hi), t)
                     for p, t, c in zip(predictions, targets, covered)]
        else:
            pairs = [(p if c else _UNCOVERED, t) for p, t, c in zip(predictions, targets, covered)]
    else:
        raise ValueError(f"unknown uncovered policy {uncovered_policy!r}")
    if not pairs or not any(covered):
        raise AllUncovered("no instance is covered by the knowledge base")

    if regression:
        y_hat = np.array([float(p) for p, _ in pairs])
        y = np.array([float(t) for _, t in pairs])
        if metric == MAE:
            return float(np.mean(np.abs(y_hat - y)))
        if metric == MSE:
            return float(np.mean((y_hat - y) ** 2))
        ss_tot = float(np.sum((y - y.mean()) ** 2))
        if ss_tot == 0.0:
            raise ZeroVariance("R2 is undefined for constant targets")
        return 1.0 - float(np.sum((y - y_hat) ** 2)) / ss_tot

    if metric == ACCURACY:
        return sum(1 for p, t in pairs if p == t) / len(pairs)
    classes = sorted({t for _, t in pairs} | {p for p, _ in pairs if p is not _UNCOVERED}, key=str)
    scores = []
    for cls in classes:
        tp = sum(1 for p, t in pairs if p == cls and t == cls)
        fp = sum(1 for p, t in pairs if p == cls and t != cls)
        fn = sum(1 for p, t in pairs if p != cls and t == cls)
        denom = 2 * tp + fp + fn
        scores.append(2 * tp / denom if denom else 0.0)
    return sum(scores) / len(scores)


@dataclass(frozen=True)
class EvaluationReport:
    data: dict
    fidelity: dict | None
    covered: int
    uncovered: int

    @property
    def coverage(self) -> float:
        return self.covered / (self.covered + self.uncovered)

    def to_dict(self) -> dict:
        return {"data": dict(self.data), "fidelity": None if self.fidelity is None else dict(self.fidelity),
                "covered": self.covered, "uncovered": self.uncovered}


def _as_list(values) -> list:
    return [None if _uncovered(v) else v for v in np.asarray(values, dtype=object).tolist()]


def evaluate(kb: KnowledgeBase, dataset: Dataset, blackbox_outputs=None,
             uncovered_policy: str = SKIP, policy: str | None = None,
             fuzzy: FuzzyTable | None = None) -> EvaluationReport:
    """Metrics against the data and, if given, against black-box outputs."""
    check_compatible(kb, dataset)
    values, covered = predict_batch(kb, dataset.columns, policy, fuzzy)
    predictions = _as_list(values)
    metrics = REGRESSION_METRICS if dataset.schema.output.kind == CONTINUOUS else CLASSIFICATION_METRICS

    def family(targets):
        out = {}
        for m in metrics:
            try:
                out[m] = compute_metric(predictions, targets, m, uncovered_policy)
            except ZeroVariance:
                out[m] = None
        return out

    data = family(dataset.targets)
    fidelity = None
    if blackbox_outputs is not None:
        if len(blackbox_outputs) != len(dataset):
            raise ValueError("black-box outputs are not aligned with the dataset")
        fidelity = family(blackbox_outputs)
    n_covered = int(covered.sum())
    return EvaluationReport(data, fidelity, n_covered, len(dataset) - n_covered)


# ---------------------------------------------------------------------------
# Completeness
# ---------------------------------------------------------------------------


def covered_mask(kb: KnowledgeBase, cols, fuzzy: FuzzyTable | None = None) -> np.ndarray:
    mask = None
    for rule in kb.rules:
        hit = rule.holds(cols, fuzzy)
        mask = hit if mask is None else (mask | hit)
    return mask


def dataset_coverage(kb: KnowledgeBase, dataset: Dataset, fuzzy: FuzzyTable | None = None) -> float:
    """Fraction of instances matched by at least one rule."""
    check_compatible(kb, dataset)
    return float(covered_mask(kb, dataset.columns, fuzzy).sum()) / len(dataset)


def _axis_values(schema: FeatureSchema, bounds: Region, k: int) -> list:
    axes = []
    for f in schema.inputs:
        c = bounds.dims.get(f.name)
        if isinstance(c, Categories):
            if c.exclude:
                raise ValueError(f"bounds on {f.name} must list its categories")
            axes.append(np.array(sorted(c.values), dtype=object))
        else:
            if c is None or not (math.isfinite(c.low) and math.isfinite(c.high)):
                raise ValueError(f"bounds on {f.name} must be finite")
            axes.append(np.linspace(c.low, c.high, k))
    return axes


def sampled_coverage(kb: KnowledgeBase, bounds: Region, strategy: str = "grid", k: int = 10,
                     n: int = 10_000, seed: int = 0, fuzzy: FuzzyTable | None = None,
                     chunk: int = 250_000) -> float:
    """Fraction of points sampled inside ``bounds`` that some rule covers.

    ``grid`` places ``k`` equally spaced values (ends included) on every
    continuous feature and uses every listed category; at most 10**7 points.
    ``random`` draws ``n`` uniform points from a generator seeded by ``seed``.
    """
    schema = kb.schema
    names = schema.input_names
    if strategy == "grid":
        if k < 2:
            raise ValueError("grid sampling needs k >= 2")
        axes = _axis_values(schema, bounds, k)
        shape = tuple(len(a) for a in axes)
        total = math.prod(shape)
        if total > GRID_BUDGET:
            raise SampleBudgetExceeded(f"{total} grid points exceed the budget of {GRID_BUDGET}")
        hits = 0
        for start in range(0, total, chunk):
            flat = np.arange(start, min(start + chunk, total))
            idx = np.unravel_index(flat, shape)
            cols = {name: axes[j][idx[j]] for j, name in enumerate(names)}
            hits += int(covered_mask(kb, cols, fuzzy).sum())
        return hits / total
    if strategy == "random":
        if n < 1:
            raise ValueError("random sampling needs n >= 1")
        rng = np.random.default_rng(seed)
        cols = {}
        for f in schema.inputs:
            c = bounds.dims.get(f.name)
            if isinstance(c, Categories):
                if c.exclude:
                    raise ValueError(f"bounds on {f.name} must list its categories")
                cols[f.name] = rng.choice(np.array(sorted(c.values), dtype=object), size=n)
            else:
                if c is None or not (math.isfinite(c.low) and math.isfinite(c.high)):
                    raise ValueError(f"bounds on {f.name} must be finite")
                cols[f.name] = rng.uniform(c.low, c.high, size=n)
        return int(covered_mask(kb, cols, fuzzy).sum()) / n
    raise ValueError(f"unknown sampling strategy {strategy!r}")


# ---------------------------------------------------------------------------
# Composite score
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScoreConfig:
    a: float = 1.0
    b: float = 1.0
    c: float = 1.0
    performance: str = "r2"  # regression: "r2" (clamped) or "inverse_mae"
    uncovered_policy: str = SKIP
    completeness: str = "dataset"  # or "grid" / "random" over the dataset bounds
    grid_k: int = 10
    samples: int = 10_000
    seed: int = 0
    policy: str | None = None
    weights: WeightConfig = field(default_factory=WeightConfig)

    def __post_init__(self):
        if min(self.a, self.b, self.c) < 0 or self.a + self.b + self.c <= 0:
            raise ValueError("exponents must be non-negative and not all zero")
        if self.performance not in ("r2", "inverse_mae"):
            raise ValueError(f"unknown performance normalization {self.performance!r}")
        if self.completeness not in ("dataset", "grid", "random"):
            raise ValueError(f"unknown completeness source {self.completeness!r}")

    @classmethod
    def from_mapping(cls, values: Mapping[str, str]) -> "ScoreConfig":
        weights = {k[len("weights."):]: v for k, v in values.items() if k.startswith("weights.")}
        kwargs = {}
        types = {f.name: f for f in fields(cls)}
        for key, raw in values.items():
            if key.startswith("weights."):
                continue
            if key not in types or key == "weights":
                raise KeyError(f"unknown score setting {key!r}")
            if key in ("a", "b", "c"):
                kwargs[key] = float(raw)
            elif key in ("grid_k", "samples", "seed"):
                kwargs[key] = int(raw)
            else:
                kwargs[key] = None if raw in ("", "none") else str(raw)
        return cls(weights=WeightConfig.from_mapping(weights), **kwargs)


@dataclass(frozen=True)
class QualityReport:
    performance_score: float
    readability_score: float
    completeness_score: float
    composite: float
    rules: int = 0
    evaluation: EvaluationReport | None = None
    complexity: ComplexityReport | None = None
    note: str = ""

    def to_dict(self) -> dict:
        out = {
            "performance_score": self.performance_score,
            "readability_score": self.readability_score,
            "completeness_score": self.completeness_score,
            "composite": self.composite,
            "rules": self.rules,
            "note": self.note,
        }
        if self.evaluation is not None:
            out["evaluation"] = self.evaluation.to_dict()
        if self.complexity is not None:
            counts = self.complexity.counts
            out["complexity"] = {
                "total": self.complexity.total, "macro": self.complexity.macro,
                "ordered": self.complexity.ordered, "variables": counts.variables,
                "predicates": counts.predicates, "constants": counts.constants,
            }
        return out


def quality_score(performance: float, readability: float, completeness: float,
                  config: ScoreConfig | None = None, **extra) -> QualityReport:
    """Composite ``performance**a * readability**b * completeness**c``."""
    config = config or ScoreConfig()
    for value in (performance, readability, completeness):
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"indicator {value} outside [0, 1]")
    composite = performance ** config.a * readability ** config.b * completeness ** config.c
    return QualityReport(performance, readability, completeness, composite, **extra)


def normalized_performance(metrics: Mapping[str, float], kind: str, config: ScoreConfig) -> float:
    if kind == CATEGORICAL:
        return float(metrics[ACCURACY])
    if config.performance == "inverse_mae":
        return 1.0 / (1.0 + metrics[MAE])
    if metrics[R2] is None:
        raise ZeroVariance("R2 is undefined for constant reference outputs")
    return min(max(metrics[R2], 0.0), 1.0)


def completeness_score(kb: KnowledgeBase, dataset: Dataset, config: ScoreConfig,
                       fuzzy: FuzzyTable | None = None) -> float:
    if config.completeness == "dataset":
        return dataset_coverage(kb, dataset, fuzzy)
    return sampled_coverage(kb, dataset.bounds, config.completeness, k=config.grid_k,
                            n=config.samples, seed=config.seed, fuzzy=fuzzy)


def score_knowledge_base(kb: KnowledgeBase, dataset: Dataset, blackbox_outputs=None,
                         config: ScoreConfig | None = None,
                         fuzzy: FuzzyTable | None = None) -> QualityReport:
    """Evaluate and score one knowledge base.

    Performance is fidelity when black-box outputs are supplied, otherwise
    performance against the data.
    """
    config = config or ScoreConfig()
    report = evaluate(kb, dataset, blackbox_outputs, config.uncovered_policy, config.policy, fuzzy)
    metrics = report.fidelity if report.fidelity is not None else report.data
    perf = normalized_performance(metrics, dataset.schema.output.kind, config)
    read = readability_score(kb, config.weights)
    compl = completeness_score(kb, dataset, config, fuzzy)
    return quality_score(perf, read, compl, config, rules=len(kb.rules), evaluation=report,
                         complexity=complexity_report(kb, config.weights))


def uncovered_report(kb: KnowledgeBase, config: ScoreConfig | None = None) -> QualityReport:
    """Report for a knowledge base that covers nothing: completeness and composite 0."""
    config = config or ScoreConfig()
    return quality_score(0.0, readability_score(kb, config.weights), 0.0, config,
                         rules=len(kb.rules), complexity=complexity_report(kb, config.weights),
                         note="no instance covered")


@dataclass(frozen=True)
class RankedEntry:
    name: str
    index: int
    report: QualityReport | None
    error: str = ""


def compare(kbs: Sequence[KnowledgeBase], dataset: Dataset, blackbox_outputs=None,
            config: ScoreConfig | None = None, names: Sequence[str] | None = None,
            fuzzy: FuzzyTable | None = None) -> list:
    """Rank knowledge bases by composite score.

    Ties fall to higher completeness, then fewer rules, then input order.
    A knowledge base that cannot be scored is listed after all others with
    its error, without affecting the rest.
    """
    if not kbs:
        raise ValueError("nothing to compare")
    names = list(names) if names is not None else [f"kb{i}" for i in range(len(kbs))]
    ok, failed = [], []
    for i, kb in enumerate(kbs):
        try:
            report = score_knowledge_base(kb, dataset, blackbox_outputs, config, fuzzy)
        except SkqError as exc:
            failed.append(RankedEntry(names[i], i, None, f"{type(exc).__name__}: {exc}"))
            continue
        ok.append(RankedEntry(names[i], i, report))
    ok.sort(key=lambda e: (-e.report.composite, -e.report.completeness_score,
                           e.report.rules, e.index))
    return ok + failed
