"""Reference black boxes: ordinary least squares and a bagged tree forest."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from ..errors import SchemaError, SingularDesign
from ..evaluation import Dataset
from ..model import CATEGORICAL, CONTINUOUS, FeatureSchema
from .trees import CLASSIFICATION, REGRESSION, Tree, fit_tree


def _normalized(raw, names) -> dict:
    raw = np.asarray(raw, dtype=float)
    total = float(raw.sum())
    if total <= 0.0:
        return {n: 1.0 / len(names) for n in names}
    return {n: float(v) / total for n, v in zip(names, raw)}


def _matrix(schema: FeatureSchema, cols) -> np.ndarray:
    return np.column_stack([np.asarray(cols[n], dtype=float) for n in schema.input_names])


class Predictor:
    """Trained opaque model over a fixed schema."""

    schema: FeatureSchema
    importances: dict

    def predict_matrix(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def predict_columns(self, cols) -> np.ndarray:
        return self.predict_matrix(_matrix(self.schema, cols))

    def predict_dataset(self, dataset: Dataset) -> np.ndarray:
        return self.predict_columns(dataset.columns)

    def predict(self, x):
        out = self.predict_matrix(_matrix(self.schema, {k: [v] for k, v in x.items()}))[0]
        return out.item() if hasattr(out, "item") else out


@dataclass
class LinearModel(Predictor):
    schema: FeatureSchema
    intercept: float
    coefficients: dict
    importances: dict

    def predict_matrix(self, X):
        coef = np.array([self.coefficients[n] for n in self.schema.input_names])
        return self.intercept + np.asarray(X, dtype=float) @ coef


@dataclass
class ForestModel(Predictor):
    schema: FeatureSchema
    trees: list
    importances: dict

    def predict_matrix(self, X):
        outputs = [t.predict(X) for t in self.trees]
        if self.schema.output.kind == CONTINUOUS:
            return np.mean(outputs, axis=0)
        votes = np.array(outputs, dtype=object).T
        # majority vote; ties go to the alphabetically first class
        return np.array([min(Counter(row).items(), key=lambda kv: (-kv[1], kv[0]))[0]
                         for row in votes], dtype=object)


def _continuous_inputs(dataset: Dataset):
    if any(f.kind != CONTINUOUS for f in dataset.schema.inputs):
        raise SchemaError("reference black boxes need continuous inputs")


def least_squares(X: np.ndarray, y: np.ndarray) -> tuple:
    """(intercept, coefficients) of the OLS fit; SingularDesign if rank deficient."""
    X = np.asarray(X, dtype=float)
    design = np.column_stack([np.ones(len(X)), X])
    if len(X) < design.shape[1] or np.linalg.matrix_rank(design) < design.shape[1]:
        raise SingularDesign(f"design matrix with {len(X)} rows is rank deficient")
    beta, *_ = np.linalg.lstsq(design, np.asarray(y, dtype=float), rcond=None)
    return float(beta[0]), beta[1:]


def train_linear(dataset: Dataset) -> LinearModel:
    """Ordinary least squares; importance of a feature is ``|coef| * std``, normalized."""
    _continuous_inputs(dataset)
    if dataset.schema.output.kind != CONTINUOUS:
        raise SchemaError("the linear regressor needs a continuous output")
    X = dataset.matrix()
    intercept, coef = least_squares(X, dataset.targets)
    names = dataset.schema.input_names
    raw = np.abs(coef) * X.std(axis=0)
    # roundoff-sized contributions (e.g. a constant target) carry no ranking
    raw[raw <= 1e-12 * max(float(np.abs(dataset.targets).max()), 1e-300)] = 0.0
    return LinearModel(dataset.schema, intercept, dict(zip(names, map(float, coef))),
                       _normalized(raw, names))


def features_per_split(spec, d: int) -> int | None:
    if spec is None or spec == "all":
        return None
    if spec == "sqrt":
        return max(1, int(math.sqrt(d)))
    return int(spec)


def train_forest(dataset: Dataset, n_trees: int = 100, max_depth: int | None = None,
                 features: int | str | None = "sqrt", seed: int = 0,
                 bootstrap: bool = True) -> ForestModel:
    """Bagged CART trees; importances are normalized total impurity decreases.

    Every tree draws from its own child of ``SeedSequence(seed)``, so results
    do not depend on the order in which trees are built.
    """
    if n_trees < 1:
        raise ValueError("a forest needs at least one tree")
    _continuous_inputs(dataset)
    X, y = dataset.matrix(), dataset.targets
    task = REGRESSION if dataset.schema.output.kind == CONTINUOUS else CLASSIFICATION
    classes = sorted(set(y.tolist())) if dataset.schema.output.kind == CATEGORICAL else None
    k = features_per_split(features, X.shape[1])
    trees: list[Tree] = []
    gains = np.zeros(X.shape[1])
    for child in np.random.SeedSequence(seed).spawn(n_trees):
        rng = np.random.default_rng(child)
        rows = rng.integers(0, len(X), len(X)) if bootstrap else np.arange(len(X))
        tree = fit_tree(X[rows], y[rows], task, max_depth=max_depth, max_features=k,
                        rng=rng, classes=classes)
        trees.append(tree)
        gains += tree.gains
    return ForestModel(dataset.schema, trees, _normalized(gains, dataset.schema.input_names))
