"""Grid extractors: hypercubic, non-overlapping cells with constant (GridEx)
or linear (GridREx) outputs.

The training bounding box is tested first. A cell whose local model is
accurate enough becomes a rule; otherwise it is cut into equal-width parts
(per-feature counts from the split policy) and every non-empty part is
treated the same way, down to ``max_depth`` levels where parts become rules
regardless. Parts are half-open ``[lo, b)`` except the last, so siblings
never overlap. Accepted siblings are merged in one lexicographic sweep when
the merged model stays within the threshold.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from ..errors import NoSamples, SchemaError, SingularDesign
from ..evaluation import Dataset
from ..model import CONTINUOUS, ConstantValue, KnowledgeBase, Rule, UNORDERED, linear_or_constant
from ..regions import Region, Span, span_literals
from .blackbox import Predictor, least_squares
from .params import ExtractorParams


@dataclass(frozen=True)
class GridCell:
    region: Region
    indices: np.ndarray
    postcondition: object
    error: float
    fallback: bool = False  # linear fit impossible, constant used instead
    depth: int = 0


def _fit(X, y, indices, linear: bool, names):
    """(postcondition, MAE, fell_back) of the local model on ``indices``."""
    ys = y[indices]
    if linear:
        try:
            intercept, coef = least_squares(X[indices], ys)
        except SingularDesign:
            pass
        else:
            pred = intercept + X[indices] @ coef
            post = linear_or_constant(intercept, tuple(zip(names, map(float, coef))))
            return post, float(np.mean(np.abs(pred - ys))), False
    mean = float(ys.mean())
    return ConstantValue(mean), float(np.mean(np.abs(ys - mean))), linear


def _parts(span: Span, k: int) -> list:
    if k == 1:
        return [span]
    edges = np.linspace(span.low, span.high, k + 1)
    out = []
    for j in range(k):
        last = j == k - 1
        out.append(Span(float(edges[j]) if j else span.low, span.high if last else float(edges[j + 1]),
                        span.low_closed if j == 0 else True, span.high_closed if last else False))
    return out


def _adjacent(a: Region, b: Region, names) -> str | None:
    """The single feature along which ``a`` ends exactly where ``b`` begins."""
    along = None
    for n in names:
        sa, sb = a.get(n), b.get(n)
        if sa == sb:
            continue
        if along is None and sa.high == sb.low and not sa.high_closed and sb.low_closed:
            along = n
            continue
        return None
    return along


class _Grid:
    def __init__(self, X, y, names, params: ExtractorParams, counts: dict, linear: bool):
        self.X, self.y, self.names = X, y, names
        self.params, self.counts, self.linear = params, counts, linear
        self.threshold = params.error_threshold

    def cell(self, region: Region, indices, depth: int) -> GridCell:
        post, err, fallback = _fit(self.X, self.y, indices, self.linear, self.names)
        return GridCell(region, indices, post, err, fallback, depth)

    def children(self, parent: GridCell) -> list:
        spans = [_parts(parent.region.get(n), self.counts[n]) for n in self.names]
        cells = []
        for combo in itertools.product(*spans):
            region = Region(dict(zip(self.names, combo)))
            mask = region.contains({n: self.X[parent.indices, j] for j, n in enumerate(self.names)})
            indices = parent.indices[mask]
            if len(indices) >= self.params.min_samples_per_region:
                cells.append(self.cell(region, indices, parent.depth + 1))
        return cells

    def merge(self, cells: list) -> list:
        merged: list[GridCell] = []
        for c in cells:
            if merged:
                prev = merged[-1]
                along = _adjacent(prev.region, c.region, self.names)
                if along is not None:
                    a, b = prev.region.get(along), c.region.get(along)
                    region = Region({**prev.region.dims,
                                     along: Span(a.low, b.high, a.low_closed, b.high_closed)})
                    joined = self.cell(region, np.sort(np.concatenate([prev.indices, c.indices])),
                                       c.depth)
                    if joined.error <= self.threshold:
                        merged[-1] = joined
                        continue
            merged.append(c)
        return merged

    def expand(self, parent: GridCell) -> list:
        accepted, out = [], []
        max_depth = self.params.max_depth or 1
        for c in self.children(parent):
            if c.error <= self.threshold or c.depth >= max_depth:
                accepted.append(c)
            else:
                out.extend(self.expand(c))
        if self.params.merge:
            accepted = self.merge(accepted)
        # keep lexicographic cell order: accepted cells and refined ones interleave
        return sorted(accepted + out, key=lambda c: _order_key(c.region, self.names))


def _order_key(region: Region, names) -> tuple:
    return tuple((region.get(n).low, region.get(n).high) for n in names)


def grid_cells(bb: Predictor | None, dataset: Dataset, params: ExtractorParams,
               linear: bool = False) -> list:
    """The accepted cells of a grid partition over the dataset bounds."""
    if any(f.kind != CONTINUOUS for f in dataset.schema.inputs) \
            or dataset.schema.output.kind != CONTINUOUS:
        raise SchemaError("grid extraction needs continuous inputs and output")
    if len(dataset) == 0:
        raise NoSamples("cannot partition an empty dataset")
    X = dataset.matrix()
    y = np.asarray(bb.predict_dataset(dataset) if bb is not None else dataset.targets, dtype=float)
    names = dataset.schema.input_names
    importances = bb.importances if bb is not None else {n: 1.0 for n in names}
    grid = _Grid(X, y, names, params, params.splits.counts(importances, names), linear)
    root = grid.cell(dataset.bounds, np.arange(len(X)), 0)
    if params.accept_root and root.error <= params.error_threshold:
        return [root]
    return grid.expand(root)


def cell_rule(cell: GridCell, names) -> Rule:
    literals = []
    for n in names:
        literals.extend(span_literals(n, cell.region.get(n)))
    return Rule(tuple(literals), cell.postcondition)


def _extract(bb, dataset, params, linear, label) -> KnowledgeBase:
    cells = grid_cells(bb, dataset, params, linear)
    names = dataset.schema.input_names
    provenance = (f"{label}, max depth = {params.max_depth or 1}, "
                  f"threshold = {params.error_threshold:g}, splits = {params.splits.describe()}")
    fallbacks = sum(c.fallback for c in cells)
    if fallbacks:
        provenance += f", constant fallback in {fallbacks} singular cell(s)"
    return KnowledgeBase(dataset.schema, tuple(cell_rule(c, names) for c in cells),
                         UNORDERED, provenance)


def gridex_extract(bb: Predictor | None, dataset: Dataset, params: ExtractorParams) -> KnowledgeBase:
    """Grid partition with the mean black-box output of each cell as its rule output."""
    return _extract(bb, dataset, params, False, "gridex")


def gridrex_extract(bb: Predictor | None, dataset: Dataset, params: ExtractorParams) -> KnowledgeBase:
    """Grid partition with a least-squares linear output per cell.

    A cell too small or degenerate for a linear fit keeps its mean instead;
    the provenance line records how many cells did so.
    """
    return _extract(bb, dataset, params, True, "gridrex")
