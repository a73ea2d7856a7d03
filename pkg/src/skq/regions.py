"""Axis-aligned regions: intervals with independent open/closed ends per
continuous feature, category sets per categorical feature.

A feature missing from a region is unconstrained. Category sets are either
inclusive (only these values) or exclusive (any value but these), which
keeps complements exact without knowing the full category domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .errors import UnsupportedLiteral
from .model import (
    CATEGORICAL, Comparison, FeatureSchema, Interval, Literal, SetMembership,
)

INF = math.inf


@dataclass(frozen=True)
class Span:
    low: float = -INF
    high: float = INF
    low_closed: bool = False
    high_closed: bool = False

    def __post_init__(self):
        # infinite ends are always open
        if self.low == -INF and self.low_closed:
            object.__setattr__(self, "low_closed", False)
        if self.high == INF and self.high_closed:
            object.__setattr__(self, "high_closed", False)

    @property
    def is_empty(self) -> bool:
        if self.low > self.high:
            return True
        return self.low == self.high and not (self.low_closed and self.high_closed)

    @property
    def is_full(self) -> bool:
        return self.low == -INF and self.high == INF

    @property
    def length(self) -> float:
        return 0.0 if self.is_empty else self.high - self.low

    def contains(self, col: np.ndarray) -> np.ndarray:
        col = np.asarray(col, dtype=float)
        above = col >= self.low if self.low_closed else col > self.low
        below = col <= self.high if self.high_closed else col < self.high
        return above & below

    def intersect(self, other: "Span") -> "Span":
        if self.low > other.low:
            low, low_closed = self.low, self.low_closed
        elif self.low < other.low:
            low, low_closed = other.low, other.low_closed
        else:
            low, low_closed = self.low, self.low_closed and other.low_closed
        if self.high < other.high:
            high, high_closed = self.high, self.high_closed
        elif self.high > other.high:
            high, high_closed = other.high, other.high_closed
        else:
            high, high_closed = self.high, self.high_closed and other.high_closed
        return Span(low, high, low_closed, high_closed)

    def complement(self) -> list:
        pieces = []
        if self.low > -INF:
            pieces.append(Span(-INF, self.low, False, not self.low_closed))
        if self.high < INF:
            pieces.append(Span(self.high, INF, not self.high_closed, False))
        return [p for p in pieces if not p.is_empty]


@dataclass(frozen=True)
class Categories:
    values: frozenset
    exclude: bool = False

    def __post_init__(self):
        object.__setattr__(self, "values", frozenset(str(v) for v in self.values))

    @property
    def is_empty(self) -> bool:
        return not self.exclude and not self.values

    @property
    def is_full(self) -> bool:
        return self.exclude and not self.values

    def contains(self, col: np.ndarray) -> np.ndarray:
        inside = np.isin(np.asarray(col).astype(object), list(self.values))
        return ~inside if self.exclude else inside

    def intersect(self, other: "Categories") -> "Categories":
        a, b = self, other
        if not a.exclude and not b.exclude:
            return Categories(a.values & b.values)
        if a.exclude and b.exclude:
            return Categories(a.values | b.values, exclude=True)
        if a.exclude:
            a, b = b, a
        return Categories(a.values - b.values)

    def complement(self) -> list:
        piece = Categories(self.values, exclude=not self.exclude)
        return [] if piece.is_empty else [piece]


def full_constraint(like):
    return Categories(frozenset(), exclude=True) if isinstance(like, Categories) else Span()


class Region:
    """Conjunction of per-feature constraints (a generalized hyperrectangle)."""

    __slots__ = ("dims",)

    def __init__(self, dims: Mapping | Iterable = ()):
        items = dims.items() if isinstance(dims, Mapping) else dims
        self.dims = {f: c for f, c in items if not c.is_full}

    def __eq__(self, other):
        return isinstance(other, Region) and self.dims == other.dims

    def __hash__(self):
        return hash(frozenset(self.dims.items()))

    def __repr__(self):
        return f"Region({self.dims!r})"

    def get(self, feature: str, like=None):
        if feature in self.dims:
            return self.dims[feature]
        return full_constraint(like) if like is not None else Span()

    @property
    def is_empty(self) -> bool:
        return any(c.is_empty for c in self.dims.values())

    def intersect(self, other: "Region") -> "Region | None":
        dims = dict(self.dims)
        for f, c in other.dims.items():
            dims[f] = dims[f].intersect(c) if f in dims else c
            if dims[f].is_empty:
                return None
        return Region(dims)

    def contains(self, cols: Mapping[str, np.ndarray]) -> np.ndarray:
        n = len(next(iter(cols.values())))
        mask = np.ones(n, dtype=bool)
        for f, c in self.dims.items():
            mask &= c.contains(cols[f])
        return mask

    def measure(self, features: Iterable[str] | None = None) -> float:
        names = list(features) if features is not None else list(self.dims)
        out = 1.0
        for f in names:
            c = self.get(f)
            if isinstance(c, Categories):
                raise ValueError("measure is only defined over continuous features")
            out *= c.length
        return out

    def issubset(self, other: "Region") -> bool:
        return not subtract_regions(self, other)


def subtract_regions(a: Region, b: Region) -> list:
    """Pairwise-disjoint regions whose union is ``a`` minus ``b``.

    One dimension of ``b`` is peeled off at a time, so there are at most two
    pieces per constrained continuous dimension and one per categorical one.
    """
    if a.is_empty:
        return []
    if a.intersect(b) is None:
        return [a]
    pieces = []
    current = dict(a.dims)
    for f, cb in b.dims.items():
        ca = current.get(f, full_constraint(cb))
        for comp in cb.complement():
            piece = ca.intersect(comp)
            if not piece.is_empty:
                pieces.append(Region({**current, f: piece}))
        current[f] = ca.intersect(cb)
    return pieces


def subtract_all(pieces: list, others: Iterable[Region], limit: int | None = None) -> list:
    for other in others:
        pieces = [p for piece in pieces for p in subtract_regions(piece, other)]
        if limit is not None and len(pieces) > limit:
            return pieces
        if not pieces:
            break
    return pieces


# ---------------------------------------------------------------------------
# Literals <-> regions
# ---------------------------------------------------------------------------

_OP_SPANS = {
    "<": lambda v: [Span(-INF, v, False, False)],
    "<=": lambda v: [Span(-INF, v, False, True)],
    ">": lambda v: [Span(v, INF, False, False)],
    ">=": lambda v: [Span(v, INF, True, False)],
    "=": lambda v: [Span(v, v, True, True)],
    "!=": lambda v: [Span(-INF, v, False, False), Span(v, INF, False, False)],
}


def literal_constraints(lit: Literal) -> tuple:
    """``(feature, [constraint, ...])``: the literal as a union of disjoint constraints."""
    if isinstance(lit, Comparison):
        if lit.categorical:
            return lit.feature, [Categories({lit.value}, exclude=lit.op == "!=")]
        return lit.feature, _OP_SPANS[lit.op](lit.value)
    if isinstance(lit, Interval):
        span = Span(lit.low, lit.high, lit.low_closed, lit.high_closed)
        return lit.feature, span.complement() if lit.negated else [span]
    if isinstance(lit, SetMembership):
        return lit.feature, [Categories(lit.values, exclude=lit.negated)]
    raise UnsupportedLiteral(f"{type(lit).__name__} literals have no axis-aligned region")


def precondition_regions(literals: Iterable[Literal], within: Region | None = None) -> list:
    """Disjoint regions whose union is the set of points satisfying every literal."""
    regions = [within if within is not None else Region()]
    for lit in literals:
        feature, constraints = literal_constraints(lit)
        grown = []
        for region in regions:
            for c in constraints:
                r = region.intersect(Region({feature: c}))
                if r is not None:
                    grown.append(r)
        regions = grown
        if not regions:
            break
    return regions


def _keep_low(span: Span, bound: Span | None) -> bool:
    if bound is None:
        return span.low > -INF
    return span.low > bound.low or (span.low == bound.low and bound.low_closed and not span.low_closed)


def _keep_high(span: Span, bound: Span | None) -> bool:
    if bound is None:
        return span.high < INF
    return span.high < bound.high or (span.high == bound.high and bound.high_closed and not span.high_closed)


def span_literals(feature: str, span: Span, bound: Span | None = None) -> list:
    if span.low == span.high:
        return [Comparison(feature, "=", span.low)]
    low, high = _keep_low(span, bound), _keep_high(span, bound)
    if low and high:
        return [Interval(feature, span.low, span.high, span.low_closed, span.high_closed)]
    if low:
        return [Comparison(feature, ">=" if span.low_closed else ">", span.low)]
    if high:
        return [Comparison(feature, "<=" if span.high_closed else "<", span.high)]
    return []


def category_literals(feature: str, cats: Categories, bound: Categories | None = None) -> list:
    if bound is not None and bound.intersect(Categories(cats.values, not cats.exclude)).is_empty:
        return []
    if cats.is_full:
        return []
    if len(cats.values) == 1:
        (value,) = cats.values
        return [Comparison(feature, "!=" if cats.exclude else "=", value)]
    return [SetMembership(feature, cats.values, negated=cats.exclude)]


def region_literals(region: Region, schema: FeatureSchema, bounds: Region | None = None) -> tuple:
    """Literals describing ``region``; sides that coincide with ``bounds`` are left implicit."""
    out = []
    for feature in schema.input_names:
        if feature not in region.dims:
            continue
        c = region.dims[feature]
        bound = bounds.dims.get(feature) if bounds is not None else None
        if isinstance(c, Categories):
            out.extend(category_literals(feature, c, bound))
        else:
            out.extend(span_literals(feature, c, bound))
    return tuple(out)


def region_from_bounds(lows: Mapping[str, float], highs: Mapping[str, float],
                       categories: Mapping[str, Iterable[str]] | None = None) -> Region:
    dims = {f: Span(lows[f], highs[f], True, True) for f in lows}
    for f, values in (categories or {}).items():
        dims[f] = Categories(frozenset(values))
    return Region(dims)


def schema_full_region(schema: FeatureSchema) -> Region:
    return Region({f.name: (Categories(frozenset(), True) if f.kind == CATEGORICAL else Span())
                   for f in schema.inputs})
