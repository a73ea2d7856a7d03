"""Abstract syntax of extracted knowledge and its evaluation semantics.

Everything here is immutable. Literals and postconditions evaluate on
*columns*: a mapping from feature name to a 1-d numpy array, so that a
whole dataset can be pushed through a knowledge base at once. The scalar
entry points (:func:`evaluate_literal`, :func:`predict`, ...) wrap a single
instance into length-one columns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Sequence, Union

import numpy as np

from .errors import AmbiguousMatch, MissingFuzzyLabel, SchemaError, UnknownFeature

CONTINUOUS = "continuous"
CATEGORICAL = "categorical"

ORDERED = "ordered"
UNORDERED = "unordered"

FIRST_MATCH = "first-match"
UNIQUE = "unique"
CONFIDENCE = "confidence"

COMPARISON_OPS = ("=", "!=", "<", "<=", ">", ">=")
ORDER_OPS = ("<", "<=", ">", ">=")

Columns = Mapping[str, np.ndarray]
Value = Union[float, str]


def _num(value) -> float:
    # -0.0 collapses to 0.0; lexical sign of zero is not preserved
    return float(value) + 0.0


def _column(cols: Columns, feature: str) -> np.ndarray:
    try:
        return cols[feature]
    except KeyError:
        raise UnknownFeature(feature) from None


def _compare(col: np.ndarray, op: str, value) -> np.ndarray:
    if op == "=":
        return col == value
    if op == "!=":
        return col != value
    if op == "<":
        return col < value
    if op == "<=":
        return col <= value
    if op == ">":
        return col > value
    return col >= value


def _length(cols: Columns) -> int:
    for col in cols.values():
        return len(col)
    return 0


# ---------------------------------------------------------------------------
# Schema
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Feature:
    name: str
    kind: str = CONTINUOUS

    def __post_init__(self):
        if not self.name:
            raise SchemaError("feature names must be non-empty")
        if self.kind not in (CONTINUOUS, CATEGORICAL):
            raise SchemaError(f"unknown feature kind {self.kind!r}")


@dataclass(frozen=True)
class FeatureSchema:
    """Input features (ordered), the output feature and the clause functor."""

    inputs: tuple
    output: Feature
    functor: str = "f"

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        if not self.inputs:
            raise SchemaError("a schema needs at least one input feature")
        names = [f.name for f in self.inputs] + [self.output.name]
        if len(set(names)) != len(names):
            raise SchemaError(f"duplicate feature names in {names}")

    @classmethod
    def continuous(cls, inputs: Sequence[str], output: str, functor: str = "f"):
        return cls(tuple(Feature(n) for n in inputs), Feature(output), functor)

    @property
    def input_names(self) -> tuple:
        return tuple(f.name for f in self.inputs)

    def feature(self, name: str) -> Feature:
        for f in self.inputs:
            if f.name == name:
                return f
        raise UnknownFeature(name)

    def kind(self, name: str) -> str:
        return self.feature(name).kind

    def index(self, name: str) -> int:
        return self.input_names.index(name)


# ---------------------------------------------------------------------------
# Fuzzy semantics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Trapezoid:
    """Trapezoidal membership: 1 on [b, c], 0 outside [a, d], linear between."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        if not (self.a <= self.b <= self.c <= self.d):
            raise ValueError(f"trapezoid breakpoints must be ordered, got {self}")

    def membership(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        out[(x >= self.b) & (x <= self.c)] = 1.0
        if self.b > self.a:
            rising = (x >= self.a) & (x < self.b)
            out[rising] = (x[rising] - self.a) / (self.b - self.a)
        if self.d > self.c:
            falling = (x > self.c) & (x <= self.d)
            out[falling] = (self.d - x[falling]) / (self.d - self.c)
        return out


@dataclass(frozen=True)
class FuzzyTable:
    functions: Mapping = field(default_factory=dict)
    alpha: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")

    def membership(self, feature: str, label: str, x: np.ndarray) -> np.ndarray:
        try:
            trapezoid = self.functions[(feature, label)]
        except KeyError:
            raise MissingFuzzyLabel(feature, label) from None
        return trapezoid.membership(x)


# ---------------------------------------------------------------------------
# Literals
# ---------------------------------------------------------------------------


class Literal:
    """Base class of precondition literals.

    Subclasses implement :meth:`degree`; crisp kinds return 0/1 degrees and
    are satisfied exactly where the degree is 1.
    """

    crisp = True

    def features(self) -> tuple:
        raise NotImplementedError

    def degree(self, cols: Columns, fuzzy: FuzzyTable | None = None) -> np.ndarray:
        return self.holds(cols, fuzzy).astype(float)

    def holds(self, cols: Columns, fuzzy: FuzzyTable | None = None) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class Comparison(Literal):
    feature: str
    op: str
    value: Value

    def __post_init__(self):
        if self.op not in COMPARISON_OPS:
            raise ValueError(f"unknown comparison operator {self.op!r}")
        if isinstance(self.value, str):
            if self.op in ORDER_OPS:
                raise SchemaError(f"ordering comparison {self.op} on category {self.value!r}")
        else:
            object.__setattr__(self, "value", _num(self.value))

    @property
    def categorical(self) -> bool:
        return isinstance(self.value, str)

    def features(self):
        return (self.feature,)

    def holds(self, cols, fuzzy=None):
        return np.asarray(_compare(_column(cols, self.feature), self.op, self.value), dtype=bool)


@dataclass(frozen=True)
class Interval(Literal):
    """``feature in [low, high]``; ends are closed unless stated otherwise."""

    feature: str
    low: float
    high: float
    low_closed: bool = True
    high_closed: bool = True
    negated: bool = False

    def __post_init__(self):
        object.__setattr__(self, "low", _num(self.low))
        object.__setattr__(self, "high", _num(self.high))
        if self.low > self.high:
            raise ValueError(f"interval low {self.low} exceeds high {self.high}")
        if self.low == self.high and not (self.low_closed and self.high_closed):
            raise ValueError("degenerate interval must be closed on both ends")

    def features(self):
        return (self.feature,)

    def holds(self, cols, fuzzy=None):
        col = _column(cols, self.feature)
        above = col >= self.low if self.low_closed else col > self.low
        below = col <= self.high if self.high_closed else col < self.high
        inside = np.asarray(above & below, dtype=bool)
        return ~inside if self.negated else inside


@dataclass(frozen=True)
class SetMembership(Literal):
    feature: str
    values: frozenset
    negated: bool = False

    def __post_init__(self):
        values = frozenset(str(v) for v in self.values)
        if not values:
            raise ValueError("set membership needs at least one category")
        object.__setattr__(self, "values", values)

    def features(self):
        return (self.feature,)

    def holds(self, cols, fuzzy=None):
        col = _column(cols, self.feature)
        inside = np.isin(col.astype(object), list(self.values))
        return ~inside if self.negated else inside


@dataclass(frozen=True)
class MOfN(Literal):
    """Satisfied when at least ``m`` of the inner literals are satisfied."""

    m: int
    literals: tuple

    def __post_init__(self):
        object.__setattr__(self, "literals", tuple(self.literals))
        n = len(self.literals)
        if n < 2:
            raise ValueError("m-of-n needs at least two literals")
        if not 1 <= self.m <= n:
            raise ValueError(f"m must lie in [1, {n}], got {self.m}")
        if any(isinstance(lit, MOfN) for lit in self.literals):
            raise ValueError("m-of-n literals cannot nest")

    @property
    def n(self) -> int:
        return len(self.literals)

    @property
    def crisp(self):
        return all(lit.crisp for lit in self.literals)

    def features(self):
        out = []
        for lit in self.literals:
            out.extend(lit.features())
        return tuple(out)

    def _count(self, cols, fuzzy):
        return sum(lit.holds(cols, fuzzy).astype(int) for lit in self.literals)

    def degree(self, cols, fuzzy=None):
        return self._count(cols, fuzzy) / self.n

    def holds(self, cols, fuzzy=None):
        return self._count(cols, fuzzy) >= self.m


@dataclass(frozen=True)
class Fuzzy(Literal):
    feature: str
    label: str

    crisp = False

    def features(self):
        return (self.feature,)

    def degree(self, cols, fuzzy=None):
        if fuzzy is None:
            raise MissingFuzzyLabel(self.feature, self.label)
        return fuzzy.membership(self.feature, self.label, _column(cols, self.feature))

    def holds(self, cols, fuzzy=None):
        return self.degree(cols, fuzzy) >= fuzzy.alpha


@dataclass(frozen=True)
class Oblique(Literal):
    """``sum(coef * feature) op threshold`` over at least two features."""

    coefficients: tuple
    op: str
    threshold: float

    def __post_init__(self):
        coefficients = tuple((str(f), _num(c)) for f, c in _pairs(self.coefficients))
        names = [f for f, _ in coefficients]
        if len(set(names)) != len(names):
            raise ValueError("oblique literal repeats a feature")
        if sum(1 for _, c in coefficients if c != 0.0) < 2:
            raise ValueError("oblique literal needs two non-zero coefficients; use a Comparison")
        if self.op not in ORDER_OPS:
            raise ValueError(f"oblique operator must be one of {ORDER_OPS}")
        object.__setattr__(self, "coefficients", coefficients)
        object.__setattr__(self, "threshold", _num(self.threshold))

    def features(self):
        return tuple(f for f, c in self.coefficients if c != 0.0)

    def combination(self, cols):
        return sum(c * _column(cols, f).astype(float) for f, c in self.coefficients)

    def holds(self, cols, fuzzy=None):
        return np.asarray(_compare(self.combination(cols), self.op, self.threshold), dtype=bool)


def _pairs(coefficients):
    if isinstance(coefficients, Mapping):
        return list(coefficients.items())
    return list(coefficients)


# ---------------------------------------------------------------------------
# Postconditions
# ---------------------------------------------------------------------------


class Postcondition:
    def features(self) -> tuple:
        return ()

    def evaluate(self, cols: Columns) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class ConstantClass(Postcondition):
    label: str

    def evaluate(self, cols):
        out = np.empty(_length(cols), dtype=object)
        out[:] = self.label
        return out


@dataclass(frozen=True)
class ConstantValue(Postcondition):
    value: float

    def __post_init__(self):
        object.__setattr__(self, "value", _num(self.value))

    def evaluate(self, cols):
        return np.full(_length(cols), self.value)


@dataclass(frozen=True)
class LinearExpr(Postcondition):
    intercept: float
    coefficients: tuple

    def __post_init__(self):
        coefficients = tuple((str(f), _num(c)) for f, c in _pairs(self.coefficients))
        if not any(c != 0.0 for _, c in coefficients):
            raise ValueError("linear postcondition needs a non-zero coefficient; use ConstantValue")
        object.__setattr__(self, "coefficients", coefficients)
        object.__setattr__(self, "intercept", _num(self.intercept))

    def features(self):
        return tuple(f for f, c in self.coefficients if c != 0.0)

    @property
    def terms(self) -> int:
        return len(self.features())

    def evaluate(self, cols):
        out = np.full(_length(cols), self.intercept)
        for f, c in self.coefficients:
            out = out + c * _column(cols, f).astype(float)
        return out


def linear_or_constant(intercept: float, coefficients) -> Postcondition:
    """LinearExpr over the non-zero coefficients, or a constant when none remain."""
    kept = tuple((f, float(c)) for f, c in _pairs(coefficients) if c != 0.0)
    if not kept:
        return ConstantValue(intercept)
    return LinearExpr(intercept, kept)


# ---------------------------------------------------------------------------
# Rules and knowledge bases
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Rule:
    precondition: tuple
    postcondition: Postcondition
    unsatisfiable: bool = False

    def __post_init__(self):
        precondition = tuple(self.precondition)
        if len(set(precondition)) != len(precondition):
            raise ValueError("a precondition cannot repeat an identical literal")
        object.__setattr__(self, "precondition", precondition)

    def features(self) -> tuple:
        out = []
        for lit in self.precondition:
            out.extend(lit.features())
        return tuple(out)

    def holds(self, cols: Columns, fuzzy: FuzzyTable | None = None) -> np.ndarray:
        mask = np.ones(_length(cols), dtype=bool)
        if self.unsatisfiable:
            return ~mask
        for lit in self.precondition:
            mask &= lit.holds(cols, fuzzy)
        return mask

    def confidence(self, cols: Columns, fuzzy: FuzzyTable | None = None) -> np.ndarray:
        conf = np.ones(_length(cols))
        for lit in self.precondition:
            conf = np.minimum(conf, lit.degree(cols, fuzzy))
        return conf


@dataclass(frozen=True)
class KnowledgeBase:
    schema: FeatureSchema
    rules: tuple
    ordering: str = ORDERED
    provenance: str = ""

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(self.rules))
        if not self.rules:
            raise SchemaError("a knowledge base needs at least one rule")
        if self.ordering not in (ORDERED, UNORDERED):
            raise SchemaError(f"unknown ordering {self.ordering!r}")
        for rule in self.rules:
            _check_rule(rule, self.schema)

    def __len__(self):
        return len(self.rules)

    def replace(self, **changes) -> "KnowledgeBase":
        values = dict(schema=self.schema, rules=self.rules, ordering=self.ordering,
                      provenance=self.provenance)
        values.update(changes)
        return KnowledgeBase(**values)


def _check_literal(lit: Literal, schema: FeatureSchema):
    if isinstance(lit, MOfN):
        for inner in lit.literals:
            _check_literal(inner, schema)
        return
    for name in lit.features():
        schema.feature(name)
    if isinstance(lit, Comparison):
        kind = schema.kind(lit.feature)
        if kind == CATEGORICAL and not lit.categorical:
            raise SchemaError(f"numeric constant compared with categorical feature {lit.feature}")
        if kind == CONTINUOUS and lit.categorical:
            raise SchemaError(f"category compared with continuous feature {lit.feature}")
    elif isinstance(lit, SetMembership):
        if schema.kind(lit.feature) != CATEGORICAL:
            raise SchemaError(f"set membership on continuous feature {lit.feature}")
    else:
        for name in lit.features():
            if schema.kind(name) != CONTINUOUS:
                raise SchemaError(f"{type(lit).__name__} literal on categorical feature {name}")


def _check_rule(rule: Rule, schema: FeatureSchema):
    for lit in rule.precondition:
        _check_literal(lit, schema)
    post = rule.postcondition
    if isinstance(post, ConstantClass):
        if schema.output.kind != CATEGORICAL:
            raise SchemaError("class label postcondition for a continuous output")
    else:
        if schema.output.kind != CONTINUOUS:
            raise SchemaError("numeric postcondition for a categorical output")
        for name in post.features():
            if schema.kind(name) != CONTINUOUS:
                raise SchemaError(f"linear postcondition over categorical feature {name}")


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


class Predictions(NamedTuple):
    """Batch predictions; ``values`` is NaN/None wherever ``covered`` is False."""

    values: np.ndarray
    covered: np.ndarray


def instance_columns(x: Mapping[str, Value]) -> dict:
    return {name: np.asarray([value]) for name, value in x.items()}


def evaluate_literal(lit: Literal, x: Mapping[str, Value], fuzzy: FuzzyTable | None = None):
    """Return ``(satisfied, degree)`` of a literal on one instance."""
    cols = instance_columns(x)
    degree = float(lit.degree(cols, fuzzy)[0])
    satisfied = bool(lit.holds(cols, fuzzy)[0])
    return satisfied, degree


def evaluate_postcondition(post: Postcondition, x: Mapping[str, Value]):
    value = post.evaluate(instance_columns(x))[0]
    return value if isinstance(post, ConstantClass) else float(value)


def rule_matches(rule: Rule, x: Mapping[str, Value], fuzzy: FuzzyTable | None = None) -> bool:
    return bool(rule.holds(instance_columns(x), fuzzy)[0])


def _empty_outputs(kb: KnowledgeBase, n: int) -> np.ndarray:
    if kb.schema.output.kind == CATEGORICAL:
        return np.full(n, None, dtype=object)
    return np.full(n, np.nan)


def _default_policy(kb: KnowledgeBase, policy: str | None) -> str:
    if policy is None:
        return FIRST_MATCH if kb.ordering == ORDERED else UNIQUE
    if policy not in (FIRST_MATCH, UNIQUE, CONFIDENCE):
        raise ValueError(f"unknown prediction policy {policy!r}")
    if kb.ordering == ORDERED and policy != FIRST_MATCH:
        raise ValueError("ordered knowledge bases only support first-match prediction")
    return policy


def _same(a, b) -> bool:
    if isinstance(a, str) or isinstance(b, str):
        return a == b
    return a == b or (math.isnan(a) and math.isnan(b))


def predict_batch(kb: KnowledgeBase, cols: Columns, policy: str | None = None,
                  fuzzy: FuzzyTable | None = None) -> Predictions:
    """Predict every row of ``cols``."""
    policy = _default_policy(kb, policy)
    n = _length(cols)
    values = _empty_outputs(kb, n)
    covered = np.zeros(n, dtype=bool)

    if policy == FIRST_MATCH:
        for rule in kb.rules:
            free = ~covered
            if not free.any():
                break
            fire = free & rule.holds(cols, fuzzy)
            if fire.any():
                values[fire] = rule.postcondition.evaluate(cols)[fire]
                covered |= fire
        return Predictions(values, covered)

    masks = np.array([rule.holds(cols, fuzzy) for rule in kb.rules]).reshape(len(kb.rules), n)
    if policy == UNIQUE:
        outputs = [None] * len(kb.rules)
        multi = masks.sum(axis=0) >= 2
        for i, rule in enumerate(kb.rules):
            fire = masks[i] & ~covered
            if fire.any() or (masks[i] & multi).any():
                outputs[i] = rule.postcondition.evaluate(cols)
            if fire.any():
                values[fire] = outputs[i][fire]
                covered |= fire
        for j in np.flatnonzero(multi):
            hits = np.flatnonzero(masks[:, j])
            first = outputs[hits[0]][j]
            if not all(_same(outputs[h][j], first) for h in hits[1:]):
                raise AmbiguousMatch(hits.tolist(), [outputs[h][j] for h in hits])
        return Predictions(values, covered)

    conf = np.full((len(kb.rules), n), -np.inf)
    for i, rule in enumerate(kb.rules):
        conf[i, masks[i]] = rule.confidence(cols, fuzzy)[masks[i]]
    best = np.argmax(conf, axis=0)
    covered = masks.any(axis=0)
    for i, rule in enumerate(kb.rules):
        fire = covered & (best == i)
        if fire.any():
            values[fire] = rule.postcondition.evaluate(cols)[fire]
    return Predictions(values, covered)


def predict(kb: KnowledgeBase, x: Mapping[str, Value], policy: str | None = None,
            fuzzy: FuzzyTable | None = None):
    """Predict one instance; returns ``None`` when no rule applies."""
    missing = [f for f in kb.schema.input_names if f not in x]
    if missing:
        raise SchemaError(f"instance lacks features {missing}")
    values, covered = predict_batch(kb, instance_columns(x), policy, fuzzy)
    if not covered[0]:
        return None
    value = values[0]
    return value if isinstance(value, str) else float(value)
