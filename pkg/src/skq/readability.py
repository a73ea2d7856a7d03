"""Macro- and micro-level readability of knowledge bases.

Micro complexity of a rule::

    sum over literals of kind_weight(lit) * (1 + alpha * (constants(lit) - 1))
        + postcondition weight

where an m-of-n literal weighs ``w_mofn * (1 + log2(N) + (m - 1))`` and a
linear postcondition weighs ``w_linear + beta * terms``. The readability
score of a knowledge base with ``n`` rules is::

    1 / (1 + (total_micro + macro_penalty * (n - 1)) / rho)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

from .model import (
    ORDERED, Comparison, ConstantClass, ConstantValue, Fuzzy, Interval, KnowledgeBase,
    LinearExpr, Literal, MOfN, Oblique, Rule, SetMembership,
)


@dataclass(frozen=True)
class WeightConfig:
    w_prop: float = 1.0
    w_interval: float = 1.0
    w_set: float = 1.0
    w_mofn: float = 1.5
    w_fuzzy: float = 2.0
    w_oblique: float = 2.5
    w_const: float = 0.0
    w_linear: float = 1.0
    beta: float = 0.25
    alpha: float = 0.5
    macro_penalty: float = 1.0
    rho: float = 10.0
    ordered_penalty: float = 1.0
    count_postcondition: bool = False

    def __post_init__(self):
        positive = ("w_prop", "w_interval", "w_set", "w_mofn", "w_fuzzy", "w_oblique",
                    "w_linear", "beta", "macro_penalty", "rho", "ordered_penalty")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.alpha < 0 or self.w_const < 0:
            raise ValueError("alpha and w_const must be non-negative")

    def scaled(self, factor: float, include_rho: bool = False) -> "WeightConfig":
        """Multiply every additive weight by ``factor`` (``rho`` too if asked)."""
        names = ["w_prop", "w_interval", "w_set", "w_mofn", "w_fuzzy", "w_oblique",
                 "w_const", "w_linear", "beta", "macro_penalty"]
        if include_rho:
            names.append("rho")
        return replace(self, **{n: getattr(self, n) * factor for n in names})

    @classmethod
    def from_mapping(cls, values) -> "WeightConfig":
        known = {f.name: f.type for f in fields(cls)}
        kwargs = {}
        for key, raw in values.items():
            if key not in known:
                raise KeyError(f"unknown weight {key!r}")
            if key == "count_postcondition":
                kwargs[key] = str(raw).strip().lower() in ("1", "true", "yes", "on")
            else:
                kwargs[key] = float(raw)
        return cls(**kwargs)


@dataclass(frozen=True)
class MicroCounts:
    variables: int = 0
    predicates: int = 0
    constants: int = 0
    inner_predicates: int = 0
    mofn_groups: int = 0

    def __add__(self, other: "MicroCounts") -> "MicroCounts":
        return MicroCounts(*(a + b for a, b in zip(self._tuple(), other._tuple())))

    def _tuple(self):
        return (self.variables, self.predicates, self.constants, self.inner_predicates,
                self.mofn_groups)

    @property
    def atomic_predicates(self) -> int:
        """Predicates with every m-of-n group counted by its inner literals."""
        return self.predicates - self.mofn_groups + self.inner_predicates


@dataclass(frozen=True)
class ComplexityReport:
    per_rule: tuple  # (MicroCounts, complexity) per rule
    total: float
    macro: int
    ordered: bool

    @property
    def counts(self) -> MicroCounts:
        out = MicroCounts()
        for counts, _ in self.per_rule:
            out = out + counts
        return out


def literal_constants(lit: Literal) -> int:
    if isinstance(lit, Interval):
        return 2
    if isinstance(lit, SetMembership):
        return len(lit.values)
    if isinstance(lit, MOfN):
        return sum(literal_constants(x) for x in lit.literals)
    if isinstance(lit, Oblique):
        return len(lit.features()) + 1
    return 1


def literal_counts(lit: Literal) -> MicroCounts:
    if isinstance(lit, MOfN):
        inner = MicroCounts()
        for x in lit.literals:
            inner = inner + literal_counts(x)
        return MicroCounts(inner.variables, 1, inner.constants, lit.n, 1)
    return MicroCounts(len(lit.features()), 1, literal_constants(lit))


def micro_counts(rule: Rule, count_postcondition: bool = False) -> MicroCounts:
    out = MicroCounts()
    for lit in rule.precondition:
        out = out + literal_counts(lit)
    if count_postcondition:
        post = rule.postcondition
        if isinstance(post, LinearExpr):
            constants = post.terms + (1 if post.intercept != 0.0 else 0)
            out = out + MicroCounts(post.terms, 0, constants)
        else:
            out = out + MicroCounts(0, 0, 1)
    return out


def mofn_kind_weight(m: int, n: int, w: WeightConfig | None = None) -> float:
    w = w or WeightConfig()
    return w.w_mofn * (1.0 + math.log2(n) + (m - 1))


def kind_weight(lit: Literal, w: WeightConfig) -> float:
    if isinstance(lit, MOfN):
        return mofn_kind_weight(lit.m, lit.n, w)
    if isinstance(lit, Comparison):
        return w.w_prop
    if isinstance(lit, Interval):
        return w.w_interval
    if isinstance(lit, SetMembership):
        return w.w_set
    if isinstance(lit, Fuzzy):
        return w.w_fuzzy
    if isinstance(lit, Oblique):
        return w.w_oblique
    raise TypeError(f"unknown literal kind {type(lit).__name__}")


def literal_complexity(lit: Literal, w: WeightConfig) -> float:
    return kind_weight(lit, w) * (1.0 + w.alpha * (literal_constants(lit) - 1))


def postcondition_weight(post, w: WeightConfig) -> float:
    if isinstance(post, LinearExpr):
        return w.w_linear + w.beta * post.terms
    if isinstance(post, (ConstantValue, ConstantClass)):
        return w.w_const
    raise TypeError(f"unknown postcondition kind {type(post).__name__}")


def micro_complexity(rule: Rule, w: WeightConfig | None = None) -> float:
    w = w or WeightConfig()
    return sum(literal_complexity(lit, w) for lit in rule.precondition) \
        + postcondition_weight(rule.postcondition, w)


def macro_complexity(kb: KnowledgeBase) -> int:
    return len(kb.rules)


def complexity_report(kb: KnowledgeBase, w: WeightConfig | None = None) -> ComplexityReport:
    w = w or WeightConfig()
    per_rule = tuple((micro_counts(r, w.count_postcondition), micro_complexity(r, w))
                     for r in kb.rules)
    total = sum(c for _, c in per_rule)
    return ComplexityReport(per_rule, total, len(kb.rules), kb.ordering == ORDERED)


def readability_score(kb: KnowledgeBase, w: WeightConfig | None = None) -> float:
    """Readability in (0, 1]; 1 only for a single rule of zero complexity."""
    w = w or WeightConfig()
    report = complexity_report(kb, w)
    total = report.total * (w.ordered_penalty if report.ordered else 1.0)
    return 1.0 / (1.0 + (total + w.macro_penalty * (report.macro - 1)) / w.rho)


def expanded_readability_score(kb: KnowledgeBase, bounds=None, w: WeightConfig | None = None) -> float:
    """Readability of an ordered list after its implicit negations are made explicit.

    The default score counts rules as written. This variant first converts an
    ordered list to the equivalent unordered one (within ``bounds``, default
    the whole input space) so that the conditions carried over from earlier
    rules are charged too. Unordered knowledge scores as usual.
    """
    from .normalize import ordered_to_unordered
    from .regions import schema_full_region

    if kb.ordering != ORDERED:
        return readability_score(kb, w)
    bounds = bounds if bounds is not None else schema_full_region(kb.schema)
    return readability_score(ordered_to_unordered(kb, bounds), w)
