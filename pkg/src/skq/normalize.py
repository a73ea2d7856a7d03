"""Conversion of trees, tables, hierarchical and ordered lists into plain
unordered rule lists, and rule simplification.

All conversions preserve predictions; ``ordered_to_unordered`` does so
inside the supplied bounds by materializing the implicit negations of an
ordered list with the region kernel.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import NonComplementableLiteral, RegionBudgetExceeded, UnsupportedLiteral
from .model import (
    ORDERED, UNORDERED, Comparison, FeatureSchema, Fuzzy, Interval, KnowledgeBase,
    Literal, MOfN, Oblique, Postcondition, Rule, SetMembership,
)
from .regions import (
    INF, Region, Span, precondition_regions, region_literals, span_literals, subtract_all,
)

DEFAULT_MAX_REGIONS = 10_000

_NEGATED_OP = {"<": ">=", "<=": ">", ">": "<=", ">=": "<", "=": "!=", "!=": "="}


# ---------------------------------------------------------------------------
# Source shapes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Leaf:
    postcondition: Postcondition

    def evaluate(self, cols):
        return self.postcondition.evaluate(cols)

    def leaves(self) -> int:
        return 1


@dataclass(frozen=True)
class Split:
    """Internal node: ``left`` where ``literal`` holds, ``right`` elsewhere."""

    literal: Literal
    left: "Union[Split, Leaf]"
    right: "Union[Split, Leaf]"

    def evaluate(self, cols):
        mask = self.literal.holds(cols)
        left, right = self.left.evaluate(cols), self.right.evaluate(cols)
        return np.where(mask, left, right)

    def leaves(self) -> int:
        return self.left.leaves() + self.right.leaves()


DecisionTreeNode = Union[Split, Leaf]


@dataclass(frozen=True)
class TableRow:
    cells: tuple  # one tuple of literals per input column; () is unconstrained
    output: Postcondition


@dataclass(frozen=True)
class DecisionTable:
    columns: tuple  # input feature names; the output column is implicit and last
    rows: tuple

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple(self.columns))
        object.__setattr__(self, "rows", tuple(self.rows))
        for row in self.rows:
            if len(row.cells) != len(self.columns):
                raise ValueError("every table row needs one cell per input column")


@dataclass(frozen=True)
class HierarchicalRule:
    precondition: tuple
    body: "Union[Postcondition, tuple]"


# ---------------------------------------------------------------------------
# Complements
# ---------------------------------------------------------------------------


def complement_literal(lit: Literal) -> list:
    """Exact complement of a crisp literal as a disjunction of literals."""
    if isinstance(lit, Comparison):
        return [Comparison(lit.feature, _NEGATED_OP[lit.op], lit.value)]
    if isinstance(lit, Interval):
        if lit.negated:
            return [Interval(lit.feature, lit.low, lit.high, lit.low_closed, lit.high_closed)]
        return [
            Comparison(lit.feature, "<" if lit.low_closed else "<=", lit.low),
            Comparison(lit.feature, ">" if lit.high_closed else ">=", lit.high),
        ]
    if isinstance(lit, SetMembership):
        return [SetMembership(lit.feature, lit.values, not lit.negated)]
    if isinstance(lit, Oblique):
        return [Oblique(lit.coefficients, _NEGATED_OP[lit.op], lit.threshold)]
    if isinstance(lit, MOfN):
        inner = tuple(negate_literal(x) for x in lit.literals)
        return [MOfN(lit.n - lit.m + 1, inner)]
    raise NonComplementableLiteral(f"{type(lit).__name__} literals have no crisp complement")


def negate_literal(lit: Literal) -> Literal:
    """Complement of ``lit`` as a single literal (intervals become ``not_in``)."""
    if isinstance(lit, Interval):
        return Interval(lit.feature, lit.low, lit.high, lit.low_closed, lit.high_closed,
                        negated=not lit.negated)
    if isinstance(lit, Fuzzy):
        raise NonComplementableLiteral("fuzzy literals have no crisp complement")
    (out,) = complement_literal(lit)
    return out


# ---------------------------------------------------------------------------
# Shape conversions
# ---------------------------------------------------------------------------


def _conjoin(literals: Sequence[Literal]) -> tuple:
    return tuple(dict.fromkeys(literals))


def tree_to_rules(tree: DecisionTreeNode, schema: FeatureSchema, provenance: str = "") -> KnowledgeBase:
    """One rule per leaf; false branches contribute the negated split literal."""
    rules = []
    stack = [(tree, ())]
    while stack:
        node, path = stack.pop()
        if isinstance(node, Leaf):
            rules.append(Rule(_conjoin(path), node.postcondition))
            continue
        negated = negate_literal(node.literal)
        # right pushed first so leaves come out left-to-right
        stack.append((node.right, path + (negated,)))
        stack.append((node.left, path + (node.literal,)))
    return KnowledgeBase(schema, tuple(rules), UNORDERED, provenance)


def table_to_rules(table: DecisionTable, schema: FeatureSchema, provenance: str = "") -> KnowledgeBase:
    if not table.rows:
        raise ValueError("empty decision table")
    rules = []
    for row in table.rows:
        literals = [lit for cell in row.cells for lit in cell]
        rules.append(simplify_rule(Rule(_conjoin(literals), row.output)))
    return KnowledgeBase(schema, tuple(rules), UNORDERED, provenance)


def flatten_hierarchy(rules: Sequence[HierarchicalRule], schema: FeatureSchema,
                      ordering: str = ORDERED, provenance: str = "") -> KnowledgeBase:
    flat = []

    def visit(items, ancestors):
        for item in items:
            path = ancestors + tuple(item.precondition)
            if isinstance(item.body, Postcondition):
                flat.append(Rule(_conjoin(path), item.body))
            else:
                visit(item.body, path)

    visit(rules, ())
    return KnowledgeBase(schema, tuple(flat), ordering, provenance)


def ordered_to_unordered(kb: KnowledgeBase, bounds: Region,
                         max_regions: int = DEFAULT_MAX_REGIONS) -> KnowledgeBase:
    """Disjoint unordered equivalent of an ordered list, exact inside ``bounds``.

    Rule ``n`` becomes its own region within ``bounds`` minus the regions of
    rules ``1..n-1``; each surviving piece is one output rule.

    Raises:
        UnsupportedLiteral: for oblique, fuzzy or m-of-n preconditions.
        RegionBudgetExceeded: when more than ``max_regions`` pieces are needed.
    """
    if kb.ordering == UNORDERED:
        return kb
    prior: list = []
    rules = []
    for rule in kb.rules:
        if rule.unsatisfiable:
            continue
        own = precondition_regions(rule.precondition, within=bounds)
        pieces = subtract_all(own, prior, limit=max_regions)
        if len(rules) + len(pieces) > max_regions:
            raise RegionBudgetExceeded(max_regions)
        for piece in pieces:
            rules.append(Rule(region_literals(piece, kb.schema, bounds), rule.postcondition))
        prior.extend(own)
    if not rules:
        raise ValueError("no rule applies anywhere inside the bounds")
    return kb.replace(rules=tuple(rules), ordering=UNORDERED)


# ---------------------------------------------------------------------------
# Simplification
# ---------------------------------------------------------------------------


def _numeric_span(lit: Literal) -> Span | None:
    if isinstance(lit, Comparison) and not lit.categorical and lit.op != "!=":
        v = lit.value
        return {
            "<": Span(-INF, v, False, False), "<=": Span(-INF, v, False, True),
            ">": Span(v, INF, False, False), ">=": Span(v, INF, True, False),
            "=": Span(v, v, True, True),
        }[lit.op]
    if isinstance(lit, Interval) and not lit.negated:
        return Span(lit.low, lit.high, lit.low_closed, lit.high_closed)
    return None


def _tightest(feature: str, members: list, total: Span) -> list:
    for _, lit, span in members:
        if span == total:
            return [lit]
    low = next(m for m in members if (m[2].low, m[2].low_closed) == (total.low, total.low_closed))
    high = next(m for m in members if (m[2].high, m[2].high_closed) == (total.high, total.high_closed))
    if not isinstance(low[1], Interval) and not isinstance(high[1], Interval):
        return [m[1] for m in sorted((low, high), key=lambda m: m[0])]
    return span_literals(feature, total)


def _standalone(rule: Rule) -> Rule:
    groups: dict = {}
    for i, lit in enumerate(rule.precondition):
        span = _numeric_span(lit)
        if span is not None:
            groups.setdefault(lit.feature, []).append((i, lit, span))

    replacement = {}
    for feature, members in groups.items():
        total = members[0][2]
        for _, _, span in members[1:]:
            total = total.intersect(span)
        if total.is_empty:
            return Rule(rule.precondition, rule.postcondition, unsatisfiable=True)
        replacement[feature] = (members[0][0], _tightest(feature, members, total))

    out = []
    for i, lit in enumerate(rule.precondition):
        feature = getattr(lit, "feature", None)
        if feature in replacement and _numeric_span(lit) is not None:
            first, lits = replacement[feature]
            if i == first:
                out.extend(lits)
        else:
            out.append(lit)
    return Rule(_conjoin(out), rule.postcondition, rule.unsatisfiable)


def _regions_or_none(literals) -> list | None:
    try:
        return precondition_regions(literals)
    except UnsupportedLiteral:
        return None


def _drop_implied(rule: Rule, prefix: Sequence[Rule], limit: int) -> Rule:
    """Drop literals already implied by the failure of every earlier rule."""
    prior = []
    for earlier in prefix:
        if earlier.unsatisfiable:
            continue
        regions = _regions_or_none(earlier.precondition)
        if regions is None:
            return rule
        prior.extend(regions)
    literals = list(rule.precondition)
    own = _regions_or_none(literals)
    if own is None:
        return rule
    i = 0
    while i < len(literals):
        candidate = literals[:i] + literals[i + 1:]
        wider = precondition_regions(candidate)
        reachable = subtract_all(wider, prior, limit=limit)
        if len(reachable) <= limit and not subtract_all(reachable, own, limit=limit):
            literals = candidate
            own = wider
        else:
            i += 1
    return Rule(tuple(literals), rule.postcondition, rule.unsatisfiable)


def simplify_rule(rule: Rule, prefix: Sequence[Rule] | None = None,
                  max_regions: int = DEFAULT_MAX_REGIONS) -> Rule:
    """Remove redundant literals without changing which instances a rule decides.

    Literals on the same continuous feature are intersected into at most one
    lower and one upper bound (or one interval). With ``prefix`` (the rules
    preceding ``rule`` in an ordered list) literals that are implied once all
    earlier rules have failed are dropped as well. A rule whose bounds cannot
    all hold is returned with ``unsatisfiable=True``.
    """
    if rule.unsatisfiable:
        return rule
    out = _standalone(rule)
    if prefix is not None and not out.unsatisfiable:
        out = _drop_implied(out, prefix, max_regions)
    return out


def simplify_knowledge_base(kb: KnowledgeBase, use_order: bool = True) -> KnowledgeBase:
    """Simplify every rule; ordered lists also shed literals implied by their prefix."""
    rules = []
    for i, rule in enumerate(kb.rules):
        prefix = kb.rules[:i] if (use_order and kb.ordering == ORDERED) else None
        rules.append(simplify_rule(rule, prefix))
    return kb.replace(rules=tuple(rules))


# ---------------------------------------------------------------------------
# Merging
# ---------------------------------------------------------------------------


def _category_values(lit: Literal) -> frozenset | None:
    if isinstance(lit, Comparison) and lit.categorical and lit.op == "=":
        return frozenset({lit.value})
    if isinstance(lit, SetMembership) and not lit.negated:
        return lit.values
    return None


def _merge_pair(a: Rule, b: Rule) -> Rule | None:
    if a.postcondition != b.postcondition or a.unsatisfiable or b.unsatisfiable:
        return None
    if len(a.precondition) != len(b.precondition):
        return None
    only_a = [lit for lit in a.precondition if lit not in b.precondition]
    only_b = [lit for lit in b.precondition if lit not in a.precondition]
    if len(only_a) != 1 or len(only_b) != 1:
        return None
    la, lb = only_a[0], only_b[0]
    va, vb = _category_values(la), _category_values(lb)
    if va is None or vb is None or la.feature != lb.feature:
        return None
    merged = SetMembership(la.feature, va | vb)
    return Rule(tuple(merged if lit == la else lit for lit in a.precondition), a.postcondition)


def merge_same_output(kb: KnowledgeBase) -> KnowledgeBase:
    """Collapse rules that differ only in one category test and share their output."""
    if kb.ordering != UNORDERED:
        raise ValueError("merging requires an unordered knowledge base")
    rules = list(kb.rules)
    changed = True
    while changed:
        changed = False
        for i in range(len(rules)):
            for j in range(i + 1, len(rules)):
                merged = _merge_pair(rules[i], rules[j])
                if merged is not None:
                    rules[i] = merged
                    del rules[j]
                    changed = True
                    break
            if changed:
                break
    return kb.replace(rules=tuple(rules))
