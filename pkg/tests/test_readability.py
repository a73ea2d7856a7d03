import math

import pytest
from hypothesis import given, settings, strategies as st

from skq.model import (
    CATEGORICAL, ORDERED, UNORDERED, Comparison, ConstantClass, ConstantValue, Feature,
    FeatureSchema, Interval, KnowledgeBase, LinearExpr, MOfN, Oblique, Rule, SetMembership,
)
from skq.normalize import merge_same_output, simplify_rule
from skq.parser import parse_literal
from skq.readability import (
    WeightConfig, complexity_report, expanded_readability_score, literal_complexity, macro_complexity,
    micro_complexity, micro_counts, mofn_kind_weight, readability_score,
)

COLOR = FeatureSchema((Feature("Color", CATEGORICAL),), Feature("Out", CATEGORICAL))
BLUE = Comparison("Color", "=", "blue")
RED = Comparison("Color", "=", "red")


def color_variants():
    two_rules = KnowledgeBase(COLOR, (Rule((BLUE,), ConstantClass("A")), Rule((RED,), ConstantClass("A"))),
                              UNORDERED)
    disjunction = KnowledgeBase(COLOR, (Rule((MOfN(1, (BLUE, RED)),), ConstantClass("A")),), UNORDERED)
    membership = KnowledgeBase(COLOR, (Rule((SetMembership("Color", frozenset({"blue", "red"})),),
                                            ConstantClass("A")),), UNORDERED)
    return two_rules, disjunction, membership


def summary(kb):
    c = complexity_report(kb).counts
    return macro_complexity(kb), c.variables, c.atomic_predicates, c.constants


class TestMicroCounts:
    def test_color_variants(self):
        assert [summary(kb) for kb in color_variants()] == [(2, 2, 2, 2), (1, 2, 2, 2), (1, 1, 1, 2)]

    def test_variants_ranked_by_readability(self):
        scores = [readability_score(kb) for kb in color_variants()]
        assert scores[0] < scores[2]

    def test_interval_counts_two_constants(self):
        rule = Rule((Interval("X", 0, 1),), ConstantValue(1.0))
        schema = FeatureSchema.continuous(("X",), "Y")
        c = complexity_report(KnowledgeBase(schema, (rule,))).counts
        assert (c.variables, c.predicates, c.constants) == (1, 1, 2)

    def test_postcondition_counted_on_request(self, creepy):
        base = complexity_report(creepy).counts
        with_post = complexity_report(creepy, WeightConfig(count_postcondition=True)).counts
        assert with_post.variables == base.variables + 5
        assert with_post.constants == base.constants + 5 + 1


class TestWeights:
    def test_mofn_ordering_examples(self):
        assert mofn_kind_weight(1, 5) < mofn_kind_weight(3, 5)
        assert mofn_kind_weight(1, 5) < mofn_kind_weight(1, 10)

    def test_hand_value(self):
        w = WeightConfig()
        assert literal_complexity(Interval("X", 0, 1), w) == pytest.approx(1.5)
        assert mofn_kind_weight(2, 4, w) == pytest.approx(1.5 * (1 + 2 + 1))
        rule = Rule((Comparison("X", ">", 0.0),), LinearExpr(0.0, (("X", 1.0), ("Y", 2.0))))
        assert micro_complexity(rule, w) == pytest.approx(1.0 + 1.0 + 0.25 * 2)

    def test_oblique_costs_more_than_axis_parallel(self):
        w = WeightConfig()
        assert literal_complexity(Oblique((("X", 1.0), ("Y", 1.0)), "<=", 0.0), w) > \
            literal_complexity(Comparison("X", "<=", 0.0), w)

    @pytest.mark.parametrize("key", ["w_prop", "rho", "macro_penalty"])
    def test_nonpositive_rejected(self, key):
        with pytest.raises(ValueError):
            WeightConfig(**{key: 0.0})

    def test_from_mapping(self):
        w = WeightConfig.from_mapping({"rho": "5", "count_postcondition": "yes"})
        assert w.rho == 5.0 and w.count_postcondition
        with pytest.raises(KeyError):
            WeightConfig.from_mapping({"nope": "1"})

    def test_single_trivial_rule_scores_one(self):
        kb = KnowledgeBase(FeatureSchema.continuous(("X",), "Y"), (Rule((), ConstantValue(0.0)),))
        assert readability_score(kb) == 1.0

    def test_two_comparisons_cost_two(self, cart6):
        rule = Rule((parse_literal("EU > 0.01", cart6.schema), parse_literal("EM =< 0.01", cart6.schema)),
                    ConstantValue(0.01))
        assert micro_complexity(rule) == 2.0
        c = micro_counts(rule)
        assert (c.variables, c.predicates, c.constants) == (2, 2, 2)
        assert micro_complexity(Rule((), ConstantValue(1.0))) == 0.0

    def test_listing_sizes(self, cart6, creepy):
        assert macro_complexity(cart6) == 6 and macro_complexity(creepy) == 2
        assert readability_score(creepy) > readability_score(cart6)

    def test_five_of_nine_against_four_of_ten(self):
        w = WeightConfig(w_mofn=1.0)
        assert mofn_kind_weight(5, 9, w) == pytest.approx(8.17, abs=0.005)
        assert mofn_kind_weight(4, 10, w) == pytest.approx(7.32, abs=0.005)

    def test_no_ordering_penalty_by_default(self, cart6):
        assert readability_score(cart6) == readability_score(cart6.replace(ordering=UNORDERED))
        assert complexity_report(cart6).ordered

    def test_expanded_score_charges_implicit_negations(self):
        schema = FeatureSchema.continuous(("X", "Y"), "Z")
        first_match = KnowledgeBase(schema, (
            Rule((Comparison("X", ">", 0.0),), ConstantValue(1.0)),
            Rule((Comparison("Y", ">", 0.0),), ConstantValue(2.0)),
            Rule((), ConstantValue(3.0)),
        ), ORDERED)
        assert expanded_readability_score(first_match) < readability_score(first_match)
        unordered = first_match.replace(ordering=UNORDERED)
        assert expanded_readability_score(unordered) == readability_score(unordered)

    def test_ordered_penalty(self, cart6):
        w = WeightConfig(ordered_penalty=2.0)
        assert readability_score(cart6, w) < readability_score(cart6.replace(ordering=UNORDERED), w)


XY = FeatureSchema.continuous(("X", "Y"), "Z")
thresholds = st.floats(-10, 10, allow_nan=False)


@st.composite
def axis_literals(draw):
    feature = draw(st.sampled_from(["X", "Y"]))
    if draw(st.booleans()):
        return Comparison(feature, draw(st.sampled_from(["<", "<=", ">", ">=", "="])), draw(thresholds))
    a, b = sorted((draw(thresholds), draw(thresholds)))
    return Interval(feature, a, b + 1.0)


@st.composite
def rule_lists(draw):
    rules = []
    for _ in range(draw(st.integers(1, 5))):
        body = draw(st.lists(axis_literals(), max_size=4, unique=True))
        post = draw(st.sampled_from([ConstantValue(1.0), LinearExpr(0.5, (("X", 2.0),))]))
        rules.append(Rule(tuple(body), post))
    return rules


weights = st.builds(
    WeightConfig,
    w_prop=st.floats(0.1, 5), w_interval=st.floats(0.1, 5), w_mofn=st.floats(0.1, 5),
    alpha=st.floats(0, 2), w_const=st.floats(0, 2), macro_penalty=st.floats(0.1, 5), rho=st.floats(1, 50),
)


class TestScoreProperties:
    @settings(max_examples=400, deadline=None)
    @given(rule_lists(), axis_literals(), weights, st.sampled_from([ORDERED, UNORDERED]))
    def test_adding_a_literal_lowers_readability(self, rules, lit, w, ordering):
        target = next((i for i, r in enumerate(rules) if lit not in r.precondition), None)
        if target is None:
            return
        grown = list(rules)
        grown[target] = Rule(rules[target].precondition + (lit,), rules[target].postcondition)
        before = readability_score(KnowledgeBase(XY, tuple(rules), ordering), w)
        after = readability_score(KnowledgeBase(XY, tuple(grown), ordering), w)
        assert after < before

    @settings(max_examples=400, deadline=None)
    @given(rule_lists(), st.lists(axis_literals(), max_size=3, unique=True), weights,
           st.sampled_from([ORDERED, UNORDERED]))
    def test_adding_a_rule_lowers_readability(self, rules, body, w, ordering):
        before = readability_score(KnowledgeBase(XY, tuple(rules), ordering), w)
        grown = tuple(rules) + (Rule(tuple(body), ConstantValue(0.0)),)
        assert readability_score(KnowledgeBase(XY, grown, ordering), w) < before

    @settings(max_examples=300, deadline=None)
    @given(st.integers(2, 40).flatmap(lambda n: st.tuples(st.integers(1, n - 1), st.just(n))),
           st.floats(0.1, 10))
    def test_mofn_weight_increases_in_m_and_n(self, mn, w_mofn):
        m, n = mn
        w = WeightConfig(w_mofn=w_mofn)
        assert mofn_kind_weight(m + 1, n, w) > mofn_kind_weight(m, n, w)
        assert mofn_kind_weight(m, n + 1, w) > mofn_kind_weight(m, n, w)
        assert math.isfinite(mofn_kind_weight(m, n, w))


class TestStructuralProperties:
    @settings(max_examples=200, deadline=None)
    @given(st.lists(axis_literals(), min_size=1, max_size=5, unique=True), st.randoms(use_true_random=False))
    def test_counts_ignore_literal_order(self, body, rnd):
        shuffled = list(body)
        rnd.shuffle(shuffled)
        assert micro_counts(Rule(tuple(body), ConstantValue(0.0))) == micro_counts(Rule(tuple(shuffled), ConstantValue(0.0)))

    @settings(max_examples=200, deadline=None)
    @given(st.lists(axis_literals(), min_size=1, max_size=5, unique=True))
    def test_simplify_never_adds_complexity(self, body):
        rule = Rule(tuple(body), ConstantValue(0.0))
        assert micro_complexity(simplify_rule(rule)) <= micro_complexity(rule)

    def test_merge_never_adds_complexity(self):
        two, _, _ = color_variants()
        assert complexity_report(merge_same_output(two)).total <= complexity_report(two).total
