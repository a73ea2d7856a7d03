import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from skq.errors import AmbiguousMatch, MissingFuzzyLabel, SchemaError, UnknownFeature
from skq.model import (
    CATEGORICAL, CONFIDENCE, FIRST_MATCH, ORDERED, UNORDERED, Comparison, ConstantClass,
    ConstantValue, Feature, FeatureSchema, Fuzzy, FuzzyTable, Interval, KnowledgeBase, LinearExpr,
    MOfN, Oblique, Rule, SetMembership, Trapezoid, evaluate_literal, linear_or_constant, predict,
    predict_batch,
)

import oracles


@pytest.fixture
def color_schema():
    return FeatureSchema((Feature("Color", CATEGORICAL), Feature("X")), Feature("Out", CATEGORICAL))


class TestSchema:
    def test_duplicate_names_rejected(self):
        with pytest.raises(SchemaError):
            FeatureSchema.continuous(("A", "A"), "B")

    def test_output_name_must_differ_from_inputs(self):
        with pytest.raises(SchemaError):
            FeatureSchema.continuous(("A", "B"), "A")

    def test_unknown_feature_is_key_error(self):
        schema = FeatureSchema.continuous(("A",), "B")
        with pytest.raises(KeyError):
            schema.feature("C")
        with pytest.raises(UnknownFeature) as info:
            schema.kind("C")
        assert info.value.name == "C"

    def test_needs_an_input(self):
        with pytest.raises(SchemaError):
            FeatureSchema((), Feature("Y"))


class TestLiterals:
    def test_comparison_ops(self):
        x = {"X": 2.0}
        expected = {"=": False, "!=": True, "<": False, "<=": False, ">": True, ">=": True}
        for op, want in expected.items():
            assert evaluate_literal(Comparison("X", op, 1.0), x) == (want, float(want))

    def test_order_ops_reject_categories(self):
        with pytest.raises((ValueError, SchemaError)):
            Comparison("Color", "<", "red")

    def test_interval_ends(self):
        cols = {"X": np.array([0.0, 0.5, 1.0])}
        assert Interval("X", 0, 1).holds(cols).tolist() == [True, True, True]
        assert Interval("X", 0, 1, False, False).holds(cols).tolist() == [False, True, False]
        assert Interval("X", 0, 1, True, False).holds(cols).tolist() == [True, True, False]
        assert Interval("X", 0, 1, negated=True).holds(cols).tolist() == [False, False, False]

    def test_set_membership(self):
        cols = {"Color": np.array(["red", "green", "blue"])}
        lit = SetMembership("Color", frozenset({"red", "blue"}))
        assert lit.holds(cols).tolist() == [True, False, True]
        assert SetMembership("Color", frozenset({"red"}), negated=True).holds(cols).tolist() == [False, True, True]

    def test_m_of_n_degree_is_fraction(self):
        lit = MOfN(2, (Comparison("X", ">", 0.0), Comparison("X", ">", 1.0), Comparison("X", ">", 2.0)))
        satisfied, degree = evaluate_literal(lit, {"X": 1.5})
        assert satisfied and degree == pytest.approx(2 / 3)
        assert evaluate_literal(lit, {"X": 0.5}) == (False, pytest.approx(1 / 3))

    def test_m_of_n_bounds(self):
        inner = (Comparison("X", ">", 0.0), Comparison("X", ">", 1.0))
        with pytest.raises(ValueError):
            MOfN(3, inner)
        with pytest.raises(ValueError):
            MOfN(0, inner)
        with pytest.raises(ValueError):
            MOfN(1, (Comparison("X", ">", 0.0),))

    def test_oblique(self):
        lit = Oblique((("X", 1.0), ("Y", 2.0)), "<=", 3.0)
        cols = {"X": np.array([1.0, 2.0]), "Y": np.array([1.0, 1.0])}
        assert lit.holds(cols).tolist() == [True, False]

    def test_oblique_needs_two_terms(self):
        with pytest.raises(ValueError):
            Oblique((("X", 1.0), ("Y", 0.0)), "<=", 3.0)

    def test_fuzzy_needs_table(self):
        with pytest.raises(MissingFuzzyLabel):
            Fuzzy("X", "medium").degree({"X": np.array([0.0])}, FuzzyTable())

    def test_fuzzy_alpha_cut(self):
        table = FuzzyTable({("X", "medium"): Trapezoid(0, 1, 2, 3)}, alpha=0.5)
        lit = Fuzzy("X", "medium")
        assert evaluate_literal(lit, {"X": 0.25}, table) == (False, 0.25)
        assert evaluate_literal(lit, {"X": 2.5}, table) == (True, 0.5)
        assert evaluate_literal(lit, {"X": 1.5}, table) == (True, 1.0)


class TestPostconditions:
    def test_linear_needs_nonzero_term(self):
        with pytest.raises(ValueError):
            LinearExpr(1.0, (("X", 0.0),))

    def test_linear_or_constant(self):
        assert linear_or_constant(2.0, (("X", 0.0),)) == ConstantValue(2.0)
        assert linear_or_constant(2.0, (("X", 3.0),)) == LinearExpr(2.0, (("X", 3.0),))

    def test_negative_zero_collapses(self):
        assert ConstantValue(-0.0) == ConstantValue(0.0)


class TestKnowledgeBase:
    def test_empty_rejected(self, xy_schema):
        with pytest.raises(SchemaError):
            KnowledgeBase(xy_schema, ())

    def test_class_label_on_continuous_output_rejected(self, xy_schema):
        with pytest.raises(SchemaError):
            KnowledgeBase(xy_schema, (Rule((), ConstantClass("a")),))

    def test_unknown_feature_rejected(self, xy_schema):
        with pytest.raises(SchemaError):
            KnowledgeBase(xy_schema, (Rule((Comparison("W", ">", 0.0),), ConstantValue(1.0)),))

    def test_duplicate_literals_rejected(self):
        lit = Comparison("X", ">", 0.0)
        with pytest.raises(ValueError):
            Rule((lit, lit), ConstantValue(1.0))


class TestPrediction:
    def test_first_match(self, xy_schema):
        kb = KnowledgeBase(xy_schema, (
            Rule((Comparison("X", ">", 0.0),), ConstantValue(1.0)),
            Rule((), ConstantValue(2.0)),
        ), ORDERED)
        assert predict(kb, {"X": 1.0, "Y": 0.0}) == 1.0
        assert predict(kb, {"X": -1.0, "Y": 0.0}) == 2.0

    def test_no_prediction_is_none(self, xy_schema):
        kb = KnowledgeBase(xy_schema, (Rule((Comparison("X", ">", 0.0),), ConstantValue(1.0)),))
        assert predict(kb, {"X": -1.0, "Y": 0.0}) is None
        values, covered = predict_batch(kb, {"X": np.array([-1.0]), "Y": np.array([0.0])})
        assert not covered[0] and math.isnan(values[0])

    def test_partial_instance_rejected(self, xy_schema):
        kb = KnowledgeBase(xy_schema, (Rule((), ConstantValue(1.0)),))
        with pytest.raises(SchemaError):
            predict(kb, {"X": 1.0})

    def test_unique_policy_conflict(self, xy_schema):
        kb = KnowledgeBase(xy_schema, (
            Rule((Comparison("X", ">", 0.0),), ConstantValue(1.0)),
            Rule((Comparison("Y", ">", 0.0),), ConstantValue(2.0)),
        ), UNORDERED)
        assert predict(kb, {"X": 1.0, "Y": -1.0}) == 1.0
        with pytest.raises(AmbiguousMatch) as info:
            predict(kb, {"X": 1.0, "Y": 1.0})
        assert tuple(info.value.rule_indices) == (0, 1)

    def test_unique_policy_agreeing_overlap(self, xy_schema):
        kb = KnowledgeBase(xy_schema, (
            Rule((Comparison("X", ">", 0.0),), ConstantValue(1.0)),
            Rule((Comparison("Y", ">", 0.0),), ConstantValue(1.0)),
        ), UNORDERED)
        assert predict(kb, {"X": 1.0, "Y": 1.0}) == 1.0

    def test_confidence_policy_prefers_stronger_rule(self):
        schema = FeatureSchema.continuous(("X",), "Z")
        table = FuzzyTable({("X", "low"): Trapezoid(-1, -1, 0, 1), ("X", "high"): Trapezoid(-1, 0, 1, 1)})
        kb = KnowledgeBase(schema, (
            Rule((Fuzzy("X", "low"),), ConstantValue(0.0)),
            Rule((Fuzzy("X", "high"),), ConstantValue(1.0)),
        ), UNORDERED)
        assert predict(kb, {"X": 0.2}, CONFIDENCE, table) == 1.0
        assert predict(kb, {"X": -0.2}, CONFIDENCE, table) == 0.0
        # equal confidence: lowest rule index wins
        assert predict(kb, {"X": 0.0}, CONFIDENCE, table) == 0.0

    def test_ordered_rejects_other_policies(self, xy_schema):
        kb = KnowledgeBase(xy_schema, (Rule((), ConstantValue(1.0)),), ORDERED)
        with pytest.raises(ValueError):
            predict(kb, {"X": 0.0, "Y": 0.0}, CONFIDENCE)

    def test_categorical_output(self, color_schema):
        kb = KnowledgeBase(color_schema, (
            Rule((Comparison("Color", "=", "red"),), ConstantClass("A")),
        ), ORDERED)
        assert predict(kb, {"Color": "red", "X": 0.0}) == "A"
        assert predict(kb, {"Color": "blue", "X": 0.0}) is None


literal_values = st.floats(-5, 5, allow_nan=False)


@st.composite
def simple_rules(draw):
    lits = []
    for feature in draw(st.lists(st.sampled_from(["X", "Y"]), min_size=0, max_size=2, unique=True)):
        if draw(st.booleans()):
            lits.append(Comparison(feature, draw(st.sampled_from(["<", "<=", ">", ">="])), draw(literal_values)))
        else:
            a, b = sorted((draw(literal_values), draw(literal_values)))
            if a == b:
                b = a + 1.0
            lits.append(Interval(feature, a, b, draw(st.booleans()), draw(st.booleans()), draw(st.booleans())))
    return Rule(tuple(lits), ConstantValue(draw(st.integers(-3, 3))))


class TestBatchAgainstOracle:
    @settings(max_examples=200, deadline=None)
    @given(st.lists(simple_rules(), min_size=1, max_size=5), st.integers(0, 2**16))
    def test_first_match_matches_pointwise_loop(self, rules, seed):
        schema = FeatureSchema.continuous(("X", "Y"), "Z")
        kb = KnowledgeBase(schema, tuple(rules), ORDERED)
        pts = oracles.points(("X", "Y"), 50, seed, -6, 6)
        cols = {n: np.array([p[n] for p in pts]) for n in ("X", "Y")}
        values, covered = predict_batch(kb, cols, FIRST_MATCH)
        for i, p in enumerate(pts):
            want = oracles.first_match(kb, p)
            assert covered[i] == (want is not None)
            if want is not None:
                assert values[i] == want
