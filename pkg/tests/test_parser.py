import pytest
from hypothesis import given, settings, strategies as st

from skq.errors import ParseError, SchemaMismatch, UnboundOutput
from skq.model import (
    CATEGORICAL, ORDERED, UNORDERED, Comparison, ConstantClass, ConstantValue, Feature,
    FeatureSchema, Fuzzy, Interval, KnowledgeBase, LinearExpr, MOfN, Oblique, Rule, SetMembership,
)
from skq.parser import parse_literal, parse_theory, render_number, render_theory, tokenize


class TestListings:
    def test_cart_listing(self, cart6):
        assert len(cart6.rules) == 6
        assert cart6.ordering == ORDERED
        assert cart6.schema.functor == "ise"
        assert cart6.schema.input_names == ("BOVESPA", "DAX", "EM", "EU", "FTSE", "NIKKEI", "SP")
        assert cart6.rules[0].precondition == (Comparison("EU", "<=", 0.0), Comparison("EU", "<=", -0.02))
        assert cart6.rules[0].postcondition == ConstantValue(-0.02)
        assert all(isinstance(l, Comparison) for r in cart6.rules for l in r.precondition)

    def test_simplified_listing_ends_with_fact(self, cart6_simplified):
        assert len(cart6_simplified.rules) == 6
        assert cart6_simplified.rules[-1].precondition == ()

    def test_linear_listing(self, creepy):
        assert len(creepy.rules) == 2
        first, second = creepy.rules
        assert first.precondition == (Interval("FTSE", -0.05, 0.04), Interval("EU", -0.04, 0.04))
        assert first.postcondition == LinearExpr(0.0, (("BOVESPA", -0.02), ("DAX", -0.05), ("EM", -0.05),
                                                       ("NIKKEI", 0.63), ("SP", 0.47)))
        assert second.postcondition == ConstantValue(0.01)

    @pytest.mark.parametrize("name", ["cart6", "cart6_simplified", "creepy"])
    def test_round_trip(self, name, request):
        kb = request.getfixturevalue(name)
        assert parse_theory(render_theory(kb)) == kb


class TestLexing:
    def test_negative_numbers_are_sign_plus_number(self):
        kinds = [t.kind for t in tokenize("X =< -0.5")]
        assert kinds == ["var", "op", "op", "num", "eof"]

    def test_clause_dot_vs_decimal_point(self):
        kb = parse_theory("f(X, 1.5) :- X > 2.")
        assert kb.rules[0].postcondition == ConstantValue(1.5)

    def test_comments_ignored(self):
        kb = parse_theory("% leading comment\nf(X, 1) :- X > 0. % trailing\n")
        assert len(kb.rules) == 1


class TestLiterals:
    schema = FeatureSchema((Feature("X"), Feature("Y"), Feature("C", CATEGORICAL)), Feature("Z"))

    @pytest.mark.parametrize("text,expected", [
        ("X =< 1", Comparison("X", "<=", 1.0)),
        ("X \\= 1", Comparison("X", "!=", 1.0)),
        ("C = red", Comparison("C", "=", "red")),
        ("C \\= 'Dark red'", Comparison("C", "!=", "Dark red")),
        ("X in [0, 1)", Interval("X", 0.0, 1.0, True, False)),
        ("X not_in (0, 1]", Interval("X", 0.0, 1.0, False, True, negated=True)),
        ("C in {red, blue}", SetMembership("C", frozenset({"red", "blue"}))),
        ("C not_in {red}", SetMembership("C", frozenset({"red"}), negated=True)),
        ("2 of [X > 0, Y > 0, X < 5]", MOfN(2, (Comparison("X", ">", 0.0), Comparison("Y", ">", 0.0),
                                               Comparison("X", "<", 5.0)))),
        ("X is_label medium", Fuzzy("X", "medium")),
        ("2 X + 3 Y =< 4", Oblique((("X", 2.0), ("Y", 3.0)), "<=", 4.0)),
        ("X - 2*Y > 1", Oblique((("X", 1.0), ("Y", -2.0)), ">", 1.0)),
        ("-2 X =< 4", Comparison("X", ">=", -2.0)),
    ])
    def test_literal(self, text, expected):
        assert parse_literal(text, self.schema) == expected

    def test_nested_m_of_n_rejected(self):
        with pytest.raises(ParseError):
            parse_literal("1 of [X > 0, 1 of [Y > 0, Y < 1]]", self.schema)

    def test_order_op_on_category_rejected(self):
        with pytest.raises(ParseError):
            parse_literal("C < red", self.schema)


class TestTheories:
    def test_ordering_directive(self):
        kb = parse_theory(":- ordering(unordered).\nf(X, 1) :- X > 0.\nf(X, 2) :- X =< 0.")
        assert kb.ordering == UNORDERED

    def test_provenance(self):
        kb = parse_theory("% provenance: cart, max leaves = 6\nf(X, 1).")
        assert kb.provenance == "cart, max leaves = 6"
        assert render_theory(kb).startswith("% provenance: cart, max leaves = 6\n")

    def test_class_labels_infer_categorical_output(self):
        kb = parse_theory("f(X, C, a) :- C in {r, g}.\nf(X, C, b).")
        assert kb.schema.output.kind == CATEGORICAL
        assert kb.schema.feature("C").kind == CATEGORICAL
        assert kb.rules[1].postcondition == ConstantClass("b")

    def test_head_mismatch(self):
        with pytest.raises(SchemaMismatch):
            parse_theory("f(X, Y, 1).\nf(Y, X, 2).")

    def test_unbound_output(self):
        with pytest.raises(UnboundOutput):
            parse_theory("f(X, Z) :- X > 0.")

    def test_duplicate_literals_collapse_with_warning(self):
        with pytest.warns(UserWarning):
            kb = parse_theory("f(X, 1) :- X > 0, X > 0.")
        assert kb.rules[0].precondition == (Comparison("X", ">", 0.0),)


class TestErrors:
    def test_missing_terminator_reports_eof(self):
        with pytest.raises(ParseError) as info:
            parse_theory("f(X, 1) :- X > 0")
        assert info.value.span.line == 1 and info.value.span.column == 17
        assert info.value.found == "end of input"

    def test_empty_theory(self):
        with pytest.raises(ParseError, match="empty theory"):
            parse_theory("  % nothing here\n")

    def test_span_on_second_line(self):
        with pytest.raises(ParseError) as info:
            parse_theory("f(X, 1) :- X > 0.\nf(X, 2) :- X >> 0.")
        assert info.value.span.line == 2
        assert info.value.message.startswith("2:")

    def test_expected_and_found(self):
        with pytest.raises(ParseError) as info:
            parse_theory("f(X, 1) :- X, X > 0.")
        assert "comparison operator" in info.value.expected


class TestRendering:
    def test_number_format(self):
        assert render_number(-0.0) == "0"
        assert render_number(0.1 + 0.2, None) == "0.30000000000000004"
        assert render_number(1234567.0) == "1.23457e+06"

    def test_quoted_atoms(self):
        schema = FeatureSchema((Feature("C", CATEGORICAL),), Feature("Out", CATEGORICAL))
        kb = KnowledgeBase(schema, (Rule((Comparison("C", "=", "in"),), ConstantClass("Big one")),))
        text = render_theory(kb)
        assert "'in'" in text and "'Big one'" in text
        assert parse_theory(text, schema) == kb


# -- property: render/parse round trip over generated knowledge bases ---------

MIXED = FeatureSchema((Feature("X"), Feature("Y"), Feature("C", CATEGORICAL)), Feature("Z"))
numbers = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False).map(lambda v: v + 0.0)
labels = st.sampled_from(["red", "blue", "green", "in", "Odd label", "x1"])


@st.composite
def literals(draw, nested=True):
    kind = draw(st.sampled_from(["cmp", "cat", "interval", "set", "oblique", "fuzzy"]
                                + (["mofn"] if nested else [])))
    if kind == "cmp":
        return Comparison(draw(st.sampled_from(["X", "Y"])), draw(st.sampled_from(["=", "!=", "<", "<=", ">", ">="])),
                          draw(numbers))
    if kind == "cat":
        return Comparison("C", draw(st.sampled_from(["=", "!="])), draw(labels))
    if kind == "interval":
        lo, hi = sorted((draw(numbers), draw(numbers)))
        if lo == hi:
            hi = lo + 1.0
        return Interval(draw(st.sampled_from(["X", "Y"])), lo, hi, draw(st.booleans()), draw(st.booleans()),
                        draw(st.booleans()))
    if kind == "set":
        return SetMembership("C", frozenset(draw(st.lists(labels, min_size=1, max_size=3))), draw(st.booleans()))
    if kind == "oblique":
        a = draw(numbers.filter(lambda v: v != 0))
        b = draw(numbers.filter(lambda v: v != 0))
        return Oblique((("X", a), ("Y", b)), draw(st.sampled_from(["<", "<=", ">", ">="])), draw(numbers))
    if kind == "fuzzy":
        return Fuzzy(draw(st.sampled_from(["X", "Y"])), draw(st.sampled_from(["low", "high"])))
    inner = draw(st.lists(literals(nested=False), min_size=2, max_size=4, unique=True))
    return MOfN(draw(st.integers(1, len(inner))), tuple(inner))


@st.composite
def posts(draw):
    if draw(st.booleans()):
        return ConstantValue(draw(numbers))
    coefs = draw(st.lists(numbers.filter(lambda v: v != 0), min_size=1, max_size=2))
    return LinearExpr(draw(numbers), tuple(zip(["X", "Y"], coefs)))


@st.composite
def knowledge_bases(draw):
    rules = []
    for _ in range(draw(st.integers(1, 4))):
        body = draw(st.lists(literals(), max_size=3, unique=True))
        rules.append(Rule(tuple(body), draw(posts())))
    return KnowledgeBase(MIXED, tuple(rules), draw(st.sampled_from([ORDERED, UNORDERED])),
                         draw(st.sampled_from(["", "generated"])))


class TestRoundTripProperty:
    @settings(max_examples=300, deadline=None)
    @given(knowledge_bases())
    def test_exact_render_parse(self, kb):
        assert parse_theory(render_theory(kb, precision=None), MIXED) == kb
