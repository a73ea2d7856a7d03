"""Reading and writing knowledge bases in Prolog-like clause syntax.

A theory is a sequence of clauses::

    ise(BOVESPA, DAX, EM, EU, FTSE, NIKKEI, SP, -0.02) :-
        EU =< -0.00, EU =< -0.02.
    ise(BOVESPA, DAX, EM, EU, FTSE, NIKKEI, SP, ISE) :-
        FTSE in [-0.05, 0.04], ISE is -0.02 BOVESPA + 0.47 SP.

The head's arguments name the input features followed by the output: a
constant output is the rule's postcondition, a variable output must be
bound by an ``is`` literal in the body. Besides the literal forms above the
body may contain ``X < c``, ``X \\= c``, ``X in [a, b)``, ``X not_in [a, b]``,
``Color in {blue, red}``, ``Color not_in {..}``, ``2 of [X > 0, Y > 0, Z > 0]``,
``X is_label medium`` and oblique comparisons such as ``0.3*X + 0.7*Y =< 1``.

A directive ``:- ordering(unordered).`` marks the list as unordered; the
default is ordered. ``%`` starts a comment, and a ``% provenance: ...``
comment is carried into :attr:`KnowledgeBase.provenance`.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass

from .errors import ParseError, SchemaMismatch, UnboundOutput
from .model import (
    CATEGORICAL, CONTINUOUS, ORDERED, UNORDERED, Comparison, ConstantClass,
    ConstantValue, Feature, FeatureSchema, Fuzzy, Interval, KnowledgeBase,
    LinearExpr, MOfN, Oblique, Rule, SetMembership, linear_or_constant,
)


@dataclass(frozen=True)
class SourceSpan:
    line: int
    column: int
    start: int
    end: int

    def __post_init__(self):
        if min(self.line, self.column, self.start, self.end) < 0 or self.end < self.start:
            raise ValueError(f"invalid span {self}")


@dataclass(frozen=True)
class Token:
    kind: str  # num, var, ident, atom, op, eof
    text: str
    span: SourceSpan


_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<comment>%[^\n]*)
  | (?P<num>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<var>[A-Z_][A-Za-z0-9_]*)
  | (?P<ident>[a-z][A-Za-z0-9_]*)
  | (?P<atom>'(?:[^'\\\n]|\\.)*')
  | (?P<op>:-|=<|>=|\\=|<|>|=|[()\[\]{},.*+-])
""", re.VERBOSE)

_KEYWORDS = {"in", "not_in", "of", "is", "is_label"}
_OPS_IN = {"=<": "<=", "<": "<", ">": ">", ">=": ">=", "=": "=", "\\=": "!="}
_OPS_OUT = {"<=": "=<", "<": "<", ">": ">", ">=": ">=", "=": "=", "!=": "\\="}
_FLIP = {"<": ">", "<=": ">=", ">": "<", ">=": "<=", "=": "=", "!=": "!="}
_PROVENANCE_RE = re.compile(r"^\s*%\s*provenance:\s*(.*?)\s*$", re.MULTILINE)


def tokenize(text: str) -> list:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        span_here = SourceSpan(line, pos - line_start + 1, pos, pos + 1)
        if m is None:
            raise ParseError(span_here, "a token", text[pos])
        kind, lexeme = m.lastgroup, m.group()
        if kind not in ("ws", "comment"):
            span = SourceSpan(line, pos - line_start + 1, pos, m.end())
            if kind == "atom":
                lexeme = re.sub(r"\\(.)", r"\1", lexeme[1:-1])
            tokens.append(Token(kind, lexeme, span))
        newlines = m.group().count("\n")
        if newlines:
            line += newlines
            line_start = pos + m.group().rindex("\n") + 1
        pos = m.end()
    end = len(text)
    tokens.append(Token("eof", "end of input", SourceSpan(line, end - line_start + 1, end, end)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.pos = 0
        self.variables: dict = {}  # input variable name -> kind (None while unknown)
        self.hint: FeatureSchema | None = None

    # -- token helpers -------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def error(self, expected: str, tok: Token | None = None):
        tok = tok or self.tok
        return ParseError(tok.span, expected, tok.text)

    def at(self, kind: str, text: str | None = None) -> bool:
        return self.tok.kind == kind and (text is None or self.tok.text == text)

    def take(self, kind: str, text: str | None = None, expected: str | None = None) -> Token:
        if not self.at(kind, text):
            raise self.error(expected or repr(text or kind))
        tok = self.tok
        self.pos += 1
        return tok

    def accept(self, kind: str, text: str | None = None) -> Token | None:
        if self.at(kind, text):
            return self.take(kind, text)
        return None

    def end_of_clause(self):
        dot = self.take("op", ".", "'.'")
        nxt = dot.span.end
        if nxt < len(self.text) and not (self.text[nxt].isspace() or self.text[nxt] == "%"):
            raise self.error("whitespace after '.'")

    # -- numbers and terms ---------------------------------------------------

    def number(self) -> tuple:
        """Signed number; returns ``(value, lexeme)``."""
        sign = ""
        if self.at("op", "-") or self.at("op", "+"):
            sign = self.take("op").text
        tok = self.take("num", expected="a number")
        lexeme = ("-" if sign == "-" else "") + tok.text
        return float(lexeme), lexeme

    def input_variable(self) -> str:
        tok = self.take("var", expected="a feature variable")
        if tok.text not in self.variables:
            raise self.error("an input feature variable", tok)
        return tok.text

    def linexpr(self, first_sign: bool = True) -> tuple:
        """``[sign] term {(+|-) term}``; returns ``(constant, [(var, coef), ...], tokens)``."""
        constant, terms = 0.0, []
        sign = 1.0
        if first_sign and (self.at("op", "-") or self.at("op", "+")):
            sign = -1.0 if self.take("op").text == "-" else 1.0
        while True:
            if self.at("num"):
                value = float(self.take("num").text) * sign
                self.accept("op", "*")
                if self.at("var"):
                    terms.append((self.input_variable(), value))
                elif self.tokens[self.pos - 1].text == "*":
                    raise self.error("a feature variable")
                else:
                    constant += value
            elif self.at("var"):
                terms.append((self.input_variable(), sign))
            else:
                raise self.error("a number or feature variable")
            if self.at("op", "+") or self.at("op", "-"):
                sign = -1.0 if self.take("op").text == "-" else 1.0
            else:
                break
        names = [v for v, _ in terms]
        if len(set(names)) != len(names):
            raise self.error("each variable at most once in a linear expression")
        return constant, terms

    # -- literals ------------------------------------------------------------

    def category(self) -> str:
        if self.at("ident") or self.at("atom"):
            return self.take(self.tok.kind).text
        if self.at("num") or self.at("op", "-"):
            return self.number()[1]
        raise self.error("a category")

    def literal(self, allow_mofn: bool = True):
        tok = self.tok
        if tok.kind == "num" and self.peek().kind == "ident" and self.peek().text == "of":
            if not allow_mofn:
                raise self.error("a literal (m-of-n cannot nest)")
            return self.mofn()
        if tok.kind == "var" and self.peek().kind == "ident":
            word = self.peek().text
            if word in ("in", "not_in"):
                return self.membership()
            if word == "is_label":
                feature = self.input_variable()
                self.take("ident", "is_label")
                label = self.take("ident", expected="a fuzzy label").text
                return Fuzzy(feature, label)
            if word == "is":
                return self.is_literal()
        return self.comparison()

    def mofn(self):
        m_tok = self.take("num")
        if not re.fullmatch(r"\d+", m_tok.text):
            raise self.error("an integer", m_tok)
        self.take("ident", "of")
        self.take("op", "[", "'['")
        inner = [self.literal(allow_mofn=False)]
        while self.accept("op", ","):
            inner.append(self.literal(allow_mofn=False))
        close = self.take("op", "]", "']'")
        try:
            return MOfN(int(m_tok.text), tuple(inner))
        except ValueError as exc:
            raise ParseError(m_tok.span, f"a valid m-of-n ({exc})", m_tok.text) from None

    def membership(self):
        feature = self.input_variable()
        negated = self.take("ident").text == "not_in"
        if self.at("op", "{"):
            self.take("op", "{")
            values = [self.category()]
            while self.accept("op", ","):
                values.append(self.category())
            self.take("op", "}", "'}'")
            return SetMembership(feature, frozenset(values), negated)
        if not (self.at("op", "[") or self.at("op", "(")):
            raise self.error("'[', '(' or '{'")
        open_tok = self.take("op")
        low, _ = self.number()
        self.take("op", ",", "','")
        high, _ = self.number()
        if not (self.at("op", "]") or self.at("op", ")")):
            raise self.error("']' or ')'")
        close_tok = self.take("op")
        try:
            return Interval(feature, low, high, open_tok.text == "[", close_tok.text == "]",
                            negated=negated)
        except ValueError as exc:
            raise ParseError(open_tok.span, f"a valid interval ({exc})", open_tok.text) from None

    def is_literal(self):
        tok = self.take("var")
        self.take("ident", "is")
        constant, terms = self.linexpr()
        return ("is", tok, constant, terms)

    def comparison(self):
        start = self.tok
        constant, terms = self.linexpr()
        if not (self.tok.kind == "op" and self.tok.text in _OPS_IN):
            raise self.error("a comparison operator")
        op = _OPS_IN[self.take("op").text]
        terms = [(v, c) for v, c in terms if c != 0.0]
        if not terms:
            raise self.error("a feature variable", start)
        if len(terms) == 1 and terms[0][1] == 1.0 and constant == 0.0:
            feature = terms[0][0]
            if self.categorical(feature) or self.at("ident") or self.at("atom"):
                if op not in ("=", "!="):
                    raise self.error("a number")
                return Comparison(feature, op, self.category())
            value, _ = self.number()
            return Comparison(feature, op, value)
        value, _ = self.number()
        if len(terms) == 1:
            feature, coef = terms[0]
            if coef < 0:
                op = _FLIP[op]
            return Comparison(feature, op, (value - constant) / coef)
        if op in ("=", "!="):
            raise self.error("an ordering operator for an oblique literal", start)
        return Oblique(tuple(terms), op, value - constant)

    def categorical(self, feature: str) -> bool:
        return self.variables.get(feature) == CATEGORICAL

    # -- clauses -------------------------------------------------------------

    def head(self):
        functor = self.take("ident", expected="a clause head").text
        self.take("op", "(", "'('")
        args = [self.head_arg()]
        while self.accept("op", ","):
            args.append(self.head_arg())
        self.take("op", ")", "')'")
        return functor, args

    def head_arg(self):
        tok = self.tok
        if tok.kind == "var":
            self.pos += 1
            return ("var", tok.text, tok)
        if tok.kind in ("ident", "atom"):
            self.pos += 1
            return ("atom", tok.text, tok)
        if tok.kind == "num" or (tok.kind == "op" and tok.text in "+-"):
            value, lexeme = self.number()
            return ("num", (value, lexeme), tok)
        raise self.error("a variable, number or atom")

    def directive(self):
        self.take("op", ":-")
        word = self.take("ident", "ordering", "'ordering'")
        self.take("op", "(", "'('")
        value = self.take("ident", expected="ordered or unordered")
        if value.text not in (ORDERED, UNORDERED):
            raise self.error("ordered or unordered", value)
        self.take("op", ")", "')'")
        self.end_of_clause()
        return value.text

    def theory(self, hint: FeatureSchema | None, ordering: str | None):
        self.hint = hint
        if hint is not None:
            self.variables = {f.name: f.kind for f in hint.inputs}
        declared = None
        clauses = []
        functor, inputs, first_head = None, None, None
        while not self.at("eof"):
            if self.at("op", ":-"):
                declared = self.directive()
                continue
            head_tok = self.tok
            name, args = self.head()
            if len(args) < 2:
                raise ParseError(head_tok.span, "at least one input and one output argument", name)
            arg_inputs = args[:-1]
            for kind, value, tok in arg_inputs:
                if kind != "var":
                    raise ParseError(tok.span, "an input feature variable", tok.text)
            names = [value for _, value, _ in arg_inputs]
            if len(set(names)) != len(names):
                raise ParseError(head_tok.span, "distinct input variables", name)
            if functor is None:
                functor, inputs, first_head = name, names, head_tok
                if hint is not None:
                    if list(hint.input_names) != names or (hint.functor not in ("f", name)):
                        raise SchemaMismatch(
                            f"head {name}({', '.join(names)}, _) does not match schema "
                            f"{hint.functor}({', '.join(hint.input_names)}, _)")
                else:
                    self.variables = {n: None for n in names}
            elif name != functor or names != inputs:
                raise SchemaMismatch(
                    f"line {head_tok.span.line}: clause head {name}/{len(args)} differs from "
                    f"{functor}/{len(inputs) + 1}")
            body = []
            if self.accept("op", ":-"):
                body.append(self.literal())
                while self.accept("op", ","):
                    body.append(self.literal())
            self.end_of_clause()
            clauses.append((head_tok, args[-1], body))
        if not clauses:
            raise ParseError(self.tok.span, "a clause (empty theory)", self.tok.text)
        return functor, inputs, clauses, ordering or declared or ORDERED


def _infer_kinds(inputs, clauses):
    kinds = {n: CONTINUOUS for n in inputs}

    def visit(lit):
        if isinstance(lit, MOfN):
            for inner in lit.literals:
                visit(inner)
        elif isinstance(lit, SetMembership) or (isinstance(lit, Comparison) and lit.categorical):
            kinds[lit.feature] = CATEGORICAL

    for _, _, body in clauses:
        for lit in body:
            if not isinstance(lit, tuple):
                visit(lit)
    return kinds


def parse_theory(text: str, schema_hint: FeatureSchema | None = None,
                 ordering: str | None = None) -> KnowledgeBase:
    """Parse a theory into a :class:`KnowledgeBase`.

    Raises:
        ParseError: on a syntax error; its span points inside ``text``.
        SchemaMismatch: if clause heads disagree with each other or with ``schema_hint``.
        UnboundOutput: if a variable output is not bound by an ``is`` literal.
    """
    parser = _Parser(text)
    functor, inputs, clauses, ordering = parser.theory(schema_hint, ordering)

    if schema_hint is not None:
        schema = schema_hint
    else:
        kinds = _infer_kinds(inputs, clauses)
        categorical_out = any(arg[0] == "atom" for _, arg, _ in clauses)
        out_vars = {arg[1] for _, arg, _ in clauses if arg[0] == "var"}
        if len(out_vars) > 1:
            raise SchemaMismatch(f"clauses name different outputs {sorted(out_vars)}")
        if out_vars:
            out_name = out_vars.pop()
        else:
            out_name = functor.upper() if functor.upper() not in inputs else "OUTPUT"
        out_kind = CATEGORICAL if categorical_out else CONTINUOUS
        schema = FeatureSchema(tuple(Feature(n, kinds[n]) for n in inputs),
                               Feature(out_name, out_kind), functor)

    rules = []
    for head_tok, (kind, value, tok), body in clauses:
        binding = [lit for lit in body if isinstance(lit, tuple)]
        literals = [lit for lit in body if not isinstance(lit, tuple)]
        if kind == "var":
            if value != schema.output.name:
                raise SchemaMismatch(f"output variable {value} differs from {schema.output.name}")
            bound = [b for b in binding if b[1].text == value]
            if len(bound) != 1 or len(binding) != 1:
                raise UnboundOutput(
                    f"line {head_tok.span.line}: output {value} must be bound by exactly one 'is' literal")
            _, _, constant, terms = bound[0]
            if schema.output.kind == CATEGORICAL:
                raise SchemaMismatch("an 'is' expression cannot produce a class label")
            post = linear_or_constant(constant, terms)
        else:
            if binding:
                raise ParseError(binding[0][1].span, "no 'is' literal for a constant output",
                                 binding[0][1].text)
            if kind == "atom" or schema.output.kind == CATEGORICAL:
                post = ConstantClass(value if kind == "atom" else value[1])
            else:
                post = ConstantValue(value[0])
        unique = list(dict.fromkeys(literals))
        if len(unique) != len(literals):
            warnings.warn(f"line {head_tok.span.line}: duplicate literals collapsed", stacklevel=2)
        rules.append(Rule(tuple(unique), post))

    match = _PROVENANCE_RE.search(text)
    provenance = match.group(1) if match else ""
    return KnowledgeBase(schema, tuple(rules), ordering, provenance)


def parse_literal(text: str, schema: FeatureSchema):
    """Parse a single body literal against ``schema`` (no ``is`` literals)."""
    parser = _Parser(text)
    parser.variables = {f.name: f.kind for f in schema.inputs}
    lit = parser.literal()
    if isinstance(lit, tuple):
        raise parser.error("a precondition literal", lit[1])
    parser.take("eof", expected="end of literal")
    return lit


def parse_postcondition(text: str, schema: FeatureSchema):
    """Parse a constant, class label or linear expression over the inputs."""
    parser = _Parser(text)
    parser.variables = {f.name: f.kind for f in schema.inputs}
    if schema.output.kind == CATEGORICAL:
        post = ConstantClass(parser.category())
    else:
        constant, terms = parser.linexpr()
        post = linear_or_constant(constant, terms)
    parser.take("eof", expected="end of output")
    return post


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

_IDENT_RE = re.compile(r"[a-z][A-Za-z0-9_]*")


def render_number(x: float, precision: int | None = 6) -> str:
    x = float(x) + 0.0
    text = repr(x) if precision is None else format(x, f".{precision}g")
    return "0" if text == "-0" else text


def render_atom(value: str) -> str:
    if _IDENT_RE.fullmatch(value) and value not in _KEYWORDS:
        return value
    escaped = value.replace("\\", "\\\\").replace("'", "\\'")
    return f"'{escaped}'"


def render_linear(intercept: float, terms, precision: int | None = 6) -> str:
    parts = []
    if intercept != 0.0 or not terms:
        parts.append(render_number(intercept, precision))
    for name, coef in terms:
        text = f"{render_number(abs(coef), precision)}*{name}"
        if not parts:
            parts.append(f"-{text}" if coef < 0 else text)
        else:
            parts.append(f"- {text}" if coef < 0 else f"+ {text}")
    return " ".join(parts)


def render_literal(lit, precision: int | None = 6) -> str:
    num = lambda x: render_number(x, precision)  # noqa: E731
    if isinstance(lit, Comparison):
        value = render_atom(lit.value) if lit.categorical else num(lit.value)
        return f"{lit.feature} {_OPS_OUT[lit.op]} {value}"
    if isinstance(lit, Interval):
        word = "not_in" if lit.negated else "in"
        left = "[" if lit.low_closed else "("
        right = "]" if lit.high_closed else ")"
        return f"{lit.feature} {word} {left}{num(lit.low)}, {num(lit.high)}{right}"
    if isinstance(lit, SetMembership):
        word = "not_in" if lit.negated else "in"
        values = ", ".join(render_atom(v) for v in sorted(lit.values))
        return f"{lit.feature} {word} {{{values}}}"
    if isinstance(lit, MOfN):
        inner = ", ".join(render_literal(x, precision) for x in lit.literals)
        return f"{lit.m} of [{inner}]"
    if isinstance(lit, Fuzzy):
        return f"{lit.feature} is_label {render_atom(lit.label)}"
    if isinstance(lit, Oblique):
        return f"{render_linear(0.0, lit.coefficients, precision)} {_OPS_OUT[lit.op]} {num(lit.threshold)}"
    raise TypeError(f"cannot render {lit!r}")


def render_rule(rule: Rule, schema: FeatureSchema, precision: int | None = 6) -> str:
    post = rule.postcondition
    body = [render_literal(lit, precision) for lit in rule.precondition]
    if isinstance(post, LinearExpr):
        out = schema.output.name
        body.append(f"{out} is {render_linear(post.intercept, post.coefficients, precision)}")
    elif isinstance(post, ConstantClass):
        out = render_atom(post.label)
    else:
        out = render_number(post.value, precision)
    head = f"{schema.functor}({', '.join(schema.input_names + (out,))})"
    if not body:
        return f"{head}."
    return f"{head} :-\n    {', '.join(body)}."


def render_theory(kb: KnowledgeBase, precision: int | None = 6) -> str:
    """Render ``kb`` as theory text that parses back to an equal knowledge base.

    ``precision`` is the number of significant digits; ``None`` renders every
    number exactly (shortest round-tripping repr).
    """
    lines = []
    if kb.provenance:
        lines.append(f"% provenance: {kb.provenance}")
    if kb.ordering == UNORDERED:
        lines.append(":- ordering(unordered).")
    lines.extend(render_rule(rule, kb.schema, precision) for rule in kb.rules)
    return "\n".join(lines) + "\n"
