"""Plain-text interchange formats for decision trees and decision tables.

Both start with header lines naming the schema::

    functor: ise            (optional, defaults to "f")
    inputs: SP, DAX, EU
    output: ISE
    categorical: Color      (optional; features with category values)

A tree follows as indented lines. A ``split:`` line holds one literal and
is followed by its two children, indented deeper: first the branch where
the literal holds, then the other one. A ``leaf:`` line holds the output::

    split: EU =< 0.01
      leaf: -0.02
      split: EM > 0.01
        leaf: 0.03
        leaf: 0.01

A table follows as ``|``-separated rows, one cell per input in header
order plus the output last. ``*`` leaves a column unconstrained and ``&``
joins several literals in one cell::

    EU > 0.01 | *       | 0.02
    EU =< 0.01 & EU > 0 | EM =< 0.01 | 0.01

Lines starting with ``#`` are comments.
"""

from __future__ import annotations

from .errors import ParseError
from .model import CATEGORICAL, CONTINUOUS, Feature, FeatureSchema, KnowledgeBase
from .normalize import DecisionTable, Leaf, Split, TableRow, table_to_rules, tree_to_rules
from .parser import SourceSpan, parse_literal, parse_postcondition

_HEADER_KEYS = ("functor", "inputs", "output", "categorical")


def _lines(text: str):
    for number, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if stripped and not stripped.startswith("#"):
            yield number, raw.rstrip()


def _fail(line: int, column: int, expected: str, found: str):
    return ParseError(SourceSpan(line, column, 0, 0), expected, found)


def _header(lines: list) -> tuple:
    values = {}
    body = []
    for number, raw in lines:
        key, sep, rest = raw.strip().partition(":")
        if not body and sep and key.strip() in _HEADER_KEYS:
            values[key.strip()] = rest.strip()
        else:
            body.append((number, raw))
    if "inputs" not in values or "output" not in values:
        line = lines[0][0] if lines else 1
        raise _fail(line, 1, "'inputs:' and 'output:' header lines", "missing header")
    categorical = {c.strip() for c in values.get("categorical", "").split(",") if c.strip()}

    def feature(name):
        return Feature(name, CATEGORICAL if name in categorical else CONTINUOUS)

    inputs = tuple(feature(n.strip()) for n in values["inputs"].split(",") if n.strip())
    schema = FeatureSchema(inputs, feature(values["output"]), values.get("functor", "f") or "f")
    return schema, body


def _parse_at(fn, text: str, schema: FeatureSchema, line: int, column: int):
    try:
        return fn(text, schema)
    except ParseError as exc:
        raise _fail(line, column + exc.span.column - 1, exc.expected, exc.found) from None


def parse_tree(text: str) -> tuple:
    """(schema, root node) of an indented tree description."""
    schema, body = _header(list(_lines(text)))
    if not body:
        raise _fail(1, 1, "a 'split:' or 'leaf:' line", "end of input")
    pos = 0

    def node(min_indent: int):
        nonlocal pos
        if pos >= len(body):
            raise _fail(body[-1][0] + 1, 1, "a child node", "end of input")
        number, raw = body[pos]
        indent = len(raw) - len(raw.lstrip())
        if indent < min_indent:
            raise _fail(number, indent + 1, "a more deeply indented child", raw.strip())
        kind, sep, rest = raw.strip().partition(":")
        column = indent + len(kind) + 2 + (len(rest) - len(rest.lstrip()))
        pos += 1
        if kind == "leaf" and sep:
            return Leaf(_parse_at(parse_postcondition, rest.strip(), schema, number, column)), indent
        if kind == "split" and sep:
            lit = _parse_at(parse_literal, rest.strip(), schema, number, column)
            left, child_indent = node(indent + 1)
            right, other = node(indent + 1)
            if other != child_indent:
                raise _fail(body[pos - 1][0], other + 1, "siblings at the same indentation", "misaligned node")
            return Split(lit, left, right), indent
        raise _fail(number, indent + 1, "'split:' or 'leaf:'", raw.strip())

    root, _ = node(0)
    if pos != len(body):
        raise _fail(body[pos][0], 1, "end of tree", body[pos][1].strip())
    return schema, root


def parse_table(text: str) -> tuple:
    """(schema, DecisionTable) of a ``|``-delimited table description."""
    schema, body = _header(list(_lines(text)))
    rows = []
    width = len(schema.inputs) + 1
    for number, raw in body:
        cells = raw.split("|")
        if len(cells) != width:
            raise _fail(number, 1, f"{width} cells", f"{len(cells)} cells")
        offset = 1
        parsed = []
        for j, cell in enumerate(cells[:-1]):
            literals = []
            part_offset = offset
            if cell.strip() != "*":
                for part in cell.split("&"):
                    lead = len(part) - len(part.lstrip())
                    lit = _parse_at(parse_literal, part.strip(), schema, number, part_offset + lead)
                    if lit.features() != (schema.inputs[j].name,):
                        raise _fail(number, part_offset + lead,
                                    f"a literal on {schema.inputs[j].name}", part.strip())
                    literals.append(lit)
                    part_offset += len(part) + 1
            parsed.append(tuple(literals))
            offset += len(cell) + 1
        out_cell = cells[-1]
        lead = len(out_cell) - len(out_cell.lstrip())
        post = _parse_at(parse_postcondition, out_cell.strip(), schema, number, offset + lead)
        rows.append(TableRow(tuple(parsed), post))
    if not rows:
        raise _fail(1, 1, "at least one table row", "end of input")
    return schema, DecisionTable(schema.input_names, tuple(rows))


def tree_text_to_rules(text: str) -> KnowledgeBase:
    schema, root = parse_tree(text)
    return tree_to_rules(root, schema)


def table_text_to_rules(text: str) -> KnowledgeBase:
    schema, table = parse_table(text)
    return table_to_rules(table, schema)
