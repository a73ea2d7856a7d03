"""Exception types raised across the package."""

from __future__ import annotations


class SkqError(Exception):
    """Base class for every error raised by skq."""


class SchemaError(SkqError, ValueError):
    """A rule, literal or instance does not conform to its feature schema."""


class UnknownFeature(SchemaError, KeyError):
    def __init__(self, name: str):
        super().__init__(name)
        self.name = name

    def __str__(self) -> str:
        return f"unknown feature {self.name!r}"


class MissingFuzzyLabel(SkqError, KeyError):
    def __init__(self, feature: str, label: str):
        super().__init__(feature, label)
        self.feature = feature
        self.label = label

    def __str__(self) -> str:
        return f"no membership function for {self.feature} is_label {self.label}"


class AmbiguousMatch(SkqError):
    """Several rules of an unordered knowledge base match with different outputs."""

    def __init__(self, rule_indices, outputs=None):
        self.rule_indices = tuple(rule_indices)
        self.outputs = outputs
        super().__init__(f"overlapping rules {list(self.rule_indices)} disagree")


class ParseError(SkqError):
    """Syntax error in a theory; ``span`` points inside the input text."""

    def __init__(self, span, expected: str, found: str):
        self.span = span
        self.expected = expected
        self.found = found
        super().__init__(self.message)

    @property
    def message(self) -> str:
        return f"{self.span.line}:{self.span.column}: expected {self.expected}, found {self.found!r}"


class SchemaMismatch(SkqError):
    pass


class UnboundOutput(SkqError):
    pass


class NonComplementableLiteral(SkqError):
    pass


class UnsupportedLiteral(SkqError):
    pass


class RegionBudgetExceeded(SkqError):
    def __init__(self, limit: int):
        self.limit = limit
        super().__init__(
            f"ordered-to-unordered expansion exceeds {limit} regions; raise max_regions"
        )


class AllUncovered(SkqError):
    pass


class ZeroVariance(SkqError):
    pass


class SampleBudgetExceeded(SkqError):
    pass


class SingularDesign(SkqError):
    pass


class NoSamples(SkqError):
    pass
