"""Extractor parameters and grid split policies."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field


@dataclass(frozen=True)
class FixedSplits:
    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("split count must be positive")

    def counts(self, importances: dict, names) -> dict:
        return {n: self.k for n in names}

    def describe(self) -> str:
        return str(self.k)


@dataclass(frozen=True)
class AdaptiveSplits:
    """``k_high`` parts for features whose relative importance exceeds the
    cutoff, ``k_low`` for the rest. Importance is taken relative to the most
    important feature, so the cutoff is scale-free."""

    k_high: int
    cutoff: float
    k_low: int = 1

    def __post_init__(self):
        if self.k_high < 1 or self.k_low < 1:
            raise ValueError("split counts must be positive")
        if not 0.0 < self.cutoff < 1.0:
            raise ValueError("importance cutoff must lie in (0, 1)")

    def counts(self, importances: dict, names) -> dict:
        top = max(importances.get(n, 0.0) for n in names)
        out = {}
        for n in names:
            rel = importances.get(n, 0.0) / top if top > 0 else 0.0
            out[n] = self.k_high if rel > self.cutoff else self.k_low
        return out

    def describe(self) -> str:
        return f"{self.k_high} if feature importance > {self.cutoff:g} else {self.k_low}"


_ADAPTIVE_RE = re.compile(
    r"^\s*(\d+)\s+if\s+feature\s+importance\s*>\s*([0-9.eE+-]+)\s+else\s+(\d+)\s*$")


def parse_splits(text: str):
    """``"2"`` or ``"3 if feature importance > 0.8 else 1"``."""
    text = str(text).strip()
    if text.isdigit():
        return FixedSplits(int(text))
    m = _ADAPTIVE_RE.match(text)
    if not m:
        raise ValueError(f"cannot read split policy {text!r}")
    return AdaptiveSplits(int(m.group(1)), float(m.group(2)), int(m.group(3)))


@dataclass(frozen=True)
class ExtractorParams:
    max_depth: int | None = None
    max_leaves: int | None = None
    error_threshold: float = 0.01
    splits: FixedSplits | AdaptiveSplits = field(default_factory=lambda: FixedSplits(2))
    min_samples_per_region: int = 1
    seed: int = 0
    # grid options: test the whole bounding box first; merge adjacent accepted cells
    accept_root: bool = True
    merge: bool = True

    def __post_init__(self):
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError("max_depth must be a positive integer")
        if self.max_leaves is not None and self.max_leaves < 1:
            raise ValueError("max_leaves must be a positive integer")
        if math.isnan(self.error_threshold) or self.error_threshold < 0:
            raise ValueError("error threshold must be non-negative")
        if self.min_samples_per_region < 1:
            raise ValueError("min_samples_per_region must be positive")

    def describe(self) -> str:
        parts = []
        if self.max_leaves is not None:
            parts.append(f"max leaves = {self.max_leaves}")
        parts.append(f"max depth = {'unbounded' if self.max_depth is None else self.max_depth}")
        return ", ".join(parts)
