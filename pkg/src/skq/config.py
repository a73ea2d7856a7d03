"""Flat ``key = value`` configuration files.

Blank lines and lines starting with ``#`` are ignored; keys keep their
order of appearance. An experiment file uses these keys::

    dataset = istanbul.csv          # relative to the config file
    output_column = ISE
    drop = date, ISE_TL
    functor = ise
    split.seed = 0
    split.ratio = 0.8
    report = report.json
    grid_export = grids             # directory for 2-feature prediction grids
    grid.features = EU, FTSE
    grid.resolution = 25
    blackbox.LR = linear
    blackbox.RF = forest; trees = 100; max depth = unbounded; features = sqrt; seed = 0
    row.lr_cart6 = LR; cart; max leaves = 6; max depth = unbounded
    row.lr_gridex = LR; gridex; max depth = 2; threshold = 0.01; splits = 3 if feature importance > 0.8 else 1
    score.a = 1                     # any ScoreConfig field
    weights.rho = 10                # any WeightConfig field

Row parameters use the names of the published results table: ``max
depth``, ``max leaves``, ``threshold``, ``splits``; plus ``min samples``,
``merge`` and ``accept root`` for the grid extractors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import SchemaError
from .evaluation import ScoreConfig
from .extractors.params import ExtractorParams, parse_splits
from .readability import WeightConfig


class ConfigError(SchemaError):
    """Malformed configuration."""


def parse_flat(text: str, source: str = "<config>") -> dict:
    values = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split(" #", 1)[0].strip() if not raw.lstrip().startswith("#") else ""
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"{source}:{number}: expected 'key = value', found {raw.strip()!r}")
        key = key.strip()
        if key in values:
            raise ConfigError(f"{source}:{number}: duplicate key {key!r}")
        values[key] = value.strip()
    return values


def read_flat(path) -> dict:
    path = Path(path)
    return parse_flat(path.read_text(encoding="utf-8"), str(path))


def section(values: dict, prefix: str) -> dict:
    return {k[len(prefix) + 1:]: v for k, v in values.items() if k.startswith(prefix + ".")}


def load_weights(path) -> WeightConfig:
    return WeightConfig.from_mapping(read_flat(path))


def load_score_config(path) -> ScoreConfig:
    return ScoreConfig.from_mapping(read_flat(path))


def _int_or_unbounded(text: str) -> int | None:
    return None if text.strip().lower() in ("unbounded", "none", "inf") else int(text)


def _flag(text: str) -> bool:
    value = text.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, found {text!r}")


def _settings(parts) -> dict:
    out = {}
    for part in parts:
        key, sep, value = part.partition("=")
        if not sep:
            raise ValueError(f"expected 'name = value', found {part.strip()!r}")
        out[" ".join(key.lower().split())] = value.strip()
    return out


def parse_extractor_params(settings: dict, seed: int = 0) -> ExtractorParams:
    kwargs = {"seed": seed}
    for key, value in settings.items():
        if key == "max depth":
            kwargs["max_depth"] = _int_or_unbounded(value)
        elif key == "max leaves":
            kwargs["max_leaves"] = _int_or_unbounded(value)
        elif key == "threshold":
            kwargs["error_threshold"] = math.inf if value.lower() in ("inf", "unbounded") else float(value)
        elif key == "splits":
            kwargs["splits"] = parse_splits(value)
        elif key == "min samples":
            kwargs["min_samples_per_region"] = int(value)
        elif key == "merge":
            kwargs["merge"] = _flag(value)
        elif key == "accept root":
            kwargs["accept_root"] = _flag(value)
        elif key == "seed":
            kwargs["seed"] = int(value)
        else:
            raise ValueError(f"unknown extractor parameter {key!r}")
    return ExtractorParams(**kwargs)


@dataclass(frozen=True)
class BlackBoxSpec:
    name: str
    kind: str  # "linear" or "forest"
    settings: dict = field(default_factory=dict)

    @classmethod
    def parse(cls, name: str, text: str) -> "BlackBoxSpec":
        kind, *rest = [p.strip() for p in text.split(";")]
        if kind not in ("linear", "forest"):
            raise ConfigError(f"black box {name}: unknown type {kind!r}")
        return cls(name, kind, _settings(rest))


@dataclass(frozen=True)
class RowSpec:
    """One (black box, extractor) pair; parsed lazily so a bad row fails alone."""

    name: str
    text: str

    def parse(self, seed: int) -> tuple:
        bb, extractor, *rest = [p.strip() for p in self.text.split(";")] + [""]
        rest = [p for p in rest if p]
        return bb, extractor, parse_extractor_params(_settings(rest), seed)


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: Path
    output_column: str | None
    drop: tuple
    functor: str | None
    split_seed: int
    split_ratio: float
    blackboxes: tuple
    rows: tuple
    score: ScoreConfig
    report: Path | None
    grid_export: Path | None
    grid_features: tuple
    grid_resolution: int

    @classmethod
    def from_mapping(cls, values: dict, base: Path = Path(".")) -> "ExperimentConfig":
        known_prefixes = ("split.", "blackbox.", "row.", "score.", "weights.", "grid.")
        known = {"dataset", "output_column", "drop", "functor", "report", "grid_export"}
        for key in values:
            if key not in known and not key.startswith(known_prefixes):
                raise ConfigError(f"unknown experiment setting {key!r}")
        if "dataset" not in values:
            raise ConfigError("experiment needs a 'dataset' entry")
        score_values = section(values, "score")
        score_values.update({f"weights.{k}": v for k, v in section(values, "weights").items()})
        blackboxes = tuple(BlackBoxSpec.parse(k, v) for k, v in section(values, "blackbox").items())
        rows = tuple(RowSpec(k, v) for k, v in section(values, "row").items())
        if not rows:
            raise ConfigError("experiment needs at least one 'row.<name>' entry")
        split = section(values, "split")
        grid = section(values, "grid")

        def path(key):
            return (base / values[key]) if values.get(key) else None

        return cls(
            dataset=base / values["dataset"],
            output_column=values.get("output_column") or None,
            drop=tuple(c.strip() for c in values.get("drop", "").split(",") if c.strip()),
            functor=values.get("functor") or None,
            split_seed=int(split.get("seed", 0)),
            split_ratio=float(split.get("ratio", 0.8)),
            blackboxes=blackboxes,
            rows=rows,
            score=ScoreConfig.from_mapping(score_values),
            report=path("report"),
            grid_export=path("grid_export"),
            grid_features=tuple(c.strip() for c in grid.get("features", "EU, FTSE").split(",")),
            grid_resolution=int(grid.get("resolution", 25)),
        )

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        return cls.from_mapping(read_flat(path), path.parent)
