"""Command line entry point: ``skq parse|render|normalize|score|compare|experiment``.

Exit codes: 0 success, 2 parse or validation failure, 3 every experiment
row failed, 4 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, load_score_config, load_weights
from .errors import AllUncovered, ParseError, RegionBudgetExceeded, SkqError
from .evaluation import (
    ScoreConfig, compare, load_dataset, score_knowledge_base, uncovered_report,
)
from .interchange import table_text_to_rules, tree_text_to_rules
from .model import UNORDERED
from .normalize import (
    DEFAULT_MAX_REGIONS, merge_same_output, ordered_to_unordered, simplify_knowledge_base,
)
from .parser import parse_theory, render_theory
from .pipeline import dump_report, report_table, run_experiment
from .regions import schema_full_region

EXIT_OK, EXIT_INVALID, EXIT_FAILED, EXIT_IO = 0, 2, 3, 4


class _Failure(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _read(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise _Failure(EXIT_IO, f"cannot read {path}: {exc.strerror or exc}") from None


def _write(path, text: str) -> None:
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise _Failure(EXIT_IO, f"cannot write {path}: {exc.strerror or exc}") from None


def _load_theory(path, fmt: str = "theory"):
    text = _read(path)
    try:
        if fmt == "tree":
            return tree_text_to_rules(text)
        if fmt == "table":
            return table_text_to_rules(text)
        return parse_theory(text)
    except ParseError as exc:
        raise _Failure(EXIT_INVALID, f"{path}:{exc.message}") from None


def _load_dataset(args):
    if not args.dataset:
        raise _Failure(EXIT_INVALID, "--dataset is required")
    if not Path(args.dataset).is_file():
        raise _Failure(EXIT_IO, f"cannot read {args.dataset}: no such file")
    drop = tuple(c.strip() for c in (args.drop or "").split(",") if c.strip())
    return load_dataset(args.dataset, args.output_column, drop=drop)


def _score_config(args) -> ScoreConfig:
    config = load_score_config(args.score_config) if args.score_config else ScoreConfig()
    if args.weights:
        config = replace(config, weights=load_weights(args.weights))
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    return config


def _load_bb(path, n: int):
    if not path:
        return None
    values = []
    for line in _read(path).splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            values.append(float(line))
        except ValueError:
            if values:
                raise _Failure(EXIT_INVALID, f"{path}: not a number: {line!r}") from None
            continue  # header line
    if len(values) != n:
        raise _Failure(EXIT_INVALID, f"{path}: {len(values)} predictions for {n} instances")
    return np.asarray(values)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_parse(args) -> int:
    kb = _load_theory(args.theory)
    print(render_theory(kb, precision=args.precision), end="")
    print(f"% {len(kb.rules)} clause(s)", file=sys.stderr)
    return EXIT_OK


def cmd_render(args) -> int:
    kb = _load_theory(args.source, args.format)
    print(render_theory(kb, precision=args.precision), end="")
    return EXIT_OK


def cmd_normalize(args) -> int:
    kb = _load_theory(args.theory, args.format)
    before = len(kb.rules)
    if args.to == "unordered":
        bounds = _load_dataset(args).bounds if args.bounds_from else schema_full_region(kb.schema)
        try:
            kb = ordered_to_unordered(kb, bounds, max_regions=args.max_regions)
        except RegionBudgetExceeded as exc:
            raise _Failure(EXIT_INVALID, f"{exc}; raise the budget with --max-regions") from None
    if args.simplify:
        kb = simplify_knowledge_base(kb)
    if args.merge:
        if kb.ordering != UNORDERED:
            raise _Failure(EXIT_INVALID, "--merge needs an unordered knowledge base (add --to unordered)")
        kb = merge_same_output(kb)
    print(render_theory(kb, precision=args.precision), end="")
    print(f"% rules: {before} -> {len(kb.rules)}", file=sys.stderr)
    return EXIT_OK


def _score_lines(name: str, report) -> str:
    return (f"{name}: rules {report.rules}  performance {report.performance_score:.4f}  "
            f"readability {report.readability_score:.4f}  completeness "
            f"{report.completeness_score:.4f}  composite {report.composite:.4f}"
            + (f"  ({report.note})" if report.note else ""))


def cmd_score(args) -> int:
    kb = _load_theory(args.theory)
    data = _load_dataset(args)
    bb = _load_bb(args.bb, len(data))
    config = _score_config(args)
    try:
        report = score_knowledge_base(kb, data, bb, config)
    except AllUncovered:
        report = uncovered_report(kb, config)
    print(_score_lines(Path(args.theory).name, report))
    if report.evaluation is not None:
        ev = report.evaluation
        print(f"  data: {ev.data}")
        if ev.fidelity is not None:
            print(f"  black box: {ev.fidelity}")
        print(f"  covered {ev.covered} / {ev.covered + ev.uncovered}")
    if args.report:
        _write(args.report, dump_report({"theory": Path(args.theory).name, **report.to_dict()}))
    return EXIT_OK


def cmd_compare(args) -> int:
    if len(args.theories) < 2:
        raise _Failure(EXIT_INVALID, "compare needs at least two theories")
    kbs = [_load_theory(t) for t in args.theories]
    data = _load_dataset(args)
    bb = _load_bb(args.bb, len(data))
    ranked = compare(kbs, data, bb, _score_config(args), names=[Path(t).name for t in args.theories])
    document = []
    for position, entry in enumerate(ranked, start=1):
        if entry.report is None:
            print(f"{position}. {entry.name}: FAILED {entry.error}")
            document.append({"rank": position, "name": entry.name, "error": entry.error})
        else:
            print(f"{position}. " + _score_lines(entry.name, entry.report))
            document.append({"rank": position, "name": entry.name, **entry.report.to_dict()})
    if args.report:
        _write(args.report, dump_report({"ranking": document}))
    return EXIT_OK


def cmd_experiment(args) -> int:
    if not Path(args.config).is_file():
        raise _Failure(EXIT_IO, f"cannot read {args.config}: no such file")
    config = ExperimentConfig.load(args.config)
    changes = {}
    if args.seed is not None:
        changes["split_seed"] = args.seed
    if args.report:
        changes["report"] = Path(args.report)
    if args.grid_export:
        changes["grid_export"] = Path(args.grid_export)
    if args.dataset:
        changes["dataset"] = Path(args.dataset)
    if args.output_column:
        changes["output_column"] = args.output_column
    if args.drop:
        changes["drop"] = tuple(c.strip() for c in args.drop.split(",") if c.strip())
    config = replace(config, **changes)
    if not Path(config.dataset).is_file():
        raise _Failure(EXIT_IO, f"cannot read {config.dataset}: no such file")
    document = run_experiment(config, tuple(args.extractor or ()))
    print(report_table(document), end="")
    if config.report is not None:
        _write(config.report, dump_report(document))
    return EXIT_OK if document["succeeded"] else EXIT_FAILED


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _dataset_flags(p):
    p.add_argument("--dataset", help="CSV file with a header row")
    p.add_argument("--output-column", help="output column (default: last)")
    p.add_argument("--drop", help="comma-separated columns to ignore")


def _score_flags(p):
    _dataset_flags(p)
    p.add_argument("--bb", help="black-box predictions, one number per line, aligned with the dataset")
    p.add_argument("--score-config", help="flat key = value file with score settings")
    p.add_argument("--weights", help="flat key = value file with readability weights")
    p.add_argument("--seed", type=int, help="seed for random completeness sampling")
    p.add_argument("--report", help="write the structured report here")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="skq", description="Quality assessment of extracted symbolic knowledge.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="validate a theory and print it normalized")
    p.add_argument("theory")
    p.add_argument("--precision", type=int, default=6)
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("render", help="convert a tree or table description to a theory")
    p.add_argument("source")
    p.add_argument("--format", choices=("theory", "tree", "table"), default="tree")
    p.add_argument("--precision", type=int, default=6)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("normalize", help="convert, simplify and merge rule lists")
    p.add_argument("theory")
    p.add_argument("--format", choices=("theory", "tree", "table"), default="theory")
    p.add_argument("--to", choices=("ordered", "unordered"))
    p.add_argument("--bounds-from", action="store_true", help="clip regions to the --dataset bounds")
    p.add_argument("--simplify", action="store_true")
    p.add_argument("--merge", action="store_true")
    p.add_argument("--max-regions", type=int, default=DEFAULT_MAX_REGIONS)
    p.add_argument("--precision", type=int, default=6)
    _dataset_flags(p)
    p.set_defaults(func=cmd_normalize)

    p = sub.add_parser("score", help="indicator triple and composite score of one theory")
    p.add_argument("theory")
    _score_flags(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("compare", help="rank theories by composite score")
    p.add_argument("theories", nargs="+")
    _score_flags(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("experiment", help="run a configured extraction experiment")
    p.add_argument("config")
    p.add_argument("--seed", type=int, help="override the split seed")
    p.add_argument("--report", help="override the report path")
    p.add_argument("--grid-export", help="override the prediction grid directory")
    p.add_argument("--extractor", action="append", help="run only this row (repeatable)")
    _dataset_flags(p)
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _Failure as exc:
        print(f"skq: {exc}", file=sys.stderr)
        return exc.code
    except OSError as exc:
        print(f"skq: {exc}", file=sys.stderr)
        return EXIT_IO
    except (SkqError, ValueError, KeyError) as exc:
        print(f"skq: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
