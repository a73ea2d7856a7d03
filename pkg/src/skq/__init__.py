"""Quality indicators for symbolic knowledge extracted from opaque predictors.

Rule-list model and theory parser, normalization between knowledge shapes,
readability, performance/fidelity and completeness scoring, reference black
boxes and extractors, and an experiment pipeline.
"""

from .errors import *  # noqa: F401,F403
from .evaluation import (
    Dataset, QualityReport, ScoreConfig, compare, compute_metric, dataset_coverage, evaluate,
    load_dataset, quality_score, sampled_coverage, score_knowledge_base,
)
from .model import (
    Comparison, ConstantClass, ConstantValue, Feature, FeatureSchema, Fuzzy, FuzzyTable, Interval,
    KnowledgeBase, LinearExpr, MOfN, Oblique, Rule, SetMembership, Trapezoid, predict, predict_batch,
)
from .normalize import (
    merge_same_output, ordered_to_unordered, simplify_knowledge_base, simplify_rule, tree_to_rules,
)
from .parser import parse_theory, render_theory
from .readability import WeightConfig, complexity_report, expanded_readability_score, readability_score

__version__ = "0.1.0"
