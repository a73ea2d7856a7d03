"""Pedagogical CART: a tree fitted to black-box relabels, read off as rules."""

from __future__ import annotations

from ..errors import SchemaError
from ..evaluation import Dataset
from ..model import CONTINUOUS, Comparison, ConstantClass, ConstantValue, KnowledgeBase
from ..normalize import Leaf, Split, tree_to_rules
from .blackbox import Predictor
from .params import ExtractorParams
from .trees import CLASSIFICATION, REGRESSION, Tree, fit_tree


def tree_to_node(tree: Tree, names, regression: bool, i: int = 0):
    """The fitted arrays as ``Split``/``Leaf`` nodes (``x <= t`` on the true branch)."""
    if tree.feature[i] < 0:
        value = tree.value[i]
        return Leaf(ConstantValue(float(value)) if regression else ConstantClass(str(value)))
    lit = Comparison(names[tree.feature[i]], "<=", float(tree.threshold[i]))
    return Split(lit, tree_to_node(tree, names, regression, tree.left[i]),
                 tree_to_node(tree, names, regression, tree.right[i]))


def fit_cart(bb: Predictor | None, dataset: Dataset, params: ExtractorParams) -> Tree:
    if params.max_leaves is None and params.max_depth is None:
        raise ValueError("CART needs max_leaves or max_depth")
    if params.max_leaves is not None and params.max_leaves < 2 and params.max_depth is None:
        raise ValueError("CART needs max_leaves >= 2 or a depth bound")
    if any(f.kind != CONTINUOUS for f in dataset.schema.inputs):
        raise SchemaError("CART extraction needs continuous inputs")
    targets = bb.predict_dataset(dataset) if bb is not None else dataset.targets
    task = REGRESSION if dataset.schema.output.kind == CONTINUOUS else CLASSIFICATION
    return fit_tree(dataset.matrix(), targets, task, max_depth=params.max_depth,
                    max_leaves=params.max_leaves)


def cart_extract(bb: Predictor | None, dataset: Dataset, params: ExtractorParams) -> KnowledgeBase:
    """One rule per leaf of a tree grown on the black box's outputs.

    Identical outputs give a single-leaf tree and hence a one-rule base.
    ``bb=None`` fits the dataset targets directly.
    """
    tree = fit_cart(bb, dataset, params)
    node = tree_to_node(tree, dataset.schema.input_names,
                        dataset.schema.output.kind == CONTINUOUS)
    return tree_to_rules(node, dataset.schema, provenance=f"cart, {params.describe()}")
