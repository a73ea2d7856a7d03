"""Reference black boxes and rule extractors."""

from .blackbox import ForestModel, LinearModel, Predictor, least_squares, train_forest, train_linear
from .cart import cart_extract
from .grid import GridCell, grid_cells, gridex_extract, gridrex_extract
from .params import AdaptiveSplits, ExtractorParams, FixedSplits, parse_splits

__all__ = [
    "AdaptiveSplits", "ExtractorParams", "FixedSplits", "ForestModel", "GridCell", "LinearModel",
    "Predictor", "cart_extract", "grid_cells", "gridex_extract", "gridrex_extract",
    "least_squares", "parse_splits", "train_forest", "train_linear",
]
