import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from skq.errors import AllUncovered, SampleBudgetExceeded, SchemaError, ZeroVariance
from skq.evaluation import (
    ACCURACY, F1, MAE, MSE, R2, SKIP, WORST, Dataset, ScoreConfig, compare, compute_metric,
    dataset_coverage, evaluate, load_dataset, quality_score, sampled_coverage,
    score_knowledge_base, write_dataset,
)
from skq.model import (
    CATEGORICAL, UNORDERED, Comparison, ConstantClass, ConstantValue, Feature, FeatureSchema,
    KnowledgeBase, Rule,
)
from skq.readability import WeightConfig
from skq.regions import Region, Span

import oracles
from conftest import uniform_dataset

XY = FeatureSchema.continuous(("X", "Y"), "Z")
UNIT = Region({"X": Span(0, 1, True, True), "Y": Span(0, 1, True, True)})


def half_kb():
    return KnowledgeBase(XY, (Rule((Comparison("X", "<=", 0.5),), ConstantValue(1.0)),), UNORDERED)


def full_kb():
    return KnowledgeBase(XY, (Rule((Comparison("X", "<=", 0.5),), ConstantValue(1.0)),
                              Rule((Comparison("X", ">", 0.5),), ConstantValue(2.0))), UNORDERED)


class TestMetricTruths:
    # (predictions, targets, MAE, MSE, R2), all worked out by hand
    CASES = [
        ((1, 2, 4), (1, 2, 3), 1 / 3, 1 / 3, 0.5),
        ((0.5, 0.5, 0.5, 0.5), (0, 0, 1, 1), 0.5, 0.25, 0.0),
        ((3, 3, 3), (2, 4, 6), 5 / 3, 11 / 3, -0.375),
        ((1, 2, 3, 4), (1, 2, 3, 4), 0.0, 0.0, 1.0),
        ((-1, 1), (1, -1), 2.0, 4.0, -3.0),
    ]

    @pytest.mark.parametrize("pred,true,mae,mse,r2", CASES)
    def test_regression(self, pred, true, mae, mse, r2):
        assert abs(compute_metric(pred, true, MAE) - mae) <= 1e-12
        assert abs(compute_metric(pred, true, MSE) - mse) <= 1e-12
        assert abs(compute_metric(pred, true, R2) - r2) <= 1e-12
        assert abs(oracles.mae(pred, true) - mae) <= 1e-12

    def test_mean_predictor_has_zero_r2(self):
        y = np.array([0.3, 1.7, -2.0, 5.5, 0.25])
        assert abs(compute_metric(np.full(5, y.mean()), y, R2)) <= 1e-12

    def test_classification(self):
        pred, true = ("a", "a", "b", "b"), ("a", "b", "b", "b")
        assert compute_metric(pred, true, ACCURACY) == 0.75
        # class a: 2/3, class b: 4/5
        assert abs(compute_metric(pred, true, F1) - 11 / 15) <= 1e-12

    def test_skip_ignores_uncovered(self):
        assert compute_metric((1.0, None, 3.0), (1.0, 100.0, 4.0), MAE, SKIP) == 0.5

    def test_worst_uses_farther_extreme(self):
        # the uncovered target 2 is 2 away from 0 and 1 away from 3, so 0 stands in
        assert compute_metric((0.0, math.nan, 3.0), (0.0, 2.0, 3.0), MAE, WORST) == pytest.approx(2 / 3)

    def test_worst_classification_is_a_miss(self):
        assert compute_metric(("a", None), ("a", "b"), ACCURACY, WORST) == 0.5

    def test_all_uncovered(self):
        with pytest.raises(AllUncovered):
            compute_metric((None, None), (1.0, 2.0), MAE)

    def test_constant_targets(self):
        with pytest.raises(ZeroVariance):
            compute_metric((1.0, 2.0), (1.0, 1.0), R2)


class TestEvaluate:
    def test_data_and_fidelity(self):
        data = uniform_dataset(XY, 200, 1, 0, 1, target=lambda c: np.where(c["X"] <= 0.5, 1.0, 2.0))
        report = evaluate(full_kb(), data, np.where(data.columns["X"] <= 0.5, 1.0, 2.5))
        assert report.data[MAE] == 0.0 and report.data[R2] == 1.0
        assert report.fidelity[MAE] > 0
        assert report.coverage == 1.0

    def test_zero_variance_reported_as_none(self):
        data = uniform_dataset(XY, 20, 1, 0, 1)
        assert evaluate(full_kb(), data).data[R2] is None

    def test_misaligned_blackbox(self):
        data = uniform_dataset(XY, 20, 1, 0, 1)
        with pytest.raises(ValueError):
            evaluate(full_kb(), data, np.zeros(3))

    def test_incompatible_schema(self):
        other = FeatureSchema.continuous(("A", "B"), "Z")
        with pytest.raises(SchemaError):
            evaluate(full_kb(), uniform_dataset(other, 5, 0))


class TestCoverage:
    def test_exhaustive_is_complete(self):
        data = uniform_dataset(XY, 300, 2, 0, 1)
        assert dataset_coverage(full_kb(), data) == 1.0
        assert sampled_coverage(full_kb(), UNIT, "grid", k=25) == 1.0

    def test_half_interval_grid(self):
        assert sampled_coverage(half_kb(), UNIT, "grid", k=101) == 51 / 101

    def test_random_reproducible_per_seed(self):
        a = sampled_coverage(half_kb(), UNIT, "random", n=5000, seed=3)
        b = sampled_coverage(half_kb(), UNIT, "random", n=5000, seed=3)
        assert repr(a) == repr(b)
        assert abs(a - 0.5) < 0.05

    def test_grid_budget(self):
        names = tuple(f"F{i}" for i in range(8))
        kb = KnowledgeBase(FeatureSchema.continuous(names, "Z"), (Rule((), ConstantValue(0.0)),))
        bounds = Region({n: Span(0, 1, True, True) for n in names})
        with pytest.raises(SampleBudgetExceeded):
            sampled_coverage(kb, bounds, "grid", k=10)

    def test_categorical_grid(self):
        schema = FeatureSchema((Feature("C", CATEGORICAL), Feature("X")), Feature("Z"))
        kb = KnowledgeBase(schema, (Rule((Comparison("C", "=", "a"),), ConstantValue(1.0)),))
        from skq.regions import Categories
        bounds = Region({"C": Categories(frozenset({"a", "b", "c", "d"})), "X": Span(0, 1, True, True)})
        assert sampled_coverage(kb, bounds, "grid", k=5) == 0.25


class TestComposite:
    def test_product(self):
        report = quality_score(0.5, 0.8, 0.25, ScoreConfig(a=2, b=1, c=0.5))
        assert report.composite == pytest.approx(0.25 * 0.8 * 0.5)

    def test_bad_indicator(self):
        with pytest.raises(ValueError):
            quality_score(1.5, 1, 1)

    @settings(max_examples=400, deadline=None)
    @given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1),
           st.floats(0.1, 3), st.floats(0.1, 3), st.floats(0.1, 3), st.integers(0, 3))
    def test_composite_formula_and_zero(self, p, r, c, a, b, cc, zero):
        values = [p, r, c]
        if zero < 3:
            values[zero] = 0.0
        report = quality_score(*values, ScoreConfig(a=a, b=b, c=cc))
        assert report.composite == pytest.approx(values[0] ** a * values[1] ** b * values[2] ** cc)
        if zero < 3:
            assert report.composite == 0.0

    def test_score_uses_fidelity_when_given(self):
        data = uniform_dataset(XY, 200, 4, 0, 1, target=lambda c: c["X"])
        bb = np.where(data.columns["X"] <= 0.5, 1.0, 2.0)
        report = score_knowledge_base(full_kb(), data, bb)
        assert report.performance_score == 1.0
        assert report.completeness_score == 1.0

    def test_config_from_mapping(self):
        cfg = ScoreConfig.from_mapping({"a": "2", "completeness": "grid", "weights.rho": "4"})
        assert cfg.a == 2.0 and cfg.completeness == "grid" and cfg.weights.rho == 4.0
        with pytest.raises(KeyError):
            ScoreConfig.from_mapping({"zeta": "1"})


class TestCompare:
    def _data(self):
        return uniform_dataset(XY, 200, 5, 0, 1, target=lambda c: np.where(c["X"] <= 0.5, 1.0, 2.0))

    def test_better_knowledge_ranks_first(self):
        coarse = KnowledgeBase(XY, (Rule((), ConstantValue(1.5)),))
        ranked = compare([coarse, full_kb()], self._data(), names=["coarse", "full"])
        assert [e.name for e in ranked] == ["full", "coarse"]

    def test_failures_listed_last(self):
        bad = KnowledgeBase(FeatureSchema.continuous(("A",), "Z"), (Rule((), ConstantValue(0.0)),))
        ranked = compare([bad, full_kb()], self._data(), names=["bad", "good"])
        assert ranked[0].name == "good" and ranked[1].report is None and "SchemaError" in ranked[1].error

    @settings(max_examples=200, deadline=None)
    @given(st.floats(0.01, 100), st.lists(st.integers(0, 3), min_size=2, max_size=4))
    def test_ranking_invariant_under_weight_scaling(self, factor, picks):
        data = self._data()
        pool = [full_kb(), half_kb(), KnowledgeBase(XY, (Rule((), ConstantValue(1.5)),)),
                KnowledgeBase(XY, (Rule((Comparison("X", "<=", 0.5), Comparison("Y", ">", 0.1)),
                                        ConstantValue(1.0)), Rule((), ConstantValue(2.0))))]
        kbs = [pool[i] for i in picks]
        base = ScoreConfig(completeness="dataset")
        scaled = ScoreConfig(completeness="dataset", weights=WeightConfig().scaled(factor, include_rho=True))
        assert [e.index for e in compare(kbs, data, None, base)] == \
            [e.index for e in compare(kbs, data, None, scaled)]


class TestDatasets:
    def test_csv_round_trip(self, tmp_path):
        data = uniform_dataset(XY, 30, 6, target=lambda c: c["X"] + c["Y"])
        path = tmp_path / "d.csv"
        write_dataset(data, path)
        again = load_dataset(path)
        assert again.schema.input_names == ("X", "Y")
        assert np.array_equal(again.targets, data.targets)
        assert again.schema.functor == "z"

    def test_categorical_detection_and_drop(self, tmp_path):
        path = tmp_path / "c.csv"
        path.write_text("id,C,X,Out\n1,red,0.5,yes\n2,blue,1.5,no\n")
        data = load_dataset(path, drop=("id",))
        assert data.schema.kind("C") == CATEGORICAL
        assert data.schema.output.kind == CATEGORICAL
        assert "id" not in data.schema.input_names

    def test_ragged_rows(self, tmp_path):
        path = tmp_path / "r.csv"
        path.write_text("X,Y\n1,2\n3\n")
        with pytest.raises(SchemaError):
            load_dataset(path)

    def test_split_is_seeded_partition(self):
        data = uniform_dataset(XY, 101, 7, target=lambda c: np.arange(101.0))
        train, test = data.split(0.8, seed=2)
        assert len(train) == 81 and len(test) == 20
        assert sorted(train.targets.tolist() + test.targets.tolist()) == list(range(101))
        again, _ = data.split(0.8, seed=2)
        assert np.array_equal(again.targets, train.targets)

    def test_bounds(self):
        data = uniform_dataset(XY, 50, 8)
        span = data.bounds.dims["X"]
        assert span.low == data.columns["X"].min() and span.high_closed
