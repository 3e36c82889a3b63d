"""Subset ledgers, pair classification and major-factor selection."""

import numpy as np
import pytest

from ceda.genlab import GeneratorSpec, sample
from ceda.protocol import (
    ProtocolConfig,
    SubsetEvaluator,
    build_ledger,
    classify_subset,
    enumerate_subsets,
    ledger_to_tsv,
    mi_grid,
    sce_star_drop,
    select_major_factors,
)
from ceda.tabulate import CategoricalSeries
from conftest import binned


@pytest.fixture(scope="module")
def additive_sine_setup():
    """Categorized additive-plus-sine study: X1 real, (X2,X3) interacting, X4 noise."""
    data = sample(GeneratorSpec("ex4", 10_000, seed=1))
    y = binned(data["Y"], 10)
    cov = {f: binned(data[f], 10) for f in ("X1", "X2", "X3", "X4")}
    return cov, y


@pytest.fixture(scope="module")
def additive_sine_evaluator(additive_sine_setup):
    cov, y = additive_sine_setup
    return SubsetEvaluator(cov, y, ProtocolConfig(max_order=2, seed=1))


class TestEnumerateSubsets:
    def test_four_features_full_depth(self):
        assert len(enumerate_subsets(list("abcd"), 4)) == 15

    def test_ten_features_pairs(self):
        assert len(enumerate_subsets([f"X{i}" for i in range(10)], 2)) == 55

    def test_ten_features_depth_six(self):
        assert len(enumerate_subsets([f"X{i}" for i in range(10)], 6)) == 847

    def test_size_then_lexicographic_order(self):
        subsets = enumerate_subsets(["a", "b", "c"], 2)
        assert subsets == [("a",), ("b",), ("c",), ("a", "b"), ("a", "c"), ("b", "c")]

    def test_bad_depth_rejected(self):
        with pytest.raises(ValueError):
            enumerate_subsets(["a"], 0)
        with pytest.raises(ValueError):
            enumerate_subsets(["a"], 2)


class TestBuildLedger:
    def test_singleton_conditional_entropy_level(self, additive_sine_setup):
        cov, y = additive_sine_setup
        ledger = build_ledger(cov, y, 1, ProtocolConfig(max_order=1, seed=1, replicates=300))
        by_subset = {e.subset: e for e in ledger}
        assert by_subset[("X1",)].ce == pytest.approx(2.2315, abs=0.02)
        assert by_subset[("X1",)].ce_drop == pytest.approx(0.2322, abs=0.03)

    def test_pair_successive_drop_dominates_parts(self, additive_sine_setup):
        cov, y = additive_sine_setup
        ledger = build_ledger(cov, y, 2, ProtocolConfig(max_order=2, seed=1, replicates=300))
        by_subset = {e.subset: e for e in ledger}
        pair = by_subset[("X2", "X3")]
        assert pair.sce_drop == pytest.approx(0.7781, abs=0.05)
        part = max(by_subset[("X2",)].ce_drop, by_subset[("X3",)].ce_drop)
        assert pair.sce_drop > 5 * abs(part)

    def test_singleton_sce_equals_ce_drop(self, additive_sine_setup):
        cov, y = additive_sine_setup
        ledger = build_ledger(cov, y, 1, ProtocolConfig(max_order=1, seed=1, replicates=300))
        for e in ledger:
            assert e.sce_drop == e.ce_drop

    def test_sorted_by_ce_within_order(self, additive_sine_setup):
        cov, y = additive_sine_setup
        ledger = build_ledger(cov, y, 2, ProtocolConfig(max_order=2, seed=1, replicates=200))
        for order in (1, 2):
            ces = [e.ce for e in ledger if e.order == order and np.isfinite(e.ce)]
            assert ces == sorted(ces)

    def test_pair_sce_drop_non_negative(self, additive_sine_setup):
        cov, y = additive_sine_setup
        ledger = build_ledger(cov, y, 2, ProtocolConfig(max_order=2, seed=1, replicates=200))
        for e in ledger:
            if e.order >= 2:
                assert e.sce_drop >= -1e-12

    def test_independent_of_feature_enumeration_order(self, additive_sine_setup):
        cov, y = additive_sine_setup
        cfg = ProtocolConfig(max_order=2, seed=1, replicates=200)
        forward = build_ledger(dict(cov), y, 2, cfg)
        reversed_cov = dict(reversed(list(cov.items())))
        backward = build_ledger(reversed_cov, y, 2, cfg)
        assert [e.subset for e in forward] == [e.subset for e in backward]
        assert [e.ce for e in forward] == [e.ce for e in backward]

    def test_cell_budget_marks_subset_unreliable(self, additive_sine_setup):
        cov, y = additive_sine_setup
        cfg = ProtocolConfig(max_order=2, seed=1, replicates=200, cell_budget=500)
        ledger = build_ledger(cov, y, 2, cfg)
        pairs = [e for e in ledger if e.order == 2]
        assert pairs and all(not e.reliable for e in pairs)
        assert all(np.isnan(e.ce) for e in pairs)

    def test_thread_count_does_not_change_results(self, additive_sine_setup):
        cov, y = additive_sine_setup
        one = build_ledger(cov, y, 2, ProtocolConfig(max_order=2, seed=1, replicates=200, threads=1))
        four = build_ledger(cov, y, 2, ProtocolConfig(max_order=2, seed=1, replicates=200, threads=4))
        assert [(e.subset, e.ce, e.ce_drop) for e in one] == [
            (e.subset, e.ce, e.ce_drop) for e in four
        ]

    def test_tsv_layout(self, additive_sine_setup):
        cov, y = additive_sine_setup
        ledger = build_ledger(cov, y, 1, ProtocolConfig(max_order=1, seed=1, replicates=200))
        text = ledger_to_tsv(ledger)
        header = text.splitlines()[0].split("\t")
        assert header == [
            "order", "subset", "ce", "ce_drop", "sce_drop",
            "sce_star_drop", "rows", "avg_cell", "c1_status",
        ]


class TestSceStarDrop:
    def test_noise_partner_adds_nothing(self, additive_sine_evaluator):
        drop, synthetic = sce_star_drop(additive_sine_evaluator, ("X1", "X2"), "X2")
        assert abs(drop) < 0.02
        assert synthetic  # no designated noise pool configured

    def test_real_factor_drop_at_matched_dimension(self, additive_sine_evaluator):
        ev = additive_sine_evaluator
        benchmark = ev.ce(("X4",)) - ev.ce(("X2", "X4"))
        assert benchmark == pytest.approx(0.0777, abs=0.03)
        drop, _ = sce_star_drop(ev, ("X1", "X4"), "X1")
        assert drop > 2 * abs(benchmark)

    def test_feature_must_belong_to_subset(self, additive_sine_evaluator):
        with pytest.raises(ValueError):
            sce_star_drop(additive_sine_evaluator, ("X1", "X2"), "X3")


class TestClassifySubset:
    def test_hidden_pair_classified_as_interaction(self, additive_sine_evaluator):
        cfg = ProtocolConfig(max_order=2, seed=1)
        analysis = classify_subset(additive_sine_evaluator, ("X2", "X3"), cfg)
        assert analysis.classification == "interaction"
        assert analysis.ratio > 10

    def test_tiny_sample_pair_is_dimension_undetermined(self):
        data = sample(GeneratorSpec("ex4", 600, seed=2))
        y = binned(data["Y"], 10)
        cov = {f: binned(data[f], 10) for f in ("X1", "X2")}
        cfg = ProtocolConfig(max_order=2, seed=2, replicates=100)
        ev = SubsetEvaluator(cov, y, cfg)
        analysis = classify_subset(ev, ("X1", "X2"), cfg)
        assert analysis.classification == "undetermined (dimension)"


class TestSelectMajorFactors:
    def test_additive_sine_study_selection(self, additive_sine_setup):
        cov, y = additive_sine_setup
        report = select_major_factors(cov, y, ProtocolConfig(max_order=2, seed=1))
        assert report.confirmed == [
            (("X1",), 1, "order-1 major factor"),
            (("X2", "X3"), 2, "order-2 major factor (interaction)"),
        ]
        assert report.chief_collection == ("X1",)
        excluded = {s for s, _ in report.excluded}
        assert ("X4",) in excluded

    def test_all_noise_covariates_give_empty_report(self):
        rng = np.random.default_rng(21)
        n = 5000
        y = binned(rng.standard_normal(n), 10)
        cov = {f"Z{i}": binned(rng.random(n), 10) for i in range(3)}
        report = select_major_factors(cov, y, ProtocolConfig(max_order=2, seed=3))
        assert report.confirmed == []
        assert report.chief_collection == ()

    def test_non_coexistent_composite_feature_forms_alternative(self):
        data = sample(GeneratorSpec("ex6", 50_000, seed=1))
        y = binned(data["Y"], 10)
        cov = {f"X{i}": binned(data[f"X{i}"], 10) for i in range(1, 11)}
        cfg = ProtocolConfig(
            max_order=2, seed=1, noise_features=("X7", "X8", "X9", "X10")
        )
        report = select_major_factors(cov, y, cfg)
        assert report.chief_collection == ("X1", "X2", "X3")
        assert ("X4", "X5", "X6") in report.alternative_collections
        classes = {p.pair: p.classification for p in report.pair_analyses}
        assert classes[("X1", "X6")] == "non_coexistent"
        assert classes[("X1", "X2")] == "ecological"


class TestMiGrid:
    def test_mid_correlation_cell_level_and_verdict(self):
        data = sample(GeneratorSpec("ex3_rho", 20_000, seed=1))
        cells = mi_grid(data["Y"], data["X"], [12], [12], n_replicates=500, seed=1)
        assert len(cells) == 1
        assert cells[0].report.mutual_info == pytest.approx(0.1478, abs=0.02)
        assert cells[0].verdict.status == "confirmed"

    def test_empty_ladder_rejected(self):
        with pytest.raises(ValueError):
            mi_grid(np.arange(100.0), np.arange(100.0), [], [12])

    def test_grid_shape_and_ordering(self):
        rng = np.random.default_rng(22)
        y, x = rng.standard_normal(2000), rng.standard_normal(2000)
        cells = mi_grid(y, x, [4, 6], [3, 5], n_replicates=100, seed=2)
        assert [(c.y_bins, c.x_bins) for c in cells] == [
            (4, 3), (4, 5), (6, 3), (6, 5)
        ]

    def test_threads_do_not_change_output(self):
        rng = np.random.default_rng(23)
        y, x = rng.standard_normal(3000), rng.standard_normal(3000)
        ladders = ([6, 10], [6, 10])
        one = mi_grid(y, x, *ladders, n_replicates=200, seed=3, threads=1)
        many = mi_grid(y, x, *ladders, n_replicates=200, seed=3, threads=8)
        assert [
            (c.report.mutual_info, c.band.mean, c.verdict.status) for c in one
        ] == [(c.report.mutual_info, c.band.mean, c.verdict.status) for c in many]
