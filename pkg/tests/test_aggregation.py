import random
from fractions import Fraction

import pytest

from shelflife.aggregation import AggregateOp, aggregate_judgments
from shelflife.errors import InsufficientDataError
from shelflife.metrics import MetricId, compute_metric
from shelflife.oracle import build_oracle_run

from helpers import make_run, make_set


class TestOperators:
    def test_mean_of_one_and_two(self):
        a = make_set({("t", "d"): 1})
        b = make_set({("t", "d"): 2}, annotator="b")
        merged = aggregate_judgments([a, b], AggregateOp.MEAN)
        assert merged.judgments[("t", "d")] == Fraction(3, 2)
        assert merged.provenance == "aggregate"

    def test_min_and_max(self):
        a = make_set({("t", "d"): 1})
        b = make_set({("t", "d"): 2}, annotator="b")
        assert aggregate_judgments([a, b], AggregateOp.MINIMUM).judgments[("t", "d")] == 1
        assert aggregate_judgments([a, b], AggregateOp.MAXIMUM).judgments[("t", "d")] == 2

    def test_integral_mean_collapses_to_int(self):
        a = make_set({("t", "d"): 1})
        b = make_set({("t", "d"): 3}, annotator="b")
        value = aggregate_judgments([a, b], AggregateOp.MEAN).judgments[("t", "d")]
        assert value == 2 and isinstance(value, int)

    def test_single_input_identity(self):
        a = make_set({("t", "d1"): 1, ("t", "d2"): 3})
        for op in AggregateOp:
            assert aggregate_judgments([a], op).judgments == a.judgments

    def test_missing_judgments_not_implicit_zero(self):
        a = make_set({("t", "d"): 2})
        b = make_set({("t", "other"): 1}, annotator="b")
        merged = aggregate_judgments([a, b], AggregateOp.MINIMUM)
        assert merged.judgments[("t", "d")] == 2  # not min(2, 0)

    def test_empty_input(self):
        with pytest.raises(InsufficientDataError):
            aggregate_judgments([], AggregateOp.MEAN)


class TestInvariants:
    def _random_sets(self, rng):
        keys = [("t", f"d{i}") for i in range(40)]
        sets = []
        for s in range(3):
            judged = {k: rng.randrange(4) for k in keys if rng.random() < 0.7}
            sets.append(make_set(judged, annotator=f"a{s}"))
        return sets

    def test_min_le_mean_le_max_pointwise(self):
        rng = random.Random(41)
        for _ in range(20):
            sets = self._random_sets(rng)
            low = aggregate_judgments(sets, AggregateOp.MINIMUM).judgments
            mid = aggregate_judgments(sets, AggregateOp.MEAN).judgments
            high = aggregate_judgments(sets, AggregateOp.MAXIMUM).judgments
            assert low.keys() == mid.keys() == high.keys()
            for key in low:
                assert low[key] <= mid[key] <= high[key]

    def test_order_independence(self):
        rng = random.Random(43)
        sets = self._random_sets(rng)
        shuffled = list(sets)
        rng.shuffle(shuffled)
        for op in AggregateOp:
            assert (
                aggregate_judgments(sets, op).judgments
                == aggregate_judgments(shuffled, op).judgments
            )

    def test_idempotent_on_singleton_aggregate(self):
        a = make_set({("t", "d"): 1})
        b = make_set({("t", "d"): 2}, annotator="b")
        once = aggregate_judgments([a, b], AggregateOp.MEAN)
        again = aggregate_judgments([once], AggregateOp.MEAN)
        assert again.judgments == once.judgments


class TestDownstreamOrdering:
    def test_mean_grades_order_ideal_ranking(self):
        # three docs at grades 1, 1.5, 2 must rank 2 > 1.5 > 1
        a = make_set({("t", "dx"): 1, ("t", "dy"): 1, ("t", "dz"): 2})
        b = make_set({("t", "dx"): 1, ("t", "dy"): 2, ("t", "dz"): 2}, annotator="b")
        merged = aggregate_judgments([a, b], AggregateOp.MEAN)
        assert merged.judgments[("t", "dy")] == Fraction(3, 2)
        oracle = build_oracle_run(merged, tag="oracle")
        assert oracle.ranking("t") == ["dz", "dy", "dx"]
        run = make_run("s", {"t": ["dz", "dy", "dx"]})
        report = compute_metric(run, merged, MetricId.parse("ndcg@10"))
        assert report.per_topic["t"] == pytest.approx(1.0)
