import math

import numpy as np
import pytest

from boxscout.errors import DimensionError, InvariantError, UnknownClassError
from boxscout.scoring import (
    AggregationMethod,
    ClassCounts,
    ClassDistribution,
    Detection,
    aggregate_image,
    class_weight,
    detection_value,
    margin_1vs2,
    score_image,
)


def dist(*scores):
    return ClassDistribution(tuple(scores))


def det(scores, unknown=False, conf=0.8):
    return Detection(box=(0.5, 0.5, 0.2, 0.2), confidence=conf,
                     dist=dist(*scores), unknown=unknown)


class TestClassDistribution:
    def test_rejects_single_class(self):
        with pytest.raises(DimensionError):
            dist(1.0)

    def test_rejects_negative(self):
        with pytest.raises(InvariantError):
            dist(1.2, -0.2)

    def test_rejects_unnormalized(self):
        with pytest.raises(InvariantError):
            dist(0.6, 0.3)

    def test_accepts_within_tolerance(self):
        dist(0.5, 0.5 + 5e-7)


class TestMargin:
    def test_tied_top_two_is_one(self):
        assert margin_1vs2(dist(0.5, 0.5)) == 1.0

    def test_one_hot_is_zero(self):
        assert margin_1vs2(dist(1.0, 0.0, 0.0)) == 0.0

    def test_hand_value(self):
        assert margin_1vs2(dist(0.6, 0.3, 0.1)) == pytest.approx(0.49, abs=1e-12)

    def test_range_and_permutation_invariance(self):
        rng = np.random.default_rng(42)
        for _ in range(1000):
            k = int(rng.integers(2, 12))
            raw = rng.dirichlet(np.ones(k))
            d = ClassDistribution(tuple(raw))
            m = margin_1vs2(d)
            assert 0.0 <= m <= 1.0
            perm = tuple(raw[rng.permutation(k)])
            assert margin_1vs2(ClassDistribution(perm)) == pytest.approx(m, abs=1e-12)

    def test_zero_iff_full_separation(self):
        assert margin_1vs2(dist(0.0, 1.0)) == 0.0
        assert margin_1vs2(dist(0.999, 0.001)) > 0.0


class TestClassWeight:
    def test_uniform_prior(self):
        counts = ClassCounts({}, num_classes=20)
        for name in ("a", "b", "zzz"):
            assert class_weight(counts, name) == 20.0

    def test_hand_values(self):
        counts = ClassCounts({"cow": 4, "other": 96}, num_classes=20)
        assert class_weight(counts, "cow") == 24.0
        counts = ClassCounts({"cow": 99, "other": 1}, num_classes=20)
        assert class_weight(counts, "cow") == pytest.approx(1.2)

    def test_strictly_decreasing_in_count(self):
        weights = []
        for n in range(0, 30):
            counts = ClassCounts({"c": n, "pad": 50 - n}, num_classes=5)
            weights.append(class_weight(counts, "c"))
        assert all(a > b for a, b in zip(weights, weights[1:]))

    def test_unknown_class_rejected(self):
        counts = ClassCounts({"a": 1, "b": 1}, num_classes=2)
        with pytest.raises(UnknownClassError):
            class_weight(counts, "nope", class_list=["a", "b"])


class TestDetectionValue:
    def test_unweighted_is_margin(self):
        counts = ClassCounts({}, num_classes=3)
        assert detection_value(det([0.6, 0.3, 0.1]), counts, weighted=False) \
            == pytest.approx(0.49)

    def test_weighted_composition(self):
        counts = ClassCounts({"a": 4, "b": 96}, num_classes=20)
        value = detection_value(det([0.6, 0.3, 0.1]), counts, weighted=True,
                                class_list=["a", "b", "c"])
        assert value == pytest.approx(24.0 * 0.49)

    def test_one_hot_zero_regardless_of_weight(self):
        counts = ClassCounts({"a": 0}, num_classes=20)
        assert detection_value(det([1.0, 0.0]), counts, weighted=True,
                               class_list=["a", "b"]) == 0.0

    def test_argmax_tie_breaks_to_lowest_index(self):
        counts = ClassCounts({"a": 9, "b": 0}, num_classes=2)
        value = detection_value(det([0.5, 0.5]), counts, weighted=True,
                                class_list=["a", "b"])
        # weight of "a" (the lower index) is (9+2)/10, not (9+2)/1
        assert value == pytest.approx((9 + 2) / 10 * 1.0)

    def test_weight_factors_out(self):
        rng = np.random.default_rng(3)
        counts = ClassCounts({"a": 3, "b": 11, "c": 7}, num_classes=3)
        for _ in range(50):
            raw = rng.dirichlet(np.ones(3))
            d = det(tuple(raw))
            plain = detection_value(d, counts, weighted=False)
            weighted = detection_value(d, counts, weighted=True,
                                       class_list=["a", "b", "c"])
            arg = int(np.argmax(raw))
            w = class_weight(counts, ["a", "b", "c"][arg])
            assert weighted == pytest.approx(w * plain, rel=1e-12)


class TestAggregation:
    def test_empty_is_zero_for_all_methods(self):
        for kind in ("sum", "avg", "max"):
            assert aggregate_image([], AggregationMethod(kind)) == 0.0

    def test_single_value_identity(self):
        for kind in ("sum", "avg", "max"):
            assert aggregate_image([0.49], AggregationMethod(kind)) == 0.49

    def test_hand_values(self):
        values = [0.49, 0.25, 0.01]
        assert aggregate_image(values, AggregationMethod("sum")) == pytest.approx(0.75)
        assert aggregate_image(values, AggregationMethod("avg")) == pytest.approx(0.25)
        assert aggregate_image(values, AggregationMethod("max")) == pytest.approx(0.49)

    def test_permutation_invariance_and_ordering(self):
        rng = np.random.default_rng(7)
        for _ in range(300):
            values = list(rng.random(int(rng.integers(1, 9))))
            perm = [values[i] for i in rng.permutation(len(values))]
            for kind in ("sum", "avg", "max"):
                method = AggregationMethod(kind)
                assert aggregate_image(values, method) == \
                    pytest.approx(aggregate_image(perm, method))
            s = aggregate_image(values, AggregationMethod("sum"))
            a = aggregate_image(values, AggregationMethod("avg"))
            m = aggregate_image(values, AggregationMethod("max"))
            assert min(values) <= a + 1e-12
            assert a <= m + 1e-12 <= s + 1e-12

    def test_sum_monotone_under_append(self):
        rng = np.random.default_rng(11)
        values = list(rng.random(5))
        base = aggregate_image(values, AggregationMethod("sum"))
        assert aggregate_image(values + [0.3], AggregationMethod("sum")) >= base

    def test_unknown_kind_rejected(self):
        with pytest.raises(InvariantError):
            AggregationMethod("median")


class TestScoreImage:
    def test_no_detections_zero(self):
        counts = ClassCounts({}, num_classes=3)
        assert score_image([], counts, AggregationMethod("sum")) == 0.0

    def test_two_detection_example(self):
        counts = ClassCounts({}, num_classes=3)
        dets = [det([0.5, 0.5, 0.0]), det([1.0, 0.0, 0.0])]
        assert score_image(dets, counts, AggregationMethod("sum")) == pytest.approx(1.0)
        assert score_image(dets, counts, AggregationMethod("max")) == pytest.approx(1.0)
        assert score_image(dets, counts, AggregationMethod("avg")) == pytest.approx(0.5)

    def test_unknown_detections_skippable(self):
        counts = ClassCounts({}, num_classes=2)
        dets = [det([0.5, 0.5], unknown=True), det([0.9, 0.1])]
        full = score_image(dets, counts, AggregationMethod("sum"))
        without = score_image(dets, counts, AggregationMethod("sum"),
                              include_unknown=False)
        assert full == pytest.approx(1.0 + margin_1vs2(dist(0.9, 0.1)))
        assert without == pytest.approx(margin_1vs2(dist(0.9, 0.1)))


class TestDetectionInvariants:
    def test_box_must_stay_in_unit_square(self):
        with pytest.raises(InvariantError):
            Detection(box=(0.95, 0.5, 0.2, 0.2), confidence=0.5,
                      dist=dist(0.5, 0.5))

    def test_confidence_range(self):
        with pytest.raises(InvariantError):
            Detection(box=(0.5, 0.5, 0.2, 0.2), confidence=1.5,
                      dist=dist(0.5, 0.5))


def test_margin_boundary_characterization():
    # 0 exactly when top1 - top2 == 1, 1 exactly when top1 == top2
    assert margin_1vs2(dist(1.0, 0.0)) == 0.0
    assert margin_1vs2(dist(0.25, 0.25, 0.25, 0.25)) == 1.0
    m = margin_1vs2(dist(0.7, 0.2, 0.1))
    assert 0.0 < m < 1.0 and math.isclose(m, (1 - 0.5) ** 2)
