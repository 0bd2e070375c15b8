import numpy as np
import pytest

from vehiclepipe.errors import ValidationError
from vehiclepipe.features import OTHER, PASSENGER
from vehiclepipe.fusion import SOURCE_ORIGINAL, SOURCE_TRANSFORMED, ConfidenceTable, fuse


def table(po, pt):
    return ConfidenceTable(
        passenger_original=po,
        other_original=1.0 - po,
        passenger_transformed=pt,
        other_transformed=1.0 - pt,
    )


class TestConfidenceTable:
    def test_out_of_range_rejected(self):
        with pytest.raises(ValidationError):
            ConfidenceTable(1.2, -0.2, 0.5, 0.5)

    def test_source_must_sum_to_one(self):
        with pytest.raises(ValidationError):
            ConfidenceTable(0.6, 0.6, 0.5, 0.5)

    def test_sum_tolerance(self):
        ConfidenceTable(0.6, 0.4 + 5e-10, 0.5, 0.5)


class TestFuse:
    def test_transformed_other_wins(self):
        t = table(po=0.6, pt=0.3)
        assert fuse(t) == (OTHER, SOURCE_TRANSFORMED)  # 0.7 is the max entry

    def test_all_equal_tie_break(self):
        assert fuse(table(0.5, 0.5)) == (PASSENGER, SOURCE_ORIGINAL)

    def test_certain_original_passenger(self):
        assert fuse(table(po=1.0, pt=0.4)) == (PASSENGER, SOURCE_ORIGINAL)

    def test_source_tie_prefers_original(self):
        # (other, original) and (passenger, transformed) both at 0.7.
        t = table(po=0.3, pt=0.7)
        assert fuse(t) == (OTHER, SOURCE_ORIGINAL)

    def test_returns_global_max_on_random_tables(self):
        rng = np.random.default_rng(21)
        for _ in range(1000):
            t = table(po=float(rng.random()), pt=float(rng.random()))
            label, source = fuse(t)
            entries = {
                (PASSENGER, SOURCE_ORIGINAL): t.passenger_original,
                (OTHER, SOURCE_ORIGINAL): t.other_original,
                (PASSENGER, SOURCE_TRANSFORMED): t.passenger_transformed,
                (OTHER, SOURCE_TRANSFORMED): t.other_transformed,
            }
            assert entries[(label, source)] == max(entries.values())

    def test_global_argmax_agrees_with_per_class_max_reading(self):
        rng = np.random.default_rng(22)
        for _ in range(1000):
            t = table(po=float(rng.random()), pt=float(rng.random()))
            label, _ = fuse(t)
            per_class = {
                PASSENGER: max(t.passenger_original, t.passenger_transformed),
                OTHER: max(t.other_original, t.other_transformed),
            }
            expected = PASSENGER if per_class[PASSENGER] >= per_class[OTHER] else OTHER
            assert label == expected
