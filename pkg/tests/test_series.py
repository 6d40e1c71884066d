import datetime as dt

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from trendcast.errors import (
    DegenerateRange,
    DuplicateDate,
    EmptyIntersection,
    NonFiniteValue,
    RegionMismatch,
    SeriesTooShort,
)
from trendcast.series import (
    align,
    difference,
    from_points,
    moving_average,
    normalize_0_100,
)

from conftest import days, make_series

D = days(10)


class TestFromPoints:
    def test_singleton(self):
        ts = from_points("s", "CA", [(D[0], 1.0)])
        assert len(ts) == 1 and ts.values[0] == 1.0

    def test_sorts_by_date(self):
        ts = from_points("s", "CA", [(D[1], 5.0), (D[0], 3.0)])
        assert list(ts.values) == [3.0, 5.0]
        assert ts.dates == (D[0], D[1])

    def test_duplicate_date(self):
        with pytest.raises(DuplicateDate):
            from_points("s", "CA", [(D[0], 3.0), (D[0], 4.0)])

    def test_non_finite(self):
        with pytest.raises(NonFiniteValue):
            from_points("s", "CA", [(D[0], float("nan"))])

    def test_empty(self):
        with pytest.raises(SeriesTooShort):
            from_points("s", "CA", [])


class TestNormalize:
    def test_already_spanning(self):
        out = normalize_0_100(make_series([0.0, 50.0, 100.0]))
        assert np.allclose(out.values, [0.0, 50.0, 100.0])

    def test_affine_map(self):
        out = normalize_0_100(make_series([2.0, 4.0, 6.0]))
        assert np.allclose(out.values, [0.0, 50.0, 100.0])

    def test_degenerate(self):
        with pytest.raises(DegenerateRange):
            normalize_0_100(make_series([7.0, 7.0, 7.0]))

    @given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=40).filter(
        lambda v: max(v) > min(v)))
    def test_idempotent_and_extremes_preserved(self, values):
        ts = make_series(values)
        once = normalize_0_100(ts)
        twice = normalize_0_100(once)
        assert np.max(np.abs(once.values - twice.values)) < 1e-12
        assert int(np.argmax(once.values)) == int(np.argmax(ts.values))
        assert int(np.argmin(once.values)) == int(np.argmin(ts.values))
        assert once.values.min() == 0.0 and once.values.max() == 100.0


class TestDifference:
    def test_order_zero_identity(self):
        ts = make_series([1.0, 2.0, 4.0, 7.0])
        assert difference(ts, 0) is ts

    def test_first_and_second_order(self):
        ts = make_series([1.0, 2.0, 4.0, 7.0])
        assert list(difference(ts, 1).values) == [1.0, 2.0, 3.0]
        assert list(difference(ts, 2).values) == [1.0, 1.0]

    def test_dates_dropped_from_front(self):
        ts = make_series([1.0, 2.0, 4.0, 7.0])
        assert difference(ts, 2).dates == ts.dates[2:]

    def test_too_short(self):
        with pytest.raises(SeriesTooShort):
            difference(make_series([1.0, 2.0]), 2)

    @given(st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=50))
    def test_composition(self, values):
        ts = make_series(values)
        stacked = difference(difference(ts, 1), 1)
        direct = difference(ts, 2)
        assert stacked.dates == direct.dates
        assert np.max(np.abs(stacked.values - direct.values)) < 1e-9


class TestMovingAverage:
    def test_window_one_identity(self):
        ts = make_series([3.0, 1.0, 4.0])
        assert np.array_equal(moving_average(ts, 1).values, ts.values)

    def test_trailing_means(self):
        out = moving_average(make_series([0.0, 10.0, 20.0, 30.0]), 2)
        assert np.allclose(out.values, [5.0, 15.0, 25.0])
        assert len(out) == 3

    def test_constant_series(self):
        out = moving_average(make_series([4.0] * 6), 3)
        assert np.allclose(out.values, 4.0) and len(out) == 4

    def test_linear_ramp_keeps_slope(self):
        ramp = make_series(np.arange(30.0) * 1.5)
        out = moving_average(ramp, 7)
        slopes = np.diff(out.values)
        assert np.allclose(slopes, 1.5)


class TestAlign:
    def _trio(self):
        a = make_series(np.linspace(0, 100, 10), name="cases")
        b = make_series(np.linspace(5, 95, 10), name="restaurant")
        c = make_series(np.linspace(1, 99, 10), name="bar")
        return a, b, c

    def test_identical_dates(self):
        a, b, c = self._trio()
        ds = align(a, b, c)
        assert len(ds) == 10 and ds.date_index == a.dates

    def test_intersection(self):
        base = days(90)
        a = make_series(np.linspace(0, 100, 90), name="cases")
        b = from_points("restaurant", "CA", list(zip(base[4:], np.linspace(0, 100, 86))))
        c = from_points("bar", "CA", list(zip(base[:85], np.linspace(0, 100, 85))))
        ds = align(a, b, c)
        assert ds.date_index == base[4:85]

    def test_disjoint(self):
        a = make_series([1.0, 2.0], name="cases")
        b = make_series([1.0, 2.0], name="restaurant", start=dt.date(2021, 1, 1))
        c = make_series([1.0, 2.0], name="bar")
        with pytest.raises(EmptyIntersection):
            align(a, b, c)

    def test_region_mismatch(self):
        a, b, c = self._trio()
        other = make_series(np.linspace(0, 100, 10), name="bar", region="NY")
        with pytest.raises(RegionMismatch):
            align(a, b, other)

    def test_role_permutation_keeps_date_index(self):
        a, b, c = self._trio()
        trimmed = from_points("x", "CA", list(zip(days(10)[2:], np.linspace(0, 100, 8))))
        reference = align(trimmed, b, c).date_index
        for trio in ((b, trimmed, c), (b, c, trimmed), (c, b, trimmed)):
            assert align(*trio).date_index == reference
