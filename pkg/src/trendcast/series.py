"""Core time-series types and transformations.

Everything downstream (unit-root tests, VAR/Granger, forecasting, reports)
consumes the two types defined here. Both are immutable after construction
and safe to share across threads; all operations are pure functions.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DegenerateRange,
    DuplicateDate,
    EmptyIntersection,
    LengthMismatch,
    NonFiniteValue,
    RegionMismatch,
    SeriesTooShort,
    ValueOutOfRange,
)


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Ordered (date, value) sequence with a name and region tag.

    Invariants: dates strictly increasing with no duplicates, one finite
    value per date.
    """

    name: str
    region: str
    dates: tuple[dt.date, ...]
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "values", values)
        if len(self.dates) != values.shape[0]:
            raise LengthMismatch(
                f"{len(self.dates)} dates vs {values.shape[0]} values"
            )
        if not np.all(np.isfinite(values)):
            raise NonFiniteValue(f"series {self.name!r} contains NaN or infinity")
        for prev, cur in zip(self.dates, self.dates[1:]):
            if cur == prev:
                raise DuplicateDate(f"series {self.name!r}: duplicate date {cur}")
            if cur < prev:
                raise ValueError(f"series {self.name!r}: dates not increasing at {cur}")
        values.setflags(write=False)

    def __len__(self) -> int:
        return len(self.dates)

    def with_values(self, values: np.ndarray, name: str | None = None) -> "TimeSeries":
        """Same dates, new values (convenience for elementwise transforms)."""
        return TimeSeries(name or self.name, self.region, self.dates, values)

    def restrict(self, dates: Sequence[dt.date]) -> "TimeSeries":
        """Sub-series over the given dates (must all be present)."""
        index = {d: i for i, d in enumerate(self.dates)}
        picks = [index[d] for d in dates]
        return TimeSeries(self.name, self.region, tuple(dates), self.values[picks])


@dataclass(frozen=True, eq=False)
class RegionDataset:
    """Date-aligned bundle of one region's cases and search series.

    All three series share an identical date vector and every value lies
    in [0, 100] (cases are expected pre-normalized).
    """

    region: str
    cases: TimeSeries
    restaurant: TimeSeries
    bar: TimeSeries
    date_index: tuple[dt.date, ...] = field(default=())

    def __post_init__(self) -> None:
        for ts in (self.cases, self.restaurant, self.bar):
            if ts.dates != self.cases.dates:
                raise LengthMismatch(
                    f"region {self.region}: series {ts.name!r} dates differ"
                )
            if ts.region != self.region:
                raise RegionMismatch(
                    f"dataset region {self.region} vs series region {ts.region}"
                )
            lo, hi = float(ts.values.min()), float(ts.values.max())
            if lo < 0.0 or hi > 100.0:
                raise ValueOutOfRange(
                    f"region {self.region}: {ts.name!r} values outside [0, 100]"
                )
        object.__setattr__(self, "date_index", self.cases.dates)

    def __len__(self) -> int:
        return len(self.date_index)


def from_points(
    name: str, region: str, points: Iterable[tuple[dt.date, float]]
) -> TimeSeries:
    """Build a validated series from unordered (date, value) pairs."""
    pts = sorted(points, key=lambda p: p[0])
    if not pts:
        raise SeriesTooShort("at least one point required")
    dates = tuple(p[0] for p in pts)
    values = np.array([p[1] for p in pts], dtype=np.float64)
    return TimeSeries(name, region, dates, values)


def normalize_0_100(ts: TimeSeries) -> TimeSeries:
    """Affine map of values onto [0, 100]; min -> 0, max -> 100."""
    if len(ts) < 2:
        raise SeriesTooShort("need >= 2 points to normalize")
    lo = float(ts.values.min())
    hi = float(ts.values.max())
    if hi == lo:
        raise DegenerateRange(f"series {ts.name!r} is constant ({lo})")
    # divide before scaling so min/max land exactly on 0 and 100
    return ts.with_values((ts.values - lo) / (hi - lo) * 100.0)


def difference(ts: TimeSeries, order: int) -> TimeSeries:
    """Apply consecutive differencing `order` times.

    The first `order` dates are dropped; order 0 returns the series as-is.
    """
    if order < 0:
        raise ValueError("order must be non-negative")
    if len(ts) <= order:
        raise SeriesTooShort(f"length {len(ts)} cannot be differenced {order} times")
    if order == 0:
        return ts
    values = np.diff(ts.values, n=order)
    return TimeSeries(ts.name, ts.region, ts.dates[order:], values)


def moving_average(ts: TimeSeries, window: int) -> TimeSeries:
    """Trailing mean over the last `window` values.

    Output length is len(ts) - window + 1; the date attached to each mean is
    the last date of its window (trailing, not centered).
    """
    if window < 1:
        raise ValueError("window must be positive")
    if len(ts) < window:
        raise SeriesTooShort(f"length {len(ts)} < window {window}")
    kernel = np.full(window, 1.0 / window)
    values = np.convolve(ts.values, kernel, mode="valid")
    return TimeSeries(ts.name, ts.region, ts.dates[window - 1 :], values)


def align(cases: TimeSeries, restaurant: TimeSeries, bar: TimeSeries) -> RegionDataset:
    """Restrict the three series to their common dates and bundle them.

    Dates missing from any one series are dropped from all; the series must
    share one region tag and be pre-scaled to [0, 100].
    """
    if not (cases.region == restaurant.region == bar.region):
        raise RegionMismatch(
            f"regions differ: {cases.region}, {restaurant.region}, {bar.region}"
        )
    common = set(cases.dates) & set(restaurant.dates) & set(bar.dates)
    if not common:
        raise EmptyIntersection(f"region {cases.region}: no common dates")
    dates = sorted(common)
    return RegionDataset(
        region=cases.region,
        cases=cases.restrict(dates),
        restaurant=restaurant.restrict(dates),
        bar=bar.restrict(dates),
    )
