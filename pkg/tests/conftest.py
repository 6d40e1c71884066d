import datetime as dt

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from trendcast.series import TimeSeries

# every run of the suite must reproduce the same draws and verdicts
settings.register_profile(
    "deterministic",
    derandomize=True,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("deterministic")

START = dt.date(2020, 4, 9)


def days(n: int, start: dt.date = START) -> tuple[dt.date, ...]:
    return tuple(start + dt.timedelta(days=i) for i in range(n))


def make_series(values, name="series", region="CA", start: dt.date = START) -> TimeSeries:
    values = np.asarray(values, dtype=np.float64)
    return TimeSeries(name, region, days(len(values), start), values)


@pytest.fixture
def series_factory():
    return make_series


@pytest.fixture
def dates_factory():
    return days
