"""Unit-root testing and the make-stationary differencing loop.

The test regresses the first difference on an intercept, the lagged level
and lagged differences, picking the difference-lag count by AIC on a common
sample (so the criteria are comparable), then refits the chosen model on
the longest usable sample. P-values come from the MacKinnon response
surface for the constant-only regression.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .causal import _check_rank, ols_with_se
from .distributions import PValue, adf_pvalue
from .errors import SeriesTooShort, StillNonStationary
from .series import TimeSeries, difference

_MIN_EFFECTIVE_OBS = 25


@dataclass(frozen=True)
class AdfReport:
    """Outcome of one unit-root test.

    reject_unit_root_at_05 means the series looks stationary at the 5%
    level; n_obs is the effective regression sample (length - lags - 1).
    """

    statistic: float
    p_value: PValue
    lags_used: int
    n_obs: int
    reject_unit_root_at_05: bool


def _default_max_lag(n: int) -> int:
    # Schwert's rule, the common default for this test
    return int(12.0 * (n / 100.0) ** 0.25)


def _design(y: np.ndarray, max_lag: int) -> tuple[np.ndarray, np.ndarray]:
    """Target dy_t and columns [1, y_{t-1}, dy_{t-1}, ..., dy_{t-max_lag}]."""
    n = y.shape[0]
    dy = np.diff(y)
    rows = n - 1 - max_lag
    target = dy[max_lag:]
    cols = [np.ones((rows, 1)), y[max_lag : n - 1, None]]
    for i in range(1, max_lag + 1):
        cols.append(dy[max_lag - i : n - 1 - i, None])
    return np.hstack(cols), target


def adf_test(ts: TimeSeries, max_lag: int | None = None) -> AdfReport:
    """Unit-root t-test with AIC-selected difference lags in 0..max_lag."""
    y = ts.values
    n = y.shape[0]
    explicit = max_lag is not None
    if max_lag is None:
        max_lag = _default_max_lag(n)
    if max_lag < 0:
        raise ValueError(f"max_lag must be >= 0, got {max_lag}")
    if n - 1 - max_lag < _MIN_EFFECTIVE_OBS:
        if explicit:
            raise SeriesTooShort(
                f"{n} observations leave fewer than {_MIN_EFFECTIVE_OBS} "
                f"effective rows at max_lag={max_lag}"
            )
        max_lag = n - 1 - _MIN_EFFECTIVE_OBS
        if max_lag < 0:
            raise SeriesTooShort(f"{n} observations are too few for the test")

    # One factorization at the widest lag gives SSRs for every nested
    # candidate: the first k columns of X share the leading k x k block of R.
    design, target = _design(y, max_lag)
    _check_rank(design)
    rows = design.shape[0]
    q, _ = np.linalg.qr(design)
    projections = q.T @ target
    total = float(target @ target)
    best_lag = 0
    best_aic = math.inf
    ssr = total
    explained = np.cumsum(projections * projections)
    for lag in range(0, max_lag + 1):
        k = lag + 2
        ssr = max(total - float(explained[k - 1]), 1e-300)
        aic = rows * math.log(ssr / rows) + 2.0 * k
        if aic < best_aic:
            best_aic = aic
            best_lag = lag

    # refit the winning lag on the longest usable sample
    design, target = _design(y, best_lag)
    fit, se = ols_with_se(design, target)
    statistic = float(fit.coeffs[1] / se[1])
    p_value = adf_pvalue(statistic, n)
    return AdfReport(
        statistic=statistic,
        p_value=p_value,
        lags_used=best_lag,
        n_obs=design.shape[0],
        reject_unit_root_at_05=p_value < 0.05,
    )


def ensure_stationary(
    ts: TimeSeries,
    max_order: int = 2,
    forced_order: int | None = None,
    max_lag: int | None = None,
) -> tuple[TimeSeries, int]:
    """Difference until the unit-root test rejects at 5%, up to max_order.

    With forced_order set (pipeline mode) exactly that order is applied and
    no test is run. Hitting max_order without rejection emits a
    StillNonStationary warning and returns the max-order difference.
    """
    if forced_order is not None:
        return difference(ts, forced_order), forced_order
    for order in range(max_order + 1):
        candidate = difference(ts, order)
        if adf_test(candidate, max_lag=max_lag).reject_unit_root_at_05:
            return candidate, order
    warnings.warn(
        f"series {ts.name!r} still fails the unit-root test after "
        f"{max_order} differences",
        StillNonStationary,
        stacklevel=2,
    )
    return difference(ts, max_order), max_order
