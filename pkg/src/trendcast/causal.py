"""Least squares, VAR fitting, Granger causality and Pearson correlation.

All estimators go through one QR-based solver (never the normal equations)
with a rank check on column-scaled designs. VAR models are fitted equation
by equation; the Granger statistic is the classical two-regression F-test.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .distributions import PValue, PValueMethod, f_cdf, t_cdf
from .errors import (
    DataWarning,
    LengthMismatch,
    SeriesTooShort,
    SingularDesign,
    ZeroVariance,
)
from .series import TimeSeries

_RANK_TOL = 1e-10


# ---------------------------------------------------------------------------
# OLS core
# ---------------------------------------------------------------------------

class OlsResult(NamedTuple):
    coeffs: np.ndarray
    ssr: float
    residuals: np.ndarray


def _check_rank(design: np.ndarray) -> None:
    """Reject designs that are rank-deficient on column-scaled data."""
    norms = np.linalg.norm(design, axis=0)
    if np.any(norms == 0.0):
        raise SingularDesign("design has an all-zero column")
    scaled = design / norms
    smallest = np.linalg.svd(scaled, compute_uv=False)[-1]
    if smallest < _RANK_TOL:
        raise SingularDesign(
            f"design is rank-deficient (scaled min singular value {smallest:.2e})"
        )


def _qr_solve(design: np.ndarray, targets: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Least squares via reduced QR; targets may hold several columns.

    Returns (coefficients, R factor).
    """
    q, r = np.linalg.qr(design)
    coeffs = np.linalg.solve(r, q.T @ targets)
    return coeffs, r


def ols(design: np.ndarray, target: np.ndarray) -> OlsResult:
    """Least-squares fit of target on design (QR factorization).

    Requires more rows than columns and full column rank within 1e-10
    on column-scaled data.
    """
    design = np.asarray(design, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if design.ndim != 2:
        raise ValueError("design must be 2-dimensional")
    n, k = design.shape
    if n <= k:
        raise SeriesTooShort(f"{n} observations for {k} regressors")
    _check_rank(design)
    coeffs, _ = _qr_solve(design, target)
    residuals = target - design @ coeffs
    return OlsResult(coeffs, float(residuals @ residuals), residuals)


def ols_with_se(design: np.ndarray, target: np.ndarray) -> tuple[OlsResult, np.ndarray]:
    """ols() plus conventional standard errors of the coefficients."""
    design = np.asarray(design, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    n, k = design.shape
    if n <= k:
        raise SeriesTooShort(f"{n} observations for {k} regressors")
    _check_rank(design)
    coeffs, r = _qr_solve(design, target)
    residuals = target - design @ coeffs
    ssr = float(residuals @ residuals)
    sigma2 = ssr / (n - k)
    r_inv = np.linalg.solve(r, np.eye(k))
    se = np.sqrt(sigma2 * np.sum(r_inv * r_inv, axis=1))
    return OlsResult(coeffs, ssr, residuals), se


# ---------------------------------------------------------------------------
# VAR
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class VarModel:
    """Fitted VAR(p): intercept, lag coefficient matrices, residuals, AIC.

    coeffs[i][j, k] is the effect of variable k at lag i+1 on variable j;
    resid_cov uses the maximum-likelihood divisor n_eff.
    """

    dims: int
    lag: int
    intercept: np.ndarray
    coeffs: tuple[np.ndarray, ...]
    residuals: np.ndarray
    resid_cov: np.ndarray
    n_eff: int
    aic: float


def _stacked_values(series: Sequence[TimeSeries]) -> np.ndarray:
    if not series:
        raise ValueError("need at least one series")
    dates = series[0].dates
    for ts in series[1:]:
        if ts.dates != dates:
            raise LengthMismatch(f"series {ts.name!r} has a different date vector")
    return np.column_stack([ts.values for ts in series])


def _lag_design(data: np.ndarray, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Targets Y_t and design [1, Y_{t-1}, ..., Y_{t-p}] for t = p..n-1."""
    n = data.shape[0]
    target = data[p:]
    blocks = [np.ones((n - p, 1))]
    for i in range(1, p + 1):
        blocks.append(data[p - i : n - i])
    return np.hstack(blocks), target


def fit_var(series: Sequence[TimeSeries], p: int) -> VarModel:
    """Fit a VAR(p) by equation-wise least squares.

    AIC = ln det(Sigma_ML) + (2 / n_eff) * K * (K*p + 1), with Sigma_ML the
    residual covariance under divisor n_eff.
    """
    if p < 1:
        raise ValueError(f"lag order must be >= 1, got {p}")
    data = _stacked_values(series)
    n, dims = data.shape
    n_eff = n - p
    n_params = dims * p + 1
    if n_eff <= n_params:
        raise SeriesTooShort(
            f"n_eff={n_eff} observations cannot identify {n_params} parameters"
        )
    design, target = _lag_design(data, p)
    _check_rank(design)
    coeffs_all, _ = _qr_solve(design, target)
    residuals = target - design @ coeffs_all
    resid_cov = residuals.T @ residuals / n_eff
    sign, logdet = np.linalg.slogdet(resid_cov)
    if sign <= 0:
        raise SingularDesign("residual covariance is not positive definite")
    aic = logdet + (2.0 / n_eff) * dims * n_params
    lag_mats = tuple(
        coeffs_all[1 + i * dims : 1 + (i + 1) * dims].T.copy() for i in range(p)
    )
    return VarModel(
        dims=dims,
        lag=p,
        intercept=coeffs_all[0].copy(),
        coeffs=lag_mats,
        residuals=residuals,
        resid_cov=resid_cov,
        n_eff=n_eff,
        aic=float(aic),
    )


def select_lag(series: Sequence[TimeSeries], max_lag: int = 14) -> int:
    """Smallest AIC-minimizing lag order over 1..max_lag.

    When the sample cannot support max_lag, the cap is lowered to the
    largest feasible order (with a warning) rather than failing.
    """
    if max_lag < 1:
        raise ValueError(f"max_lag must be >= 1, got {max_lag}")
    data = _stacked_values(series)
    n, dims = data.shape
    # feasibility: n - p > dims*p + 1
    feasible = (n - 2) // (dims + 1)
    if feasible < 1:
        raise SeriesTooShort(f"{n} observations cannot support any lag order")
    if feasible < max_lag:
        warnings.warn(
            f"max_lag lowered from {max_lag} to {feasible} ({n} observations)",
            DataWarning,
            stacklevel=2,
        )
        max_lag = feasible
    best_p = 1
    best_aic = math.inf
    for p in range(1, max_lag + 1):
        aic = fit_var(series, p).aic
        if aic < best_aic:
            best_aic = aic
            best_p = p
    return best_p


# ---------------------------------------------------------------------------
# Granger causality
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GrangerResult:
    """One directed causality F-test (cause -> effect) at a fixed lag."""

    direction: tuple[str, str]
    lag: int
    f_stat: float
    df_num: int
    df_den: int
    p_value: PValue
    significant_at_05: bool


def granger_test(cause: TimeSeries, effect: TimeSeries, lag: int) -> GrangerResult:
    """SSR-based F-test of whether `cause` helps predict `effect`.

    Restricted model: effect on an intercept plus its own lags 1..lag.
    Unrestricted model adds the cause's lags 1..lag. The statistic is
    F = ((SSR_r - SSR_u) / lag) / (SSR_u / (n_eff - 2*lag - 1)).
    """
    if lag < 1:
        raise ValueError(f"lag must be >= 1, got {lag}")
    if cause.dates != effect.dates:
        raise LengthMismatch("cause and effect must share one date vector")
    n = len(effect)
    n_eff = n - lag
    df_den = n_eff - 2 * lag - 1
    if df_den < 1:
        raise SeriesTooShort(f"n_eff={n_eff} leaves {df_den} denominator df")

    y = effect.values[lag:]
    own = [np.ones((n_eff, 1))]
    other = []
    for i in range(1, lag + 1):
        own.append(effect.values[lag - i : n - i, None])
        other.append(cause.values[lag - i : n - i, None])
    restricted = ols(np.hstack(own), y)
    unrestricted = ols(np.hstack(own + other), y)

    if unrestricted.ssr <= 0.0:
        # perfect unrestricted fit: evidence is off the F scale
        f_stat = math.inf
        p = 0.0
    else:
        # nesting guarantees SSR_u <= SSR_r; clamp guards rounding only
        f_stat = max(0.0, restricted.ssr - unrestricted.ssr) / lag
        f_stat /= unrestricted.ssr / df_den
        p = min(1.0, max(0.0, 1.0 - f_cdf(f_stat, float(lag), float(df_den))))
    p_value = PValue(p, PValueMethod.F_UPPER_TAIL)
    return GrangerResult(
        direction=(cause.name, effect.name),
        lag=lag,
        f_stat=f_stat,
        df_num=lag,
        df_den=df_den,
        p_value=p_value,
        significant_at_05=p_value < 0.05,
    )


# ---------------------------------------------------------------------------
# Pearson correlation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PearsonResult:
    r: float
    p_value: PValue
    n: int


def pearson(a: TimeSeries, b: TimeSeries) -> PearsonResult:
    """Sample correlation with a two-sided t-test p-value.

    r is evaluated as (num/va) * sqrt(va/vb) so that b == a and b == -a
    land exactly on +/-1.
    """
    if a.dates != b.dates:
        raise LengthMismatch("series must share one date vector")
    n = len(a)
    if n < 3:
        raise SeriesTooShort(f"need n >= 3, got {n}")
    da = a.values - a.values.mean()
    db = b.values - b.values.mean()
    va = float(da @ da)
    vb = float(db @ db)
    if va == 0.0 or vb == 0.0:
        raise ZeroVariance("correlation undefined for a constant series")
    num = float(da @ db)
    r = (num / va) * math.sqrt(va / vb)
    r = max(-1.0, min(1.0, r))
    if abs(r) == 1.0:
        p = 0.0
    else:
        t = r * math.sqrt((n - 2) / (1.0 - r * r))
        p = 2.0 * t_cdf(-abs(t), float(n - 2))
    return PearsonResult(r=r, p_value=PValue(p, PValueMethod.T_TWO_SIDED), n=n)
