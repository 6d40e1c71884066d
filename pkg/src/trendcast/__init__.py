"""Causality and forecasting toolkit for paired daily case-count and
search-interest series: unit-root testing, differencing, VAR fitting with
AIC lag selection, Granger causality, Pearson correlation, and a from-scratch
LSTM next-day forecaster, plus a CLI that renders the analysis tables and
figures."""

from .causal import (
    GrangerResult,
    PearsonResult,
    VarModel,
    fit_var,
    granger_test,
    ols,
    pearson,
    select_lag,
)
from .distributions import PValue, PValueMethod, adf_pvalue, f_cdf, ln_gamma, reg_inc_beta, t_cdf
from .series import (
    RegionDataset,
    TimeSeries,
    align,
    difference,
    from_points,
    moving_average,
    normalize_0_100,
)
from .stationarity import AdfReport, adf_test, ensure_stationary
from .synth import Kind, SyntheticSpec, generate, null_quantiles_adf

__version__ = "0.1.0"

__all__ = [
    "AdfReport",
    "GrangerResult",
    "Kind",
    "PValue",
    "PValueMethod",
    "PearsonResult",
    "RegionDataset",
    "SyntheticSpec",
    "TimeSeries",
    "VarModel",
    "adf_pvalue",
    "adf_test",
    "align",
    "difference",
    "ensure_stationary",
    "f_cdf",
    "fit_var",
    "from_points",
    "generate",
    "granger_test",
    "ln_gamma",
    "moving_average",
    "normalize_0_100",
    "null_quantiles_adf",
    "ols",
    "pearson",
    "reg_inc_beta",
    "select_lag",
    "t_cdf",
]
