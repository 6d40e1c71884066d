"""Seeded synthetic series: random walks, AR(1), coupled pairs, VAR processes.

These generators back every statistical calibration check in the test
suite. Innovations come from the counter-based stream in trendcast.rng
(SplitMix64 counter + Box-Muller), so a spec + seed pins the output
exactly; stationary kinds discard a 100-step burn-in.
"""

from __future__ import annotations

import datetime as dt
import enum
from dataclasses import dataclass

import numpy as np

from .errors import InvalidSpec
from .rng import CounterRng
from .series import TimeSeries

BURN_IN = 100
_DEFAULT_START = dt.date(2020, 4, 9)


class Kind(enum.Enum):
    RANDOM_WALK = "random_walk"
    AR1 = "ar1"
    COUPLED_PAIR = "coupled_pair"
    VAR_GENERAL = "var_general"


@dataclass(frozen=True, eq=False)
class SyntheticSpec:
    """Recipe for one seeded draw.

    Kind-specific fields: phi for AR1 (and the driver of COUPLED_PAIR),
    beta/lag for COUPLED_PAIR, matrices for VAR_GENERAL.
    """

    kind: Kind
    length: int
    noise_sigma: float = 1.0
    seed: int = 0
    phi: float = 0.5
    beta: float = 0.0
    lag: int = 1
    matrices: tuple[np.ndarray, ...] = ()
    require_stationary: bool = True
    region: str = "SYN"
    start_date: dt.date = _DEFAULT_START

    def validate(self) -> None:
        if self.length < 1:
            raise InvalidSpec(f"length must be positive, got {self.length}")
        if self.noise_sigma <= 0.0:
            raise InvalidSpec(f"noise_sigma must be positive, got {self.noise_sigma}")
        if self.kind is Kind.AR1 and abs(self.phi) >= 1.0:
            raise InvalidSpec(f"AR1 requires |phi| < 1, got {self.phi}")
        if self.kind is Kind.COUPLED_PAIR:
            if abs(self.phi) >= 1.0:
                raise InvalidSpec(f"coupled pair driver requires |phi| < 1, got {self.phi}")
            if self.lag < 1:
                raise InvalidSpec(f"coupling lag must be >= 1, got {self.lag}")
        if self.kind is Kind.VAR_GENERAL:
            if not self.matrices:
                raise InvalidSpec("VAR_GENERAL needs at least one lag matrix")
            dims = self.matrices[0].shape[0]
            for mat in self.matrices:
                if mat.shape != (dims, dims):
                    raise InvalidSpec("lag matrices must be square and same-sized")
            if self.require_stationary:
                radius = companion_spectral_radius(self.matrices)
                if radius >= 1.0:
                    raise InvalidSpec(
                        f"companion spectral radius {radius:.4f} >= 1"
                    )


def companion_spectral_radius(matrices: tuple[np.ndarray, ...]) -> float:
    """Spectral radius of the stacked companion matrix of a VAR."""
    p = len(matrices)
    dims = matrices[0].shape[0]
    companion = np.zeros((dims * p, dims * p))
    companion[:dims] = np.hstack(matrices)
    if p > 1:
        companion[dims:, : dims * (p - 1)] = np.eye(dims * (p - 1))
    return float(np.max(np.abs(np.linalg.eigvals(companion))))


def _dates(start: dt.date, length: int) -> tuple[dt.date, ...]:
    return tuple(start + dt.timedelta(days=i) for i in range(length))


def generate(spec: SyntheticSpec) -> list[TimeSeries]:
    """Draw the series described by spec; deterministic for a fixed seed."""
    spec.validate()
    rng = CounterRng(spec.seed)
    n = spec.length
    sigma = spec.noise_sigma
    dates = _dates(spec.start_date, n)

    if spec.kind is Kind.RANDOM_WALK:
        walk = np.cumsum(sigma * rng.normal(n))
        return [TimeSeries("random_walk", spec.region, dates, walk)]

    if spec.kind is Kind.AR1:
        eps = sigma * rng.normal(n + BURN_IN)
        out = np.empty(n + BURN_IN)
        prev = 0.0
        for t in range(n + BURN_IN):
            prev = spec.phi * prev + eps[t]
            out[t] = prev
        return [TimeSeries("ar1", spec.region, dates, out[BURN_IN:])]

    if spec.kind is Kind.COUPLED_PAIR:
        total = n + BURN_IN
        eta = sigma * rng.normal(total)
        eps = sigma * rng.normal(total)
        x = np.empty(total)
        prev = 0.0
        for t in range(total):
            prev = spec.phi * prev + eta[t]
            x[t] = prev
        y = np.empty(total)
        for t in range(total):
            driver = x[t - spec.lag] if t >= spec.lag else 0.0
            y[t] = spec.beta * driver + eps[t]
        return [
            TimeSeries("cause", spec.region, dates, x[BURN_IN:]),
            TimeSeries("effect", spec.region, dates, y[BURN_IN:]),
        ]

    # VAR_GENERAL
    p = len(spec.matrices)
    dims = spec.matrices[0].shape[0]
    total = n + BURN_IN + p
    eps = sigma * rng.normal(total * dims).reshape(total, dims)
    data = np.zeros((total, dims))
    for t in range(p, total):
        acc = eps[t].copy()
        for i, mat in enumerate(spec.matrices, start=1):
            acc += mat @ data[t - i]
        data[t] = acc
    data = data[BURN_IN + p :]
    return [
        TimeSeries(f"var{j}", spec.region, dates, data[:, j].copy())
        for j in range(dims)
    ]


@dataclass(frozen=True)
class QuantileTable:
    """Empirical null quantiles of the unit-root statistic."""

    n: int
    reps: int
    q01: float
    q05: float
    q10: float


def null_quantiles_adf(n: int, reps: int, seed: int = 0) -> QuantileTable:
    """Simulate the unit-root statistic under the random-walk null.

    Uses the zero-lag regression of dy on [1, y_{t-1}], fully vectorized
    across replications; this is the oracle against which the analytic
    p-value surface is calibrated.
    """
    if reps < 1000:
        raise InvalidSpec(f"need reps >= 1000 for stable quantiles, got {reps}")
    if n < 25:
        raise InvalidSpec(f"n={n} too small to simulate the regression")
    rng = CounterRng(seed)
    walks = np.cumsum(rng.normal(reps * n).reshape(reps, n), axis=1)
    level = walks[:, :-1]
    dy = np.diff(walks, axis=1)
    m = n - 1
    xc = level - level.mean(axis=1, keepdims=True)
    yc = dy - dy.mean(axis=1, keepdims=True)
    sxx = np.einsum("ij,ij->i", xc, xc)
    gamma = np.einsum("ij,ij->i", xc, yc) / sxx
    resid = yc - gamma[:, None] * xc
    sigma2 = np.einsum("ij,ij->i", resid, resid) / (m - 2)
    stats = gamma / np.sqrt(sigma2 / sxx)
    q01, q05, q10 = np.quantile(stats, [0.01, 0.05, 0.10])
    return QuantileTable(n=n, reps=reps, q01=float(q01), q05=float(q05), q10=float(q10))
