import numpy as np
import pytest

from trendcast.causal import (
    fit_var,
    granger_test,
    ols,
    pearson,
    select_lag,
)
from trendcast.errors import (
    DataWarning,
    LengthMismatch,
    SeriesTooShort,
    SingularDesign,
    ZeroVariance,
)
from trendcast.synth import Kind, SyntheticSpec, generate

from conftest import make_series

# well-conditioned bivariate VAR(2) used across recovery tests
A1 = np.zeros((2, 2))
A2 = np.array([[0.8, 0.05], [0.05, 0.8]])
# three-variable VAR(3) with a strong third lag for selection tests
B1 = 0.1 * np.eye(3)
B2 = 0.1 * np.eye(3)
B3 = 0.4 * np.eye(3) + 0.1 * (np.ones((3, 3)) - np.eye(3))


def coupled(seed, n=300, beta=0.8, lag=2):
    return generate(
        SyntheticSpec(kind=Kind.COUPLED_PAIR, length=n, beta=beta, lag=lag, seed=seed)
    )


def noise_pair(seed, n=200):
    x = generate(SyntheticSpec(kind=Kind.AR1, length=n, phi=0.0, seed=2 * seed))[0]
    y = generate(SyntheticSpec(kind=Kind.AR1, length=n, phi=0.0, seed=2 * seed + 1))[0]
    return x, y.with_values(y.values)


class TestOls:
    def test_constant_column_exact(self):
        design = np.ones((6, 1))
        coeffs, ssr, residuals = ols(design, np.full(6, 3.5))
        assert coeffs[0] == pytest.approx(3.5, abs=1e-12)
        assert ssr == pytest.approx(0.0, abs=1e-20)

    def test_exact_linear_recovery(self):
        rng = np.random.default_rng(0)
        design = np.column_stack([np.ones(20), rng.normal(size=20)])
        target = design @ np.array([2.0, -1.25])
        _, _, residuals = ols(design, target)
        assert np.max(np.abs(residuals)) < 1e-10

    def test_duplicated_column(self):
        col = np.arange(10.0)
        with pytest.raises(SingularDesign):
            ols(np.column_stack([col, col]), col)

    def test_more_columns_than_rows(self):
        with pytest.raises(SeriesTooShort):
            ols(np.ones((2, 3)), np.ones(2))


class TestFitVar:
    def test_noise_free_ar1(self):
        values = [1.0]
        for _ in range(40):
            values.append(0.5 * values[-1])
        # tiny jitter keeps the design full-rank while the dynamics dominate
        rng = np.random.default_rng(1)
        values = np.array(values) + 1e-9 * rng.normal(size=41)
        model = fit_var([make_series(values)], 1)
        assert model.coeffs[0][0, 0] == pytest.approx(0.5, abs=1e-4)
        assert model.intercept[0] == pytest.approx(0.0, abs=1e-4)

    def test_known_var2_recovery(self):
        series = generate(
            SyntheticSpec(
                kind=Kind.VAR_GENERAL, length=500, noise_sigma=0.1, matrices=(A1, A2), seed=3
            )
        )
        model = fit_var(series, 2)
        assert np.abs(model.coeffs[0] - A1).max() < 0.1
        assert np.abs(model.coeffs[1] - A2).max() < 0.1

    def test_invariants(self):
        series = generate(
            SyntheticSpec(kind=Kind.VAR_GENERAL, length=200, matrices=(A1, A2), seed=9)
        )
        model = fit_var(series, 2)
        assert model.n_eff == 200 - 2
        assert np.allclose(model.resid_cov, model.resid_cov.T)
        assert np.all(np.linalg.eigvalsh(model.resid_cov) > -1e-12)
        assert np.max(np.abs(model.residuals.mean(axis=0))) < 1e-8

    def test_recovery_error_shrinks_with_n(self):
        medians = []
        for n in (200, 500, 2000):
            errs = []
            for seed in range(30):
                series = generate(
                    SyntheticSpec(
                        kind=Kind.VAR_GENERAL, length=n, matrices=(A1, A2), seed=100 + seed
                    )
                )
                model = fit_var(series, 2)
                errs.append(
                    max(
                        np.abs(model.coeffs[0] - A1).max(),
                        np.abs(model.coeffs[1] - A2).max(),
                    )
                )
            medians.append(float(np.median(errs)))
        assert medians[0] > medians[1] > medians[2]

    def test_too_short(self):
        series = [make_series(np.arange(8.0) + np.sin(np.arange(8.0)))]
        with pytest.raises(SeriesTooShort):
            fit_var(series, 4)


class TestSelectLag:
    def test_var3_recovered_most_seeds(self):
        hits = 0
        for seed in range(40):
            series = generate(
                SyntheticSpec(
                    kind=Kind.VAR_GENERAL, length=500, matrices=(B1, B2, B3), seed=5000 + seed
                )
            )
            if select_lag(series, max_lag=14) == 3:
                hits += 1
        assert hits >= 32  # >= 80% of 40

    def test_white_noise_prefers_lag_one(self):
        picks = []
        for seed in range(40):
            x, y = noise_pair(seed, n=300)
            y = make_series(y.values, name="y")
            x = make_series(x.values, name="x")
            picks.append(select_lag([x, y], max_lag=6))
        assert picks.count(1) > len(picks) / 2

    def test_cap_honored_and_lowered(self):
        series = generate(
            SyntheticSpec(kind=Kind.VAR_GENERAL, length=40, matrices=(A1, A2), seed=2)
        )
        with pytest.warns(DataWarning):
            p = select_lag(series, max_lag=14)
        assert 1 <= p <= (40 - 2) // 3


class TestGranger:
    def test_coupled_pair_detected(self):
        x, y = coupled(seed=1)
        res = granger_test(x, y, 2)
        assert float(res.p_value) < 0.01
        assert res.significant_at_05
        assert res.df_num == 2 and res.df_den == (300 - 2) - 2 * 2 - 1

    def test_f_statistic_nonnegative_nesting(self):
        for seed in range(25):
            x, y = noise_pair(seed)
            res = granger_test(x, y, 3)
            assert res.f_stat >= 0.0

    def test_affine_invariance(self):
        x, y = coupled(seed=4)
        base = granger_test(x, y, 2).f_stat
        x2 = x.with_values(3.7 * x.values - 12.0)
        y2 = y.with_values(-0.4 * y.values + 5.0)
        assert abs(granger_test(x2, y, 2).f_stat - base) < 1e-8
        assert abs(granger_test(x, y2, 2).f_stat - base) < 1e-8

    def test_var_oracle_equivalence(self):
        # the unrestricted effect equation must match a bivariate VAR fit
        x, y = coupled(seed=8, n=250)
        lag = 2
        model = fit_var([x, y], lag)
        n = len(y)
        n_eff = n - lag
        ones = np.ones((n_eff, 1))
        own = [y.values[lag - i : n - i, None] for i in range(1, lag + 1)]
        other = [x.values[lag - i : n - i, None] for i in range(1, lag + 1)]
        coeffs, _, _ = ols(np.hstack([ones] + own + other), y.values[lag:])
        assert model.intercept[1] == pytest.approx(coeffs[0], abs=1e-8)
        for i in range(lag):
            assert model.coeffs[i][1, 1] == pytest.approx(coeffs[1 + i], abs=1e-8)
            assert model.coeffs[i][1, 0] == pytest.approx(coeffs[1 + lag + i], abs=1e-8)

    def test_null_size_and_uniformity_smoke(self):
        ps = []
        for seed in range(200):
            x, y = noise_pair(seed)
            ps.append(float(granger_test(x, y, 2).p_value))
        ps = np.sort(np.array(ps))
        assert 0.01 <= float((ps < 0.05).mean()) <= 0.10
        grid = np.arange(1, len(ps) + 1) / len(ps)
        ks = max(np.max(grid - ps), np.max(ps - (grid - 1 / len(ps))))
        assert ks < 0.10

    def test_date_mismatch(self):
        import datetime as dt

        x, y = coupled(seed=2, n=50)
        shifted = make_series(y.values, name="y", start=dt.date(2021, 1, 1))
        with pytest.raises(LengthMismatch):
            granger_test(x, shifted, 2)
        granger_test(x, make_series(y.values, name="y"), 2)  # same dates fine


class TestPearson:
    def test_self_correlation_exact(self):
        a = make_series([3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0])
        res = pearson(a, a)
        assert res.r == 1.0
        assert float(res.p_value) == 0.0

    def test_negated_exact(self):
        a = make_series([3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0])
        res = pearson(a, a.with_values(-a.values))
        assert res.r == -1.0
        assert float(res.p_value) == 0.0

    def test_affine_behavior(self):
        x, y = coupled(seed=5, n=120)
        base = pearson(x, y).r
        assert pearson(x.with_values(2.0 * x.values + 7.0), y).r == pytest.approx(base, abs=1e-12)
        assert pearson(x.with_values(-1.5 * x.values), y).r == pytest.approx(-base, abs=1e-12)

    def test_zero_variance(self):
        a = make_series([1.0, 2.0, 3.0])
        with pytest.raises(ZeroVariance):
            pearson(a, make_series([4.0, 4.0, 4.0]))

    def test_too_short(self):
        a = make_series([1.0, 2.0])
        with pytest.raises(SeriesTooShort):
            pearson(a, a)

    def test_r_in_range_and_p_valid(self):
        for seed in range(50):
            x, y = noise_pair(seed, n=40)
            res = pearson(x, y)
            assert -1.0 <= res.r <= 1.0
            assert 0.0 <= float(res.p_value) <= 1.0
