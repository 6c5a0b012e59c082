import math

import numpy as np
import pytest
import statsmodels.api as sm
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats
from scipy.signal import lfilter
from statsmodels.stats.diagnostic import acorr_ljungbox, het_arch
from statsmodels.tsa.stattools import adfuller, grangercausalitytests

from helpers import brute_granger
from mfpredict import stattests as T
from mfpredict.exceptions import DegenerateInputError, InsufficientDataError
from mfpredict.synth import GeneratorSpec, generate, rng_for, standard_normal


def normals(seed, n):
    return standard_normal(rng_for(seed), n)


def ar1(seed, n, phi):
    return lfilter([1.0], [1.0, -phi], normals(seed, n))


class TestDescribe:
    def test_constant(self):
        s = T.describe([1, 1, 1, 1])
        assert s.mean == 1 and s.stdev == 0 and s.degenerate
        assert math.isnan(s.skew) and math.isnan(s.kurt)

    def test_hand(self):
        s = T.describe([0, 0, 0, 4])
        assert (s.mean, s.median, s.max, s.min) == (1, 0, 4, 0)

    def test_normal_kurtosis(self):
        assert 2.9 <= T.describe(normals(1, 100_000)).kurt <= 3.1

    def test_against_scipy(self):
        x = np.random.default_rng(0).gamma(2.0, size=500)
        s = T.describe(x)
        assert s.skew == pytest.approx(stats.skew(x), rel=1e-12)
        assert s.kurt == pytest.approx(stats.kurtosis(x, fisher=True) + 3, rel=1e-12)
        assert s.stdev == pytest.approx(np.std(x, ddof=1), rel=1e-12)

    def test_too_short(self):
        with pytest.raises(InsufficientDataError):
            T.describe([1.0])

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=100))
    def test_invariants(self, x):
        s = T.describe(x)
        assert s.min <= s.median <= s.max and s.stdev >= 0
        if not s.degenerate and s.stdev > 1e-6 * max(1.0, abs(s.mean)):
            assert s.kurt >= 1 - 1e-9


class TestPearson:
    def test_identity_and_flip(self):
        x = normals(2, 50)
        r = T.pearson_with_p(x, x)
        assert r.statistic == pytest.approx(1.0) and r.pvalue < 1e-12
        assert T.pearson_with_p(x, -x).statistic == pytest.approx(-1.0)

    def test_against_scipy(self):
        x, y = normals(3, 80), normals(4, 80)
        r = T.pearson_with_p(x, y + 0.3 * x)
        ref = stats.pearsonr(x, y + 0.3 * x)
        assert r.statistic == pytest.approx(ref.statistic, rel=1e-12)
        assert r.pvalue == pytest.approx(ref.pvalue, rel=1e-9)

    def test_independent_band(self):
        inside = [abs(T.pearson_with_p(normals(10 + k, 500), normals(5000 + k, 500)).statistic) < 0.088 for k in range(1000)]
        assert 0.93 <= np.mean(inside) <= 0.97

    def test_zero_variance(self):
        with pytest.raises(DegenerateInputError):
            T.pearson_with_p(np.ones(10), np.arange(10))


class TestAutocorrelation:
    def test_lag_zero(self):
        assert T.acf(normals(5, 100), 0) == pytest.approx(1.0)

    def test_alternating(self):
        assert T.acf(np.tile([1.0, -1.0], 5000), 1) == pytest.approx(-1.0, abs=1e-3)

    def test_ar1(self):
        assert 0.69 <= T.acf(ar1(6, 100_000, 0.7), 1) <= 0.71

    def test_lag_too_large(self):
        with pytest.raises(ValueError):
            T.acf(np.arange(5.0), 5)

    def test_ljung_box_against_statsmodels(self):
        x = ar1(7, 600, 0.2)
        ours = T.ljung_box(x, 30)
        ref = acorr_ljungbox(x, lags=[30])
        assert ours.statistic == pytest.approx(float(ref["lb_stat"].iloc[0]), rel=1e-10)
        assert ours.pvalue == pytest.approx(float(ref["lb_pvalue"].iloc[0]), rel=1e-8)

    def test_ljung_box_persistent(self):
        x = ar1(8, 3000, 0.78)
        r = T.ljung_box(x, 30)
        assert r.statistic > 10 * stats.chi2.ppf(0.99, 30) and r.pvalue < 1e-12

    def test_ljung_box_zero_variance(self):
        with pytest.raises(DegenerateInputError):
            T.ljung_box(np.zeros(100), 10)

    def test_ljung_box_lag_too_large(self):
        with pytest.raises(ValueError):
            T.ljung_box(normals(9, 20), 10)


class TestADF:
    def test_against_statsmodels(self):
        for seed, x in [(1, np.cumsum(normals(11, 400))), (2, ar1(12, 400, 0.5))]:
            ours = T.adf_test(x, max_lag=8)
            stat, p, lag, nobs, _, _ = adfuller(x, maxlag=8, regression="c", autolag="BIC")
            assert ours.lags == lag
            assert ours.statistic == pytest.approx(stat, rel=1e-9)
            assert ours.pvalue == pytest.approx(min(max(p, 0.001), 0.999), rel=1e-6)

    def test_stationary_power(self):
        ok = [T.adf_test(normals(100 + k, 1000)).pvalue <= 0.01 for k in range(200)]
        assert np.mean(ok) >= 0.99

    def test_trend_not_rejected(self):
        r = T.adf_test(np.arange(1.0, 301.0))
        assert r.pvalue > 0.05

    def test_pvalue_clamped(self):
        assert T.adf_test(normals(13, 2000)).pvalue == 0.001

    def test_insufficient(self):
        with pytest.raises(InsufficientDataError):
            T.adf_test(normals(14, 15), max_lag=8)


class TestArch:
    def test_against_statsmodels(self):
        x = generate(GeneratorSpec("garch11", 800, seed=3))
        ours = T.arch_lm(x, 5)
        _, _, fval, fp = het_arch(x - x.mean(), nlags=5)
        assert ours.statistic == pytest.approx(fval, rel=1e-9)
        assert ours.pvalue == pytest.approx(fp, rel=1e-7)

    def test_garch_power(self):
        ok = [T.arch_lm(generate(GeneratorSpec("garch11", 2000, seed=k)), 5).pvalue <= 0.01 for k in range(200)]
        assert np.mean(ok) >= 0.95

    def test_constant(self):
        with pytest.raises(DegenerateInputError):
            T.arch_lm(np.full(100, 2.0), 5)

    def test_insufficient(self):
        with pytest.raises(InsufficientDataError):
            T.arch_lm(normals(1, 12), 5)


class TestGranger:
    def test_brute_force_small_n(self):
        for lag in (1, 2, 3):
            x, y = normals(20 + lag, 40), normals(30 + lag, 40)
            ours = T.granger(x, y, lag)
            F, df2 = brute_granger(x, y, lag)
            assert ours.statistic == pytest.approx(F, rel=1e-10)
            assert ours.aux["df2"] == df2

    def test_against_statsmodels(self):
        x, y = normals(40, 300), normals(41, 300)
        ours = T.granger(x, y, 2)
        F, p, _, _ = grangercausalitytests(np.column_stack((y, x)), [2])[2][0]["ssr_ftest"]
        assert ours.statistic == pytest.approx(F, rel=1e-10)
        assert ours.pvalue == pytest.approx(p, rel=1e-8)

    def test_causal_design(self):
        hits = []
        for k in range(100):
            x = normals(50 + k, 2000)
            y = np.concatenate(([0.0], 0.8 * x[:-1])) + normals(9000 + k, 2000)
            hits.append(T.granger(x, y, 1).pvalue < 0.001 and T.granger(y, x, 1).pvalue >= 0.05)
        assert np.mean(hits) >= 0.90

    def test_identical_series(self):
        x = normals(60, 100)
        with pytest.raises(DegenerateInputError):
            T.granger(x, x, 1)


class TestOlsHac:
    def test_against_statsmodels(self):
        x = ar1(70, 500, 0.6)
        y = 0.3 + 0.1 * x + ar1(71, 500, 0.5)
        fit = T.ols_hac(y, {"x": x}, nw_lag=5)
        ref = sm.OLS(y, sm.add_constant(x)).fit(cov_type="HAC", cov_kwds={"maxlags": 5, "use_correction": False})
        np.testing.assert_allclose([fit.coefficients["const"], fit.coefficients["x"]], ref.params, rtol=1e-10)
        np.testing.assert_allclose([fit.hac_se["const"], fit.hac_se["x"]], ref.bse, rtol=1e-10)
        np.testing.assert_allclose([fit.pvalues["const"], fit.pvalues["x"]], ref.pvalues, rtol=1e-8)
        assert fit.r2_adj == pytest.approx(ref.rsquared_adj, rel=1e-12)

    def test_perfect_fit(self):
        x = normals(72, 50)
        fit = T.ols_hac(2 * x, {"x": x})
        assert fit.coefficients["x"] == pytest.approx(2.0)
        assert fit.hac_se["x"] == pytest.approx(0.0, abs=1e-12)
        assert fit.r2_adj == pytest.approx(1.0)

    def test_auto_lag(self):
        assert T.newey_west_lag(1000) == 6
        assert T.ols_hac(normals(73, 1000), {"x": normals(74, 1000)}).nw_lag == 6

    def test_iid_size(self):
        rej = [T.ols_hac(normals(k, 1000), {"x": normals(20_000 + k, 1000)}).pvalues["x"] < 0.05 for k in range(1000)]
        assert 0.03 <= np.mean(rej) <= 0.08

    def test_rank_deficient(self):
        x = normals(75, 30)
        with pytest.raises(DegenerateInputError):
            T.ols_hac(normals(76, 30), {"a": x, "b": 2 * x})

    def test_rescaling(self):
        x, y = normals(77, 300), normals(78, 300)
        a = T.ols_hac(y + 0.1 * x, {"x": x}, nw_lag=4)
        b = T.ols_hac(y + 0.1 * x, {"x": 1000 * x}, nw_lag=4)
        assert b.coefficients["x"] == pytest.approx(a.coefficients["x"] / 1000, rel=1e-10)
        assert b.tstats["x"] == pytest.approx(a.tstats["x"], rel=1e-8)


@pytest.mark.parametrize("a, b", [(3.0, 5.0), (0.01, -2.0), (250.0, 1e3)])
def test_affine_invariance(a, b):
    x = ar1(80, 500, 0.4) ** 2
    y = normals(81, 500)
    z = a * x + b
    assert T.pearson_with_p(z, y).statistic == pytest.approx(T.pearson_with_p(x, y).statistic, abs=1e-8)
    assert T.acf(z, 3) == pytest.approx(T.acf(x, 3), abs=1e-8)
    assert T.ljung_box(z, 10).statistic == pytest.approx(T.ljung_box(x, 10).statistic, rel=1e-8)
    assert T.arch_lm(z, 5).statistic == pytest.approx(T.arch_lm(x, 5).statistic, rel=1e-8)
    assert T.adf_test(a * x).statistic == pytest.approx(T.adf_test(x).statistic, rel=1e-8)
    assert T.adf_test(z).statistic == pytest.approx(T.adf_test(x).statistic, rel=1e-8)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 100_000))
def test_nonnegative_statistics(seed):
    x = normals(seed, 200)
    assert T.ljung_box(x, 10).statistic >= 0
    assert T.arch_lm(x, 3).statistic >= 0
    assert 0 <= T.granger(x, normals(seed + 1, 200), 2).pvalue <= 1
