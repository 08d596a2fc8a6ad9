import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats as sps

from tstar.errors import DegenerateSeriesError, ParameterError
from tstar.processes import ModelParams, simulate
from tstar.stats import (acf, adf_test, df_critical_values, df_pvalue, ks_two_sample,
                         mann_whitney_u, pacf)

samples = st.lists(st.floats(-1e3, 1e3, allow_subnormal=False), min_size=1, max_size=25)


def test_acf_lag_zero_and_range(rng):
    x = rng.normal(size=300)
    r = acf(x, 20)
    assert r[0] == 1.0 and np.all(np.abs(r) <= 1)


def test_acf_matches_definition(rng):
    x = rng.normal(size=50)
    c = x - x.mean()
    assert acf(x, 3)[3] == pytest.approx((c[:-3] @ c[3:]) / (c @ c))


def test_acf_white_noise(rng):
    x = rng.normal(size=10_000)
    assert np.all(np.abs(acf(x, 10)[1:]) < 3 / math.sqrt(x.size))


def test_acf_errors():
    with pytest.raises(DegenerateSeriesError):
        acf(np.ones(20), 3)
    with pytest.raises(ParameterError):
        acf(np.arange(5.0), 5)


def test_pacf_first_lag_is_acf(rng):
    x = rng.normal(size=200).cumsum()
    assert pacf(x, 5)[1] == acf(x, 1)[1]


def test_pacf_ar1_cutoff():
    x = simulate(ModelParams.of("arts", 0.8, 0.6, 1.0), 10_000, seed=12).values
    p = pacf(x, 10)
    assert p[1] == pytest.approx(0.8, abs=0.03)
    assert np.all(np.abs(p[2:]) < 3 / math.sqrt(x.size))


def test_pacf_white_noise(rng):
    x = rng.normal(size=5_000)
    assert np.all(np.abs(pacf(x, 15)[1:]) < 3 / math.sqrt(x.size))


def test_pacf_lag_bound(rng):
    with pytest.raises(ParameterError):
        pacf(rng.normal(size=40), 10)


def test_pacf_against_yule_walker_solve(rng):
    # last coefficient of the order-k Yule-Walker system equals pacf(k)
    x = rng.normal(size=400).cumsum()
    r = acf(x, 6)
    R = np.array([[r[abs(i - j)] for j in range(6)] for i in range(6)])
    phi = np.linalg.solve(R, r[1:])
    assert pacf(x, 6)[6] == pytest.approx(phi[-1], abs=1e-10)


def test_adf_against_statsmodels(rng):
    tsa = pytest.importorskip("statsmodels.tsa.stattools")
    for k in range(5):
        x = np.cumsum(rng.normal(size=300)) * 0.1 + rng.normal(size=300) * (k / 4)
        mine = adf_test(x)
        # the starting lag here is floor(12 (n/100)**0.25); statsmodels defaults to ceil
        ref = tsa.adfuller(x, maxlag=int(12 * 3**0.25), regression="c", autolag="t-stat")
        assert mine.statistic == pytest.approx(ref[0], abs=1e-8)
        assert mine.p_value == pytest.approx(ref[1], abs=1e-8)
        assert mine.details["lags"] == ref[2]
        for key, v in ref[4].items():
            assert mine.details["critical_values"][key] == pytest.approx(v, abs=1e-6)


def test_adf_fixed_lag_against_statsmodels(rng):
    tsa = pytest.importorskip("statsmodels.tsa.stattools")
    x = rng.normal(size=200)
    ref = tsa.adfuller(x, maxlag=3, regression="c", autolag=None)
    mine = adf_test(x, lag_order=3)
    assert mine.statistic == pytest.approx(ref[0], abs=1e-9)
    assert mine.details["nobs"] == ref[3]


def test_adf_embedded_values():
    # response-surface constants: 5% critical value at nobs = 100
    assert df_critical_values(100)["5%"] == pytest.approx(-2.86154 - 0.028903 - 0.0004234
                                                         - 4.0040e-5, abs=1e-9)
    assert df_pvalue(-2.86) == pytest.approx(0.05, abs=0.002)
    assert df_pvalue(-30.0) == 0.0 and df_pvalue(3.0) == 1.0


def test_adf_pvalue_monotone():
    tau = np.linspace(-20, 3, 500)
    p = np.array([df_pvalue(t) for t in tau])
    assert np.all(np.diff(p) >= 0) and p[0] == 0.0 and p[-1] == 1.0


def test_adf_input_checks(rng):
    with pytest.raises(ParameterError):
        adf_test(rng.normal(size=20))
    with pytest.raises(DegenerateSeriesError):
        adf_test(np.ones(100))
    with pytest.raises(ParameterError):
        adf_test(rng.normal(size=100), lag_order=-1)


@pytest.mark.slow
def test_adf_calibration():
    g = np.random.default_rng(2026)
    walk = sum(adf_test(np.cumsum(g.normal(size=500))).p_value > 0.05 for _ in range(200))
    noise = sum(adf_test(g.normal(size=500)).p_value < 0.05 for _ in range(200))
    assert walk >= 180 and noise >= 180


def test_ks_identical_samples(rng):
    a = rng.normal(size=50)
    r = ks_two_sample(a, a)
    assert r.statistic == 0.0 and r.p_value == 1.0 and not r.reject


def test_ks_separated(rng):
    r = ks_two_sample(rng.uniform(size=1000), rng.uniform(0.5, 1.5, size=1000))
    assert r.p_value < 1e-6 and r.reject


def test_ks_against_scipy(rng):
    for n_a, n_b in [(200, 200), (150, 310), (1000, 40)]:
        a, b = rng.normal(size=n_a), rng.normal(0.1, 1.0, size=n_b)
        ref = sps.ks_2samp(a, b, method="asymp")
        r = ks_two_sample(a, b)
        assert r.statistic == pytest.approx(ref.statistic, abs=1e-15)
        # scipy's asymptotic mode uses the same Kolmogorov limit law
        assert r.p_value == pytest.approx(
            sps.kstwobign.sf(math.sqrt(n_a * n_b / (n_a + n_b)) * ref.statistic), rel=1e-12)


@given(samples, samples)
def test_ks_symmetric_and_bounded(a, b):
    r1, r2 = ks_two_sample(a, b), ks_two_sample(b, a)
    assert r1.statistic == r2.statistic and 0 <= r1.statistic <= 1
    assert r1.p_value == r2.p_value


def test_empty_samples_rejected():
    for f in (ks_two_sample, mann_whitney_u):
        with pytest.raises(ParameterError):
            f([], [1.0])
        with pytest.raises(ParameterError):
            f([1.0, math.nan], [1.0])


def test_mwu_complete_separation():
    r = mann_whitney_u([1, 2, 3], [4, 5, 6])
    assert r.statistic == 0.0 and r.details["u_b"] == 9.0
    assert r.p_value == pytest.approx(0.1)  # 2 of 20 orderings are as extreme


def test_mwu_identical_samples():
    r = mann_whitney_u([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
    assert r.p_value == 1.0


def test_mwu_exact_against_scipy_without_ties(rng):
    a, b = rng.normal(size=9), rng.normal(0.5, 1, size=12)
    ref = sps.mannwhitneyu(a, b, alternative="two-sided", method="exact")
    r = mann_whitney_u(a, b)
    assert r.statistic == ref.statistic
    assert r.p_value == pytest.approx(ref.pvalue, rel=1e-12)


def test_mwu_exact_with_ties_by_enumeration():
    a = [1, 2, 2, 3, 5]
    b = [2, 3, 3, 4, 6, 6]
    r = mann_whitney_u(a, b)
    pooled = np.array(a + b, float)
    ranks = sps.rankdata(pooled)
    mu = len(a) * len(b) / 2
    obs = abs(ranks[:5].sum() - 15 - mu)
    count = total = 0
    for idx in itertools.combinations(range(11), 5):
        total += 1
        count += abs(ranks[list(idx)].sum() - 15 - mu) >= obs - 1e-9
    assert r.p_value == pytest.approx(count / total, rel=1e-12)


def test_mwu_normal_against_scipy(rng):
    a = np.round(rng.normal(size=80), 1)
    b = np.round(rng.normal(0.2, 1, size=95), 1)
    ref = sps.mannwhitneyu(a, b, alternative="two-sided", method="asymptotic",
                           use_continuity=True)
    r = mann_whitney_u(a, b)
    assert r.details["method_detail"] == "normal"
    assert r.statistic == ref.statistic
    assert r.p_value == pytest.approx(ref.pvalue, rel=1e-10)


@given(samples, samples)
def test_mwu_u_sum(a, b):
    r = mann_whitney_u(a, b)
    assert r.statistic + r.details["u_b"] == pytest.approx(len(a) * len(b))
    assert 0 <= r.p_value <= 1


def test_result_serialises():
    d = ks_two_sample([1, 2, 3], [1.5, 2.5]).to_dict()
    assert set(d) >= {"method", "statistic", "p_value", "alpha", "reject"}


@pytest.mark.slow
def test_null_calibration_of_two_sample_tests():
    from tstar.distribution import TSParams, ts_lt
    from tstar.lt_inversion import lt_sample

    draws = lt_sample(ts_lt(TSParams(0.91, 2.9)), 500 * 400, seed=99).values.reshape(500, 400)
    ks = np.mean([ks_two_sample(d[:200], d[200:]).reject for d in draws])
    mw = np.mean([mann_whitney_u(d[:200], d[200:]).reject for d in draws])
    # binomial s.d. of a 5% rate over 500 replicates is about 1%
    assert 0.02 <= ks <= 0.08 and 0.02 <= mw <= 0.08
