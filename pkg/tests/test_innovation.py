import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate
from scipy.special import gamma

from tstar.distribution import TSParams, levy_pdf, stable_lt, ts_laplace
from tstar.errors import MomentsUndefinedError, ParameterError
from tstar.innovation import (InnovationParams, error_density, error_density_stable,
                              error_fractional_moment, error_laplace, error_lt, error_moments)
from tstar.lt_inversion import invert_pdf, invert_sf, lt_sample

rhos = st.floats(0.01, 0.99)
betas = st.floats(0.05, 0.95)
lams = st.floats(0.0, 10.0)


@given(rhos, betas, lams)
def test_laplace_at_zero(r, b, l):
    assert error_laplace(InnovationParams.of(r, b, l), 0.0) == 1.0


def test_laplace_stable_case_value():
    assert error_laplace(InnovationParams.of(0.25, 0.5, 0.0), 1.0) == pytest.approx(
        math.exp(-0.5), rel=1e-14)


@given(rhos, betas, st.floats(0.01, 10.0))
def test_marginal_factorises(r, b, l):
    p = InnovationParams.of(r, b, l)
    s = np.linspace(0.1, 10, 12)
    lhs = ts_laplace(p.ts, s)
    rhs = error_laplace(p, s) * ts_laplace(p.ts, r * s)
    assert np.abs(lhs - rhs).max() < 1e-12


@pytest.mark.parametrize("r", [0.0, 1.0, -0.5])
def test_rho_outside_unit_interval_rejected(r):
    with pytest.raises(ParameterError):
        InnovationParams.of(r, 0.5, 1.0)


def test_moments_values():
    m = error_moments(InnovationParams.of(0.5, 0.5, 1.0))
    assert m.mean == pytest.approx(0.25)
    assert m.second_moment == pytest.approx(0.25)
    assert m.variance == pytest.approx(0.1875)


def test_moments_vanish_as_rho_to_one():
    m = error_moments(InnovationParams.of(1 - 1e-9, 0.6, 2.0))
    assert m.mean < 1e-8 and m.variance < 1e-8


def test_moments_undefined_for_stable():
    with pytest.raises(MomentsUndefinedError):
        error_moments(InnovationParams.of(0.5, 0.5, 0.0))


def test_moments_monte_carlo():
    p = InnovationParams.of(0.6, 0.7, 2.0)
    x = lt_sample(error_lt(p), 100_000, seed=7).values
    m = error_moments(p)
    se = math.sqrt(m.variance / x.size)
    assert abs(x.mean() - m.mean) < 3 * se
    assert x.var() == pytest.approx(m.variance, rel=0.05)


@pytest.mark.parametrize("r,b,l", [(0.9, 0.5, 1.0), (0.8, 0.7, 2.0), (0.5, 0.9, 0.5)])
def test_density_matches_inversion(r, b, l):
    p = InnovationParams.of(r, b, l)
    m = error_moments(p)
    x = np.geomspace(m.mean * 0.02, m.mean + 8 * math.sqrt(m.variance), 20)
    d = error_density(p, x)
    assert np.abs(d - invert_pdf(error_lt(p), x)).max() < 1e-6


def test_density_normalised_and_mean():
    p = InnovationParams.of(0.8, 0.7, 2.0)
    f = lambda x: error_density(p, x)
    mass = sum(integrate.quad(f, a, b, limit=200)[0] for a, b in [(0, 0.05), (0.05, 1), (1, 40)])
    assert mass == pytest.approx(1.0, abs=1e-3)
    q = InnovationParams.of(0.5, 0.5, 1.0)
    g = lambda x: x * error_density(q, x)
    mean = sum(integrate.quad(g, a, b, limit=200)[0] for a, b in [(0, 0.1), (0.1, 2), (2, 60)])
    assert mean == pytest.approx(0.25, abs=1e-3)


def test_density_rejects_nonpositive_x():
    with pytest.raises(ParameterError):
        error_density(InnovationParams.of(0.5, 0.5, 1.0), [0.0, 1.0])


def test_stable_density_is_levy_at_half():
    # rho = 1/4, beta = 1/2: innovation LT exp(-sqrt(s)/2) is Levy with scale 1/8
    x = np.geomspace(0.005, 50, 40)
    d = error_density_stable(0.25, 0.5, x)
    assert np.abs(d - levy_pdf(0.125, x)).max() < 1e-5


@pytest.mark.parametrize("r,b", [(0.5, 0.7), (0.3, 0.3), (0.8, 0.9)])
def test_stable_density_matches_inversion(r, b):
    x = np.geomspace(0.01, 20, 25)
    c = 1 - r**b
    d = error_density_stable(r, b, x)
    assert np.abs(d - invert_pdf(stable_lt(b, c), x)).max() < 1e-5


def test_stable_density_mass():
    f = lambda x: error_density_stable(0.5, 0.7, x)
    mass = sum(integrate.quad(f, a, b, limit=300)[0] for a, b in [(0, 0.1), (0.1, 5)])
    mass += invert_sf(stable_lt(0.7, 1 - 0.5**0.7), 5.0)
    assert mass == pytest.approx(1.0, abs=1e-3)


@pytest.mark.parametrize("b", [0.3, 0.7])
def test_printed_exponent_sign_disagrees_with_inversion(b):
    # at b = 1/2 the cosine vanishes and both signs coincide
    x = np.geomspace(0.05, 5, 6)
    oracle = invert_pdf(stable_lt(b, 1 - 0.5**b), x)
    assert np.abs(error_density_stable(0.5, b, x) - oracle).max() < 1e-6
    assert np.abs(error_density_stable(0.5, b, x, _printed_sign=True) - oracle).max() > 0.1


def test_stable_kanter_oracle():
    # Kanter's representation of the positive stable law with LT exp(-s**b)
    b, n = 0.6, 200_000
    g = np.random.default_rng(3)
    u = g.uniform(0, math.pi, n)
    e = g.exponential(size=n)
    a = (np.sin(b * u) ** (b / (1 - b)) * np.sin((1 - b) * u)
         / np.sin(u) ** (1 / (1 - b)))
    s = (a / e) ** ((1 - b) / b)
    r = 0.4
    eps = (1 - r**b) ** (1 / b) * s
    x = np.quantile(eps, [0.1, 0.3, 0.5, 0.7, 0.9])
    # empirical CDF at the quantiles versus the integrated innovation density
    f = lambda t: error_density_stable(r, b, t)
    cdf = [integrate.quad(f, 0, xi, limit=300)[0] for xi in x]
    assert np.allclose(cdf, [0.1, 0.3, 0.5, 0.7, 0.9], atol=4e-3)


def test_fractional_moment_stable_closed_form():
    p = InnovationParams.of(0.25, 0.5, 0.0)
    v = error_fractional_moment(p, 0.25)
    assert v == pytest.approx(gamma(0.5) / gamma(0.75) * 0.5**0.5, rel=1e-12)
    with pytest.raises(MomentsUndefinedError):
        error_fractional_moment(p, 0.5)
    with pytest.raises(ParameterError):
        error_fractional_moment(p, 0.0)


def test_fractional_moment_small_order_tends_to_one():
    p = InnovationParams.of(0.6, 0.7, 1.5)
    assert error_fractional_moment(p, 1e-4) == pytest.approx(1.0, abs=1e-3)


def test_fractional_moment_continuous_at_zero_tempering():
    closed = error_fractional_moment(InnovationParams.of(0.6, 0.7, 0.0), 0.3)
    numeric = error_fractional_moment(InnovationParams.of(0.6, 0.7, 1e-8), 0.3)
    assert numeric == pytest.approx(closed, abs=1e-3)


def test_fractional_moment_gap_scales_with_tempering():
    # tempering removes tail mass beyond ~1/lam, so the gap is O(lam**(b - q))
    closed = error_fractional_moment(InnovationParams.of(0.25, 0.5, 0.0), 0.25)
    lam = np.array([1e-4, 1e-6, 1e-8])
    gap = np.array([closed - error_fractional_moment(InnovationParams.of(0.25, 0.5, l), 0.25)
                    for l in lam])
    scaled = gap / lam**0.25
    assert np.all(gap > 0)
    assert np.ptp(scaled) < 0.02 * scaled.mean()


def test_printed_fractional_integrand_breaks_continuity():
    closed = error_fractional_moment(InnovationParams.of(0.25, 0.5, 0.0), 0.25)
    printed = error_fractional_moment(InnovationParams.of(0.25, 0.5, 1e-8), 0.25,
                                      _printed_integrand=True)
    assert abs(printed - closed) > 0.1


def test_fractional_moment_against_density():
    p = InnovationParams.of(0.5, 0.6, 1.0)
    q = 0.4
    f = lambda x: x**q * error_density(p, x)
    direct = sum(integrate.quad(f, a, b, limit=200)[0] for a, b in [(0, 0.1), (0.1, 3), (3, 80)])
    assert error_fractional_moment(p, q) == pytest.approx(direct, abs=1e-5)


def test_fractional_moment_monte_carlo():
    p = InnovationParams.of(0.25, 0.5, 0.0)
    x = lt_sample(error_lt(p), 200_000, seed=11)
    mc = np.mean(x.values**0.25)
    assert mc == pytest.approx(error_fractional_moment(p, 0.25), rel=0.02)


def test_innovation_ks_against_density_cdf():
    p = InnovationParams.of(0.7, 0.6, 1.0)
    x = lt_sample(error_lt(p), 2000, seed=5).values
    grid = np.quantile(x, [0.25, 0.5, 0.75])
    f = lambda t: error_density(p, t)
    cdf = np.array([integrate.quad(f, 0, g, limit=200)[0] for g in grid])
    # binomial s.e. of an empirical quartile is about 0.01
    assert np.allclose(cdf, [0.25, 0.5, 0.75], atol=0.04)
