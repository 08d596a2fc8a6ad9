"""Diagnostics for the AR(1) pipeline: ACF, PACF, ADF, two-sample K-S and Mann-Whitney."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.stats import kstwobign, norm

from .errors import DegenerateSeriesError, NumericError, ParameterError
from .series import Series


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    method: str
    alpha: float = 0.05
    details: dict[str, Any] = field(default_factory=dict)

    __test__ = False  # keep pytest from collecting this class

    def __post_init__(self) -> None:
        if not (0.0 <= self.p_value <= 1.0):
            raise NumericError("p-value outside [0, 1]", p_value=self.p_value)

    @property
    def reject(self) -> bool:
        return self.p_value < self.alpha

    def to_dict(self) -> dict[str, Any]:
        return {"method": self.method, "statistic": self.statistic, "p_value": self.p_value,
                "alpha": self.alpha, "reject": self.reject, **self.details}


def _vals(x) -> np.ndarray:
    return np.asarray(Series.of(x).values, dtype=float)


def acf(x: Series, max_lag: int) -> np.ndarray:
    """Sample autocorrelations at lags ``0..max_lag`` (covariances divided by n)."""
    v = _vals(x)
    n = v.size
    if not (0 <= max_lag < n):
        raise ParameterError(f"max_lag must lie in [0, {n - 1}]")
    c = v - v.mean()
    c0 = c @ c
    if np.ptp(v) == 0.0 or c0 == 0.0:
        raise DegenerateSeriesError("constant series has no autocorrelation")
    return np.array([1.0] + [c[:-k] @ c[k:] / c0 for k in range(1, max_lag + 1)])


def pacf(x: Series, max_lag: int) -> np.ndarray:
    """Partial autocorrelations at lags ``0..max_lag`` by Durbin-Levinson."""
    n = len(Series.of(x))
    if not (1 <= max_lag < n / 4):
        raise ParameterError(f"max_lag must lie in [1, n/4) = [1, {n / 4:g})")
    r = acf(x, max_lag)
    out = np.empty(max_lag + 1)
    out[0] = 1.0
    phi = np.zeros(0)
    v = 1.0
    for k in range(1, max_lag + 1):
        a = (r[k] - phi @ r[k - 1:0:-1]) / v
        phi = np.concatenate([phi - a * phi[::-1], [a]])
        v *= 1.0 - a * a
        out[k] = a
    return out


# Dickey-Fuller, constant only, one regressor.  Approximate p-values
# (MacKinnon 1994) and finite-sample critical values (MacKinnon 2010).
_TAU_MIN, _TAU_MAX, _TAU_STAR = -18.83, 2.74, -1.61
_SMALLP = (2.1659, 1.4412, 3.8269e-2)
_LARGEP = (1.7339, 9.3202e-1, -1.2745e-1, -1.0368e-2)
_CRIT = {"1%": (-3.43035, -6.5393, -16.786, -79.433),
         "5%": (-2.86154, -2.8903, -4.234, -40.040),
         "10%": (-2.56677, -1.5384, -2.809, 0.0)}


def df_pvalue(tau: float) -> float:
    """Asymptotic p-value of the constant-case Dickey-Fuller t statistic."""
    if tau > _TAU_MAX:
        return 1.0
    if tau < _TAU_MIN:
        return 0.0
    c = _SMALLP if tau <= _TAU_STAR else _LARGEP
    return float(norm.cdf(np.polynomial.polynomial.polyval(tau, c)))


def df_critical_values(nobs: int) -> dict[str, float]:
    t = 1.0 / nobs
    return {k: b[0] + b[1] * t + b[2] * t * t + b[3] * t**3 for k, b in _CRIT.items()}


def _adf_regression(v: np.ndarray, p: int):
    dy = np.diff(v)
    m = dy.size - p
    cols = [np.ones(m), v[p:-1]] + [dy[p - j:dy.size - j] for j in range(1, p + 1)]
    X = np.column_stack(cols)
    y = dy[p:]
    beta, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    if rank < X.shape[1]:
        raise NumericError("ADF regression is singular", lags=p, rank=int(rank))
    resid = y - X @ beta
    dof = m - X.shape[1]
    if dof <= 0:
        raise NumericError("ADF regression has no residual degrees of freedom", lags=p)
    s2 = resid @ resid / dof
    cov = s2 * np.linalg.inv(X.T @ X)
    return beta / np.sqrt(np.diag(cov)), m


def adf_test(x: Series, lag_order: int | str = "auto", alpha: float = 0.05) -> TestResult:
    """Augmented Dickey-Fuller test with a constant.

    ``lag_order="auto"`` starts at ``floor(12 (n/100)**0.25)`` lags and
    drops the last one while its |t| is below 1.645, all candidates fitted
    on the same observations; the chosen lag is then refitted on the full
    sample.
    """
    v = _vals(x)
    n = v.size
    if n < 30:
        raise ParameterError("ADF test needs n >= 30")
    if np.ptp(v) == 0.0:
        raise DegenerateSeriesError("constant series")
    if lag_order == "auto":
        pmax = min(int(12.0 * (n / 100.0) ** 0.25), n // 2 - 2)
        # candidate lags are compared on the common sample left by pmax
        p = pmax
        while p > 0 and abs(_adf_regression(v[pmax - p:], p)[0][-1]) < 1.645:
            p -= 1
    else:
        p = int(lag_order)
        if p < 0:
            raise ParameterError("lag_order must be >= 0")
    tvals, nobs = _adf_regression(v, p)
    tau = float(tvals[1])
    return TestResult(tau, df_pvalue(tau), "ADF (constant)", alpha,
                      {"lags": p, "nobs": nobs, "critical_values": df_critical_values(nobs)})


def _two(a, b) -> tuple[np.ndarray, np.ndarray]:
    a, b = np.asarray(a, dtype=float).ravel(), np.asarray(b, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise ParameterError("both samples must be nonempty")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ParameterError("samples must be finite")
    return a, b


def ks_two_sample(a, b, alpha: float = 0.05) -> TestResult:
    """Two-sided two-sample Kolmogorov-Smirnov test, asymptotic p-value."""
    a, b = _two(a, b)
    a, b = np.sort(a), np.sort(b)
    pts = np.concatenate([a, b])
    d = float(np.max(np.abs(np.searchsorted(a, pts, side="right") / a.size
                            - np.searchsorted(b, pts, side="right") / b.size)))
    en = a.size * b.size / (a.size + b.size)
    p = float(kstwobign.sf(math.sqrt(en) * d)) if d > 0 else 1.0
    return TestResult(d, min(max(p, 0.0), 1.0), "two-sample Kolmogorov-Smirnov", alpha,
                      {"n_a": int(a.size), "n_b": int(b.size)})


def _midranks(z: np.ndarray) -> np.ndarray:
    order = np.argsort(z, kind="mergesort")
    zs = z[order]
    ranks = np.empty(z.size)
    start = 0
    for end in range(1, z.size + 1):
        if end == z.size or zs[end] != zs[start]:
            ranks[order[start:end]] = 0.5 * (start + end + 1)
            start = end
    return ranks


def _exact_rank_sum_counts(doubled: np.ndarray, k: int) -> np.ndarray:
    """Number of size-``k`` subsets of ``doubled`` with each possible sum."""
    total = int(doubled.sum())
    ways = np.zeros((k + 1, total + 1), dtype=np.int64)
    ways[0, 0] = 1
    for r in doubled.astype(int):
        for j in range(k, 0, -1):
            ways[j, r:] = ways[j, r:] + ways[j - 1, :total + 1 - r]
    return ways[k]


def mann_whitney_u(a, b, alpha: float = 0.05, exact_max: int = 20) -> TestResult:
    """Two-sided Mann-Whitney U test; ``statistic`` is ``U_a``.

    ``U_a`` counts pairs with ``a > b`` (ties count one half).  Exact
    enumeration over the observed midranks when both samples have at most
    ``exact_max`` points; otherwise a normal approximation with tie
    correction and continuity correction.
    """
    a, b = _two(a, b)
    na, nb = a.size, b.size
    ranks = _midranks(np.concatenate([a, b]))
    u_a = float(ranks[:na].sum() - na * (na + 1) / 2.0)
    mu = na * nb / 2.0
    details = {"n_a": int(na), "n_b": int(nb), "u_b": na * nb - u_a}
    if na <= exact_max and nb <= exact_max:
        doubled = np.rint(2.0 * ranks).astype(int)
        counts = _exact_rank_sum_counts(doubled, na)
        sums = np.arange(counts.size)
        # doubled U = doubled rank sum - na (na + 1)
        dev = np.abs(sums - na * (na + 1) - 2.0 * mu)
        obs = abs(2.0 * u_a - 2.0 * mu)
        p = float(sum(counts[dev >= obs - 1e-9]) / sum(counts))
        details["method_detail"] = "exact"
    else:
        n = na + nb
        _, t = np.unique(ranks, return_counts=True)
        tie = float(np.sum(t**3 - t)) / (n * (n - 1))
        var = na * nb / 12.0 * ((n + 1) - tie)
        if var <= 0:
            p = 1.0
        else:
            z = (abs(u_a - mu) - 0.5) / math.sqrt(var)
            p = float(min(1.0, 2.0 * norm.sf(z))) if z > 0 else 1.0
        details["method_detail"] = "normal"
    return TestResult(u_a, min(max(p, 0.0), 1.0), "Mann-Whitney U", alpha, details)
