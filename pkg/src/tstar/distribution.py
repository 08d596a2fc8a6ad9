"""One-sided stable and tempered stable laws.

A one-sided stable variable ``S`` has Laplace transform ``exp(-s**beta)``
with ``0 < beta < 1``.  Exponential tilting by ``exp(-lam * x)`` gives the
tempered stable law with transform ``exp(-((s + lam)**beta - lam**beta))``;
``lam = 0`` recovers ``S``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import erfc, gamma

from .errors import MomentsUndefinedError, ParameterError
from .lt_inversion import InversionConfig, LTEvaluator, invert_pdf


@dataclass(frozen=True)
class TSParams:
    """Stability index ``beta`` in (0, 1) and tempering rate ``lam >= 0``."""

    beta: float
    lam: float = 0.0

    def __post_init__(self) -> None:
        b, l = float(self.beta), float(self.lam)
        if not (0.0 < b < 1.0):
            raise ParameterError(f"beta must lie in (0, 1), got {self.beta!r}")
        if not (l >= 0.0 and math.isfinite(l)):
            raise ParameterError(f"lambda must be finite and >= 0, got {self.lam!r}")
        object.__setattr__(self, "beta", b)
        object.__setattr__(self, "lam", l)

    @property
    def is_stable(self) -> bool:
        return self.lam == 0.0


class Moments(NamedTuple):
    mean: float
    second_moment: float
    variance: float


def _nonneg(s):
    s = np.asarray(s, dtype=float)
    if np.any(~(s >= 0)):
        raise ParameterError("Laplace argument must be >= 0")
    return s


def _out(s, v):
    return float(v) if np.ndim(s) == 0 else v


def ts_laplace_exponent(p: TSParams, s):
    """``(s + lam)**beta - lam**beta``; works for real or complex ``s``."""
    if p.lam == 0.0:
        return np.asarray(s) ** p.beta
    # expm1/log1p form is exactly 0 at s = 0 and avoids cancellation for small s
    return p.lam**p.beta * np.expm1(p.beta * np.log1p(np.asarray(s) / p.lam))


def ts_laplace(p: TSParams, s):
    """Laplace transform ``E exp(-s T)`` for ``s >= 0``."""
    s = _nonneg(s)
    return _out(s, np.exp(-ts_laplace_exponent(p, s)))


def ts_lt(p: TSParams) -> LTEvaluator:
    """Complex-argument transform of the tempered stable law."""
    log_fn = lambda s: -ts_laplace_exponent(p, s)
    return LTEvaluator(lambda s: np.exp(log_fn(s)), log_fn,
                       label=f"TS(beta={p.beta:g}, lambda={p.lam:g})")


def stable_lt(beta: float, scale: float = 1.0) -> LTEvaluator:
    """Transform ``exp(-scale * s**beta)`` of a one-sided stable law."""
    log_fn = lambda s: -scale * s**beta
    return LTEvaluator(lambda s: np.exp(log_fn(s)), log_fn,
                       label=f"Stable(beta={beta:g}, scale={scale:g})")


def ts_moments(p: TSParams) -> Moments:
    """Mean, raw second moment and variance of the tempered stable law."""
    if p.lam == 0.0:
        raise MomentsUndefinedError("one-sided stable law (lambda = 0) has infinite mean")
    b, l = p.beta, p.lam
    mean = b * l ** (b - 1.0)
    var = b * (1.0 - b) * l ** (b - 2.0)
    return Moments(mean, var + mean * mean, var)


def ts_tail_constant(p: TSParams) -> float:
    b = p.beta
    return gamma(1.0 + b) * math.sin(math.pi * b) * math.exp(p.lam**b) / (b * math.pi)


def ts_tail(p: TSParams, x):
    """Large-``x`` approximation ``c * exp(-lam x) / x**beta`` of ``P(T > x)``.

    Only asymptotic; do not use it in the bulk of the distribution.
    """
    if p.lam == 0.0:
        raise ParameterError("ts_tail needs lambda > 0; use stable_tail for lambda = 0")
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise ParameterError("x must be positive")
    return _out(x, ts_tail_constant(p) * np.exp(-p.lam * x) / x**p.beta)


def ts_survival_asymptote(p: TSParams, x):
    """Leading term ``(beta / lam) c exp(-lam x) / x**(1 + beta)`` of ``P(T > x)``.

    Obtained by tempering the stable density tail ``beta x**(-1-beta) / Gamma(1-beta)``
    and integrating; ``ts_tail`` exceeds it by the factor ``lam x / beta``.
    Relative error is O(1/x).
    """
    x = np.asarray(x, dtype=float)
    return _out(x, np.asarray(ts_tail(p, x)) * p.beta / (p.lam * x))


def stable_tail(beta: float, x):
    """Large-``x`` approximation ``x**-beta / Gamma(1 - beta)`` of ``P(S > x)``."""
    if not (0.0 < beta < 1.0):
        raise ParameterError("beta must lie in (0, 1)")
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise ParameterError("x must be positive")
    return _out(x, x**-beta / gamma(1.0 - beta))


def ts_pdf(p: TSParams, x, cfg: InversionConfig | None = None):
    """Tempered stable density via ``exp(-lam x + lam**beta) f_beta(x)``.

    ``f_beta`` is the one-sided stable density, obtained by numerical
    inversion of ``exp(-s**beta)``.
    """
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise ParameterError("x must be positive")
    f = invert_pdf(stable_lt(p.beta), x, cfg)
    return _out(x, np.exp(-p.lam * x + p.lam**p.beta) * f)


def levy_pdf(c: float, x):
    """Lévy density ``sqrt(c / 2pi) x**-1.5 exp(-c / 2x)``; transform ``exp(-sqrt(2 c s))``."""
    if not c > 0:
        raise ParameterError("Lévy scale must be positive")
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise ParameterError("x must be positive")
    return _out(x, np.sqrt(c / (2.0 * np.pi)) * x**-1.5 * np.exp(-c / (2.0 * x)))


def levy_cdf(c: float, x):
    if not c > 0:
        raise ParameterError("Lévy scale must be positive")
    x = np.asarray(x, dtype=float)
    return _out(x, erfc(np.sqrt(c / (2.0 * x))))
