"""AR(1) simulators and process-level quantities.

Two models share the recursion ``X_i = rho X_{i-1} + eps_i``:

* ``TAR_MARGINAL``: the stationary marginal is tempered stable and the
  innovation law is whatever makes that true (see ``innovation``).
* ``TS_INNOVATION``: the innovations are i.i.d. tempered stable, so
  ``X_n = sum_i rho**i eps_{n-i}`` is only asymptotically stationary.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy.signal import lfilter
from scipy.special import gamma

from .distribution import TSParams, ts_laplace_exponent, ts_lt, ts_moments
from .errors import MomentsUndefinedError, ParameterError
from .innovation import InnovationParams, error_lt
from .lt_inversion import (DEFAULT_CONFIG, InversionConfig, QuantileTable,
                           build_quantile_table, lt_sample)
from .series import Series


class ModelKind(str, enum.Enum):
    TAR_MARGINAL = "tar"
    TS_INNOVATION = "arts"


@dataclass(frozen=True)
class ModelParams:
    kind: ModelKind
    rho: float
    ts: TSParams

    def __post_init__(self) -> None:
        kind = ModelKind(self.kind)
        r = float(self.rho)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "rho", r)
        if kind is ModelKind.TAR_MARGINAL and not (0.0 < r < 1.0):
            raise ParameterError(f"TAR model needs 0 < rho < 1, got {self.rho!r}")
        if kind is ModelKind.TS_INNOVATION and not (-1.0 < r < 1.0):
            raise ParameterError(f"AR(1) with TS innovations needs |rho| < 1, got {self.rho!r}")

    @classmethod
    def of(cls, kind: ModelKind | str, rho: float, beta: float, lam: float) -> "ModelParams":
        return cls(ModelKind(kind), rho, TSParams(beta, lam))

    @property
    def beta(self) -> float:
        return self.ts.beta

    @property
    def lam(self) -> float:
        return self.ts.lam


# Tables depend only on the law and the inversion settings, so one table
# serves every draw (and every replicate) with the same parameters.
@lru_cache(maxsize=64)
def _ts_table(beta: float, lam: float, cfg: InversionConfig) -> QuantileTable:
    return build_quantile_table(ts_lt(TSParams(beta, lam)), cfg)


@lru_cache(maxsize=64)
def _error_table(rho: float, beta: float, lam: float, cfg: InversionConfig) -> QuantileTable:
    return build_quantile_table(error_lt(InnovationParams.of(rho, beta, lam)), cfg)


def _streams(seed) -> list[np.random.SeedSequence]:
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return ss.spawn(2)


def _check_n(n: int) -> int:
    if int(n) != n or n < 1:
        raise ParameterError(f"n must be a positive integer, got {n!r}")
    return int(n)


def _ar1(rho: float, eps: np.ndarray) -> np.ndarray:
    # X_0 = eps_0, X_i = rho X_{i-1} + eps_i
    return lfilter([1.0], [1.0, -rho], eps)


def tar_innovations(p: ModelParams, n: int, seed,
                    cfg: InversionConfig | None = None) -> tuple[float, np.ndarray]:
    """Initial value and the ``n - 1`` innovations that drive a TAR path."""
    if p.kind is not ModelKind.TAR_MARGINAL:
        raise ParameterError("tar_innovations needs a TAR_MARGINAL model")
    n = _check_n(n)
    cfg = cfg or DEFAULT_CONFIG
    s0, s1 = _streams(seed)
    x0 = lt_sample(ts_lt(p.ts), 1, s0, cfg, _ts_table(p.beta, p.lam, cfg)).values[0]
    if n == 1:
        return float(x0), np.empty(0)
    table = _error_table(p.rho, p.beta, p.lam, cfg)
    eps = lt_sample(error_lt(InnovationParams(p.rho, p.ts)), n - 1, s1, cfg, table)
    return float(x0), eps.values.copy()


def simulate_tar(p: ModelParams, n: int, seed, cfg: InversionConfig | None = None) -> Series:
    """TAR(1) path of length ``n`` started from the stationary marginal.

    No burn-in is needed: ``X_0`` is an exact draw from the tempered
    stable law and the innovation law preserves it.
    """
    x0, eps = tar_innovations(p, n, seed, cfg)
    return Series(_ar1(p.rho, np.concatenate([[x0], eps])))


def arts_innovations(p: ModelParams, n: int, seed,
                     cfg: InversionConfig | None = None) -> np.ndarray:
    """The i.i.d. tempered stable innovations ``eps_0, ..., eps_{n-1}``."""
    if p.kind is not ModelKind.TS_INNOVATION:
        raise ParameterError("arts_innovations needs a TS_INNOVATION model")
    n = _check_n(n)
    cfg = cfg or DEFAULT_CONFIG
    s0, _ = _streams(seed)
    return lt_sample(ts_lt(p.ts), n, s0, cfg, _ts_table(p.beta, p.lam, cfg)).values.copy()


def simulate_arts(p: ModelParams, n: int, seed, cfg: InversionConfig | None = None) -> Series:
    """AR(1) path with tempered stable innovations, ``X_0 = eps_0``."""
    if p.kind is ModelKind.TS_INNOVATION and p.rho <= 0.0:
        warnings.warn("simulation with rho <= 0 is experimental: values may be negative",
                      stacklevel=2)
    return Series(_ar1(p.rho, arts_innovations(p, n, seed, cfg)))


def simulate(p: ModelParams, n: int, seed, cfg: InversionConfig | None = None) -> Series:
    if p.kind is ModelKind.TAR_MARGINAL:
        return simulate_tar(p, n, seed, cfg)
    return simulate_arts(p, n, seed, cfg)


def moving_average(rho: float, eps: np.ndarray) -> np.ndarray:
    """``X_n = sum_{i<=n} rho**i eps_{n-i}`` evaluated directly, O(n^2)."""
    eps = np.asarray(eps, dtype=float)
    k = np.arange(eps.size)
    lags = k[:, None] - k[None, :]
    w = np.where(lags >= 0, float(rho) ** np.maximum(lags, 0), 0.0)
    return w @ eps


def theoretical_acf(rho: float, r: int) -> float:
    """Lag-``r`` autocorrelation ``rho**r`` of a stationary AR(1)."""
    if r < 0:
        raise ParameterError("lag must be >= 0")
    return float(rho) ** int(r)


def arts_laplace(p: ModelParams, n: int, s):
    """Laplace transform of ``X_n`` for the TS-innovation model.

    Product over ``i = 0..n`` of the innovation transform at ``rho**i s``:
    ``exp((n + 1) lam**b - sum_i (lam + rho**i s)**b)``.
    """
    if n < 0:
        raise ParameterError("n must be >= 0")
    s = np.asarray(s, dtype=float)
    if np.any(~(s >= 0)):
        raise ParameterError("Laplace argument must be >= 0")
    w = p.rho ** np.arange(int(n) + 1)
    # summing the exponent termwise keeps LT(0) = 1 exact
    expo = -ts_laplace_exponent(p.ts, np.multiply.outer(s, w)).sum(axis=-1)
    v = np.exp(expo)
    return float(v) if v.ndim == 0 else v


def arts_moment_q(rho: float, beta: float, n: int, q: float) -> float:
    """``E X_n**q`` for stable innovations (``lam = 0``), ``0 < q < beta``.

    ``X_n`` is stable with scale ``sum_i rho**(i beta)``, hence
    ``Gamma(1 - q/b) (sum_i rho**(i b))**(q/b) / Gamma(1 - q)``.
    """
    TSParams(beta)
    if not (0.0 <= rho < 1.0):
        raise ParameterError("closed form needs 0 <= rho < 1")
    if n < 0:
        raise ParameterError("n must be >= 0")
    if not q > 0:
        raise ParameterError("q must be positive")
    if q >= beta:
        raise MomentsUndefinedError(f"E X**q diverges for q >= beta (q={q}, beta={beta})")
    scale = float(np.sum(rho ** (beta * np.arange(int(n) + 1))))
    return gamma(1.0 - q / beta) * scale ** (q / beta) / gamma(1.0 - q)


class Dispersion(NamedTuple):
    value: float
    under_dispersed: bool


def index_of_dispersion(p: ModelParams) -> Dispersion:
    """Stationary variance-to-mean ratio ``(1 - b) / (lam (1 + rho))``."""
    if p.lam == 0.0:
        raise MomentsUndefinedError("index of dispersion undefined for lambda = 0")
    v = (1.0 - p.beta) / (p.lam * (1.0 + p.rho))
    return Dispersion(v, v < 1.0)


def stationary_moments(p: ModelParams) -> tuple[float, float]:
    """Stationary (mean, variance) of ``X`` under either model."""
    m = ts_moments(p.ts)
    if p.kind is ModelKind.TAR_MARGINAL:
        return m.mean, m.variance
    return m.mean / (1.0 - p.rho), m.variance / (1.0 - p.rho**2)
