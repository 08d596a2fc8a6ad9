"""Numerical Laplace-transform inversion and inverse-CDF sampling.

Densities, distribution functions and survival functions of positive
random variables are recovered from their Laplace transforms with the
Euler-accelerated Bromwich (Fourier series) method of Abate and Whitt.
The same machinery backs a monotone quantile table and a vectorised,
safeguarded Newton solver that turns uniforms into i.i.d. draws.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.optimize import brentq
from scipy.special import comb

from .errors import NumericError, ParameterError
from .series import Series

_CHUNK = 8192
P_MIN = 1e-4
P_MAX = 1.0 - 1e-4


@dataclass(frozen=True)
class InversionConfig:
    """Tolerances and effort controls for inversion and sampling.

    ``abscissa_shift`` is the scaled Bromwich abscissa ``A``: the contour
    sits at ``Re s = A / (2x)`` and the aliasing error is about ``exp(-A)``.
    ``series_terms`` partial sums are averaged by a binomial Euler
    transform of order ``euler_order``.  ``truncation_bound`` caps the
    envelope exponent ``w * x`` at which the infinite branch-cut integrals
    of the innovation density are cut off.
    """

    abscissa_shift: float = 22.0
    series_terms: int = 40
    euler_order: int = 11
    truncation_bound: float = 60.0
    abs_tol: float = 1e-8
    rel_tol: float = 1e-6
    quantile_grid_size: int = 256
    max_refinements: int = 2

    def __post_init__(self) -> None:
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ParameterError("abs_tol and rel_tol must be positive")
        if self.series_terms < 10:
            raise ParameterError("series_terms must be at least 10")
        if self.quantile_grid_size < 64:
            raise ParameterError("quantile_grid_size must be at least 64")
        if not self.abscissa_shift > 0:
            raise ParameterError("abscissa_shift must be positive")
        if self.euler_order < 1:
            raise ParameterError("euler_order must be at least 1")
        if not self.truncation_bound > 0:
            raise ParameterError("truncation_bound must be positive")


DEFAULT_CONFIG = InversionConfig()


@dataclass(frozen=True)
class LTEvaluator:
    """Laplace transform of a probability law on ``[support_lower, inf)``.

    ``fn`` maps complex arrays to complex arrays.  ``log_fn``, when given,
    returns the logarithm of the transform and lets ``one_minus`` avoid
    cancellation for small ``|s|``.
    """

    fn: Callable[[np.ndarray], np.ndarray]
    log_fn: Callable[[np.ndarray], np.ndarray] | None = None
    support_lower: float = 0.0
    label: str = "lt"

    def __call__(self, s):
        return self.fn(np.asarray(s, dtype=complex))

    def one_minus(self, s):
        s = np.asarray(s, dtype=complex)
        if self.log_fn is not None:
            return -np.expm1(self.log_fn(s))
        return 1.0 - self.fn(s)

    def evaluate(self, s, need_phi: bool = True, need_one_minus: bool = False):
        """``(lt(s), 1 - lt(s))`` sharing one evaluation of the exponent."""
        if self.log_fn is None:
            phi = self.fn(s)
            return phi, (1.0 - phi) if need_one_minus else None
        lp = self.log_fn(s)
        phi = np.exp(lp) if need_phi else None
        return phi, (-np.expm1(lp)) if need_one_minus else None


@lru_cache(maxsize=32)
def _euler_weights(n: int, m: int) -> np.ndarray:
    w = np.ones(n + m + 1)
    w[0] = 0.5
    binom = np.array([comb(m, i, exact=True) for i in range(m + 1)], dtype=float)
    for j in range(1, m + 1):
        w[n + j] = binom[j:].sum() / 2.0**m
    w *= (-1.0) ** np.arange(n + m + 1)
    w.setflags(write=False)
    return w


def _as_positive(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0):
        raise ParameterError("inversion points must be finite and positive")
    return arr


def _euler_pass(lt: LTEvaluator, x: np.ndarray, cfg: InversionConfig, n: int,
                kinds: tuple[str, ...]) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """One Euler summation at ``n`` terms; returns (estimate, error) per kind."""
    m = cfg.euler_order
    a = cfg.abscissa_shift
    k = np.arange(n + m + 2)
    w_lo = _euler_weights(n, m)
    w_hi = _euler_weights(n + 1, m)
    out = {kind: (np.empty_like(x), np.empty_like(x)) for kind in kinds}
    for start in range(0, x.size, _CHUNK):
        xs = x[start:start + _CHUNK]
        s = (a + 2j * np.pi * k[None, :]) / (2.0 * xs[:, None])
        scale = np.exp(a / 2.0) / xs
        phi, one_minus = lt.evaluate(s, need_phi="pdf" in kinds or "cdf" in kinds,
                                     need_one_minus="sf" in kinds)
        for kind in kinds:
            if kind == "pdf":
                vals = phi.real
            elif kind == "cdf":
                vals = (phi / s).real
            else:
                vals = (one_minus / s).real
            # row-wise sums keep each element independent of the batch size
            lo = scale * (vals[:, :-1] * w_lo).sum(axis=1)
            hi = scale * (vals * w_hi).sum(axis=1)
            est, err = out[kind]
            est[start:start + xs.size] = hi
            err[start:start + xs.size] = np.abs(hi - lo)
    return out


def _invert(lt: LTEvaluator, x, cfg: InversionConfig | None,
            kinds: tuple[str, ...]) -> dict[str, np.ndarray]:
    cfg = cfg or DEFAULT_CONFIG
    x = _as_positive(x)
    shape = x.shape
    flat = x.ravel()
    res = _euler_pass(lt, flat, cfg, cfg.series_terms, kinds)
    est = {k: v[0] for k, v in res.items()}
    err = {k: v[1] for k, v in res.items()}
    n = cfg.series_terms
    for attempt in range(cfg.max_refinements + 1):
        bad = np.zeros(flat.size, dtype=bool)
        for kind in kinds:
            tol = np.maximum(cfg.abs_tol, cfg.rel_tol * np.abs(est[kind]))
            bad |= ~(err[kind] <= tol)
        if not bad.any():
            break
        if attempt == cfg.max_refinements:
            worst = int(np.flatnonzero(bad)[0])
            raise NumericError(
                f"Laplace inversion did not converge for {lt.label}",
                x=float(flat[worst]),
                residual={k: float(err[k][worst]) for k in kinds},
                series_terms=n,
                failures=int(bad.sum()),
            )
        n *= 2
        redo = _euler_pass(lt, flat[bad], cfg, n, kinds)
        for kind in kinds:
            est[kind][bad] = redo[kind][0]
            err[kind][bad] = redo[kind][1]
    out = {}
    for kind in kinds:
        v = est[kind]
        if kind == "pdf":
            neg = v < 0
            # values above -exp(-A) are zero to within the discretization error
            clamped = v < -np.exp(-cfg.abscissa_shift)
            if np.any(v < -np.maximum(cfg.abs_tol, err[kind])):
                raise NumericError(
                    f"inverted density of {lt.label} is negative beyond tolerance",
                    min_value=float(v.min()),
                )
            if v.size >= 100 and clamped.mean() > 0.01:
                raise NumericError(
                    f"{clamped.mean():.1%} of density values clamped for {lt.label}",
                    clamped=int(clamped.sum()),
                )
            v = np.where(neg, 0.0, v)
        else:
            v = np.clip(v, 0.0, 1.0)
        out[kind] = v.reshape(shape)
    return out


def _scalar_or_array(x, v):
    return float(v) if np.ndim(x) == 0 else v


def invert_pdf(lt: LTEvaluator, x, cfg: InversionConfig | None = None):
    """Density at ``x`` (scalar or array) from the Laplace transform ``lt``.

    Raises
    ------
    NumericError
        If the Euler error estimate stays above
        ``max(abs_tol, rel_tol * |f|)`` after ``max_refinements`` doublings.
    """
    return _scalar_or_array(x, _invert(lt, x, cfg, ("pdf",))["pdf"])


def invert_cdf(lt: LTEvaluator, x, cfg: InversionConfig | None = None):
    """Distribution function ``F(x)`` by inverting ``lt(s) / s``."""
    return _scalar_or_array(x, _invert(lt, x, cfg, ("cdf",))["cdf"])


def invert_sf(lt: LTEvaluator, x, cfg: InversionConfig | None = None):
    """Survival function ``1 - F(x)`` by inverting ``(1 - lt(s)) / s``.

    Accurate in relative terms far into the upper tail, where ``1 - F``
    computed from the CDF would be swamped by its absolute error.
    """
    return _scalar_or_array(x, _invert(lt, x, cfg, ("sf",))["sf"])


def invert_all(lt: LTEvaluator, x, cfg: InversionConfig | None = None):
    """Return ``(pdf, cdf, sf)`` at ``x`` sharing one set of transform calls."""
    r = _invert(lt, x, cfg, ("pdf", "cdf", "sf"))
    return r["pdf"], r["cdf"], r["sf"]


@dataclass(frozen=True, eq=False)
class QuantileTable:
    """Monotone grid of ``(probability, quantile)`` pairs.

    Interpolation is cubic Hermite in ``log x``, using the density as the
    slope, which keeps the interpolated CDF within ``abs_tol`` of the
    inverted one between nodes.
    """

    probabilities: np.ndarray
    quantiles: np.ndarray
    densities: np.ndarray
    interpolation: str = "cubic-hermite-logx"

    def __post_init__(self) -> None:
        for name in ("probabilities", "quantiles", "densities"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        p, q = self.probabilities, self.quantiles
        if not (np.all(np.diff(p) > 0) and np.all(np.diff(q) > 0)):
            raise NumericError("quantile table is not strictly monotone")
        if p[0] <= 0 or p[-1] >= 1:
            raise NumericError("table probabilities must lie inside (0, 1)")

    @property
    def log_quantiles(self) -> np.ndarray:
        return np.log(self.quantiles)

    @property
    def slopes(self) -> np.ndarray:
        """dF/d(log x) at the nodes."""
        return self.densities * self.quantiles

    def cdf(self, x):
        """Interpolated CDF for ``x`` inside the tabulated range."""
        y = np.log(np.asarray(x, dtype=float))
        yy = self.log_quantiles
        j = np.clip(np.searchsorted(yy, y) - 1, 0, yy.size - 2)
        return _hermite(y, yy[j], yy[j + 1], self.probabilities[j],
                        self.probabilities[j + 1], self.slopes[j], self.slopes[j + 1])

    def quantile(self, u):
        """Interpolated quantile for ``u`` inside the tabulated range."""
        u = np.asarray(u, dtype=float)
        p = self.probabilities
        yy = self.log_quantiles
        j = np.clip(np.searchsorted(p, u) - 1, 0, p.size - 2)
        with np.errstate(divide="ignore"):
            inv = 1.0 / self.slopes
        y = _hermite(u, p[j], p[j + 1], yy[j], yy[j + 1], inv[j], inv[j + 1])
        y = np.clip(y, yy[j], yy[j + 1])
        return np.exp(y)


def _hermite(t, t0, t1, v0, v1, d0, d1):
    h = t1 - t0
    s = (t - t0) / h
    s2 = s * s
    s3 = s2 * s
    return ((2 * s3 - 3 * s2 + 1) * v0 + (s3 - 2 * s2 + s) * h * d0
            + (-2 * s3 + 3 * s2) * v1 + (s3 - s2) * h * d1)


def _probabilities(lt, x, cfg):
    pdf, cdf, sf = invert_all(lt, x, cfg)
    p = np.where(cdf < 0.5, cdf, 1.0 - sf)
    return p, pdf


def _log_root(g, y0: float = 0.0) -> float:
    """Root of an increasing function of ``y = log x`` by expansion + Brent."""
    a = b = y0
    step = 1.0
    for _ in range(200):
        if g(a) <= 0:
            break
        a -= step
        step *= 1.5
    else:
        raise NumericError("could not bracket the quantile range from below")
    step = 1.0
    for _ in range(200):
        if g(b) >= 0:
            break
        b += step
        step *= 1.5
    else:
        raise NumericError("could not bracket the quantile range from above")
    if a == b:
        return a
    return brentq(g, a, b, xtol=1e-13, rtol=1e-13)


def build_quantile_table(lt: LTEvaluator, cfg: InversionConfig | None = None,
                         p_min: float = P_MIN, p_max: float = P_MAX,
                         max_nodes: int = 200_000) -> QuantileTable:
    """Tabulate quantiles of the law with transform ``lt`` on ``[p_min, p_max]``.

    Starts from ``cfg.quantile_grid_size`` nodes equally spaced in
    ``log x`` between the exact ``p_min`` and ``p_max`` quantiles, then
    bisects every interval whose Hermite midpoint misses the inverted CDF
    by more than ``abs_tol``.
    """
    cfg = cfg or DEFAULT_CONFIG
    cdf = lambda x: invert_cdf(lt, x, cfg)
    sf = lambda x: invert_sf(lt, x, cfg)
    y_lo = _log_root(lambda y: cdf(np.exp(y)) - p_min)
    y_hi = _log_root(lambda y: (1.0 - p_max) - sf(np.exp(y)))
    y = np.linspace(y_lo, y_hi, cfg.quantile_grid_size)
    p, f = _probabilities(lt, np.exp(y), cfg)
    for _ in range(40):
        mid = 0.5 * (y[:-1] + y[1:])
        slopes = f * np.exp(y)
        approx = _hermite(mid, y[:-1], y[1:], p[:-1], p[1:], slopes[:-1], slopes[1:])
        pm, fm = _probabilities(lt, np.exp(mid), cfg)
        # on very narrow or nearly massless intervals a mismatch is inversion
        # noise (e.g. where p switches from the CDF to 1 - survival), not
        # interpolation error
        bad = ((np.abs(approx - pm) > cfg.abs_tol) & (np.diff(y) > 1e-7)
               & (np.diff(p) > 100.0 * cfg.abs_tol))
        if not bad.any():
            break
        if y.size + bad.sum() > max_nodes:
            raise NumericError("quantile table refinement exceeded node budget",
                               nodes=int(y.size), failing=int(bad.sum()))
        y = np.concatenate([y, mid[bad]])
        p = np.concatenate([p, pm[bad]])
        f = np.concatenate([f, fm[bad]])
        order = np.argsort(y)
        y, p, f = y[order], p[order], f[order]
    else:
        raise NumericError("quantile table refinement did not converge")
    # drop nodes whose probability does not exceed the previous kept node's
    keep = p >= np.maximum.accumulate(p)
    keep[1:] &= p[1:] > np.maximum.accumulate(p)[:-1]
    return QuantileTable(p[keep], np.exp(y[keep]), f[keep])


def solve_quantiles(lt: LTEvaluator, u, cfg: InversionConfig | None = None,
                    table: QuantileTable | None = None,
                    max_iter: int = 80, ytol: float = 1e-11) -> np.ndarray:
    """Solve ``F(x) = u`` elementwise.

    Works in ``y = log x`` with Newton steps safeguarded by bisection.
    Brackets come from the quantile table; uniforms outside its range get
    a bracket by geometric expansion.  For ``u > 1/2`` the equation is
    posed on the survival function to keep relative accuracy in the tail.
    """
    cfg = cfg or DEFAULT_CONFIG
    table = table if table is not None else build_quantile_table(lt, cfg)
    u = np.asarray(u, dtype=float)
    if np.any((u <= 0) | (u >= 1)):
        raise ParameterError("uniforms must lie strictly inside (0, 1)")
    shape = u.shape
    u = u.ravel()
    yy = table.log_quantiles
    p = table.probabilities
    y = np.empty_like(u)
    lo = np.empty_like(u)
    hi = np.empty_like(u)

    inside = (u >= p[0]) & (u <= p[-1])
    j = np.clip(np.searchsorted(p, u[inside]) - 1, 0, p.size - 2)
    lo[inside] = yy[j]
    hi[inside] = yy[j + 1]
    y[inside] = np.log(table.quantile(u[inside]))

    upper = u > 0.5
    for side in (-1, +1):
        idx = np.flatnonzero((u < p[0]) if side < 0 else (u > p[-1]))
        if idx.size == 0:
            continue
        edge = yy[0] if side < 0 else yy[-1]
        near = np.full(idx.size, edge)
        far = np.full(idx.size, edge)
        step = 1.0
        pending = np.ones(idx.size, dtype=bool)
        for _ in range(200):
            far[pending] = edge + side * step
            xs = np.exp(far[pending])
            if side < 0:
                crossed = invert_cdf(lt, xs, cfg) <= u[idx[pending]]
            else:
                crossed = invert_sf(lt, xs, cfg) <= 1.0 - u[idx[pending]]
            pos = np.flatnonzero(pending)
            near[pos[~crossed]] = far[pos[~crossed]]
            pending[pos[crossed]] = False
            if not pending.any():
                break
            step *= 2.0
        else:
            raise NumericError("could not bracket tail quantiles", remaining=int(pending.sum()))
        if side < 0:
            lo[idx], hi[idx] = far, near
        else:
            lo[idx], hi[idx] = near, far
        y[idx] = 0.5 * (near + far)

    active = np.ones(u.size, dtype=bool)
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        yi = y[idx]
        xi = np.exp(yi)
        pdf, cdf, sf = invert_all(lt, xi, cfg)
        up = upper[idx]
        g = np.where(up, (1.0 - u[idx]) - sf, cdf - u[idx])
        dg = pdf * xi
        lo_i, hi_i = lo[idx], hi[idx]
        lo_i = np.where(g < 0, yi, lo_i)
        hi_i = np.where(g > 0, yi, hi_i)
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = yi - g / dg
        bad = ~np.isfinite(newton) | (newton <= lo_i) | (newton >= hi_i)
        ynew = np.where(bad, 0.5 * (lo_i + hi_i), newton)
        tol = ytol * np.maximum(1.0, np.abs(yi))
        done = (np.abs(ynew - yi) <= tol) | (g == 0) | (hi_i - lo_i <= tol)
        y[idx] = np.where(g == 0, yi, ynew)
        lo[idx], hi[idx] = lo_i, hi_i
        active[idx[done]] = False
    else:
        if active.any():
            raise NumericError("quantile root-finding did not converge",
                               remaining=int(active.sum()),
                               bracket_width=float(np.max(hi[active] - lo[active])))
    return np.exp(y).reshape(shape)


def uniforms(n: int, seed: int | np.random.SeedSequence) -> np.ndarray:
    """``n`` open-interval uniforms from a PCG64 stream keyed by ``seed``."""
    rng = np.random.Generator(np.random.PCG64(seed))
    u = rng.random(n)
    # random() is on [0, 1); 0 has probability 2**-53 but would break F^{-1}
    return np.where(u == 0.0, np.nextafter(0.0, 1.0), u)


def lt_sample(lt: LTEvaluator, n: int, seed: int | np.random.SeedSequence,
              cfg: InversionConfig | None = None,
              table: QuantileTable | None = None) -> Series:
    """Draw ``n`` i.i.d. variates with Laplace transform ``lt`` by inverse CDF.

    Output is a deterministic function of ``(lt, n, seed, cfg)``.
    """
    if n < 1:
        raise ParameterError("n must be at least 1")
    u = uniforms(n, seed)
    return Series(solve_quantiles(lt, u, cfg, table))
