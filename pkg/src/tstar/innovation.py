"""Innovation law of the AR(1) process with tempered stable marginals.

If ``X_n = rho X_{n-1} + eps_n`` is stationary with tempered stable
marginals, the innovation has Laplace transform

    exp((rho s + lam)**beta - (s + lam)**beta).

Its density is computed here from the real branch-cut integrals obtained
by collapsing the Bromwich contour onto the cuts that start at the branch
points ``-lam`` and ``-lam / rho``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.special import gamma

from .distribution import Moments, TSParams, stable_lt
from .errors import MomentsUndefinedError, NumericError, ParameterError
from .lt_inversion import DEFAULT_CONFIG, InversionConfig, LTEvaluator

# log-magnitude above which real-axis quadrature of the infinite cut is
# abandoned for a rotated ray (cancellation would eat the significant digits)
_GROWTH_LIMIT = 5.0
# oscillation count beyond which the real-axis integrand is also rotated
_MAX_CYCLES = 50.0


@dataclass(frozen=True)
class InnovationParams:
    rho: float
    ts: TSParams

    def __post_init__(self) -> None:
        r = float(self.rho)
        if not (0.0 < r < 1.0):
            raise ParameterError(
                f"rho must lie in (0, 1) for the TAR innovation law, got {self.rho!r}"
            )
        object.__setattr__(self, "rho", r)

    @classmethod
    def of(cls, rho: float, beta: float, lam: float) -> "InnovationParams":
        return cls(rho, TSParams(beta, lam))


def error_laplace_exponent(p: InnovationParams, s):
    """``(s + lam)**beta - (rho s + lam)**beta`` (real or complex ``s``)."""
    b, l = p.ts.beta, p.ts.lam
    return (s + l) ** b - (p.rho * s + l) ** b


def error_laplace(p: InnovationParams, s):
    """Innovation Laplace transform ``exp((rho s + lam)**b - (s + lam)**b)``."""
    s = np.asarray(s, dtype=float)
    if np.any(~(s >= 0)):
        raise ParameterError("Laplace argument must be >= 0")
    v = np.exp(-error_laplace_exponent(p, s))
    return float(v) if v.ndim == 0 else v


def error_lt(p: InnovationParams) -> LTEvaluator:
    if p.ts.lam == 0.0:
        c = 1.0 - p.rho**p.ts.beta
        lt = stable_lt(p.ts.beta, c)
        return LTEvaluator(lt.fn, lt.log_fn,
                           label=f"TAR innovation(rho={p.rho:g}, beta={p.ts.beta:g}, lambda=0)")
    log_fn = lambda s: -error_laplace_exponent(p, s)
    return LTEvaluator(lambda s: np.exp(log_fn(s)), log_fn,
                       label=f"TAR innovation(rho={p.rho:g}, beta={p.ts.beta:g}, lambda={p.ts.lam:g})")


def error_moments(p: InnovationParams) -> Moments:
    """Mean and raw second moment of the innovation (``lam > 0``)."""
    b, l, r = p.ts.beta, p.ts.lam, p.rho
    if l == 0.0:
        raise MomentsUndefinedError("innovation moments diverge for lambda = 0")
    mean = b * l ** (b - 1.0) * (1.0 - r)
    var = b * (1.0 - b) * l ** (b - 2.0) * (1.0 - r * r)
    return Moments(mean, mean * mean + var, var)


def _quad(f, a, b, cfg: InversionConfig, what: str, points=None) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        val, err, *_ = quad(f, a, b, epsabs=cfg.abs_tol * 1e-2, epsrel=1e-10,
                            limit=400, points=points, full_output=1)
    if not np.isfinite(val) or (err > cfg.abs_tol and err > cfg.rel_tol * abs(val)):
        raise NumericError(f"quadrature of {what} did not converge",
                           value=float(val), error_estimate=float(err))
    return val


def _support_end(grid: np.ndarray, logmag: np.ndarray, log_cut: float) -> float | None:
    # magnitude times width bounds the neglected tail of a decaying integrand
    above = np.flatnonzero(logmag + np.log(grid) > log_cut)
    if above.size == 0:
        return None
    return float(grid[min(above[-1] + 1, grid.size - 1)])


def _scan(logmag_fn, w_cap: float, log_cut: float):
    """Grid, log-magnitudes and support end; widens the grid until the tail is negligible."""
    for _ in range(30):
        grid = np.geomspace(w_cap * 1e-16, w_cap, 4000)
        logmag = logmag_fn(grid)
        if logmag[-1] + math.log(w_cap) <= log_cut:
            return grid, logmag, _support_end(grid, logmag, log_cut)
        w_cap *= 4.0
    raise NumericError("branch-cut integrand does not decay", w_cap=w_cap)


def _piecewise_quad(f, w_end: float, knee: float, cfg: InversionConfig, what: str) -> float:
    # decades resolve both the w**beta cusp at 0 and the envelope scale
    edges = set(np.geomspace(w_end * 1e-8, w_end, 9).tolist())
    if knee < w_end:
        edges.add(knee)
    edges = [0.0] + sorted(edges)
    return sum(_quad(f, a, b, cfg, what) for a, b in zip(edges[:-1], edges[1:]))


def _ray_angle(beta: float) -> float:
    # the cut integrand exp(A e^{i pi beta}) decays along arg w = -theta once
    # beta (pi - theta) < pi / 2; take the middle of the admissible sector
    low = max(0.0, math.pi - math.pi / (2.0 * beta))
    return 0.5 * (low + 0.5 * math.pi)


def _infinite_cut(rho: float, beta: float, lam: float, x: float,
                  cfg: InversionConfig) -> float:
    """Integral over the cut left of ``-lam/rho`` (without the 1/pi factor).

    Returns ``I2 = int_0^inf exp(-lam x / rho - w x) Im exp(A(w) e^{i pi beta}) dw``
    with ``A(w) = rho**beta w**beta - (w + d)**beta`` and ``d = lam/rho - lam``.
    """
    d = lam / rho - lam
    cb, sb = math.cos(math.pi * beta), math.sin(math.pi * beta)
    rb = rho**beta
    shift = lam * x / rho

    w_cap = cfg.truncation_bound / x
    log_cut = math.log(cfg.abs_tol * 1e-2)
    try:
        _, logmag, w_end = _scan(
            lambda w: -shift - w * x + (rb * w**beta - (w + d) ** beta) * cb, w_cap, log_cut)
    except NumericError:
        w_end = None  # decays too late on the real axis; rotate
    else:
        if w_end is None:
            return 0.0
        cycles = abs(rb * w_end**beta - (w_end + d) ** beta) * sb / (2.0 * math.pi)
        if logmag.max() <= _GROWTH_LIMIT and cycles <= _MAX_CYCLES:

            def f(w):
                a = rb * w**beta - (w + d) ** beta
                return math.exp(-shift - w * x + a * cb) * math.sin(a * sb)

            return _piecewise_quad(f, w_end, 1.0 / x, cfg, "infinite branch cut")

    theta = _ray_angle(beta)
    rot = complex(math.cos(theta), -math.sin(theta))
    phase = complex(cb, sb)

    def log_h(t):
        w = t * rot
        return -shift - w * x + (rb * w**beta - (w + d) ** beta) * phase

    _, _, t_end = _scan(lambda t: log_h(t).real, w_cap / math.cos(theta), log_cut)
    if t_end is None:
        return 0.0
    g = lambda t: (rot * np.exp(log_h(t))).imag
    return _piecewise_quad(g, t_end, 1.0 / x, cfg, "rotated branch cut")


def _finite_cut(rho: float, beta: float, lam: float, x: float,
                cfg: InversionConfig) -> float:
    """Integral over the cut between ``-lam/rho`` and ``-lam``."""
    d = lam / rho - lam
    if d <= 0.0:
        return 0.0
    cb, sb = math.cos(math.pi * beta), math.sin(math.pi * beta)
    base = lam * (1.0 - rho)

    def f(w):
        inner = max(base - rho * w, 0.0)
        wb = w**beta
        return math.exp(-lam * x - w * x + inner**beta - wb * cb) * math.sin(wb * sb)

    knee = 1.0 / x
    if knee < d:
        return (_quad(f, 0.0, knee, cfg, "finite branch cut")
                + _quad(f, knee, d, cfg, "finite branch cut"))
    return _quad(f, 0.0, d, cfg, "finite branch cut", points=[0.5 * d])


def _density_scalar(rho, beta, lam, x, cfg) -> float:
    g = (_finite_cut(rho, beta, lam, x, cfg) - _infinite_cut(rho, beta, lam, x, cfg)) / math.pi
    if g < -cfg.abs_tol:
        raise NumericError("branch-cut density is negative beyond tolerance",
                           x=x, value=g)
    return max(g, 0.0)


def _positive(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)) or np.any(~np.isfinite(x)):
        raise ParameterError("x must be finite and positive")
    return x


def error_density(p: InnovationParams, x, cfg: InversionConfig | None = None):
    """Innovation density from the two real branch-cut integrals.

    The cut from ``-lam/rho`` to ``-lam`` contributes a finite integral,
    the cut left of ``-lam/rho`` an infinite one.  Both are evaluated by
    adaptive Gauss-Kronrod quadrature split at the envelope knee
    ``w = 1/x``.  For ``beta > 1/2`` and small ``x`` the infinite integrand
    grows before the ``exp(-w x)`` envelope takes over; there the same
    analytic integrand is integrated along a ray rotated into the lower
    half-plane, where it decays monotonically.
    """
    cfg = cfg or DEFAULT_CONFIG
    x = _positive(x)
    b, l, r = p.ts.beta, p.ts.lam, p.rho
    vals = np.array([_density_scalar(r, b, l, float(xi), cfg) for xi in x.ravel()])
    return float(vals[0]) if x.ndim == 0 else vals.reshape(x.shape)


def error_density_stable(rho: float, beta: float, x, cfg: InversionConfig | None = None,
                         *, _printed_sign: bool = False):
    """Innovation density for ``lam = 0``.

    ``(1/pi) int_0^inf exp(-w x) exp(-c w**b cos(pi b)) sin(c w**b sin(pi b)) dw``
    with ``c = 1 - rho**b``: the density of ``c**(1/b) S``.  Setting
    ``_printed_sign`` flips the sign inside the exponential; that variant
    is not a density and exists only so tests can demonstrate it.
    """
    InnovationParams.of(rho, beta, 0.0)
    cfg = cfg or DEFAULT_CONFIG
    x = _positive(x)
    c = 1.0 - rho**beta
    cb, sb = math.cos(math.pi * beta), math.sin(math.pi * beta)
    sign = 1.0 if _printed_sign else -1.0

    def one(xv: float) -> float:
        def f(w):
            wb = c * w**beta
            return math.exp(-w * xv + sign * wb * cb) * math.sin(wb * sb)

        w_cap = cfg.truncation_bound / xv
        logmag_fn = lambda w: -w * xv + sign * c * w**beta * cb
        if _printed_sign and logmag_fn(np.geomspace(w_cap * 1e-16, w_cap, 4000)).max() > _GROWTH_LIMIT:
            raise NumericError("printed-sign integrand overflows", x=xv)
        try:
            _, logmag, w_end = _scan(logmag_fn, w_cap, math.log(cfg.abs_tol * 1e-2))
        except NumericError:
            if _printed_sign:
                raise
            return -_infinite_cut(rho, beta, 0.0, xv, cfg) / math.pi
        if w_end is None:
            return 0.0
        cycles = c * w_end**beta * sb / (2.0 * math.pi)
        if not _printed_sign and (logmag.max() > _GROWTH_LIMIT or cycles > _MAX_CYCLES):
            return -_infinite_cut(rho, beta, 0.0, xv, cfg) / math.pi
        return _piecewise_quad(f, w_end, 1.0 / xv, cfg, "stable innovation density") / math.pi

    vals = np.array([one(float(xi)) for xi in x.ravel()])
    if not _printed_sign:
        vals = np.maximum(vals, 0.0)
    return float(vals[0]) if x.ndim == 0 else vals.reshape(x.shape)


def error_fractional_moment(p: InnovationParams, q: float,
                            cfg: InversionConfig | None = None,
                            *, _printed_integrand: bool = False) -> float:
    """``E eps**q`` for ``0 < q < 1``.

    ``lam = 0``: closed form ``Gamma(1 - q/b) (1 - rho**b)**(q/b) / Gamma(1 - q)``,
    finite only for ``q < b``.  ``lam > 0``: the integral
    ``(1/Gamma(1-q)) int_0^inf -phi'(s) s**-q ds`` of the transform's
    derivative.  ``_printed_integrand`` drops the factor ``b`` on the
    first derivative term, reproducing a known misprint; tests use it to
    show the continuity check at ``lam -> 0`` catches it.
    """
    b, l, r = p.ts.beta, p.ts.lam, p.rho
    if not (0.0 < q < 1.0):
        raise ParameterError("fractional order q must lie in (0, 1)")
    if l == 0.0:
        if q >= b:
            raise MomentsUndefinedError(f"E eps^q diverges for q >= beta ({q} >= {b})")
        return gamma(1.0 - q / b) * (1.0 - r**b) ** (q / b) / gamma(1.0 - q)
    cfg = cfg or DEFAULT_CONFIG
    lead = 1.0 if _printed_integrand else b

    def f(s):
        phi = math.exp((r * s + l) ** b - (s + l) ** b)
        return phi * (lead * (s + l) ** (b - 1.0) - r * b * (r * s + l) ** (b - 1.0)) * s**-q

    pts = sorted({l, l / r, 10.0 * l / r, 1.0})
    pts = [pt for pt in pts if pt > 0]
    total = 0.0
    lo = 0.0
    for hi in pts:
        total += _quad(f, lo, hi, cfg, "fractional moment")
        lo = hi
    total += _quad(f, lo, np.inf, cfg, "fractional moment")
    return total / gamma(1.0 - q)
