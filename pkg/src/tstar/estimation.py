"""Parameter estimation for the TAR and TS-innovation AR(1) models.

``rho`` comes from conditional least squares.  The innovations
``X_{i+1} - rho_hat X_i`` then supply two sample moments, which are
matched to the tempered stable mean ``b lam**(b-1)`` and variance
``b (1-b) lam**(b-2)`` (scaled by ``1 - rho`` and ``1 - rho**2`` for the
TAR innovation law).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, NamedTuple

import numpy as np
from scipy.optimize import brentq, least_squares
from scipy.special import gammaln

from .errors import (DegenerateSeriesError, EstimationError, InsufficientTailError,
                     ParameterError, TstarError)
from .lt_inversion import InversionConfig
from .processes import ModelKind, ModelParams, simulate
from .series import Series

PARAMS = ("rho_hat", "beta_hat", "lambda_hat")


@dataclass(frozen=True)
class SolverConfig:
    """Box-constrained least squares on the log moment residuals."""

    max_iterations: int = 200
    tolerance: float = 1e-10
    beta_bounds: tuple[float, float] = (0.01, 0.99)
    lambda_bounds: tuple[float, float] = (1e-6, 1e3)
    n_starts: int = 4  # per axis, so n_starts**2 starting points

    def __post_init__(self) -> None:
        b_lo, b_hi = self.beta_bounds
        l_lo, l_hi = self.lambda_bounds
        if not (0.0 < b_lo < b_hi < 1.0):
            raise ParameterError(f"need 0 < beta_lo < beta_hi < 1, got {self.beta_bounds}")
        if not (0.0 < l_lo < l_hi and math.isfinite(l_hi)):
            # log-lambda parametrization needs a strictly positive lower bound
            raise ParameterError(f"need 0 < lambda_lo < lambda_hi < inf, got {self.lambda_bounds}")
        if not self.tolerance > 0:
            raise ParameterError("tolerance must be positive")
        if self.max_iterations < 1 or self.n_starts < 1:
            raise ParameterError("max_iterations and n_starts must be >= 1")


DEFAULT_SOLVER = SolverConfig()


class MomentSolution(NamedTuple):
    beta: float
    lam: float
    residual_norm: float
    iterations: int
    starts: int
    roots: tuple[tuple[float, float], ...] = ()


@dataclass(frozen=True)
class SolverInfo:
    iterations: int
    residual_norm: float
    starts: int
    converged: bool


@dataclass
class FitReport:
    model: ModelKind
    rho_hat: float
    beta_hat: float
    lambda_hat: float
    n: int
    solver: SolverInfo
    diagnostics: dict[str, Any] = field(default_factory=dict)
    nonstationary: bool = False
    bootstrap: dict[str, Any] | None = None

    @property
    def params(self) -> ModelParams:
        return ModelParams.of(self.model, self.rho_hat, self.beta_hat, self.lambda_hat)

    def to_dict(self) -> dict[str, Any]:
        out = {
            "model": self.model.value,
            "rho_hat": self.rho_hat,
            "beta_hat": self.beta_hat,
            "lambda_hat": self.lambda_hat,
            "n": self.n,
            "nonstationary": self.nonstationary,
            "solver": asdict(self.solver),
            "diagnostics": dict(self.diagnostics),
        }
        if self.bootstrap is not None:
            out["bootstrap"] = self.bootstrap
        return out


def _values(x, min_n: int) -> np.ndarray:
    v = np.asarray(Series.of(x).values, dtype=float)
    if v.size < min_n:
        raise DegenerateSeriesError(f"need at least {min_n} observations, got {v.size}")
    return v


def cls_rho(x: Series) -> float:
    """Lag-one conditional least squares estimate with one shared mean.

    ``sum_i (X_i - m)(X_{i+1} - m) / sum_i (X_i - m)**2`` over
    ``i = 1..n-1``, ``m`` the mean of the full series.
    """
    v = _values(x, 3)
    c = v - v.mean()
    den = c[:-1] @ c[:-1]
    if np.ptp(v) == 0.0 or den == 0.0:
        raise DegenerateSeriesError("constant series: conditional least squares undefined")
    return float(c[:-1] @ c[1:] / den)


def _start_grid(solver: SolverConfig) -> list[tuple[float, float]]:
    k = solver.n_starts
    (b_lo, b_hi), (l_lo, l_hi) = solver.beta_bounds, solver.lambda_bounds
    # interior points of each box edge, evenly spaced (lambda on log scale)
    bs = np.linspace(b_lo, b_hi, k + 2)[1:-1]
    ls = np.linspace(math.log(l_lo), math.log(l_hi), k + 2)[1:-1]
    return [(b, y) for b in bs for y in ls]


def _residual_fns(lm: float, lv: float):
    def resid(z):
        b, y = z  # y = log lam
        return np.array([math.log(b) + (b - 1.0) * y - lm,
                         math.log(b) + math.log1p(-b) + (b - 2.0) * y - lv])

    def jac(z):
        b, y = z
        return np.array([[1.0 / b + y, b - 1.0],
                         [1.0 / b - 1.0 / (1.0 - b) + y, b - 2.0]])

    return resid, jac


def _scan_roots(mean: float, var: float, solver: SolverConfig) -> list[float]:
    # the variance/mean ratio is (1 - b)/lam, which leaves one equation in b;
    # for small lam it has two roots, which multistart alone can miss
    (b_lo, b_hi) = solver.beta_bounds
    lk = math.log(mean / var)
    f = lambda b: math.log(b) + (b - 1.0) * (math.log1p(-b) + lk) - math.log(mean)
    grid = np.linspace(b_lo, b_hi, 401)
    vals = np.array([f(b) for b in grid])
    roots = [float(grid[i]) for i in np.flatnonzero(vals == 0.0)]
    for i in np.flatnonzero(vals[:-1] * vals[1:] < 0):
        roots.append(brentq(f, grid[i], grid[i + 1], xtol=1e-14, rtol=1e-15))
    return roots


def _third_cumulant(b: float, lam: float) -> float:
    return b * (1.0 - b) * (2.0 - b) * lam ** (b - 3.0)


def _solve_moments(mean: float, var: float, solver: SolverConfig,
                   kappa3: float | None = None) -> MomentSolution:
    """Find (b, lam) with ``b lam**(b-1) = mean`` and ``b(1-b) lam**(b-2) = var``.

    For small ``lam`` two different pairs fit both moments exactly; then the
    root whose third cumulant is closest to ``kappa3`` (in log ratio) is
    returned, and without ``kappa3`` the system is reported as ambiguous.
    """
    if not (mean > 0 and var > 0 and math.isfinite(mean) and math.isfinite(var)):
        raise EstimationError("moment system needs positive finite mean and variance",
                              mean=mean, variance=var)
    resid, jac = _residual_fns(math.log(mean), math.log(var))
    (b_lo, b_hi), (l_lo, l_hi) = solver.beta_bounds, solver.lambda_bounds
    bounds = ([b_lo, math.log(l_lo)], [b_hi, math.log(l_hi)])
    starts = _start_grid(solver)
    starts += [(b, math.log((1.0 - b) * mean / var)) for b in _scan_roots(mean, var, solver)]
    best, nfev, found = None, 0, []
    for z0 in starts:
        z0 = np.clip(z0, bounds[0], bounds[1])
        r = least_squares(resid, z0, jac=jac, bounds=bounds, method="trf",
                          xtol=1e-15, ftol=1e-15, gtol=1e-15,
                          max_nfev=solver.max_iterations)
        nfev += r.nfev
        norm = float(np.linalg.norm(r.fun))
        if best is None or norm < best[1]:
            best = (r.x, norm)
        if norm <= solver.tolerance and all(abs(r.x[0] - z[0]) > 1e-6 for z, _ in found):
            found.append((r.x, norm))
    if not found:
        z, norm = best
        raise EstimationError("no root of the moment system inside the box constraints",
                              best_beta=float(z[0]), best_lambda=float(math.exp(z[1])),
                              residual_norm=norm)
    found.sort(key=lambda zn: zn[0][0])
    roots = tuple((float(z[0]), float(math.exp(z[1]))) for z, _ in found)
    if len(found) > 1:
        if kappa3 is None or not kappa3 > 0:
            raise EstimationError("moment system has several exact roots; a positive third "
                                  "cumulant is needed to choose", roots=roots)
        gap = [abs(math.log(_third_cumulant(b, l) / kappa3)) for b, l in roots]
        z, norm = found[int(np.argmin(gap))]
    else:
        z, norm = found[0]
    return MomentSolution(float(z[0]), float(math.exp(z[1])), norm, nfev, len(starts), roots)


def tar_moment_system(m1: float, m2: float, rho: float,
                      solver: SolverConfig = DEFAULT_SOLVER,
                      m3: float | None = None) -> tuple[float, float]:
    """(beta, lambda) from the raw moments of TAR innovations.

    ``m3`` (third raw moment) is only used to pick between two exact roots.
    """
    return _tar_solution(m1, m2, rho, solver, m3)[:2]


def _kappa3(m1: float, m2: float, m3: float | None) -> float | None:
    return None if m3 is None else m3 - 3.0 * m1 * m2 + 2.0 * m1**3


def _tar_solution(m1, m2, rho, solver, m3=None) -> MomentSolution:
    if not (0.0 < rho < 1.0):
        raise EstimationError("TAR moment system needs 0 < rho < 1", rho=rho)
    var = m2 - m1 * m1
    if not var > 0:
        raise EstimationError("sample variance is not positive (m2 <= m1**2)", m1=m1, m2=m2)
    k3 = _kappa3(m1, m2, m3)
    # innovation cumulants are the marginal ones times (1 - rho**k)
    return _solve_moments(m1 / (1.0 - rho), var / (1.0 - rho * rho), solver,
                          None if k3 is None else k3 / (1.0 - rho**3))


def arts_moment_system(m1: float, m2: float, solver: SolverConfig = DEFAULT_SOLVER,
                       m3: float | None = None) -> tuple[float, float]:
    """(beta, lambda) from the raw moments of tempered stable innovations."""
    var = m2 - m1 * m1
    if not var > 0:
        raise EstimationError("sample variance is not positive (m2 <= m1**2)", m1=m1, m2=m2)
    return _solve_moments(m1, var, solver, _kappa3(m1, m2, m3))[:2]


def _innovations(v: np.ndarray, rho: float) -> np.ndarray:
    return v[1:] - rho * v[:-1]


def _report(kind, v, rho, eps, sol: MomentSolution, extra) -> FitReport:
    b, l = sol.beta, sol.lam
    diag = {
        "innovation_mean": float(eps.mean()),
        "innovation_second_moment": float(eps @ eps / eps.size),
        "negative_innovations": int((eps <= 0).sum()),
        # lam from the mean equation alone, given beta_hat
        "lambda_from_mean": float((eps.mean() / extra["mean_scale"] / b) ** (1.0 / (b - 1.0))),
        "moment_roots": [list(r) for r in sol.roots],
    }
    diag.update(extra.get("diagnostics", {}))
    return FitReport(kind, rho, b, l, int(v.size),
                     SolverInfo(sol.iterations, sol.residual_norm, sol.starts, True),
                     diag, nonstationary=not (abs(rho) < 1.0))


def estimate_tar(x: Series, solver: SolverConfig = DEFAULT_SOLVER, burn_in: int = 0) -> FitReport:
    """CLS for ``rho`` then moment matching on the TAR innovations."""
    v = _values(x, 50 + burn_in)[burn_in:]
    rho = cls_rho(v)
    eps = _innovations(v, rho)
    m1, m2, m3 = (float(np.mean(eps**k)) for k in (1, 2, 3))
    sol = _tar_solution(m1, m2, rho, solver, m3)
    # CLS estimating equation for the marginal mean: b lam**(b-1) = sum eps / (n (1 - rho))
    mean_eq = m1 / (1.0 - rho)
    fitted_mean = sol.beta * sol.lam ** (sol.beta - 1.0)
    return _report(ModelKind.TAR_MARGINAL, v, rho, eps, sol, {
        "mean_scale": 1.0 - rho,
        "diagnostics": {"burn_in": burn_in, "mean_equation_gap": float(fitted_mean - mean_eq)},
    })


def estimate_arts(x: Series, solver: SolverConfig = DEFAULT_SOLVER, burn_in: int = 100) -> FitReport:
    """CLS for ``rho`` then moment matching on the tempered stable innovations.

    The first ``burn_in`` values are dropped: started from ``X_0 = eps_0``
    the path is only asymptotically stationary.
    """
    v = _values(x, 50 + burn_in)[burn_in:]
    rho = cls_rho(v)
    eps = _innovations(v, rho)
    m1, m2, m3 = (float(np.mean(eps**k)) for k in (1, 2, 3))
    var = m2 - m1 * m1
    if not var > 0:
        raise EstimationError("sample variance is not positive (m2 <= m1**2)", m1=m1, m2=m2)
    sol = _solve_moments(m1, var, solver, _kappa3(m1, m2, m3))
    return _report(ModelKind.TS_INNOVATION, v, rho, eps, sol, {
        "mean_scale": 1.0,
        "diagnostics": {"burn_in": burn_in},
    })


def estimate(kind: ModelKind | str, x: Series, solver: SolverConfig = DEFAULT_SOLVER,
             burn_in: int | None = None) -> FitReport:
    kind = ModelKind(kind)
    if kind is ModelKind.TAR_MARGINAL:
        return estimate_tar(x, solver, 0 if burn_in is None else burn_in)
    return estimate_arts(x, solver, 100 if burn_in is None else burn_in)


def estimate_tar_stable(x: Series, threshold: float | None = None,
                        tail_quantile: float = 0.8) -> FitReport:
    """TAR fit for ``lam = 0``: CLS for ``rho``, tail regression for ``beta``.

    The threshold defaults to the ``tail_quantile`` sample quantile of the
    estimated innovations.
    """
    v = _values(x, 50)
    rho = cls_rho(v)
    if not (0.0 < rho < 1.0):
        raise EstimationError("TAR model needs 0 < rho_hat < 1", rho_hat=rho)
    eps = _innovations(v, rho)
    if threshold is None:
        if not (0.0 < tail_quantile < 1.0):
            raise ParameterError("tail_quantile must lie in (0, 1)")
        threshold = float(np.quantile(eps, tail_quantile))
    b, diag = tail_index_fit(eps, threshold, rho)
    if not (0.0 < b < 1.0):
        raise EstimationError("tail slope outside (0, 1)", beta_hat=b, **diag)
    diag["tail_quantile"] = tail_quantile
    info = SolverInfo(0, float(math.sqrt(max(0.0, 1.0 - diag["r_squared"]))), 1, True)
    return FitReport(ModelKind.TAR_MARGINAL, rho, b, 0.0, int(v.size), info, diag)


def tail_index_fit(errors: Series, threshold: float,
                   rho: float | None = None) -> tuple[float, dict[str, Any]]:
    """Tail index from the log-log slope of the empirical survival function.

    Regresses ``log G(x)`` on ``-log x`` over the observations above
    ``threshold``, with ``G(x_(i))`` the fraction of the sample ``>= x_(i)``.
    Under a stable innovation law ``G(x) ~ (1 - rho**b) x**-b / Gamma(1 - b)``,
    so the slope estimates ``b``; with ``rho`` given the implied intercept is
    reported next to the fitted one.
    """
    v = np.sort(np.asarray(Series.of(errors).values, dtype=float))
    if not threshold > 0:
        raise ParameterError("threshold must be positive")
    n = v.size
    first = int(np.searchsorted(v, threshold, side="right"))
    k = n - first
    if k < 30:
        raise InsufficientTailError(f"only {k} exceedances above {threshold:g}; need 30",
                                    exceedances=k)
    xs = v[first:]
    surv = (n - np.arange(first, n)) / n
    X, Y = -np.log(xs), np.log(surv)
    if np.ptp(X) == 0:
        raise DegenerateSeriesError("all exceedances are equal")
    slope, intercept = np.polyfit(X, Y, 1)
    fit = slope * X + intercept
    r2 = 1.0 - np.sum((Y - fit) ** 2) / np.sum((Y - Y.mean()) ** 2)
    diag: dict[str, Any] = {"threshold": float(threshold), "exceedances": k,
                            "exceed_fraction": k / n, "intercept": float(intercept),
                            "r_squared": float(r2)}
    if rho is not None and 0.0 < slope < 1.0:
        diag["model_intercept"] = float(math.log1p(-rho**slope) - gammaln(1.0 - slope))
    return float(slope), diag


# bootstrap ----------------------------------------------------------------

@dataclass
class BootstrapResult:
    model: ModelParams
    n: int
    reps: int
    estimates: np.ndarray  # (successful reps, 3): rho, beta, lambda
    replicate: np.ndarray  # replicate index of each row
    failures: list[tuple[int, str]]

    def five_number(self) -> dict[str, dict[str, float]]:
        qs = np.quantile(self.estimates, [0.0, 0.25, 0.5, 0.75, 1.0], axis=0)
        keys = ("min", "q1", "median", "q3", "max")
        return {p: {k: float(qs[i, j]) for i, k in enumerate(keys)}
                for j, p in enumerate(PARAMS)}

    def to_dict(self) -> dict[str, Any]:
        return {
            "model": self.model.kind.value,
            "rho": self.model.rho,
            "beta": self.model.beta,
            "lambda": self.model.lam,
            "n": self.n,
            "bootstrap": {
                "reps": self.reps,
                "succeeded": int(self.estimates.shape[0]),
                "failures": len(self.failures),
                "failed_replicates": [{"replicate": i, "error": e} for i, e in self.failures],
                "quantiles": self.five_number(),
            },
        }


def worker_count(requested: int | None = None) -> int:
    """Pool size: ``requested``, else ``TSTAR_THREADS``, else CPU count."""
    cap = os.environ.get("TSTAR_THREADS")
    n = requested or (int(cap) if cap else os.cpu_count() or 1)
    if cap:
        n = min(n, int(cap))
    return max(1, n)


def _replicate(args) -> tuple[int, tuple[float, float, float] | None, str | None]:
    i, model, n, ss, solver, cfg, burn_in = args
    try:
        x = simulate(model, n, ss, cfg)
        r = estimate(model.kind, x, solver, burn_in)
        return i, (r.rho_hat, r.beta_hat, r.lambda_hat), None
    except TstarError as e:
        return i, None, f"{type(e).__name__}: {e}"


def bootstrap(model: ModelParams, n: int, reps: int, seed,
              solver: SolverConfig = DEFAULT_SOLVER, cfg: InversionConfig | None = None,
              burn_in: int | None = None, workers: int | None = None,
              max_failure_rate: float = 0.05) -> BootstrapResult:
    """Simulate ``reps`` independent series, fit each, collect estimates.

    Replicate ``i`` uses the ``i``-th child of ``SeedSequence(seed)``, and
    results are collected in replicate order, so the output does not
    depend on the number of workers.
    """
    if reps < 2:
        raise ParameterError("bootstrap needs reps >= 2")
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    jobs = [(i, model, n, child, solver, cfg, burn_in) for i, child in enumerate(ss.spawn(reps))]
    nw = min(worker_count(workers), reps)
    if nw == 1:
        results = [_replicate(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=nw) as pool:
            results = list(pool.map(_replicate, jobs, chunksize=max(1, reps // (4 * nw))))
    ok = [(i, est) for i, est, _ in results if est is not None]
    failures = [(i, msg) for i, est, msg in results if est is None]
    if len(failures) > max_failure_rate * reps:
        raise EstimationError(f"{len(failures)} of {reps} bootstrap replicates failed",
                              failures=failures[:10])
    est = np.array([e for _, e in ok], dtype=float).reshape(-1, 3)
    idx = np.array([i for i, _ in ok], dtype=int)
    return BootstrapResult(model, n, reps, est, idx, failures)
