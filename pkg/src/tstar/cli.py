"""Command-line front end.

Subcommands: ``simulate``, ``estimate``, ``density``, ``bootstrap`` and
``pipeline``.  Settings resolve as command-line flags, then a
``--config`` file of ``key = value`` lines, then built-in defaults.

Exit codes: 0 success, 2 invalid input, 3 numerical failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import svg
from .distribution import TSParams, ts_lt
from .errors import NumericError, ParseError, TstarError
from .estimation import (PARAMS, SolverConfig, bootstrap, estimate, estimate_tar_stable)
from .innovation import InnovationParams, error_density, error_density_stable, error_lt
from .lt_inversion import InversionConfig, lt_sample
from .processes import ModelKind, ModelParams, simulate
from .series import Series, read_csv, write_csv
from .stats import acf, adf_test, ks_two_sample, mann_whitney_u, pacf

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4

# key -> (type, default); keys double as config-file keys and flag dests
DEFAULTS: dict[str, tuple[type, Any]] = {
    "model": (str, "tar"),
    "rho": (float, 0.9),
    "beta": (float, 0.5),
    "lambda": (float, 2.0),
    "n": (int, 10_000),
    "seed": (int, 0),
    "reps": (int, 100),
    "workers": (int, 0),
    "burn_in": (int, -1),
    "stable": (bool, False),
    "tail_quantile": (float, 0.8),
    "threshold": (float, 0.0),
    "grid": (str, "0.01:10:500"),
    "log_grid": (bool, False),
    "max_lag": (int, 20),
    "alpha": (float, 0.05),
    # inversion settings
    "abscissa_shift": (float, 22.0),
    "series_terms": (int, 40),
    "euler_order": (int, 11),
    "abs_tol": (float, 1e-8),
    "rel_tol": (float, 1e-6),
    "quantile_grid_size": (int, 256),
    # solver settings
    "max_iterations": (int, 200),
    "tolerance": (float, 1e-10),
    "n_starts": (int, 4),
}


class UsageError(TstarError, ValueError):
    """Bad flag or config value."""


def _coerce(key: str, raw: str) -> Any:
    typ = DEFAULTS[key][0]
    try:
        if typ is bool:
            low = raw.strip().lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return low in ("true", "1", "yes")
        return typ(raw.strip())
    except ValueError:
        raise UsageError(f"config key {key!r}: cannot parse {raw!r} as {typ.__name__}") from None


def read_config(path: str | Path) -> dict[str, Any]:
    """Parse ``key = value`` lines; ``#`` starts a comment; keys as in ``DEFAULTS``."""
    out: dict[str, Any] = {}
    bad: list[int] = []
    for i, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or key not in DEFAULTS:
            bad.append(i)
            continue
        out[key] = _coerce(key, val)
    if bad:
        raise ParseError(f"{path}: unknown key or missing '=' on lines {bad}", rows=bad)
    return out


@dataclass(frozen=True)
class RunConfig:
    """Resolved settings for one command."""

    values: dict[str, Any] = field(default_factory=dict)

    def __getitem__(self, key: str) -> Any:
        return self.values[key]

    @property
    def model_kind(self) -> ModelKind:
        try:
            return ModelKind(self["model"])
        except ValueError:
            raise UsageError(f"--model must be 'tar' or 'arts', got {self['model']!r}") from None

    @property
    def ts(self) -> TSParams:
        return TSParams(self["beta"], self["lambda"])

    @property
    def model(self) -> ModelParams:
        return ModelParams(self.model_kind, self["rho"], self.ts)

    @property
    def inversion(self) -> InversionConfig:
        names = {f.name for f in fields(InversionConfig)}
        return replace(InversionConfig(), **{k: v for k, v in self.values.items() if k in names})

    @property
    def solver(self) -> SolverConfig:
        names = {f.name for f in fields(SolverConfig)}
        return SolverConfig(**{k: v for k, v in self.values.items() if k in names})

    @property
    def burn_in(self) -> int | None:
        return None if self["burn_in"] < 0 else self["burn_in"]


def resolve(args: argparse.Namespace) -> RunConfig:
    vals = {k: d for k, (_, d) in DEFAULTS.items()}
    if getattr(args, "config", None):
        vals.update(read_config(args.config))
    for k in DEFAULTS:
        v = getattr(args, k, None)
        if v is not None:
            vals[k] = v
    return RunConfig(vals)


# output helpers -------------------------------------------------------------

def _jsonable(o):
    if isinstance(o, dict):
        return {str(k): _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_jsonable(v) for v in o]
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (float, np.floating)):
        f = float(o)
        return f if math.isfinite(f) else None
    if isinstance(o, (np.bool_,)):
        return bool(o)
    return o


def write_json(obj: dict, path: str | Path | None) -> None:
    text = json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def write_table(path: str | Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in r])


def _grid(spec: str, log: bool) -> np.ndarray:
    try:
        a, b, k = spec.split(":")
        a, b, k = float(a), float(b), int(k)
    except ValueError:
        raise UsageError(f"--grid must look like start:stop:count, got {spec!r}") from None
    if not (0 < a < b) or k < 2:
        raise UsageError("--grid needs 0 < start < stop and count >= 2")
    return np.geomspace(a, b, k) if log else np.linspace(a, b, k)


# commands -------------------------------------------------------------------

def cmd_simulate(cfg: RunConfig, args) -> int:
    x = simulate(cfg.model, cfg["n"], cfg["seed"], cfg.inversion)
    write_csv(x, args.out)
    if args.plot:
        svg.line_plot(args.plot, [(np.arange(x.n), x.values)],
                      title=f"{cfg['model'].upper()} sample path (rho={cfg['rho']:g}, "
                            f"beta={cfg['beta']:g}, lambda={cfg['lambda']:g})",
                      xlabel="t", ylabel="X_t")
    return EXIT_OK


def _fit(cfg: RunConfig, x: Series):
    if cfg["stable"]:
        if cfg.model_kind is not ModelKind.TAR_MARGINAL:
            raise UsageError("--stable applies to the TAR model only")
        thr = cfg["threshold"] if cfg["threshold"] > 0 else None
        return estimate_tar_stable(x, thr, cfg["tail_quantile"])
    return estimate(cfg.model_kind, x, cfg.solver, cfg.burn_in)


def cmd_estimate(cfg: RunConfig, args) -> int:
    x = read_csv(args.input)
    report = _fit(cfg, x)
    write_json(report.to_dict(), args.out)
    return EXIT_OK


def cmd_density(cfg: RunConfig, args) -> int:
    xs = _grid(cfg["grid"], cfg["log_grid"])
    inv = cfg.inversion
    if cfg["lambda"] == 0.0:
        g = error_density_stable(cfg["rho"], cfg["beta"], xs, inv)
    else:
        g = error_density(InnovationParams.of(cfg["rho"], cfg["beta"], cfg["lambda"]), xs, inv)
    write_table(args.out, ["x", "density"], zip(xs.tolist(), np.asarray(g).tolist()))
    if args.plot:
        svg.line_plot(args.plot, [(xs, g)], title=f"Innovation density (rho={cfg['rho']:g}, "
                      f"beta={cfg['beta']:g}, lambda={cfg['lambda']:g})", xlabel="x", ylabel="g(x)")
    return EXIT_OK


def cmd_bootstrap(cfg: RunConfig, args) -> int:
    res = bootstrap(cfg.model, cfg["n"], cfg["reps"], cfg["seed"], cfg.solver, cfg.inversion,
                    cfg.burn_in, cfg["workers"] or None)
    write_table(args.out, ["replicate", *PARAMS],
                ([int(i), *map(float, row)] for i, row in zip(res.replicate, res.estimates)))
    if args.summary:
        write_json(res.to_dict(), args.summary)
    if args.plot:
        svg.box_plot(args.plot, {p: res.estimates[:, j] for j, p in enumerate(PARAMS)},
                     title=f"Bootstrap estimates, {res.estimates.shape[0]} replicates")
    if res.failures:
        print(f"{len(res.failures)} of {res.reps} replicates failed", file=sys.stderr)
    return EXIT_OK


def _stage(report: dict, name: str, fn):
    try:
        out = fn()
        report["stages"][name] = {"status": "ok"}
        return out
    except TstarError as e:
        report["stages"][name] = {"status": "failed", "error": f"{type(e).__name__}: {e}"}
        return None


def _skip(report: dict, name: str, reason: str) -> None:
    report["stages"][name] = {"status": "skipped", "reason": reason}


def cmd_pipeline(cfg: RunConfig, args) -> int:
    x = read_csv(args.input)
    alpha = cfg["alpha"]
    report: dict[str, Any] = {"input": {"n": x.n}, "stages": {}, "alpha": alpha}

    adf = _stage(report, "adf", lambda: adf_test(x, "auto", alpha))
    if adf is not None:
        report["adf"] = adf.to_dict()
        report["adf"]["stationary"] = adf.reject

    max_lag = min(cfg["max_lag"], max(1, math.ceil(x.n / 4) - 1))
    cor = _stage(report, "correlogram", lambda: (acf(x, max_lag), pacf(x, max_lag)))
    if cor is not None:
        r, p = cor
        band = 1.96 / math.sqrt(x.n)
        sig = [k for k in range(1, max_lag + 1) if abs(p[k]) > band]
        report["correlogram"] = {
            "max_lag": max_lag, "band": band, "acf": r.tolist(), "pacf": p.tolist(),
            "significant_pacf_lags": sig,
            "ar1_adequate": sig == [1],
        }
        if args.acf_out:
            write_table(args.acf_out, ["lag", "acf", "pacf"],
                        ([k, float(r[k]), float(p[k])] for k in range(max_lag + 1)))
        if args.plot:
            svg.stem_plot(f"{args.plot}_acf.svg", r, band, title="ACF", ylabel="acf")
            svg.stem_plot(f"{args.plot}_pacf.svg", p, band, title="PACF", ylabel="pacf")

    fit = _stage(report, "fit", lambda: _fit(cfg, x))
    if fit is None:
        for s in ("simulate", "ks", "mann_whitney"):
            _skip(report, s, "model fit failed")
    else:
        report["fit"] = fit.to_dict()
        v = x.values
        start = fit.diagnostics.get("burn_in", 0)
        resid = v[start + 1:] - fit.rho_hat * v[start:-1]

        def synth():
            if fit.model is ModelKind.TAR_MARGINAL:
                lt = error_lt(InnovationParams.of(fit.rho_hat, fit.beta_hat, fit.lambda_hat))
            else:
                lt = ts_lt(TSParams(fit.beta_hat, fit.lambda_hat))
            return lt_sample(lt, resid.size, cfg["seed"], cfg.inversion).values

        sim = _stage(report, "simulate", synth)
        if sim is None:
            _skip(report, "ks", "simulation failed")
            _skip(report, "mann_whitney", "simulation failed")
        else:
            ks = _stage(report, "ks", lambda: ks_two_sample(resid, sim, alpha))
            mw = _stage(report, "mann_whitney", lambda: mann_whitney_u(resid, sim, alpha))
            if ks is not None:
                report["ks"] = ks.to_dict()
            if mw is not None:
                report["mann_whitney"] = mw.to_dict()
            if ks is not None and mw is not None:
                report["innovations_match"] = not (ks.reject or mw.reject)
            if args.plot:
                q = np.linspace(0.01, 0.99, 99)
                svg.line_plot(f"{args.plot}_qq.svg",
                              [(np.quantile(sim, q), np.quantile(resid, q)),
                               (np.quantile(sim, q), np.quantile(sim, q))],
                              title="Innovation quantiles: empirical vs fitted model",
                              xlabel="fitted-model quantile", ylabel="empirical quantile")
    write_json(report, args.out)
    return EXIT_OK


# argument parsing -----------------------------------------------------------

def _add_model(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", choices=["tar", "arts"], default=None,
                   help="tar: tempered stable marginals; arts: tempered stable innovations")
    p.add_argument("--rho", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--lambda", dest="lambda", type=float)


def _add_inversion(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("Laplace inversion")
    g.add_argument("--abscissa-shift", dest="abscissa_shift", type=float)
    g.add_argument("--series-terms", dest="series_terms", type=int)
    g.add_argument("--euler-order", dest="euler_order", type=int)
    g.add_argument("--abs-tol", dest="abs_tol", type=float)
    g.add_argument("--rel-tol", dest="rel_tol", type=float)
    g.add_argument("--quantile-grid-size", dest="quantile_grid_size", type=int)


def _add_solver(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("moment solver")
    g.add_argument("--max-iterations", dest="max_iterations", type=int)
    g.add_argument("--tolerance", type=float)
    g.add_argument("--n-starts", dest="n_starts", type=int)
    g.add_argument("--burn-in", dest="burn_in", type=int,
                   help="leading observations to drop (default 0 for tar, 100 for arts)")
    g.add_argument("--stable", action="store_const", const=True,
                   help="fit the lambda = 0 TAR model by tail regression")
    g.add_argument("--tail-quantile", dest="tail_quantile", type=float)
    g.add_argument("--threshold", type=float, help="absolute tail threshold (overrides quantile)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tstar", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(name: str, help: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help)
        p.add_argument("--config", help="key = value settings file")
        return p

    p = common("simulate", "simulate a sample path to CSV")
    _add_model(p)
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--plot", help="SVG path for the sample path")
    _add_inversion(p)

    p = common("estimate", "fit a model to a CSV series")
    p.add_argument("input")
    p.add_argument("--model", choices=["tar", "arts"], default=None)
    p.add_argument("--out", default="-", help="JSON report path (default stdout)")
    _add_solver(p)

    p = common("density", "evaluate the TAR innovation density on a grid")
    _add_model(p)
    p.add_argument("--grid", help="start:stop:count")
    p.add_argument("--log-grid", dest="log_grid", action="store_const", const=True)
    p.add_argument("--out", required=True)
    p.add_argument("--plot")
    _add_inversion(p)

    p = common("bootstrap", "repeated simulate-and-fit")
    _add_model(p)
    p.add_argument("--n", type=int)
    p.add_argument("--reps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, help="worker processes (capped by TSTAR_THREADS)")
    p.add_argument("--out", required=True, help="CSV of per-replicate estimates")
    p.add_argument("--summary", help="JSON summary path")
    p.add_argument("--plot", help="SVG box plot path")
    _add_inversion(p)
    _add_solver(p)

    p = common("pipeline", "ADF, correlogram, fit and innovation tests on a CSV series")
    p.add_argument("input")
    p.add_argument("--model", choices=["tar", "arts"], default=None)
    p.add_argument("--seed", type=int)
    p.add_argument("--max-lag", dest="max_lag", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--out", default="-")
    p.add_argument("--acf-out", dest="acf_out", help="CSV of lag, acf, pacf")
    p.add_argument("--plot", help="prefix for SVG outputs")
    _add_inversion(p)
    _add_solver(p)
    return ap


COMMANDS = {"simulate": cmd_simulate, "estimate": cmd_estimate, "density": cmd_density,
            "bootstrap": cmd_bootstrap, "pipeline": cmd_pipeline}


def _fail(code: int, err: BaseException) -> int:
    print(f"tstar: error: {err}", file=sys.stderr)
    diag = getattr(err, "diagnostics", None)
    if diag:
        print(json.dumps(_jsonable(diag), sort_keys=True, default=str), file=sys.stderr)
    rows = getattr(err, "rows", None)
    if rows:
        print(f"offending rows: {rows}", file=sys.stderr)
    return code


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve(args)
        return COMMANDS[args.command](cfg, args)
    except OSError as e:
        return _fail(EXIT_IO, e)
    except NumericError as e:
        return _fail(EXIT_NUMERIC, e)
    except (TstarError, ValueError) as e:
        return _fail(EXIT_VALIDATION, e)


if __name__ == "__main__":
    sys.exit(main())
