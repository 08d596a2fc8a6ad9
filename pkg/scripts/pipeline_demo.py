"""End-to-end pipeline on a simulated series at rho=0.60, beta=0.91, lambda=2.9 (n=380)."""
import json

from _common import parser
from tstar.cli import main as cli


def main() -> None:
    args = parser(__doc__, n=380).parse_args()
    args.outdir.mkdir(parents=True, exist_ok=True)
    series, report = args.outdir / "pipeline_series.csv", args.outdir / "pipeline.json"
    cli(["simulate", "--model", "arts", "--rho", "0.6", "--beta", "0.91", "--lambda", "2.9",
         "--n", str(args.n), "--seed", str(args.seed), "--out", str(series)])
    cli(["pipeline", str(series), "--model", "arts", "--seed", str(args.seed), "--out", str(report),
         "--acf-out", str(args.outdir / "pipeline_acf.csv"),
         "--plot", str(args.outdir / "pipeline")])
    d = json.loads(report.read_text())
    fit = d["fit"]
    print(f"ADF p={d['adf']['p_value']:.4f} stationary={d['adf']['stationary']}")
    print(f"significant PACF lags {d['correlogram']['significant_pacf_lags']}")
    print(f"fit rho={fit['rho_hat']:.3f} beta={fit['beta_hat']:.3f} lam={fit['lambda_hat']:.3f}")
    print(f"KS p={d['ks']['p_value']:.3f}  MWU p={d['mann_whitney']['p_value']:.3f}  "
          f"match={d['innovations_match']}")


if __name__ == "__main__":
    main()
