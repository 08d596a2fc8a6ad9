"""Parametric bootstrap of the TAR estimators at two sample sizes, drawn as SVG box plots."""
import numpy as np

from _common import parser
from tstar import svg
from tstar.estimation import bootstrap
from tstar.processes import ModelParams


def main() -> None:
    p = parser(__doc__)
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--model", choices=["tar", "arts"], default="tar")
    args = p.parse_args()
    args.outdir.mkdir(parents=True, exist_ok=True)
    m = ModelParams.of(args.model, 0.8, 0.7, 2.0)
    runs = {n: bootstrap(m, n, args.reps, seed=args.seed + i)
            for i, n in enumerate((1_000, args.n))}
    for k, name in enumerate(("rho_hat", "beta_hat", "lambda_hat")):
        groups = {f"n={n}": r.estimates[:, k] for n, r in runs.items()}
        svg.box_plot(args.outdir / f"bootstrap_{args.model}_{name}.svg", groups,
                     title=f"{name}, {args.reps} replicates", ylabel=name)
        for label, v in groups.items():
            q1, med, q3 = np.quantile(v, [0.25, 0.5, 0.75])
            print(f"{name:<10} {label:<8} median {med:.3f}  IQR {q3 - q1:.3f}")


if __name__ == "__main__":
    main()
