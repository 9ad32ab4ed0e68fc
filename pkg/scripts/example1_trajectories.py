"""Per-iteration optimality gap, residuals and value-function score on the toy problem.

Writes one CSV per starting point, ready for plotting:

    python scripts/example1_trajectories.py --out out/fig_example1
    python scripts/example1_trajectories.py --t-inner 50 --rho 0.5
"""
import argparse
import csv
from pathlib import Path

from galet import GaletConfig, galet_run
from galet.problems import Example1Problem


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="out/example1_trajectories")
    ap.add_argument("--alpha", type=float, default=0.3)
    ap.add_argument("--beta", type=float, default=1.0)
    ap.add_argument("--rho", type=float, default=0.1)
    ap.add_argument("--n-inner", type=int, default=1)
    ap.add_argument("--t-inner", type=int, default=1)
    ap.add_argument("--k-outer", type=int, default=1000)
    ap.add_argument("--warm-start", action="store_true", help="start each w loop from the previous w")
    args = ap.parse_args()

    cfg = GaletConfig(alpha=args.alpha, beta=args.beta, rho=args.rho, n_inner=args.n_inner,
                      t_inner=args.t_inner, k_outer=args.k_outer, w_warm_start=args.warm_start)
    problem = Example1Problem()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i, (x0, y0) in enumerate(problem.default_inits()):
        final, trace = galet_run(problem, x0, y0, cfg)
        path = out / f"init{i}.csv"
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "optimality_gap", "residual_sum", "val_kkt_score"])
            for r in trace:
                w.writerow([r.k, r.optimality_gap, r.r_x + r.r_w + r.r_y, r.val_kkt_score])
        gap = problem.optimality_gap(final.x, final.y)
        print(f"init {i}: x0={x0.tolist()} y0={y0.tolist()} -> x={final.x[0]:.6f} gap={gap:.3e}  ({path})")


if __name__ == "__main__":
    main()
