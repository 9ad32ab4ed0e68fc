"""Final optimality gap of the pl and sc shadow gradient updates across inner loop lengths.

    python scripts/ablation.py --t-inner 1 10 50
"""
import argparse

from galet import GaletConfig, galet_run
from galet.problems import Example1Problem


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--t-inner", type=int, nargs="+", default=[1, 10, 50])
    ap.add_argument("--rho", type=float, default=0.1)
    ap.add_argument("--k-outer", type=int, default=1000)
    args = ap.parse_args()

    problem = Example1Problem()
    print(f"{'variant':>7} {'T':>4} {'init':>4} {'x_final':>10} {'gap':>10} {'r_w':>10}")
    for variant in ("pl", "sc"):
        for t in args.t_inner:
            cfg = GaletConfig(rho=args.rho, t_inner=t, k_outer=args.k_outer, w_variant=variant)
            for i, (x0, y0) in enumerate(problem.default_inits()):
                final, trace = galet_run(problem, x0, y0, cfg)
                gap = problem.optimality_gap(final.x, final.y)
                print(f"{variant:>7} {t:>4} {i:>4} {final.x[0]:>10.5f} {gap:>10.3e} {trace[-1].r_w:>10.3e}")


if __name__ == "__main__":
    main()
