"""Log-log slopes of the running-average residuals on the toy and rank-deficient problems.

    python scripts/rate_fit.py --k-outer 5000
"""
import argparse

from galet import GaletConfig, galet_run
from galet.metrics import fit_rate
from galet.problems import Example1Problem, SingularLstsqProblem


def report(name, trace, k_min):
    for key in ("r_x", "r_w", "r_y"):
        fit = fit_rate([getattr(r, key) for r in trace], k_min=k_min)
        print(f"{name:<18} {key}: slope={fit.slope:+.4f} r2={fit.r_squared:.4f} k={fit.k_range}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--k-outer", type=int, default=5000)
    ap.add_argument("--k-min", type=int, default=100)
    ap.add_argument("--seed", type=int, default=3)
    args = ap.parse_args()

    toy = Example1Problem()
    cfg = GaletConfig(alpha=0.3, beta=1.0, rho=0.2, t_inner=100, k_outer=args.k_outer)
    for i, (x0, y0) in enumerate(toy.default_inits()):
        report(f"example1/init{i}", galet_run(toy, x0, y0, cfg)[1], args.k_min)

    lsq = SingularLstsqProblem.generate(seed=args.seed)
    L = lsq.constants.l_g1
    cfg = GaletConfig(alpha=0.3, beta=1 / L, rho=1 / L ** 2, t_inner=50, k_outer=args.k_outer)
    report("singular-lstsq", galet_run(lsq, *lsq.default_inits()[0], cfg)[1], args.k_min)


if __name__ == "__main__":
    main()
