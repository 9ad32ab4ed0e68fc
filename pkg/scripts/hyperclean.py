"""Learn per-sample weights on a synthetic label-noise problem and compare clean vs corrupted weights.

    python scripts/hyperclean.py --p-c 0.5 --seed 0
"""
import argparse

import numpy as np

from galet import GaletConfig, galet_run
from galet.problems import generate_hyperclean_data


def accuracy(u, v, y):
    # last coordinate of y is the bias
    return float(np.mean((u @ y[:-1] + y[-1] > 0) == (v > 0.5)))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-tr", type=int, default=100)
    ap.add_argument("--n-val", type=int, default=100)
    ap.add_argument("--p", type=int, default=10)
    ap.add_argument("--p-c", type=float, default=0.5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--k-outer", type=int, default=300)
    args = ap.parse_args()

    prob = generate_hyperclean_data(n_tr=args.n_tr, n_val=args.n_val, p=args.p, p_c=args.p_c, seed=args.seed)
    cfg = GaletConfig(alpha=100.0, beta=1.0, rho=0.5, n_inner=20, t_inner=20, k_outer=args.k_outer)
    x0, y0 = prob.default_inits()[0]
    final, _ = galet_run(prob, x0, y0, cfg)
    sig = 1.0 / (1.0 + np.exp(-final.x))
    print(f"corrupted samples: {prob.flipped.size}/{args.n_tr}")
    if prob.flipped.size:
        print(f"mean weight  corrupted={sig[prob.flipped].mean():.3f}  clean={sig[prob.clean].mean():.3f}")
    print(f"validation loss  {prob.f(x0, y0):.4f} -> {prob.f(final.x, final.y):.4f}")
    print(f"validation accuracy {accuracy(prob.u_val, prob.v_val, final.y):.3f}")


if __name__ == "__main__":
    main()
