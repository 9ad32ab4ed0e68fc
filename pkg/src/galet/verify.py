"""Brute-force and dense-algebra oracles used to cross-check the solver."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import EmptyResultError, InvalidInputError, UnsupportedDiagnosticError
from .linalg import DEFAULT_RANK_TOL, numerical_rank, smallest_nonzero_singular_value
from .metrics import minimal_norm_w
from .solver import w_increment_pl

DEFAULT_FEASIBILITY_TOL = 1e-3


@dataclass(frozen=True)
class GridSpec:
    """Per-dimension (lo, hi, steps) for a tensor-product grid."""

    axes: tuple

    def __post_init__(self):
        axes = tuple(tuple(a) for a in self.axes)
        for lo, hi, steps in axes:
            if not lo < hi or int(steps) < 2:
                raise InvalidInputError(f"bad grid axis ({lo}, {hi}, {steps})")
        object.__setattr__(self, "axes", axes)

    @classmethod
    def cube(cls, lo, hi, steps, dim=3):
        return cls(((lo, hi, steps),) * dim)

    def points(self, i):
        lo, hi, steps = self.axes[i]
        return np.linspace(lo, hi, int(steps))

    def spacing(self, i):
        lo, hi, steps = self.axes[i]
        return (hi - lo) / (int(steps) - 1)


@dataclass(frozen=True)
class BruteForceResult:
    x: float
    y: np.ndarray
    f: float
    g: float
    spacing_x: float
    n_feasible: int
    feasibility_tol: float


def _scan_slice(xs, y1, y2, tol):
    """Best feasible point over a block of x values; returns (f, flat_idx, count)."""
    Y1, Y2 = np.meshgrid(y1, y2, indexing="ij")
    base = Y1 - np.sin(Y2)
    best = (np.inf, -1, 0)
    count = 0
    for i, x in enumerate(xs):
        r = x + base
        feasible = 0.5 * r * r <= tol
        n = int(feasible.sum())
        if n == 0:
            continue
        count += n
        fv = np.where(feasible, x * x + base, np.inf)
        j = int(np.argmin(fv))
        if fv.flat[j] < best[0]:
            best = (float(fv.flat[j]), i * base.size + j, 0)
    return best[0], best[1], count


def brute_force_example1(grid=None, feasibility_tol=DEFAULT_FEASIBILITY_TOL, workers=1):
    """Minimise the toy upper objective over grid points with g <= feasibility_tol.

    Ties go to the lowest lexicographic grid index, so the answer does not
    depend on ``workers``.
    """
    grid = GridSpec.cube(-3.0, 3.0, 201) if grid is None else grid
    if len(grid.axes) != 3:
        raise InvalidInputError("grid must cover (x, y1, y2)")
    xs, y1, y2 = grid.points(0), grid.points(1), grid.points(2)
    blocks = np.array_split(np.arange(xs.size), max(1, min(int(workers), xs.size)))
    blocks = [b for b in blocks if b.size]

    def run(block):
        fbest, idx, n = _scan_slice(xs[block], y1, y2, feasibility_tol)
        return fbest, (-1 if idx < 0 else int(block[0]) * y1.size * y2.size + idx), n

    if workers > 1:
        with ThreadPoolExecutor(max_workers=int(workers)) as pool:
            results = list(pool.map(run, blocks))
    else:
        results = [run(b) for b in blocks]
    n_feasible = sum(r[2] for r in results)
    candidates = [r for r in results if r[1] >= 0]
    if not candidates:
        raise EmptyResultError(
            "no grid point satisfies g <= feasibility_tol; refine the grid or raise the tolerance"
        )
    fbest, idx, _ = min(candidates, key=lambda r: (r[0], r[1]))
    i, rest = divmod(idx, y1.size * y2.size)
    j, k = divmod(rest, y2.size)
    x, y = xs[i], np.array([y1[j], y2[k]])
    r = x + y[0] - np.sin(y[1])
    return BruteForceResult(float(x), y, fbest, 0.5 * float(r * r), grid.spacing(0),
                            n_feasible, feasibility_tol)


@dataclass
class WConvergenceReport:
    curve: list
    decay_bound: float
    max_ratio: float
    monotone: bool
    lambda_hat: float

    @property
    def passed(self):
        return self.monotone and self.max_ratio <= self.decay_bound + 1e-6


def w_gd_vs_pinv(oracle, x, y, rho, t_max, floor=1e-8):
    """Distance of the zero-started shadow gradient iterates to the minimum-norm solution.

    Step ratios are only compared against 1 - rho * lambda_hat^2 while the
    error is above ``floor * (1 + ||w_dag||)``; below that roundoff dominates.
    """
    if not oracle.has_dense_hessian:
        raise UnsupportedDiagnosticError(f"{oracle.name}: needs the dense Hessian")
    l_g1 = oracle.constants.l_g1
    if l_g1 is not None and rho > 1.0 / l_g1 ** 2 * (1 + 1e-12):
        raise InvalidInputError(f"rho={rho} exceeds 1/l_g1^2={1 / l_g1 ** 2}")
    H = oracle.hessian_yy_dense(x, y)
    lam = smallest_nonzero_singular_value(H)
    w_dag = minimal_norm_w(oracle, x, y)
    gf = oracle.grad_y_f(x, y)
    w = np.zeros(oracle.dim_y)
    curve = [(0, float(np.linalg.norm(w - w_dag)))]
    for t in range(1, t_max + 1):
        w = w - rho * w_increment_pl(oracle, x, y, w, grad_y_f=gf)
        curve.append((t, float(np.linalg.norm(w - w_dag))))
    cutoff = floor * (1.0 + np.linalg.norm(w_dag))
    ratios = [e1 / e0 for (_, e0), (_, e1) in zip(curve, curve[1:]) if e0 > cutoff]
    monotone = all(r <= 1.0 + 1e-12 for r in ratios)
    return WConvergenceReport(curve, 1.0 - rho * lam ** 2, max(ratios, default=0.0), monotone, lam)


@dataclass(frozen=True)
class RankProbe:
    x: np.ndarray
    y: np.ndarray
    rank_augmented: int
    rank_yy: int


def rank_probe(oracle, points, tol=DEFAULT_RANK_TOL):
    """Numerical ranks of [Hyy, Hyx] and Hyy at each point."""
    if not oracle.has_dense_hessian:
        raise UnsupportedDiagnosticError(f"{oracle.name}: needs the dense Hessian")
    out = []
    for x, y in points:
        hyy = oracle.hessian_yy_dense(x, y)
        hyx = oracle.hessian_yx_dense(x, y)
        out.append(RankProbe(x, y, numerical_rank(np.hstack([hyy, hyx]), tol), numerical_rank(hyy, tol)))
    return out
