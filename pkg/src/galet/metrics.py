"""Stationarity residuals and convergence diagnostics."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidInputError, UnsupportedDiagnosticError
from .linalg import DEFAULT_RANK_TOL, pseudoinverse, smallest_nonzero_singular_value

APPROX_G_STAR_STEPS = 500


@dataclass(frozen=True)
class ResidualTriple:
    """r_x = ||grad_x f + Hxy w||^2, r_w = ||Hyy (grad_y f + Hyy w)||^2, r_y = g - g*.

    r_y is None when the problem has no value function; ``r_y_approx`` marks
    an r_y computed against a numerically approximated g*.
    """

    r_x: float
    r_w: float
    r_y: Optional[float] = None
    r_y_approx: bool = False

    def max(self):
        return max(v for v in (self.r_x, self.r_w, self.r_y) if v is not None)


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r_squared: float
    k_range: tuple


def _lipschitz_estimate(oracle, x, y, iters=100):
    if hasattr(oracle, "l_g1_bound"):
        return oracle.l_g1_bound(x)
    if oracle.constants.l_g1 is not None:
        return oracle.constants.l_g1
    # power iteration on the local Hessian, doubled for safety away from y
    v = np.ones(oracle.dim_y) / math.sqrt(oracle.dim_y)
    lam = 0.0
    for _ in range(iters):
        hv = oracle.hvp_yy_g(x, y, v)
        lam = float(np.linalg.norm(hv))
        if lam == 0.0:
            return 1.0
        v = hv / lam
    return 2.0 * lam


def approx_g_star(oracle, x, y, steps=APPROX_G_STAR_STEPS):
    """g(x, y_T) after ``steps`` gradient steps with stepsize 1/L from y."""
    step = 1.0 / _lipschitz_estimate(oracle, x, y)
    z = np.array(y, dtype=float)
    for _ in range(steps):
        z = z - step * oracle.grad_y_g(x, z)
    return min(oracle.g(x, z), oracle.g(x, y))


def _value_gap(oracle, x, y, approx):
    if oracle.has_g_star:
        return max(0.0, float(oracle.g(x, y) - oracle.g_star(x))), False
    if approx:
        return max(0.0, float(oracle.g(x, y) - approx_g_star(oracle, x, y))), True
    return None, False


def residuals(oracle, x, y, w, approx_g_star=False):
    gx = oracle.grad_x_f(x, y) + oracle.hvp_xy_g(x, y, w)
    inner = oracle.grad_y_f(x, y) + oracle.hvp_yy_g(x, y, w)
    hw = oracle.hvp_yy_g(x, y, inner)
    r_y, approx = _value_gap(oracle, x, y, approx_g_star)
    return ResidualTriple(float(gx @ gx), float(hw @ hw), r_y, approx)


def val_kkt_score(oracle, x, y, approx_g_star=False, r_y=None):
    """KKT score of the value-function reformulation.

    ||grad_x f||^2 + ||grad_y f||^2 + (g - g*). This does not vanish at the
    global solutions of a PL bilevel problem in general.
    """
    if r_y is None:
        r_y, _ = _value_gap(oracle, x, y, approx_g_star)
        if r_y is None:
            raise UnsupportedDiagnosticError(f"{oracle.name}: KKT score needs g*")
    gx, gy = oracle.grad_x_f(x, y), oracle.grad_y_f(x, y)
    return float(gx @ gx + gy @ gy + r_y)


def minimal_norm_w(oracle, x, y, tol=DEFAULT_RANK_TOL):
    """-pinv(Hyy) grad_y f, the minimum-norm minimiser of ||grad_y f + Hyy w||."""
    if not oracle.has_dense_hessian:
        raise UnsupportedDiagnosticError(f"{oracle.name}: needs the dense Hessian")
    return -pseudoinverse(oracle.hessian_yy_dense(x, y), tol) @ oracle.grad_y_f(x, y)


def lyapunov_value(oracle, x, y, c=1.0):
    """f + w_dag^T grad_y g + c (g - g*), with w_dag the minimum-norm shadow gradient."""
    if c < 0:
        raise InvalidInputError("c must be non-negative")
    if not oracle.has_g_star:
        raise UnsupportedDiagnosticError(f"{oracle.name}: Lyapunov value needs g*")
    w = minimal_norm_w(oracle, x, y)
    return float(oracle.f(x, y) + w @ oracle.grad_y_g(x, y)
                 + c * (oracle.g(x, y) - oracle.g_star(x)))


def estimate_lambda_g(oracle, points, tol=DEFAULT_RANK_TOL):
    """Smallest nonzero singular value of Hyy over sampled points.

    Only a candidate for the infimum over all (x, y), never a certificate.
    """
    return min(smallest_nonzero_singular_value(oracle.hessian_yy_dense(x, y), tol)
               for x, y in points)


def running_average(values):
    values = np.asarray(values, dtype=float)
    return np.cumsum(values) / np.arange(1, values.size + 1)


def fit_rate(series, k_min=None, average=True):
    """Log-log least squares fit of a residual series against iteration count.

    ``series`` is a sequence of values or (k, value) pairs; the abscissa of
    the i-th entry (in k order) is i + 1, the number of terms averaged so far.
    With ``average`` the fit is on the running average, otherwise on the raw
    values. ``k_min`` defaults to dropping the first 10% of entries.
    """
    series = list(series)
    if series and np.ndim(series[0]) == 1:
        values = [v for _, v in sorted(series, key=lambda kv: kv[0])]
    else:
        values = series
    values = np.asarray(values, dtype=float)
    if np.any(~np.isfinite(values)) or np.any(values < 0):
        raise InvalidInputError("series values must be finite and non-negative")
    n = values.size
    if k_min is None:
        k_min = max(1, math.ceil(0.1 * n))
    if k_min < 1:
        raise InvalidInputError("k_min must be at least 1")
    ys = running_average(values) if average else values
    ks = np.arange(1, n + 1)
    keep = ks >= k_min
    ks, ys = ks[keep], ys[keep]
    if ks.size < 3:
        raise InvalidInputError(f"need at least 3 points at k >= {k_min}, have {ks.size}")
    if np.any(ys <= 0):
        raise InvalidInputError("log fit needs positive values in the fit range")
    lx, ly = np.log(ks), np.log(ys)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot <= 1e-30 * max(1.0, float(np.sum(ly ** 2))) else 1.0 - float(resid @ resid) / ss_tot
    return RateFit(float(slope), float(intercept), r2, (int(ks[0]), int(ks[-1])))
