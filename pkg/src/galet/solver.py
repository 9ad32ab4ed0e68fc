"""GALET: alternating gradient method for bilevel problems with a PL lower level.

Each outer iteration k runs N gradient steps on g(x^k, .), T gradient steps
on the shadow implicit gradient objective ||grad_y f + H w||^2 / 2 (H the
yy-Hessian of g) started from w = 0, and one step on x along
d_x = grad_x f + (mixed Hessian) w.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import metrics
from .errors import DivergenceError, InvalidInputError, UnsupportedDiagnosticError

DIVERGENCE_NORM = 1e12
W_VARIANTS = ("pl", "sc")


@dataclass(frozen=True)
class GaletConfig:
    alpha: float = 0.3
    beta: float = 1.0
    rho: float = 0.1
    n_inner: int = 1
    t_inner: int = 1
    k_outer: int = 1000
    w_variant: str = "pl"
    w_warm_start: bool = False
    stop_tol: Optional[float] = None
    # trace diagnostics
    record_b_k: bool = False
    record_post: bool = False
    approx_g_star: bool = False

    def __post_init__(self):
        for name in ("alpha", "beta", "rho"):
            if not getattr(self, name) > 0:
                raise InvalidInputError(f"{name} must be positive")
        for name in ("n_inner", "t_inner"):
            if getattr(self, name) < 1:
                raise InvalidInputError(f"{name} must be at least 1")
        if self.k_outer < 0:
            raise InvalidInputError("k_outer must be non-negative")
        if self.w_variant not in W_VARIANTS:
            raise InvalidInputError(f"w_variant must be one of {W_VARIANTS}")
        if self.stop_tol is not None and not self.stop_tol > 0:
            raise InvalidInputError("stop_tol must be positive when set")


@dataclass
class Iterate:
    x: np.ndarray
    y: np.ndarray
    w: np.ndarray
    k: int = 0


@dataclass
class TraceRecord:
    """Diagnostics of outer iteration k, measured at (x^k, y^k, w^k).

    ``dx_norm_sq`` is ||d_x^k||^2 of the update taken from that iterate;
    ``post`` holds the residuals at (x^k, y^{k+1}, w^{k+1}) when requested.
    Fields a problem cannot supply are None.
    """

    k: int
    r_x: float
    r_w: float
    r_y: Optional[float] = None
    r_y_approx: bool = False
    dx_norm_sq: Optional[float] = None
    val_kkt_score: Optional[float] = None
    optimality_gap: Optional[float] = None
    b_k: Optional[float] = None
    wall_time_ms: float = 0.0
    post: Optional[metrics.ResidualTriple] = field(default=None, repr=False)

    def max_residual(self):
        vals = [self.r_x, self.r_w] + ([] if self.r_y is None else [self.r_y])
        return max(vals)


def _check_finite(vec, what, last_finite, trace):
    if not np.all(np.isfinite(vec)) or np.linalg.norm(vec) > DIVERGENCE_NORM:
        raise DivergenceError(f"{what} diverged after outer iteration {last_finite.k}",
                              iterate=last_finite, trace=trace)


def ll_step(oracle, x, y, beta):
    grad = oracle.grad_y_g(x, y)
    if not np.all(np.isfinite(grad)):
        raise DivergenceError("non-finite lower-level gradient", iterate=Iterate(x, y, np.zeros_like(y)))
    return y - beta * grad


def w_increment_pl(oracle, x, y, w, grad_y_f=None):
    gf = oracle.grad_y_f(x, y) if grad_y_f is None else grad_y_f
    return oracle.hvp_yy_g(x, y, gf + oracle.hvp_yy_g(x, y, w))


def w_increment_sc(oracle, x, y, w, grad_y_f=None):
    gf = oracle.grad_y_f(x, y) if grad_y_f is None else grad_y_f
    return gf + oracle.hvp_yy_g(x, y, w)


def w_solve(oracle, x, y, config, w0=None):
    """T gradient steps on the shadow implicit gradient level.

    Starts from zero unless ``config.w_warm_start`` and ``w0`` is given.
    Returns (w, steps_taken).
    """
    if config.t_inner < 1:
        raise InvalidInputError("t_inner must be at least 1")
    increment = w_increment_pl if config.w_variant == "pl" else w_increment_sc
    w = np.zeros(oracle.dim_y) if (w0 is None or not config.w_warm_start) else np.array(w0, dtype=float)
    gf = oracle.grad_y_f(x, y)
    for _ in range(config.t_inner):
        w = w - config.rho * increment(oracle, x, y, w, grad_y_f=gf)
    # non-finite values propagate, so one check after the loop suffices
    if not np.all(np.isfinite(w)) or np.linalg.norm(w) > DIVERGENCE_NORM:
        raise DivergenceError("shadow implicit gradient iterate diverged", iterate=Iterate(x, y, w))
    return w, config.t_inner


def ul_increment(oracle, x, y, w):
    return oracle.grad_x_f(x, y) + oracle.hvp_xy_g(x, y, w)


def galet_step(oracle, it, config):
    """One outer iteration; returns (Iterate k+1, d_x^k)."""
    y = it.y
    for _ in range(config.n_inner):
        y = ll_step(oracle, it.x, y, config.beta)
    w, _ = w_solve(oracle, it.x, y, config, w0=it.w)
    dx = ul_increment(oracle, it.x, y, w)
    x = it.x - config.alpha * dx
    return Iterate(x, y, w, it.k + 1), dx


def _record(oracle, it, config):
    res = metrics.residuals(oracle, it.x, it.y, it.w, approx_g_star=config.approx_g_star)
    rec = TraceRecord(k=it.k, r_x=res.r_x, r_w=res.r_w, r_y=res.r_y, r_y_approx=res.r_y_approx)
    if res.r_y is not None:
        rec.val_kkt_score = metrics.val_kkt_score(
            oracle, it.x, it.y, approx_g_star=config.approx_g_star, r_y=res.r_y,
        )
    if oracle.has_optimality_gap:
        rec.optimality_gap = float(oracle.optimality_gap(it.x, it.y))
    return rec


def galet_run(oracle, x0, y0, config, callback=None):
    """Run K outer iterations of GALET.

    Returns (final Iterate, list of TraceRecord). ``callback(iterate)`` is
    invoked on every iterate x^0 .. x^K that the run visits.
    """
    x0 = np.array(x0, dtype=float).reshape(-1)
    y0 = np.array(y0, dtype=float).reshape(-1)
    if x0.shape != (oracle.dim_x,) or y0.shape != (oracle.dim_y,):
        raise InvalidInputError(
            f"initial point has shapes {x0.shape}, {y0.shape}; "
            f"problem expects ({oracle.dim_x},), ({oracle.dim_y},)"
        )
    if (config.record_b_k or config.record_post) and not oracle.has_dense_hessian:
        raise UnsupportedDiagnosticError(f"{oracle.name}: b_k needs the dense Hessian")
    it = Iterate(x0, y0, np.zeros(oracle.dim_y), 0)
    trace = []
    if callback is not None:
        callback(it)
    for _ in range(config.k_outer):
        t0 = time.perf_counter()
        rec = _record(oracle, it, config)
        if config.stop_tol is not None and rec.max_residual() <= config.stop_tol:
            rec.wall_time_ms = 1e3 * (time.perf_counter() - t0)
            trace.append(rec)
            break
        try:
            nxt, dx = galet_step(oracle, it, config)
        except DivergenceError as exc:
            raise DivergenceError(str(exc), iterate=it, trace=trace) from None
        rec.dx_norm_sq = float(dx @ dx)
        if config.record_b_k:
            w_dag = metrics.minimal_norm_w(oracle, it.x, nxt.y)
            rec.b_k = float(np.linalg.norm(nxt.w - w_dag))
        if config.record_post:
            rec.post = metrics.residuals(oracle, it.x, nxt.y, nxt.w, approx_g_star=config.approx_g_star)
        rec.wall_time_ms = 1e3 * (time.perf_counter() - t0)
        trace.append(rec)
        for vec, what in ((nxt.x, "x"), (nxt.y, "y"), (nxt.w, "w")):
            _check_finite(vec, what, it, trace)
        it = nxt
        if callback is not None:
            callback(it)
    return it, trace
