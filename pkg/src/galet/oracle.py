"""Bilevel problem interface and derivative/PL diagnostics.

A problem is ``min_x f(x, y) s.t. y in argmin_y g(x, y)``. Solvers and
metrics only ever talk to a problem through :class:`BilevelOracle`.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InvalidInputError, UnsupportedDiagnosticError
from .linalg import DEFAULT_FD_STEP, central_diff_directional, central_diff_grad


@dataclass(frozen=True)
class ProblemConstants:
    """Regularity constants; ``None`` means unknown.

    mu_g is the PL constant of g(x, .), lambda_g a lower bound on the nonzero
    singular values of the yy-Hessian of g, and l_f0, l_f1, l_g1, l_g2 the
    Lipschitz constants of f, grad f, grad g and the Hessian of g.
    """

    mu_g: Optional[float] = None
    lambda_g: Optional[float] = None
    l_f0: Optional[float] = None
    l_f1: Optional[float] = None
    l_g1: Optional[float] = None
    l_g2: Optional[float] = None

    def __post_init__(self):
        for name, value in self.__dict__.items():
            if value is not None and not value > 0:
                raise InvalidInputError(f"{name} must be positive or unknown, got {value}")


class BilevelOracle:
    """Base class for bilevel problems.

    Subclasses implement the objectives, their gradients and the two
    Hessian-vector products of g. ``g_star``, ``hessian_yy_dense``,
    ``hessian_yx_dense`` and ``optimality_gap`` are optional; the matching
    ``has_*`` flag advertises them.
    """

    name = "abstract"
    dim_x: int
    dim_y: int
    constants = ProblemConstants()

    has_g_star = False
    has_dense_hessian = False
    has_optimality_gap = False

    def f(self, x, y):
        raise NotImplementedError

    def grad_x_f(self, x, y):
        raise NotImplementedError

    def grad_y_f(self, x, y):
        raise NotImplementedError

    def g(self, x, y):
        raise NotImplementedError

    def grad_x_g(self, x, y):
        raise NotImplementedError

    def grad_y_g(self, x, y):
        raise NotImplementedError

    def hvp_yy_g(self, x, y, v):
        """Hessian_yy g(x, y) @ v, length dim_y."""
        raise NotImplementedError

    def hvp_xy_g(self, x, y, v):
        """Mixed Hessian (d_x by d_y) times v, length dim_x."""
        raise NotImplementedError

    def g_star(self, x):
        raise UnsupportedDiagnosticError(f"{self.name}: value function g* unavailable")

    def hessian_yy_dense(self, x, y):
        raise UnsupportedDiagnosticError(f"{self.name}: dense Hessian unavailable")

    def hessian_yx_dense(self, x, y):
        """Dense (d_y by d_x) mixed Hessian, assembled from hvp_xy_g by default."""
        cols = [self.hvp_xy_g(x, y, e) for e in np.eye(self.dim_y)]
        return np.array(cols).reshape(self.dim_y, self.dim_x)

    def optimality_gap(self, x, y):
        raise UnsupportedDiagnosticError(f"{self.name}: optimality gap unavailable")

    def default_inits(self):
        """Artifact-chosen starting points as a list of (x0, y0)."""
        return [(np.zeros(self.dim_x), np.zeros(self.dim_y))]

    def sample_point(self, rng, lo=-3.0, hi=3.0):
        return rng.uniform(lo, hi, self.dim_x), rng.uniform(lo, hi, self.dim_y)


class CountingOracle:
    """Transparent wrapper that counts calls per oracle method."""

    counted = frozenset({
        "f", "grad_x_f", "grad_y_f", "g", "grad_x_g", "grad_y_g",
        "hvp_yy_g", "hvp_xy_g", "g_star", "hessian_yy_dense", "optimality_gap",
    })

    def __init__(self, inner):
        self.inner = inner
        self.calls = Counter()

    def __getattr__(self, attr):
        value = getattr(self.inner, attr)
        if attr in self.counted:
            self.calls[attr] += 1
        return value


# --- diagnostics -----------------------------------------------------------

@dataclass
class PLPoint:
    x: np.ndarray
    y: np.ndarray
    lhs: float
    rhs: float
    passed: bool


def check_pl_inequality(oracle, mu_g, points):
    """Check ||grad_y g||^2 >= 2 mu_g (g - g*) at each (x, y)."""
    if not mu_g > 0:
        raise InvalidInputError("mu_g must be positive")
    if not oracle.has_g_star:
        raise UnsupportedDiagnosticError(f"{oracle.name}: PL check needs g*")
    report = []
    for x, y in points:
        gy = oracle.grad_y_g(x, y)
        lhs = float(gy @ gy)
        rhs = float(2.0 * mu_g * (oracle.g(x, y) - oracle.g_star(x)))
        report.append(PLPoint(x, y, lhs, rhs, lhs >= rhs - 1e-10 * (1 + abs(rhs))))
    return report


def _rel_err(analytic, numeric):
    analytic = np.atleast_1d(analytic)
    numeric = np.atleast_1d(numeric)
    return float(np.linalg.norm(analytic - numeric) / max(1.0, np.linalg.norm(analytic)))


@dataclass
class FDReport:
    """Worst relative error per derivative over all checked points.

    The error of analytic a against finite difference b is
    ``||a - b|| / max(1, ||a||)``.
    """

    max_rel_err: dict = field(default_factory=dict)
    n_points: int = 0

    def worst(self):
        return max(self.max_rel_err.values(), default=0.0)

    def passed(self, rel_tol=1e-5):
        return self.worst() <= rel_tol


def fd_verify(oracle, points, step=DEFAULT_FD_STEP, rel_tol=1e-5, rng=None):
    """Compare every analytic derivative of ``oracle`` to central differences."""
    rng = np.random.default_rng(0) if rng is None else rng
    errs = Counter()

    def bump(key, value):
        errs[key] = max(errs[key], value)

    n = 0
    for x, y in points:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        n += 1
        bump("grad_x_f", _rel_err(oracle.grad_x_f(x, y), central_diff_grad(lambda p: oracle.f(p, y), x, step)))
        bump("grad_y_f", _rel_err(oracle.grad_y_f(x, y), central_diff_grad(lambda p: oracle.f(x, p), y, step)))
        bump("grad_x_g", _rel_err(oracle.grad_x_g(x, y), central_diff_grad(lambda p: oracle.g(p, y), x, step)))
        bump("grad_y_g", _rel_err(oracle.grad_y_g(x, y), central_diff_grad(lambda p: oracle.g(x, p), y, step)))

        v = rng.standard_normal(oracle.dim_y)
        v /= np.linalg.norm(v)
        bump("hvp_yy_g", _rel_err(
            oracle.hvp_yy_g(x, y, v),
            central_diff_directional(lambda p: oracle.grad_y_g(x, p), y, v, step),
        ))
        # d/dt grad_x g(x, y + t v) is the mixed Hessian acting on v
        bump("hvp_xy_g", _rel_err(
            oracle.hvp_xy_g(x, y, v),
            central_diff_directional(lambda p: oracle.grad_x_g(x, p), y, v, step),
        ))
    return FDReport(dict(errs), n)


@dataclass
class InterfaceReport:
    max_symmetry_err: float = 0.0
    max_linearity_err: float = 0.0
    max_dense_err: float = 0.0
    min_g_minus_gstar: float = float("inf")


def check_interface(oracle, points, rng=None):
    """Symmetry and linearity of the HVPs, dense-Hessian consistency, g >= g*."""
    rng = np.random.default_rng(0) if rng is None else rng
    rep = InterfaceReport()
    for x, y in points:
        u, v = rng.standard_normal((2, oracle.dim_y))
        a, b = rng.standard_normal(2)
        hu, hv = oracle.hvp_yy_g(x, y, u), oracle.hvp_yy_g(x, y, v)
        scale = 1.0 + np.linalg.norm(hu) * np.linalg.norm(v) + np.linalg.norm(hv) * np.linalg.norm(u)
        rep.max_symmetry_err = max(rep.max_symmetry_err, abs(u @ hv - v @ hu) / scale)
        for hvp, hu_, hv_ in (
            (oracle.hvp_yy_g, hu, hv),
            (oracle.hvp_xy_g, oracle.hvp_xy_g(x, y, u), oracle.hvp_xy_g(x, y, v)),
        ):
            lhs = hvp(x, y, a * u + b * v)
            rhs = a * hu_ + b * hv_
            rep.max_linearity_err = max(
                rep.max_linearity_err, np.linalg.norm(lhs - rhs) / (1.0 + np.linalg.norm(rhs))
            )
        if oracle.has_dense_hessian:
            dense = oracle.hessian_yy_dense(x, y) @ v
            rep.max_dense_err = max(
                rep.max_dense_err, np.linalg.norm(dense - hv) / (1.0 + np.linalg.norm(hv))
            )
        if oracle.has_g_star:
            rep.min_g_minus_gstar = min(rep.min_g_minus_gstar, oracle.g(x, y) - oracle.g_star(x))
    return rep
