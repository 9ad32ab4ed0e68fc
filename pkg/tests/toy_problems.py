"""Tiny hand-checkable problems used only by the tests."""
import numpy as np

from galet.oracle import BilevelOracle, ProblemConstants


class ConstantUpperProblem(BilevelOracle):
    """f = 3 everywhere, g = ||y - x||^2 / 2, so g* = 0 and S(x) = {x}."""

    name = "constant-upper"
    dim_x, dim_y = 2, 2
    constants = ProblemConstants(mu_g=1.0, lambda_g=1.0, l_g1=1.0)
    has_g_star = True
    has_dense_hessian = True

    def f(self, x, y):
        return 3.0

    def grad_x_f(self, x, y):
        return np.zeros(2)

    def grad_y_f(self, x, y):
        return np.zeros(2)

    def g(self, x, y):
        d = np.asarray(y) - np.asarray(x)
        return 0.5 * float(d @ d)

    def grad_x_g(self, x, y):
        return np.asarray(x, dtype=float) - np.asarray(y, dtype=float)

    def grad_y_g(self, x, y):
        return np.asarray(y, dtype=float) - np.asarray(x, dtype=float)

    def hvp_yy_g(self, x, y, v):
        return np.asarray(v, dtype=float).copy()

    def hvp_xy_g(self, x, y, v):
        return -np.asarray(v, dtype=float)

    def g_star(self, x):
        return 0.0

    def hessian_yy_dense(self, x, y):
        return np.eye(2)


class HalfNormProblem(BilevelOracle):
    """g = ||y||^2 / 2 independent of x; f = ||x||^2 + sum(y)."""

    name = "half-norm"
    dim_x, dim_y = 1, 3
    constants = ProblemConstants(mu_g=1.0, lambda_g=1.0, l_g1=1.0)
    has_g_star = True
    has_dense_hessian = True

    def f(self, x, y):
        return float(np.sum(np.square(x)) + np.sum(y))

    def grad_x_f(self, x, y):
        return 2.0 * np.asarray(x, dtype=float)

    def grad_y_f(self, x, y):
        return np.ones(3)

    def g(self, x, y):
        return 0.5 * float(np.sum(np.square(y)))

    def grad_x_g(self, x, y):
        return np.zeros(1)

    def grad_y_g(self, x, y):
        return np.asarray(y, dtype=float).copy()

    def hvp_yy_g(self, x, y, v):
        return np.asarray(v, dtype=float).copy()

    def hvp_xy_g(self, x, y, v):
        return np.zeros(1)

    def g_star(self, x):
        return 0.0

    def hessian_yy_dense(self, x, y):
        return np.eye(3)
