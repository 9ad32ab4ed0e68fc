"""Benchmark bilevel problems with closed-form derivatives."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .oracle import BilevelOracle, ProblemConstants
from .rng import make_rng


def _vec(a):
    return np.asarray(a, dtype=float).reshape(-1)


# --- Example 1 ---------------------------------------------------------------

@dataclass(frozen=True)
class Example1Derivatives:
    grad_x_f: np.ndarray
    grad_y_f: np.ndarray
    grad_x_g: np.ndarray
    grad_y_g: np.ndarray
    hess_yy_g: np.ndarray
    hess_yx_g: np.ndarray


def example1_derivatives(x, y):
    """All first and second derivatives of the toy problem at (x, y)."""
    x = float(_vec(x)[0])
    y1, y2 = _vec(y)
    r = x + y1 - math.sin(y2)
    c, s = math.cos(y2), math.sin(y2)
    v = np.array([1.0, -c])
    return Example1Derivatives(
        grad_x_f=np.array([2.0 * x]),
        grad_y_f=v.copy(),
        grad_x_g=np.array([r]),
        grad_y_g=r * v,
        hess_yy_g=np.array([[1.0, -c], [-c, c * c + s * r]]),
        hess_yx_g=v.reshape(2, 1),
    )


def example1_optimality_gap(x, y):
    x = float(_vec(x)[0])
    y1, y2 = _vec(y)
    return (x - 0.5) ** 2 + (0.5 + y1 - math.sin(y2)) ** 2


class Example1Problem(BilevelOracle):
    """f = x^2 + y1 - sin(y2),  g = (x + y1 - sin(y2))^2 / 2.

    g(x, .) is PL with constant 1 but not convex; its solution set is the
    curve y1 = sin(y2) - x and the global bilevel solutions have x = 0.5.
    """

    name = "example1"
    dim_x, dim_y = 1, 2
    constants = ProblemConstants(mu_g=1.0)
    has_g_star = True
    has_dense_hessian = True
    has_optimality_gap = True

    @staticmethod
    def _parts(x, y):
        x = float(np.ravel(x)[0])
        y1, y2 = float(y[0]), float(y[1])
        return x, y1, y2, x + y1 - math.sin(y2)

    def f(self, x, y):
        x, y1, y2, _ = self._parts(x, y)
        return x * x + y1 - math.sin(y2)

    def grad_x_f(self, x, y):
        return np.array([2.0 * float(_vec(x)[0])])

    def grad_y_f(self, x, y):
        return np.array([1.0, -math.cos(_vec(y)[1])])

    def g(self, x, y):
        return 0.5 * self._parts(x, y)[3] ** 2

    def grad_x_g(self, x, y):
        return np.array([self._parts(x, y)[3]])

    def grad_y_g(self, x, y):
        _, _, y2, r = self._parts(x, y)
        return r * np.array([1.0, -math.cos(y2)])

    def hvp_yy_g(self, x, y, v):
        _, _, y2, r = self._parts(x, y)
        c, s = math.cos(y2), math.sin(y2)
        v1, v2 = _vec(v)
        return np.array([v1 - c * v2, -c * v1 + (c * c + s * r) * v2])

    def hvp_xy_g(self, x, y, v):
        v = _vec(v)
        return np.array([v[0] - math.cos(_vec(y)[1]) * v[1]])

    def g_star(self, x):
        return 0.0

    def hessian_yy_dense(self, x, y):
        _, _, y2, r = self._parts(x, y)
        c, s = math.cos(y2), math.sin(y2)
        return np.array([[1.0, -c], [-c, c * c + s * r]])

    def hessian_yx_dense(self, x, y):
        return np.array([[1.0], [-math.cos(_vec(y)[1])]])

    def optimality_gap(self, x, y):
        return example1_optimality_gap(x, y)

    def default_inits(self):
        return [
            (np.array([-3.0]), np.array([2.0, 1.0])),
            (np.array([2.0]), np.array([-2.0, -1.0])),
        ]

    @staticmethod
    def global_point(y2):
        """A point of the global solution set, parametrised by y2."""
        return np.array([0.5]), np.array([math.sin(y2) - 0.5, y2])


# --- rank-deficient least squares lower level --------------------------------

@dataclass(frozen=True, eq=False)
class SingularLstsqProblem(BilevelOracle):
    """g = ||A y - B x||^2 / 2 with wide A, f = ||y - y_target||^2 / 2 + ||x||^2 / 2.

    B = A C keeps B x in range(A), so g* = 0 exactly while the yy-Hessian
    A^T A stays singular.
    """

    A: np.ndarray
    C: np.ndarray
    y_target: np.ndarray
    seed: int = 0
    name = "singular-lstsq"
    has_g_star = True
    has_dense_hessian = True
    has_optimality_gap = True
    B: np.ndarray = field(init=False)
    constants: ProblemConstants = field(init=False)
    x_star: np.ndarray = field(init=False)

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        C = np.asarray(self.C, dtype=float)
        if A.shape[0] >= A.shape[1]:
            raise InvalidInputError("A must be wide (rows < columns)")
        if C.shape[0] != A.shape[1]:
            raise InvalidInputError("C must have dim_y rows")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "B", A @ C)
        s = np.linalg.svd(A, compute_uv=False)
        s = s[s > 1e-9 * s[0]]
        mu = float(s.min() ** 2)
        object.__setattr__(self, "constants", ProblemConstants(
            mu_g=mu, lambda_g=mu, l_g1=float(s.max() ** 2), l_g2=None,
        ))
        object.__setattr__(self, "x_star", self._solve_bilevel())

    @property
    def dim_x(self):
        return self.C.shape[1]

    @property
    def dim_y(self):
        return self.A.shape[1]

    @classmethod
    def generate(cls, d_x=2, d_y=6, rank=3, seed=0, sv_lo=1.0, sv_hi=2.0):
        """Random instance whose nonzero singular values of A lie in [sv_lo, sv_hi]."""
        if not 1 <= rank < d_y:
            raise InvalidInputError("need 1 <= rank < d_y")
        rng = make_rng(seed)
        U, _ = np.linalg.qr(rng.standard_normal((rank, rank)))
        V, _ = np.linalg.qr(rng.standard_normal((d_y, rank)))
        s = rng.uniform(sv_lo, sv_hi, rank)
        A = (U * s) @ V.T
        C = rng.standard_normal((d_y, d_x))
        y_target = rng.standard_normal(d_y)
        return cls(A=A, C=C, y_target=y_target, seed=seed)

    def _solve_bilevel(self):
        # feasible y = C x + N z with N spanning null(A); minimise the joint quadratic
        _, s, vt = np.linalg.svd(self.A)
        rank = int(np.sum(s > 1e-9 * s[0]))
        N = vt[rank:].T
        M = np.hstack([self.C, N])
        d_x = self.dim_x
        lhs = M.T @ M
        lhs[:d_x, :d_x] += np.eye(d_x)
        sol = np.linalg.solve(lhs, M.T @ self.y_target)
        return sol[:d_x]

    def _res(self, x, y):
        return self.A @ _vec(y) - self.B @ _vec(x)

    def f(self, x, y):
        d = _vec(y) - self.y_target
        return 0.5 * float(d @ d) + 0.5 * float(_vec(x) @ _vec(x))

    def grad_x_f(self, x, y):
        return _vec(x).copy()

    def grad_y_f(self, x, y):
        return _vec(y) - self.y_target

    def g(self, x, y):
        r = self._res(x, y)
        return 0.5 * float(r @ r)

    def grad_x_g(self, x, y):
        return -self.B.T @ self._res(x, y)

    def grad_y_g(self, x, y):
        return self.A.T @ self._res(x, y)

    def hvp_yy_g(self, x, y, v):
        return self.A.T @ (self.A @ _vec(v))

    def hvp_xy_g(self, x, y, v):
        return -self.B.T @ (self.A @ _vec(v))

    def g_star(self, x):
        return 0.0

    def hessian_yy_dense(self, x, y):
        return self.A.T @ self.A

    def hessian_yx_dense(self, x, y):
        return -self.A.T @ self.B

    def optimality_gap(self, x, y):
        d = _vec(x) - self.x_star
        return float(d @ d) + self.g(x, y)

    def default_inits(self):
        rng = make_rng(self.seed + 1)
        return [(rng.uniform(-3, 3, self.dim_x), rng.uniform(-3, 3, self.dim_y))]


# --- strongly convex quadratic lower level -----------------------------------

@dataclass(frozen=True, eq=False)
class StronglyConvexQuadProblem(BilevelOracle):
    """g = y^T Q y / 2 + x^T P^T y + r^T y with Q positive definite.

    f = y^T Fyy y / 2 + x^T Fxy y + x^T Fxx x / 2 + cy^T y + cx^T x.
    """

    Q: np.ndarray
    P: np.ndarray
    r: np.ndarray
    Fyy: np.ndarray
    Fxy: np.ndarray
    Fxx: np.ndarray
    cy: np.ndarray
    cx: np.ndarray
    name = "sc-quad"
    has_g_star = True
    has_dense_hessian = True
    has_optimality_gap = True
    constants: ProblemConstants = field(init=False)
    Q_chol: np.ndarray = field(init=False)

    def __post_init__(self):
        for k in ("Q", "P", "r", "Fyy", "Fxy", "Fxx", "cy", "cx"):
            object.__setattr__(self, k, np.asarray(getattr(self, k), dtype=float))
        try:
            L = np.linalg.cholesky(self.Q)
        except np.linalg.LinAlgError as exc:
            raise InvalidInputError("Q must be symmetric positive definite") from exc
        if not np.allclose(self.Q, self.Q.T):
            raise InvalidInputError("Q must be symmetric")
        ev = np.linalg.eigvalsh(self.Q)
        if ev[0] <= 1e-12 * ev[-1]:
            raise InvalidInputError("Q is numerically singular")
        object.__setattr__(self, "Q_chol", L)
        object.__setattr__(self, "constants", ProblemConstants(
            mu_g=float(ev[0]), lambda_g=float(ev[0]), l_g1=float(ev[-1]),
        ))

    @property
    def dim_x(self):
        return self.P.shape[1]

    @property
    def dim_y(self):
        return self.Q.shape[0]

    @classmethod
    def simple(cls, d=2):
        """f = ||y||^2 / 2, g = ||y - x||^2 / 2 up to an x-only term, so S(x) = x."""
        I, Z, z = np.eye(d), np.zeros((d, d)), np.zeros(d)
        return cls(Q=I, P=-I, r=z, Fyy=I, Fxy=Z, Fxx=Z, cy=z, cx=z)

    @classmethod
    def generate(cls, d_x=2, d_y=3, seed=0, ev_lo=1.0, ev_hi=2.0):
        rng = make_rng(seed)
        O, _ = np.linalg.qr(rng.standard_normal((d_y, d_y)))
        Q = (O * rng.uniform(ev_lo, ev_hi, d_y)) @ O.T
        Q = 0.5 * (Q + Q.T)
        M = rng.standard_normal((d_y, d_y))
        return cls(
            Q=Q,
            P=rng.standard_normal((d_y, d_x)),
            r=rng.standard_normal(d_y),
            Fyy=M @ M.T / d_y,
            Fxy=0.3 * rng.standard_normal((d_x, d_y)),
            Fxx=np.eye(d_x),
            cy=rng.standard_normal(d_y),
            cx=rng.standard_normal(d_x),
        )

    def _qsolve(self, b):
        L = self.Q_chol
        return np.linalg.solve(L.T, np.linalg.solve(L, b))

    def lower_solution(self, x):
        """The unique minimiser of g(x, .)."""
        return -self._qsolve(self.P @ _vec(x) + self.r)

    def f(self, x, y):
        x, y = _vec(x), _vec(y)
        return float(0.5 * y @ self.Fyy @ y + x @ self.Fxy @ y + 0.5 * x @ self.Fxx @ x
                     + self.cy @ y + self.cx @ x)

    def grad_x_f(self, x, y):
        x, y = _vec(x), _vec(y)
        return self.Fxy @ y + self.Fxx @ x + self.cx

    def grad_y_f(self, x, y):
        x, y = _vec(x), _vec(y)
        return self.Fyy @ y + self.Fxy.T @ x + self.cy

    def g(self, x, y):
        x, y = _vec(x), _vec(y)
        return float(0.5 * y @ self.Q @ y + x @ self.P.T @ y + self.r @ y)

    def grad_x_g(self, x, y):
        return self.P.T @ _vec(y)

    def grad_y_g(self, x, y):
        return self.Q @ _vec(y) + self.P @ _vec(x) + self.r

    def hvp_yy_g(self, x, y, v):
        return self.Q @ _vec(v)

    def hvp_xy_g(self, x, y, v):
        return self.P.T @ _vec(v)

    def g_star(self, x):
        b = self.P @ _vec(x) + self.r
        return float(-0.5 * b @ self._qsolve(b))

    def hessian_yy_dense(self, x, y):
        return self.Q.copy()

    def hessian_yx_dense(self, x, y):
        return self.P.copy()

    def hypergradient(self, x):
        """Gradient of x -> f(x, S(x)) via implicit differentiation."""
        x = _vec(x)
        ys = self.lower_solution(x)
        w = -self._qsolve(self.grad_y_f(x, ys))
        return self.grad_x_f(x, ys) + self.P.T @ w

    def reduced_minimizer(self):
        # f(x, S(x)) is quadratic: S(x) = J x + s0
        J = -self._qsolve(self.P)
        s0 = -self._qsolve(self.r)
        H = J.T @ self.Fyy @ J + self.Fxy @ J + J.T @ self.Fxy.T + self.Fxx
        b = J.T @ (self.Fyy @ s0 + self.cy) + self.Fxy @ s0 + self.cx
        return np.linalg.solve(H, -b)

    def optimality_gap(self, x, y):
        d = _vec(x) - self.reduced_minimizer()
        return float(d @ d) + self.g(x, y) - self.g_star(x)

    def default_inits(self):
        return [(np.ones(self.dim_x), np.zeros(self.dim_y))]


def scq_hypergradient(problem, x):
    return problem.hypergradient(x)


# --- synthetic data hyper-cleaning -------------------------------------------

def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _with_bias(u):
    return np.hstack([u, np.ones((u.shape[0], 1))])


@dataclass(frozen=True, eq=False)
class SyntheticHypercleanProblem(BilevelOracle):
    """Sample-reweighted logistic regression on corrupted labels.

    x holds one logit weight per training sample, y the linear classifier
    (weights then bias). g is the sigmoid(x)-weighted training loss, f the
    clean validation loss.
    """

    u_tr: np.ndarray
    v_tr: np.ndarray
    u_val: np.ndarray
    v_val: np.ndarray
    flipped: np.ndarray
    corruption_rate: float = 0.0
    seed: int = 0
    name = "hyperclean-syn"
    has_g_star = False
    has_dense_hessian = True
    has_optimality_gap = False
    constants = ProblemConstants()

    @property
    def dim_x(self):
        return self.u_tr.shape[0]

    @property
    def dim_y(self):
        return self.u_tr.shape[1] + 1

    @property
    def clean(self):
        mask = np.ones(self.dim_x, dtype=bool)
        mask[self.flipped] = False
        return np.flatnonzero(mask)

    def _tr(self, y):
        ut = _with_bias(self.u_tr)
        z = ut @ _vec(y)
        return ut, z, _sigmoid(z)

    @staticmethod
    def _ce(z, v):
        return np.logaddexp(0.0, z) - v * z

    def f(self, x, y):
        z = _with_bias(self.u_val) @ _vec(y)
        return float(np.mean(self._ce(z, self.v_val)))

    def grad_x_f(self, x, y):
        return np.zeros(self.dim_x)

    def grad_y_f(self, x, y):
        uv = _with_bias(self.u_val)
        p = _sigmoid(uv @ _vec(y))
        return uv.T @ (p - self.v_val) / len(self.v_val)

    def g(self, x, y):
        _, z, _ = self._tr(y)
        return float(np.mean(_sigmoid(_vec(x)) * self._ce(z, self.v_tr)))

    def grad_x_g(self, x, y):
        s = _sigmoid(_vec(x))
        _, z, _ = self._tr(y)
        return s * (1 - s) * self._ce(z, self.v_tr) / self.dim_x

    def grad_y_g(self, x, y):
        ut, _, p = self._tr(y)
        return ut.T @ (_sigmoid(_vec(x)) * (p - self.v_tr)) / self.dim_x

    def hvp_yy_g(self, x, y, v):
        ut, _, p = self._tr(y)
        return ut.T @ (_sigmoid(_vec(x)) * p * (1 - p) * (ut @ _vec(v))) / self.dim_x

    def hvp_xy_g(self, x, y, v):
        s = _sigmoid(_vec(x))
        ut, _, p = self._tr(y)
        return s * (1 - s) * (p - self.v_tr) * (ut @ _vec(v)) / self.dim_x

    def hessian_yy_dense(self, x, y):
        ut, _, p = self._tr(y)
        wts = _sigmoid(_vec(x)) * p * (1 - p) / self.dim_x
        return (ut.T * wts) @ ut

    def l_g1_bound(self, x):
        """Upper bound on the yy-Hessian norm of g(x, .) over all y."""
        ut = _with_bias(self.u_tr)
        return float(np.linalg.norm((ut.T * (_sigmoid(_vec(x)) / 4 / self.dim_x)) @ ut, 2))

    def validation_loss(self, y):
        return self.f(None, y)

    def default_inits(self):
        return [(np.zeros(self.dim_x), np.zeros(self.dim_y))]

    def sample_point(self, rng, lo=-3.0, hi=3.0):
        return rng.uniform(lo, hi, self.dim_x), rng.uniform(-1.0, 1.0, self.dim_y)


def corrupted_count(n_tr, p_c):
    """round(p_c * n_tr) with halves rounded up."""
    return int(math.floor(p_c * n_tr + 0.5))


def generate_hyperclean_data(n_tr=100, n_val=100, p=10, p_c=0.5, seed=0, separation=1.5):
    """Two Gaussian classes in R^p; a fixed count of training labels flipped."""
    if not 0 <= p_c < 1:
        raise InvalidInputError("corruption rate must lie in [0, 1)")
    if min(n_tr, n_val, p) < 1:
        raise InvalidInputError("dimensions must be positive")
    rng = make_rng(seed)
    direction = rng.standard_normal(p)
    direction *= separation / np.linalg.norm(direction)

    def draw(n):
        labels = rng.integers(0, 2, n).astype(float)
        feats = rng.standard_normal((n, p)) + np.outer(2 * labels - 1, direction)
        return feats, labels

    u_tr, v_tr = draw(n_tr)
    u_val, v_val = draw(n_val)
    flipped = np.sort(rng.choice(n_tr, size=corrupted_count(n_tr, p_c), replace=False))
    v_tr = v_tr.copy()
    v_tr[flipped] = 1.0 - v_tr[flipped]
    return SyntheticHypercleanProblem(
        u_tr=u_tr, v_tr=v_tr, u_val=u_val, v_val=v_val,
        flipped=flipped, corruption_rate=p_c, seed=seed,
    )


# --- registry ----------------------------------------------------------------

PROBLEMS = {
    "example1": lambda **kw: Example1Problem(),
    "singular-lstsq": SingularLstsqProblem.generate,
    "sc-quad": StronglyConvexQuadProblem.generate,
    "hyperclean-syn": generate_hyperclean_data,
}


def make_problem(name, **params):
    try:
        factory = PROBLEMS[name]
    except KeyError:
        raise InvalidInputError(f"unknown problem {name!r}; known: {sorted(PROBLEMS)}") from None
    if name == "example1" and params:
        raise InvalidInputError(f"example1 takes no parameters, got {sorted(params)}")
    try:
        return factory(**params)
    except TypeError as exc:
        raise InvalidInputError(f"bad parameters for {name}: {exc}") from None
