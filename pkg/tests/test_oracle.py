import numpy as np
import pytest

from galet.errors import InvalidInputError, UnsupportedDiagnosticError
from galet.oracle import (
    CountingOracle,
    ProblemConstants,
    check_interface,
    check_pl_inequality,
    fd_verify,
)
from galet.rng import make_rng
from toy_problems import ConstantUpperProblem


def test_pl_examples(ex1):
    (pt,) = check_pl_inequality(ex1, 1.0, [(np.array([1.0]), np.array([0.0, 0.0]))])
    assert (pt.lhs, pt.rhs, pt.passed) == (pytest.approx(2.0), pytest.approx(1.0), True)
    (pt,) = check_pl_inequality(ex1, 10.0, [(np.array([1.0]), np.array([0.0, 0.0]))])
    assert (pt.lhs, pt.rhs, pt.passed) == (pytest.approx(2.0), pytest.approx(10.0), False)


def test_pl_on_solution_set(ex1):
    (pt,) = check_pl_inequality(ex1, 1.0, [ex1.global_point(0.4)])
    assert pt.lhs == pytest.approx(0.0, abs=1e-30)
    assert pt.rhs == pytest.approx(0.0, abs=1e-30)
    assert pt.passed


def test_pl_needs_g_star(hyperclean):
    with pytest.raises(UnsupportedDiagnosticError):
        check_pl_inequality(hyperclean, 1.0, [hyperclean.default_inits()[0]])
    with pytest.raises(InvalidInputError):
        check_pl_inequality(ConstantUpperProblem(), 0.0, [])


def test_constants_must_be_positive():
    assert ProblemConstants(mu_g=1.0, l_g1=None).l_g1 is None
    with pytest.raises(InvalidInputError):
        ProblemConstants(mu_g=-1.0)


def test_fd_verify_constant_upper_level():
    rng = make_rng(3)
    pts = [(rng.uniform(-3, 3, 2), rng.uniform(-3, 3, 2)) for _ in range(20)]
    rep = fd_verify(ConstantUpperProblem(), pts)
    assert rep.max_rel_err["grad_x_f"] == 0.0
    assert rep.max_rel_err["grad_y_f"] == 0.0
    assert rep.passed(1e-8)


@pytest.mark.parametrize("step", [1e-1, 1e-3, 1e-5])
def test_fd_hvp_exact_on_quadratic(scq, step):
    rng = make_rng(4)
    pts = [scq.sample_point(rng) for _ in range(10)]
    rep = fd_verify(scq, pts, step=step)
    assert rep.max_rel_err["hvp_yy_g"] <= 1e-8
    assert rep.max_rel_err["hvp_xy_g"] <= 1e-8


def test_fd_verify_catches_wrong_gradient(ex1):
    class Broken(type(ex1)):
        def grad_y_f(self, x, y):
            return super().grad_y_f(x, y) * 1.01

    rep = fd_verify(Broken(), [ex1.sample_point(make_rng(0))])
    assert not rep.passed(1e-5)
    assert rep.max_rel_err["grad_y_f"] > 1e-3


def test_interface_invariants_all_problems(all_problems):
    for prob in all_problems:
        rng = make_rng(10)
        pts = [prob.sample_point(rng) for _ in range(1000)]
        rep = check_interface(prob, pts, rng=make_rng(11))
        assert rep.max_symmetry_err <= 1e-12, prob.name
        assert rep.max_linearity_err <= 1e-12, prob.name
        assert rep.max_dense_err <= 1e-10, prob.name
        if prob.has_g_star:
            assert rep.min_g_minus_gstar >= -1e-12, prob.name


def test_counting_oracle(ex1):
    c = CountingOracle(ex1)
    x, y = ex1.default_inits()[0]
    c.grad_y_g(x, y)
    c.hvp_yy_g(x, y, np.ones(2))
    c.hvp_yy_g(x, y, np.ones(2))
    assert c.calls == {"grad_y_g": 1, "hvp_yy_g": 2}
    assert c.dim_y == 2 and c.has_g_star
