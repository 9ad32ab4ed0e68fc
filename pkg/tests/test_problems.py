import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from galet.errors import InvalidInputError, UnsupportedDiagnosticError
from galet.linalg import central_diff_grad, numerical_rank, pseudoinverse
from galet.metrics import residuals
from galet.oracle import check_pl_inequality, fd_verify
from galet.problems import (
    PROBLEMS,
    Example1Problem,
    SingularLstsqProblem,
    StronglyConvexQuadProblem,
    corrupted_count,
    example1_derivatives,
    example1_optimality_gap,
    generate_hyperclean_data,
    make_problem,
    scq_hypergradient,
)
from galet.rng import make_rng

coord = st.floats(-3, 3)


def test_example1_derivatives_at_reference_point():
    d = example1_derivatives(1.0, [0.0, 0.0])
    np.testing.assert_allclose(d.grad_y_g, [1, -1])
    np.testing.assert_allclose(d.hess_yy_g, [[1, -1], [-1, 1]])
    np.testing.assert_allclose(d.grad_x_f, [2])
    np.testing.assert_allclose(d.hess_yx_g, [[1], [-1]])
    np.testing.assert_allclose(d.grad_y_f, [1, -1])


@given(coord, coord)
def test_example1_on_solution_set(x, y2):
    y = np.array([math.sin(y2) - x, y2])
    d = example1_derivatives(x, y)
    assert np.all(np.abs(d.grad_y_g) <= 1e-12)
    assert Example1Problem().g([x], y) <= 1e-24


@pytest.mark.parametrize("x, y, gap", [
    (0.5, [-0.5, 0.0], 0.0),
    (0.0, [0.0, 0.0], 0.5),
    (0.5, [0.0, math.pi / 2], 0.25),
])
def test_example1_gap(x, y, gap):
    assert example1_optimality_gap(x, y) == pytest.approx(gap, abs=1e-15)
    assert Example1Problem().optimality_gap([x], y) == pytest.approx(gap, abs=1e-15)


@given(coord, coord, coord)
def test_example1_g_is_half_squared_residual(x, y1, y2):
    p = Example1Problem()
    r = x + y1 - math.sin(y2)
    g = p.g([x], [y1, y2])
    assert g >= 0
    assert g == pytest.approx(0.5 * r * r, rel=1e-12, abs=0.0)
    (pl,) = check_pl_inequality(p, 1.0, [([x], [y1, y2])])
    assert pl.passed


@given(st.floats(-3, 3))
def test_example1_hessian_structure_on_global_set(y2):
    p = Example1Problem()
    x, y = p.global_point(y2)
    hyy = p.hessian_yy_dense(x, y)
    np.testing.assert_allclose(p.hessian_yx_dense(x, y)[:, 0], hyy[:, 0])
    assert numerical_rank(hyy) == 1


def test_singular_lstsq_structure(lstsq):
    assert lstsq.dim_y == 6 and lstsq.dim_x == 2
    np.testing.assert_allclose(lstsq.B, lstsq.A @ lstsq.C)
    rng = make_rng(0)
    for _ in range(20):
        x, y = lstsq.sample_point(rng)
        assert lstsq.g_star(x) == 0.0
        assert numerical_rank(lstsq.hessian_yy_dense(x, y)) == 3
        assert lstsq.g(x, lstsq.C @ x) <= 1e-24


def test_singular_lstsq_solution_is_stationary(lstsq):
    """The closed-form bilevel solution satisfies the residual conditions with w = w_dag."""
    x = lstsq.x_star
    _, s, vt = np.linalg.svd(lstsq.A)
    N = vt[3:].T
    y = lstsq.C @ x + N @ N.T @ (lstsq.y_target - lstsq.C @ x)
    w = -pseudoinverse(lstsq.hessian_yy_dense(x, y)) @ lstsq.grad_y_f(x, y)
    res = residuals(lstsq, x, y, w)
    assert res.max() <= 1e-20
    assert lstsq.optimality_gap(x, y) <= 1e-24


def test_singular_lstsq_rejects_tall_a():
    with pytest.raises(InvalidInputError):
        SingularLstsqProblem(A=np.eye(3), C=np.ones((3, 1)), y_target=np.zeros(3))
    with pytest.raises(InvalidInputError):
        SingularLstsqProblem.generate(d_y=4, rank=4)


def test_scq_simple_hypergradient():
    p = StronglyConvexQuadProblem.simple(2)
    x = np.array([0.7, -1.3])
    np.testing.assert_allclose(p.lower_solution(x), x)
    np.testing.assert_allclose(scq_hypergradient(p, x), x, atol=1e-14)
    np.testing.assert_allclose(scq_hypergradient(p, np.zeros(2)), 0.0, atol=1e-15)


def test_scq_hypergradient_matches_fd(scq):
    reduced = lambda x: scq.f(x, scq.lower_solution(x))
    rng = make_rng(1)
    for _ in range(100):
        x = rng.uniform(-3, 3, scq.dim_x)
        hg = scq_hypergradient(scq, x)
        fd = central_diff_grad(reduced, x)
        assert np.linalg.norm(hg - fd) <= 1e-6 * max(1.0, np.linalg.norm(hg))


def test_scq_reduced_minimizer_is_stationary(scq):
    assert np.linalg.norm(scq.hypergradient(scq.reduced_minimizer())) <= 1e-10


def test_scq_rejects_singular_q():
    I, z = np.eye(2), np.zeros(2)
    with pytest.raises(InvalidInputError):
        StronglyConvexQuadProblem(Q=np.diag([1.0, 0.0]), P=I, r=z, Fyy=I, Fxy=I, Fxx=I, cy=z, cx=z)


def test_hyperclean_flip_counts():
    assert generate_hyperclean_data(n_tr=100, p_c=0.0, seed=1).flipped.size == 0
    p = generate_hyperclean_data(n_tr=100, p_c=0.5, seed=1)
    assert p.flipped.size == 50
    assert len(set(p.flipped.tolist())) == 50
    assert corrupted_count(5, 0.5) == 3
    assert corrupted_count(100, 0.25) == 25


def test_hyperclean_deterministic():
    a = generate_hyperclean_data(n_tr=30, n_val=20, p=3, p_c=0.3, seed=9)
    b = generate_hyperclean_data(n_tr=30, n_val=20, p=3, p_c=0.3, seed=9)
    for field in ("u_tr", "v_tr", "u_val", "v_val", "flipped"):
        assert getattr(a, field).tobytes() == getattr(b, field).tobytes()
    c = generate_hyperclean_data(n_tr=30, n_val=20, p=3, p_c=0.3, seed=10)
    assert a.u_tr.tobytes() != c.u_tr.tobytes()


def test_hyperclean_flips_only_recorded_labels():
    clean = generate_hyperclean_data(n_tr=50, p_c=0.0, seed=4)
    dirty = generate_hyperclean_data(n_tr=50, p_c=0.4, seed=4)
    assert dirty.flipped.size == 20
    # same draws up to the flip step
    np.testing.assert_array_equal(clean.u_tr, dirty.u_tr)
    changed = np.flatnonzero(clean.v_tr != dirty.v_tr)
    np.testing.assert_array_equal(changed, dirty.flipped)


def test_hyperclean_rejects_bad_rate():
    with pytest.raises(InvalidInputError):
        generate_hyperclean_data(p_c=1.0)


def test_hyperclean_has_no_g_star(hyperclean):
    x, y = hyperclean.default_inits()[0]
    with pytest.raises(UnsupportedDiagnosticError):
        hyperclean.g_star(x)


def test_all_problems_pass_fd(all_problems):
    for prob in all_problems:
        rng = make_rng(21)
        rep = fd_verify(prob, [prob.sample_point(rng) for _ in range(25)])
        assert rep.passed(1e-5), (prob.name, rep.max_rel_err)


def test_registry():
    assert set(PROBLEMS) == {"example1", "singular-lstsq", "sc-quad", "hyperclean-syn"}
    assert make_problem("singular-lstsq", d_y=5, rank=2, seed=3).dim_y == 5
    with pytest.raises(InvalidInputError):
        make_problem("nope")
    with pytest.raises(InvalidInputError):
        make_problem("sc-quad", bogus=1)
