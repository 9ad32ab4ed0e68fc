import numpy as np
import pytest

from galet.errors import EmptyResultError, InvalidInputError, UnsupportedDiagnosticError
from galet.problems import Example1Problem
from galet.rng import make_rng
from galet.verify import GridSpec, brute_force_example1, rank_probe, w_gd_vs_pinv


def _small_grid(lo=-3, hi=3, n=41):
    return GridSpec.cube(lo, hi, n)


def test_grid_spec():
    g = GridSpec.cube(-1, 1, 5)
    np.testing.assert_allclose(g.points(0), [-1, -0.5, 0, 0.5, 1])
    assert g.spacing(2) == pytest.approx(0.5)
    for bad in ([(0, 1, 1)], [(1, 0, 5)]):
        with pytest.raises(InvalidInputError):
            GridSpec(bad)


def test_brute_force_default_grid_finds_half():
    res = brute_force_example1()
    assert abs(res.x - 0.5) <= 0.03
    assert res.g <= 1e-3


def test_brute_force_restricted_x_range():
    grid = GridSpec([(1, 2, 11), (-3, 3, 61), (-3, 3, 61)])
    assert brute_force_example1(grid).x == pytest.approx(1.0)


def test_brute_force_without_feasibility_matches_direct_min():
    grid = _small_grid(n=11)
    res = brute_force_example1(grid, feasibility_tol=np.inf)
    X, Y1, Y2 = np.meshgrid(*(grid.points(i) for i in range(3)), indexing="ij")
    F = X ** 2 + Y1 - np.sin(Y2)
    assert res.f == pytest.approx(F.min())


@pytest.mark.parametrize("n", [31, 61, 121])
def test_brute_force_error_within_spacing(n):
    res = brute_force_example1(_small_grid(n=n), feasibility_tol=2e-2)
    assert abs(res.x - 0.5) <= res.spacing_x + 1e-12


def test_brute_force_workers_agree():
    a = brute_force_example1(_small_grid(n=61), workers=1)
    b = brute_force_example1(_small_grid(n=61), workers=4)
    assert (a.x, a.f) == (b.x, b.f)
    np.testing.assert_array_equal(a.y, b.y)


def test_brute_force_empty():
    grid = GridSpec([(0.0, 0.1, 2), (5.0, 6.0, 2), (0.0, 0.1, 2)])
    with pytest.raises(EmptyResultError):
        brute_force_example1(grid, feasibility_tol=1e-3)


def test_w_gd_vs_pinv_contracts(lstsq):
    L = lstsq.constants.l_g1
    rng = make_rng(5)
    for _ in range(5):
        x, y = lstsq.sample_point(rng)
        rep = w_gd_vs_pinv(lstsq, x, y, rho=1 / L ** 2, t_max=300)
        assert rep.passed
        assert rep.curve[-1][1] < rep.curve[0][1]


def test_w_gd_vs_pinv_example1():
    p = Example1Problem()
    rep = w_gd_vs_pinv(p, np.array([1.0]), np.zeros(2), rho=0.2, t_max=200)
    assert rep.lambda_hat == pytest.approx(2.0)
    assert rep.passed
    assert rep.curve[-1][1] <= 1e-8


def test_w_gd_vs_pinv_rejects_large_rho(lstsq):
    with pytest.raises(InvalidInputError):
        w_gd_vs_pinv(lstsq, *lstsq.default_inits()[0], rho=1.0, t_max=5)


def test_w_gd_vs_pinv_needs_dense(hyperclean):
    class NoDense(type(hyperclean)):
        has_dense_hessian = False

    p = hyperclean
    p2 = NoDense(p.u_tr, p.v_tr, p.u_val, p.v_val, p.flipped, p.corruption_rate, p.seed)
    with pytest.raises(UnsupportedDiagnosticError):
        w_gd_vs_pinv(p2, *p.default_inits()[0], rho=0.1, t_max=2)


def test_rank_probe_example1_on_solution_set():
    p = Example1Problem()
    rng = make_rng(0)
    pts = []
    for _ in range(10_000):
        x, y2 = rng.uniform(-3, 3, 2)
        pts.append((np.array([x]), np.array([np.sin(y2) - x, y2])))
    probes = rank_probe(p, pts)
    assert all(r.rank_augmented == 1 and r.rank_yy == 1 for r in probes)


def test_rank_probe_example1_off_solution_set():
    # the curvature term s * r lifts the rank away from g = 0
    p = Example1Problem()
    (r,) = rank_probe(p, [(np.array([1.0]), np.array([0.0, 1.0]))])
    assert (r.rank_augmented, r.rank_yy) == (2, 2)


def test_rank_probe_lstsq(lstsq):
    probes = rank_probe(lstsq, [lstsq.sample_point(make_rng(s)) for s in range(10)])
    assert {(r.rank_augmented, r.rank_yy) for r in probes} == {(3, 3)}
