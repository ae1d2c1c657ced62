import numpy as np
import pytest
import scipy.sparse as sp

from raceline.solver import solve_qp


def projected_gradient(P, q, lo, hi, iters=300000, tol=1e-10):
    """Reference solver for box-constrained strictly convex QPs."""
    L = float(np.linalg.eigvalsh(P).max())
    x = np.zeros(len(q))
    for _ in range(iters):
        x_new = np.clip(x - (P @ x + q) / L, lo, hi)
        if np.max(np.abs(x_new - x)) < tol:
            return x_new
        x = x_new
    return x


def random_box_qp(rng, n):
    M = rng.normal(size=(n, n))
    P = M @ M.T + 0.5 * np.eye(n)
    q = 3.0 * rng.normal(size=n)
    lo = -rng.uniform(0.05, 1.0, n)
    hi = rng.uniform(0.05, 1.0, n)
    return P, q, lo, hi


class TestToyProblems:
    def test_unconstrained_parabola(self):
        # min (x - 3)^2
        res = solve_qp(sp.csc_matrix([[2.0]]), np.array([-6.0]),
                       sp.csc_matrix((0, 1)), np.zeros(0), np.zeros(0))
        assert res.status == "optimal"
        assert res.x[0] == pytest.approx(3.0)

    def test_equality_constrained_symmetric(self):
        # min x^2 + y^2 s.t. x + y = 2
        res = solve_qp(2.0 * sp.identity(2), np.zeros(2),
                       sp.csc_matrix([[1.0, 1.0]]),
                       np.array([2.0]), np.array([2.0]))
        assert res.status == "optimal"
        assert np.allclose(res.x, [1.0, 1.0], atol=1e-9)

    def test_active_box(self):
        # min (x + 5)^2 with x >= -1
        res = solve_qp(sp.csc_matrix([[2.0]]), np.array([10.0]),
                       sp.identity(1, format="csc"),
                       np.array([-1.0]), np.array([10.0]))
        assert res.x[0] == pytest.approx(-1.0)
        assert res.y[0] < 0.0

    def test_crossed_bounds_infeasible(self):
        res = solve_qp(sp.identity(2), np.zeros(2), sp.identity(2, format="csc"),
                       np.array([1.0, 0.0]), np.array([-1.0, 0.0]))
        assert res.status == "infeasible"


@pytest.mark.parametrize("method", ["interior_point", "splitting"])
@pytest.mark.parametrize("seed,n", [(7, 50), (11, 80), (23, 100), (41, 30)])
def test_random_instances_match_oracle(method, seed, n):
    rng = np.random.default_rng(seed)
    P, q, lo, hi = random_box_qp(rng, n)
    res = solve_qp(sp.csc_matrix(P), q, sp.identity(n, format="csc"), lo, hi,
                   method=method)
    assert res.status == "optimal"
    assert res.kkt_residual <= 1e-6
    ref = projected_gradient(P, q, lo, hi)
    assert np.max(np.abs(res.x - ref)) < 1e-5


def test_engines_agree():
    rng = np.random.default_rng(3)
    P, q, lo, hi = random_box_qp(rng, 60)
    a = solve_qp(sp.csc_matrix(P), q, sp.identity(60, format="csc"), lo, hi,
                 method="interior_point")
    b = solve_qp(sp.csc_matrix(P), q, sp.identity(60, format="csc"), lo, hi,
                 method="splitting")
    assert np.max(np.abs(a.x - b.x)) < 1e-6


def test_mixed_equality_and_box():
    # min ||x||^2 s.t. sum(x) = 4, x_i <= 0.5: optimum spreads then saturates
    n = 10
    A = sp.vstack([sp.csc_matrix(np.ones((1, n))), sp.identity(n)], format="csc")
    l = np.concatenate([[4.0], -np.full(n, np.inf)])
    u = np.concatenate([[4.0], np.full(n, 0.5)])
    res = solve_qp(2.0 * sp.identity(n), np.zeros(n), A, l, u)
    assert res.status == "optimal"
    assert np.allclose(res.x, 0.4, atol=1e-8)

    u2 = np.concatenate([[4.0], np.full(n, 0.41)])
    res2 = solve_qp(2.0 * sp.identity(n), np.zeros(n), A, l, u2)
    assert res2.status == "optimal"
    assert res2.x.max() <= 0.41 + 1e-9
    assert res2.x.sum() == pytest.approx(4.0, abs=1e-8)


def test_deterministic():
    rng = np.random.default_rng(5)
    P, q, lo, hi = random_box_qp(rng, 40)
    a = solve_qp(sp.csc_matrix(P), q, sp.identity(40, format="csc"), lo, hi)
    b = solve_qp(sp.csc_matrix(P), q, sp.identity(40, format="csc"), lo, hi)
    assert np.array_equal(a.x, b.x)
    assert a.iterations == b.iterations


def test_warm_start_does_not_change_answer():
    rng = np.random.default_rng(9)
    P, q, lo, hi = random_box_qp(rng, 40)
    cold = solve_qp(sp.csc_matrix(P), q, sp.identity(40, format="csc"), lo, hi)
    warm = solve_qp(sp.csc_matrix(P), q, sp.identity(40, format="csc"), lo, hi,
                    x0=np.clip(rng.normal(size=40), lo, hi))
    assert np.max(np.abs(cold.x - warm.x)) < 1e-7
