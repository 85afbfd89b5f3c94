import math

import numpy as np
import pytest
from scipy.optimize import linprog

from ripkit import recovery as rc
from ripkit.constructions import sharp_counterexample_signal, tempered_counterexample_matrix
from ripkit.errors import InfeasibleProblemError, InvalidInputError, OutOfRegimeError
from ripkit.recovery import LinearMap, RecoveryInstance


def gaussian(rng, n, p):
    return rng.standard_normal((n, p)) / np.sqrt(n)


def sparse(rng, p, k):
    x = np.zeros(p)
    x[rng.choice(p, k, replace=False)] = rng.standard_normal(k)
    return x


# ---------------------------------------------------------------------------
# linear maps and proximal steps
# ---------------------------------------------------------------------------

def test_vec_is_column_major():
    X = np.array([[1.0, 2.0], [3.0, 4.0]])
    np.testing.assert_array_equal(rc.vec(X), [1, 3, 2, 4])
    np.testing.assert_array_equal(rc.unvec(rc.vec(X), 2, 2), X)


def test_adjoint_consistency(rng):
    M = LinearMap(rng.standard_normal((7, 12)), 3, 4)
    for _ in range(20):
        X = rng.standard_normal((3, 4))
        z = rng.standard_normal(7)
        assert abs(M(X) @ z - np.sum(X * M.adjoint(z))) <= 1e-10


def test_linear_map_shape_check():
    with pytest.raises(InvalidInputError):
        LinearMap(np.zeros((3, 5)), 2, 2)


def test_soft_threshold():
    assert rc.soft_threshold(3.0, 1.0) == 2.0
    assert rc.soft_threshold(-0.5, 1.0) == 0.0
    x = np.array([1.5, -2.0, 0.1])
    np.testing.assert_array_equal(rc.soft_threshold(x, 0.0), x)


def test_singular_value_threshold(rng):
    np.testing.assert_allclose(rc.singular_value_threshold(np.diag([3.0, 1.0]), 2.0),
                               np.diag([1.0, 0.0]), atol=1e-14)
    X = rng.standard_normal((4, 3))
    np.testing.assert_allclose(rc.singular_value_threshold(X, 0.0), X, atol=1e-12)
    big = np.linalg.norm(X, 2)
    np.testing.assert_array_equal(rc.singular_value_threshold(X, big), np.zeros((4, 3)))


def test_best_s_term_examples():
    approx = rc.best_s_term(np.array([3.0, -2.0, 1.0]), 2)
    np.testing.assert_array_equal(approx.head, [3, -2, 0])
    assert approx.tail_norm == 1.0
    assert rc.best_s_term(np.diag([3.0, 2.0, 1.0]), 1).tail_norm == pytest.approx(3.0)
    assert rc.best_s_term(np.array([1.0, 2.0]), 5).tail_norm == 0.0


def test_best_s_term_ties_keep_lowest_index():
    approx = rc.best_s_term(np.array([1.0, -1.0, 1.0]), 2)
    np.testing.assert_array_equal(approx.head, [1.0, -1.0, 0.0])


def test_best_s_term_reconstructs(rng):
    X = rng.standard_normal((5, 4))
    approx = rc.best_s_term(X, 2)
    np.testing.assert_allclose(approx.head + approx.tail, X, atol=1e-12)
    assert np.linalg.matrix_rank(approx.head, tol=1e-10) == 2


# ---------------------------------------------------------------------------
# signal solvers
# ---------------------------------------------------------------------------

def test_orthogonal_equality_recovers(rng):
    Q = np.linalg.qr(rng.standard_normal((6, 6)))[0]
    beta = rng.standard_normal(6)
    for method in ("lp", "admm"):
        rep = rc.solve_signal(RecoveryInstance(Q, Q @ beta), method=method)
        np.testing.assert_allclose(rep.solution, beta, atol=1e-8)


def test_counterexample_objective_not_point():
    kit = sharp_counterexample_signal(6, 2)
    gamma, eta = kit.colliding_pair
    A = kit.operator
    rep = rc.solve_signal(RecoveryInstance(A, A @ gamma))
    assert rep.objective == pytest.approx(2.0, abs=1e-6)
    assert np.linalg.norm(A @ eta - A @ gamma) <= 1e-10
    assert np.sum(np.abs(eta)) == pytest.approx(rep.objective, abs=1e-8)


def _scipy_bp(A, y):
    n, p = A.shape
    res = linprog(np.ones(2 * p), A_eq=np.hstack([A, -A]), b_eq=y, bounds=[(0, None)] * (2 * p),
                  method="highs")
    return res.fun


def test_lp_basis_pursuit_matches_scipy(rng):
    for _ in range(5):
        A = gaussian(rng, 10, 20)
        y = A @ sparse(rng, 20, 5)
        rep = rc.solve_signal(RecoveryInstance(A, y))
        assert rep.objective == pytest.approx(_scipy_bp(A, y), abs=1e-8)
        assert np.linalg.norm(A @ rep.solution - y) <= 1e-8


def test_dantzig_lp_admm_agree(rng):
    A = gaussian(rng, 20, 40)
    y = A @ sparse(rng, 40, 4) + 0.05 * rng.standard_normal(20)
    inst = RecoveryInstance(A, y, "dantzig", 0.1)
    lp = rc.solve_signal(inst, method="lp")
    admm = rc.solve_signal(inst, method="admm")
    assert admm.converged
    assert np.linalg.norm(lp.solution - admm.solution) <= 1e-5
    assert rc.is_feasible(inst, lp.solution) and rc.is_feasible(inst, admm.solution)


def test_l2_ball_admm_feasible_and_optimal(rng):
    A = gaussian(rng, 20, 40)
    beta = sparse(rng, 40, 3)
    z = rng.standard_normal(20)
    z *= 0.1 / np.linalg.norm(z)
    inst = RecoveryInstance(A, A @ beta + z, "l2_ball", 0.1, 0.1)
    rep = rc.solve_signal(inst, method="admm")
    assert rep.converged
    assert np.linalg.norm(A @ rep.solution - inst.observation) <= 0.1 + 1e-8
    # the truth is feasible, so the minimizer cannot have a larger norm
    assert rep.objective <= np.sum(np.abs(beta)) + 1e-6


def test_l2_ball_zero_when_observation_small():
    A = np.eye(3)
    rep = rc.solve_signal(RecoveryInstance(A, [0.1, 0.0, 0.0], "l2_ball", 0.5), method="admm")
    np.testing.assert_array_equal(rep.solution, 0.0)


def test_lp_rejects_l2_ball():
    with pytest.raises(InvalidInputError):
        rc.solve_signal(RecoveryInstance(np.eye(2), [1.0, 1.0], "l2_ball", 0.1), method="lp")


def test_infeasible_equality():
    A = np.array([[1.0, 1.0], [1.0, 1.0]])
    with pytest.raises(InfeasibleProblemError):
        rc.solve_signal(RecoveryInstance(A, [1.0, 2.0]), method="lp")
    with pytest.raises(InfeasibleProblemError):
        rc.solve_signal(RecoveryInstance(A, [1.0, 2.0]), method="admm")


def test_instance_invariants():
    with pytest.raises(InvalidInputError):
        RecoveryInstance(np.eye(2), [1.0, 0.0], "equality", 0.5)
    with pytest.raises(InvalidInputError):
        RecoveryInstance(np.eye(2), [1.0, 0.0], "box", 0.5)
    inst = RecoveryInstance(np.eye(2), [1.0, 0.0], "l2_ball", 0.1, noise_level=0.2)
    assert not inst.truth_in_regime


# ---------------------------------------------------------------------------
# matrix solver
# ---------------------------------------------------------------------------

def test_vectorization_map_equality(rng):
    M = LinearMap.vectorization(3, 4)
    X = rng.standard_normal((3, 4))
    rep = rc.solve_matrix(RecoveryInstance(M, M(X)))
    np.testing.assert_allclose(rep.solution, X, atol=1e-8)


def test_matrix_l2_ball_zero():
    M = LinearMap.vectorization(2, 2)
    rep = rc.solve_matrix(RecoveryInstance(M, [0.1, 0.0, 0.0, 0.1], "l2_ball", 1.0))
    np.testing.assert_array_equal(rep.solution, 0.0)


def test_gaussian_map_low_rank_recovery(rng):
    M = LinearMap(rng.standard_normal((40, 36)) / np.sqrt(40), 6, 6)
    X = rng.standard_normal((6, 2)) @ rng.standard_normal((2, 6))
    rep = rc.solve_matrix(RecoveryInstance(M, M(X)))
    assert np.linalg.norm(rep.solution - X) <= 1e-4 * np.linalg.norm(X)
    assert rep.objective <= rc.nuclear_norm(X) + 1e-6


def test_matrix_dantzig_feasible(rng):
    M, delta = tempered_counterexample_matrix(4, 4, 2, 0.5)
    X = rng.standard_normal((4, 2)) @ rng.standard_normal((2, 4))
    z = 0.05 * rng.standard_normal(M.q)
    inst = RecoveryInstance(M, M(X) + z, "dantzig", 0.2)
    rep = rc.solve_matrix(inst)
    assert rep.converged
    assert rc.is_feasible(inst, rep.solution)
    assert rep.objective <= rc.nuclear_norm(X) + 1e-6


# ---------------------------------------------------------------------------
# bounds
# ---------------------------------------------------------------------------

def test_error_bound_examples():
    assert rc.error_bound("l2", 0.0, 0.0, 0.0, 2) == 0.0
    assert rc.error_bound("l2", 1.0 / 6.0, 0.1, 0.1, 2) == pytest.approx(math.sqrt(7.0 / 3.0) * 0.4, abs=1e-5)
    assert rc.error_bound("ds", 0.0, 1.0, 1.0, 2) == pytest.approx(4.0)


def test_error_bound_regime():
    with pytest.raises(OutOfRegimeError):
        rc.error_bound("l2", 1.0 / 3.0, 0.1, 0.1, 2)
    with pytest.raises(InvalidInputError):
        rc.error_bound("l2", 0.1, 0.1, 0.1, 1)


def test_error_bound_monotone_in_delta():
    grid = np.linspace(0.0, 1.0 / 3.0, 101)[:-1]
    for mode in ("l2", "ds"):
        vals = [rc.error_bound(mode, d, 0.1, 0.2, 3, 0.5) for d in grid]
        assert np.all(np.diff(vals) >= 0)
