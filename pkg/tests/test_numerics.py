import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from ripkit import numerics
from ripkit.errors import InvalidInputError, NotPositiveDefiniteError


# ---------------------------------------------------------------------------
# eigenvalues
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("S, expected", [
    (np.diag([2.0, 5.0]), (2.0, 5.0)),
    (np.array([[1.0, 0.3], [0.3, 1.0]]), (0.7, 1.3)),
    (np.eye(4), (1.0, 1.0)),
])
def test_sym_eig_extremes_examples(S, expected):
    lo, hi = numerics.sym_eig_extremes(S)
    assert lo == pytest.approx(expected[0], rel=1e-10)
    assert hi == pytest.approx(expected[1], rel=1e-10)


def test_sym_eigvals_match_numpy(rng):
    for n in (1, 2, 5, 12, 30):
        B = rng.standard_normal((n, n))
        S = B + B.T
        np.testing.assert_allclose(numerics.sym_eigvals(S), np.linalg.eigvalsh(S), atol=1e-10 * n)


def test_batch_extremes_match_single(rng):
    B = rng.standard_normal((40, 4, 4))
    S = B + B.transpose(0, 2, 1)
    lo, hi = numerics.sym_eig_extremes_batch(S)
    ref = np.linalg.eigvalsh(S)
    np.testing.assert_allclose(lo, ref[:, 0], atol=1e-12)
    np.testing.assert_allclose(hi, ref[:, -1], atol=1e-12)


def test_rayleigh_quotient_bracketed(rng):
    B = rng.standard_normal((6, 6))
    S = B @ B.T
    lo, hi = numerics.sym_eig_extremes(S)
    x = rng.standard_normal((1000, 6))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    q = np.einsum("bi,ij,bj->b", x, S, x)
    assert np.all(q >= lo - 1e-9) and np.all(q <= hi + 1e-9)


def test_eig_rejects_nonfinite():
    with pytest.raises(InvalidInputError):
        numerics.sym_eig_extremes(np.array([[1.0, np.nan], [np.nan, 1.0]]))


# ---------------------------------------------------------------------------
# SVD
# ---------------------------------------------------------------------------

def _check_svd(M, f):
    k = min(M.shape)
    assert f.singular.shape == (k,)
    assert np.all(np.diff(f.singular) <= 0) and np.all(f.singular >= 0)
    scale = max(np.linalg.norm(M), 1e-300)
    assert np.linalg.norm(f.reconstruct() - M) <= 1e-10 * scale
    assert np.max(np.abs(f.left.T @ f.left - np.eye(f.left.shape[1]))) <= 1e-12 * 10
    assert np.max(np.abs(f.right.T @ f.right - np.eye(f.right.shape[1]))) <= 1e-12 * 10


def test_svd_examples():
    np.testing.assert_allclose(numerics.svd(np.eye(3)).singular, [1, 1, 1])
    np.testing.assert_allclose(numerics.svd(np.diag([3.0, -2.0])).singular, [3, 2])
    u = np.array([2.0, 0.0, 0.0])
    v = np.array([0.0, 3.0, 0.0, 0.0])
    s = numerics.svd(np.outer(u, v)).singular
    assert s[0] == pytest.approx(6.0)
    np.testing.assert_allclose(s[1:], 0.0, atol=1e-12)


@pytest.mark.parametrize("shape", [(1, 1), (3, 5), (5, 3), (8, 8), (20, 13), (50, 50)])
def test_svd_random_invariants(rng, shape):
    M = rng.standard_normal(shape)
    f = numerics.svd(M)
    _check_svd(M, f)
    np.testing.assert_allclose(f.singular, np.linalg.svd(M, compute_uv=False), rtol=1e-10, atol=1e-12)


def test_svd_rank_deficient_and_zero(rng):
    M = rng.standard_normal((6, 2)) @ rng.standard_normal((2, 5))
    _check_svd(M, numerics.svd(M))
    Z = np.zeros((3, 4))
    f = numerics.svd(Z)
    _check_svd(Z, f)
    assert np.all(f.singular == 0)


def test_svd_batch_matches_loop(rng):
    Ms = rng.standard_normal((7, 4, 3))
    left, sing, right = numerics.svd_batch(Ms)
    for i in range(7):
        np.testing.assert_allclose(sing[i], numerics.svd(Ms[i]).singular, atol=1e-13)
        np.testing.assert_allclose((left[i] * sing[i]) @ right[i].T, Ms[i], atol=1e-12)


def test_pinv(rng):
    M = rng.standard_normal((4, 7))
    np.testing.assert_allclose(numerics.pinv(M), np.linalg.pinv(M), atol=1e-12)


# ---------------------------------------------------------------------------
# orthonormal extension and Cholesky
# ---------------------------------------------------------------------------

def test_orthonormal_extend_examples(rng):
    Q = numerics.orthonormal_extend(np.array([1.0, 0.0, 0.0]), 3)
    np.testing.assert_array_equal(Q[:, 0], [1, 0, 0])
    assert np.max(np.abs(Q.T @ Q - np.eye(3))) < 1e-12
    v = np.array([1.0, 1.0]) / np.sqrt(2)
    Q = numerics.orthonormal_extend(v, 2)
    np.testing.assert_array_equal(Q[:, 0], v)
    assert np.max(np.abs(Q.T @ Q - np.eye(2))) < 1e-12
    for _ in range(20):
        v = rng.standard_normal(8)
        v /= np.linalg.norm(v)
        Q = numerics.orthonormal_extend(v, 8)
        np.testing.assert_array_equal(Q[:, 0], v)
        assert np.max(np.abs(Q.T @ Q - np.eye(8))) < 1e-12


def test_orthonormal_extend_rejects_non_unit():
    with pytest.raises(InvalidInputError):
        numerics.orthonormal_extend(np.array([1.0, 1.0]), 2)


def test_spd_solve_examples(rng):
    b = rng.standard_normal(5)
    np.testing.assert_allclose(numerics.spd_solve(np.eye(5), b), b)
    np.testing.assert_allclose(numerics.spd_solve(np.array([[4.0]]), np.array([8.0])), [2.0])
    B = rng.standard_normal((10, 10))
    S = B @ B.T + 0.5 * np.eye(10)
    rhs = rng.standard_normal(10)
    x = numerics.spd_solve(S, rhs)
    assert np.linalg.norm(S @ x - rhs) <= 1e-10 * np.linalg.norm(rhs)


def test_cholesky_rejects_indefinite():
    with pytest.raises(NotPositiveDefiniteError):
        numerics.cholesky(np.diag([1.0, -1.0]))


# ---------------------------------------------------------------------------
# simplex
# ---------------------------------------------------------------------------

def test_simplex_examples():
    sol = numerics.simplex_lp([-1.0], ub_lhs=[[1.0]], ub_rhs=[1.0])
    assert sol.status == "optimal"
    assert sol.point[0] == pytest.approx(1.0) and sol.objective == pytest.approx(-1.0)
    sol = numerics.simplex_lp([1.0], eq_lhs=[[1.0]], eq_rhs=[-1.0])
    assert sol.status == "infeasible"
    sol = numerics.simplex_lp([-1.0, 0.0], ub_lhs=[[-1.0, 1.0]], ub_rhs=[1.0])
    assert sol.status == "unbounded"


def test_simplex_free_variables():
    # min |x - 3| written with a free x and t >= |x - 3|
    sol = numerics.simplex_lp([0.0, 1.0], ub_lhs=[[1.0, -1.0], [-1.0, -1.0]], ub_rhs=[3.0, -3.0],
                              nonneg=[False, True])
    assert sol.status == "optimal"
    assert sol.point[0] == pytest.approx(3.0) and sol.objective == pytest.approx(0.0, abs=1e-12)


def test_simplex_beale_cycling_example():
    # classic instance on which the textbook largest-coefficient rule cycles
    c = np.array([-0.75, 150.0, -0.02, 6.0])
    A = np.array([[0.25, -60.0, -0.04, 9.0], [0.5, -90.0, -0.02, 3.0], [0.0, 0.0, 1.0, 0.0]])
    b = np.array([0.0, 0.0, 1.0])
    sol = numerics.simplex_lp(c, ub_lhs=A, ub_rhs=b)
    assert sol.status == "optimal"
    assert sol.objective == pytest.approx(-0.05, abs=1e-10)


def _vertex_optimum(c, Aeq, beq):
    """Brute force over basic feasible solutions of {Aeq x = beq, x >= 0}."""
    m, p = Aeq.shape
    best = np.inf
    for cols in itertools.combinations(range(p), m):
        B = Aeq[:, cols]
        if abs(np.linalg.det(B)) < 1e-12:
            continue
        xb = np.linalg.solve(B, beq)
        if np.all(xb >= -1e-10):
            x = np.zeros(p)
            x[list(cols)] = xb
            best = min(best, c @ x)
    return best


def test_l1_projection_against_vertex_enumeration(rng):
    # min ||x - x0||_1 s.t. A x = 0 for a 2x4 A: variables x = u - v, t >= |x - x0|
    for _ in range(5):
        A = rng.standard_normal((2, 4))
        x0 = rng.standard_normal(4)
        # standard form in (u, v, d+, d-) >= 0 with u - v - d+ + d- = x0 and A(u - v) = 0
        I = np.eye(4)
        Aeq = np.vstack([np.hstack([I, -I, -I, I]), np.hstack([A, -A, np.zeros((2, 8))])])
        beq = np.concatenate([x0, np.zeros(2)])
        c = np.concatenate([np.zeros(8), np.ones(8)])
        sol = numerics.simplex_lp(c, eq_lhs=Aeq, eq_rhs=beq)
        assert sol.status == "optimal"
        assert np.linalg.norm(Aeq @ sol.point - beq) <= 1e-8
        assert sol.objective == pytest.approx(_vertex_optimum(c, Aeq, beq), abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.integers(2, 8), st.integers(0, 3))
def test_simplex_matches_scipy(seed, n_eq, p, n_ub):
    r = np.random.default_rng(seed)
    n_eq = min(n_eq, p - 1)
    x_feas = r.uniform(0, 2, p)
    Aeq = r.standard_normal((n_eq, p))
    beq = Aeq @ x_feas
    Aub = r.standard_normal((n_ub + 1, p))
    Aub[-1] = 1.0  # keeps the region bounded
    bub = Aub @ x_feas + r.uniform(0, 1, n_ub + 1)
    c = r.standard_normal(p)
    ours = numerics.simplex_lp(c, Aeq, beq, Aub, bub)
    ref = linprog(c, A_ub=Aub, b_ub=bub, A_eq=Aeq, b_eq=beq, bounds=[(0, None)] * p, method="highs")
    assert ref.status == 0
    assert ours.status == "optimal"
    assert ours.objective == pytest.approx(ref.fun, abs=1e-7 * max(1, abs(ref.fun)))
    assert ours.objective == pytest.approx(c @ ours.point, abs=1e-10)
    assert np.all(ours.point >= -1e-8)
    assert np.linalg.norm(Aeq @ ours.point - beq) <= 1e-8 * max(1, np.linalg.norm(beq))
    assert np.all(Aub @ ours.point <= bub + 1e-8)
