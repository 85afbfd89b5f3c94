import numpy as np
import pytest

from ripkit import constructions as cx
from ripkit.errors import InvalidInputError
from ripkit.recovery import RecoveryInstance, nuclear_norm, solve_matrix, solve_signal, vec
from ripkit.rip import matrix_rip_ratio, ric_exact_signal


def test_sharp_signal_quoted_values():
    kit = cx.sharp_counterexample_signal(6, 2)
    A = kit.operator
    gamma, eta = kit.colliding_pair
    assert np.sum((A @ gamma) ** 2) == pytest.approx(4.0 / 3.0, abs=1e-12)
    assert np.sum((A @ np.array([1.0, -1.0, 0, 0, 0, 0])) ** 2) == pytest.approx(8.0 / 3.0, abs=1e-12)
    assert np.linalg.norm(gamma - eta) == pytest.approx(2.0)


@pytest.mark.parametrize("p, k", [(4, 2), (6, 2), (7, 3), (8, 4)])
def test_sharp_signal_ric(p, k):
    kit = cx.sharp_counterexample_signal(p, k)
    assert ric_exact_signal(kit.operator, k).value == pytest.approx(1.0 / 3.0, abs=1e-9)


def test_sharp_signal_two_sided(rng):
    p, k = 8, 3
    A = cx.sharp_counterexample_signal(p, k).operator
    for _ in range(1000):
        g = np.zeros(p)
        g[rng.choice(p, k, replace=False)] = rng.standard_normal(k)
        g /= np.linalg.norm(g)
        e = np.sum((A @ g) ** 2)
        assert 2.0 / 3.0 - 1e-10 <= e <= 4.0 / 3.0 + 1e-10


@pytest.mark.parametrize("p, k", [(3, 2), (6, 1), (5, 3)])
def test_sharp_signal_rejects(p, k):
    with pytest.raises(InvalidInputError):
        cx.sharp_counterexample_signal(p, k)


def test_sharp_matrix_pair_and_identity(rng):
    kit = cx.sharp_counterexample_matrix(4, 4, 2)
    M = kit.operator
    X, Y = kit.colliding_pair
    assert M.q == 15
    assert np.linalg.norm(M(X) - M(Y)) <= 1e-10
    assert np.linalg.matrix_rank(X) == 2 and np.linalg.matrix_rank(Y) == 2
    for _ in range(100):
        Z = rng.standard_normal((4, 4))
        lhs = np.sum(M(Z) ** 2)
        rhs = 4.0 / 3.0 * (np.sum(Z * Z) - np.sum(Z * kit.anchor) ** 2)
        assert lhs == pytest.approx(rhs, abs=1e-10 * max(1.0, rhs))


def test_sharp_matrix_witness_deviations():
    M = cx.sharp_counterexample_matrix(4, 4, 2).operator
    low = np.diag([1.0, 1.0, 0.0, 0.0]) / np.sqrt(2)
    high = np.diag([1.0, -1.0, 0.0, 0.0]) / np.sqrt(2)
    assert 1.0 - matrix_rip_ratio(M, low) == pytest.approx(1.0 / 3.0, abs=1e-12)
    assert matrix_rip_ratio(M, high) - 1.0 == pytest.approx(1.0 / 3.0, abs=1e-12)


def test_sharp_matrix_two_sided(rng):
    m, n, r = 4, 5, 2
    kit = cx.sharp_counterexample_matrix(m, n, r)
    for _ in range(1000):
        Z = rng.standard_normal((m, r)) @ rng.standard_normal((r, n))
        Z /= np.linalg.norm(Z)
        assert cx.rank_r_inner_bound_check(Z, kit.anchor, r)
        e = np.sum(kit.operator(Z) ** 2)
        assert 2.0 / 3.0 - 1e-10 <= e <= 4.0 / 3.0 + 1e-10


def test_sharp_matrix_rejects():
    with pytest.raises(InvalidInputError):
        cx.sharp_counterexample_matrix(3, 3, 2)


def test_tempered_delta_exact():
    for shrink in (0.0, 0.3, 0.8):
        A, delta = cx.tempered_counterexample_signal(6, 2, shrink)
        assert ric_exact_signal(A, 2).value == pytest.approx(delta, abs=1e-12)
        assert delta < 1.0 / 3.0


def test_tempered_matrix_energy(rng):
    M, delta = cx.tempered_counterexample_matrix(4, 4, 2, 0.5)
    x1 = vec(cx.sharp_counterexample_matrix(4, 4, 2).anchor)
    c = 1.0 / (1.0 - 0.5 / 4.0)
    for _ in range(50):
        Z = rng.standard_normal((4, 4))
        expect = c * (np.sum(Z * Z) - 0.5 * (vec(Z) @ x1) ** 2)
        assert np.sum(M(Z) ** 2) == pytest.approx(expect, rel=1e-12)
    assert delta == pytest.approx(0.5 / 3.5)


def test_rank_r_inner_bound_examples(rng):
    B = np.zeros((2, 2))
    B[0, 0] = 1.0
    assert cx.rank_r_inner_bound_check(B, np.diag([3.0, 2.0]), 1)
    assert cx.rank_r_inner_bound_check(B, np.zeros((2, 2)), 1)
    with pytest.raises(InvalidInputError):
        cx.rank_r_inner_bound_check(np.eye(2), np.eye(2), 1)
    for _ in range(1000):
        m, n = rng.integers(2, 6, size=2)
        r = int(rng.integers(1, min(m, n) + 1))
        B = rng.standard_normal((m, r)) @ rng.standard_normal((r, n))
        assert cx.rank_r_inner_bound_check(B, rng.standard_normal((m, n)), r)


def test_identifiability_gap_signal(rng):
    kit = cx.identifiability_gap_example("signal", 3)
    A = kit.operator
    e1, e2 = kit.colliding_pair
    np.testing.assert_array_equal(A @ e1, A @ e2)
    for i in range(3):
        v = np.zeros(3)
        v[i] = rng.standard_normal()
        assert np.sum((A @ v) ** 2) == pytest.approx(np.sum(v**2))
    assert ric_exact_signal(A, 1).value == pytest.approx(0.0, abs=1e-14)


def test_identifiability_gap_matrix(rng):
    kit = cx.identifiability_gap_example("matrix", 2, 2)
    M = kit.operator
    for _ in range(1000):
        X = np.outer(rng.standard_normal(2), rng.standard_normal(2))
        assert np.sum(M(X) ** 2) == pytest.approx(np.sum(X * X), rel=1e-12)
    X, Y = kit.colliding_pair
    np.testing.assert_array_equal(M(X), M(Y))
    with pytest.raises(InvalidInputError):
        cx.identifiability_gap_example("signal", 1)
    with pytest.raises(InvalidInputError):
        cx.identifiability_gap_example("tensor", 2)


def test_colliding_pairs_have_two_optima():
    kit = cx.sharp_counterexample_signal(6, 2)
    gamma, eta = kit.colliding_pair
    rep = solve_signal(RecoveryInstance(kit.operator, kit.apply(gamma)))
    assert np.linalg.norm(kit.apply(eta) - kit.apply(gamma)) <= 1e-10
    assert np.sum(np.abs(eta)) == pytest.approx(rep.objective, abs=1e-8)
    assert np.sum(np.abs(gamma)) == pytest.approx(rep.objective, abs=1e-8)

    kit = cx.sharp_counterexample_matrix(4, 4, 2)
    X, Y = kit.colliding_pair
    rep = solve_matrix(RecoveryInstance(kit.operator, kit.apply(X)))
    assert nuclear_norm(X) == pytest.approx(rep.objective, abs=1e-6)
    assert nuclear_norm(Y) == pytest.approx(rep.objective, abs=1e-6)
