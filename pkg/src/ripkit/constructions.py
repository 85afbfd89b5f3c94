"""Explicit operators sitting exactly on the delta = 1/3 boundary.

Each constructor returns a ``CounterexampleKit`` that checks its own
invariants before it is handed out: the anchor spans the null space, and
two distinct order-sparse (or rank-order) elements share one measurement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import numerics
from .errors import InvalidInputError
from .recovery import LinearMap, vec

__all__ = [
    "CounterexampleKit",
    "sharp_counterexample_signal",
    "sharp_counterexample_matrix",
    "tempered_counterexample_signal",
    "tempered_counterexample_matrix",
    "rank_r_inner_bound_check",
    "identifiability_gap_example",
]

KIT_TOL = 1e-10
SHARP_SCALE = math.sqrt(4.0 / 3.0)


@dataclass(frozen=True)
class CounterexampleKit:
    operator: object
    order: int
    anchor: np.ndarray | None
    colliding_pair: tuple
    claimed_ric: float

    @property
    def is_matrix(self):
        return isinstance(self.operator, LinearMap)

    def apply(self, v):
        if self.is_matrix:
            return self.operator(v)
        return np.asarray(self.operator) @ v

    def verify(self):
        """Raise ``AssertionError`` if any kit invariant fails."""
        first, second = self.colliding_pair
        if self.anchor is not None:
            assert np.linalg.norm(self.apply(self.anchor)) <= KIT_TOL, "anchor not in null space"
        gap = np.linalg.norm(self.apply(first) - self.apply(second))
        assert gap <= KIT_TOL, f"colliding pair measured differently ({gap:.3e})"
        assert np.linalg.norm(np.asarray(first) - np.asarray(second)) >= 1.0, "pair not distinct"
        for v in (first, second):
            assert _order_of(v) <= self.order, "colliding element exceeds the order"
        return self


def _order_of(v):
    v = np.asarray(v, dtype=float)
    if v.ndim == 1:
        return int(np.count_nonzero(v))
    s = numerics.svd(v).singular
    return int(np.sum(s > KIT_TOL * max(1.0, s[0] if s.size else 0.0)))


def _signal_anchor(p, k):
    if not (2 <= k and 2 * k <= p):
        raise InvalidInputError(f"need 2 <= k <= p/2, got p={p}, k={k}")
    beta1 = np.zeros(p)
    beta1[: 2 * k] = 1.0 / math.sqrt(2 * k)
    return beta1


def _signal_pair(p, k):
    gamma = np.zeros(p)
    gamma[:k] = 1.0
    eta = np.zeros(p)
    eta[k: 2 * k] = -1.0
    return gamma, eta


def sharp_counterexample_signal(p, k):
    """Matrix with ``delta_k = 1/3`` that cannot identify every k-sparse signal.

    ``A = sqrt(4/3) (I - b b^T)`` where ``b`` has ``2k`` leading entries
    ``1/sqrt(2k)``; this equals dropping the ``b`` coordinate from an
    orthonormal basis that starts with ``b``.
    """
    beta1 = _signal_anchor(p, k)
    A = SHARP_SCALE * (np.eye(p) - np.outer(beta1, beta1))
    return CounterexampleKit(A, k, beta1, _signal_pair(p, k), 1.0 / 3.0).verify()


def _matrix_anchor(m, n, r):
    if not (2 <= r and 2 * r <= min(m, n)):
        raise InvalidInputError(f"need 2 <= r <= min(m, n)/2, got m={m}, n={n}, r={r}")
    X1 = np.zeros((m, n))
    idx = np.arange(2 * r)
    X1[idx, idx] = 1.0 / math.sqrt(2 * r)
    return X1


def _matrix_pair(m, n, r):
    X = np.zeros((m, n))
    Y = np.zeros((m, n))
    idx = np.arange(r)
    X[idx, idx] = 1.0
    Y[idx + r, idx + r] = -1.0
    return X, Y


def sharp_counterexample_matrix(m, n, r):
    """Linear map with ``delta_r = 1/3`` that cannot identify every rank-r matrix.

    The rows are ``sqrt(4/3)`` times an orthonormal basis of the
    vectorized space with ``vec(X1)`` removed, so ``q = m n - 1``.
    """
    X1 = _matrix_anchor(m, n, r)
    basis = numerics.orthonormal_extend(vec(X1), m * n)
    M = LinearMap(SHARP_SCALE * basis[:, 1:].T, m, n)
    return CounterexampleKit(M, r, X1, _matrix_pair(m, n, r), 1.0 / 3.0).verify()


def _tempered_parameters(shrink):
    if not 0.0 <= shrink < 1.0:
        raise InvalidInputError("shrink must lie in [0, 1)")
    scale = 1.0 / (1.0 - shrink / 4.0)
    delta = shrink / (4.0 - shrink)
    cut = 1.0 - math.sqrt(1.0 - shrink)
    return scale, delta, cut


def tempered_counterexample_signal(p, k, shrink):
    """Injective relative of the sharp signal operator with known ``delta_k < 1/3``.

    ``||A g||^2 = c (||g||^2 - shrink <g, b>^2)`` with ``c = 1/(1 - shrink/4)``,
    so ``delta_k = shrink / (4 - shrink)`` exactly; ``shrink -> 1`` recovers
    the sharp operator.  Returns ``(A, delta_k)``.
    """
    beta1 = _signal_anchor(p, k)
    scale, delta, cut = _tempered_parameters(shrink)
    A = math.sqrt(scale) * (np.eye(p) - cut * np.outer(beta1, beta1))
    return A, delta


def tempered_counterexample_matrix(m, n, r, shrink):
    """Matrix-side analogue of ``tempered_counterexample_signal``; returns ``(M, delta_r)``."""
    x1 = vec(_matrix_anchor(m, n, r))
    scale, delta, cut = _tempered_parameters(shrink)
    rep = math.sqrt(scale) * (np.eye(m * n) - cut * np.outer(x1, x1))
    return LinearMap(rep, m, n), delta


def rank_r_inner_bound_check(B, X, r):
    """Check ``|<B, X>| <= ||B||_F * sqrt(sum of the r largest squared singular values of X)``.

    Raises
    ------
    InvalidInputError
        If ``B`` has rank above ``r``.
    """
    B = np.asarray(B, dtype=float)
    X = np.asarray(X, dtype=float)
    if B.shape != X.shape:
        raise InvalidInputError("B and X must have the same shape")
    sb = numerics.svd(B).singular
    if sb.size > r and sb[r] > 1e-10 * max(1.0, sb[0]):
        raise InvalidInputError(f"B has rank above {r}")
    sx = numerics.svd(X).singular
    lhs = abs(float(np.sum(B * X)))
    rhs = np.linalg.norm(B) * math.sqrt(float(np.sum(sx[:r] ** 2)))
    return lhs <= rhs + 1e-10


def identifiability_gap_example(kind, *dims):
    """Order-one operators that are isometric on 1-sparse / rank-1 inputs yet not injective on them.

    ``identifiability_gap_example('signal', p)`` or
    ``identifiability_gap_example('matrix', m, n)``.
    """
    if kind == "signal":
        (p,) = dims
        if p < 2:
            raise InvalidInputError("need p >= 2")
        A = np.zeros((p - 1, p))
        A[0, 0], A[0, 1] = 1.0, -1.0
        A[1:, 2:] = np.eye(p - 2)
        e1 = np.zeros(p)
        e1[0] = 1.0
        e2 = np.zeros(p)
        e2[1] = -1.0
        kit = CounterexampleKit(A, 1, None, (e1, e2), 0.0)
    elif kind == "matrix":
        m, n = dims
        if m < 2 or n < 2:
            raise InvalidInputError("need m, n >= 2")
        rows = []
        first = np.zeros((m, n))
        first[0, 0], first[1, 1] = 1.0, -1.0
        second = np.zeros((m, n))
        second[0, 1], second[1, 0] = 1.0, 1.0
        rows += [vec(first), vec(second)]
        # row-major listing of the remaining entries
        for i in range(m):
            for j in range(n):
                if (i, j) in {(0, 0), (1, 1), (0, 1), (1, 0)}:
                    continue
                E = np.zeros((m, n))
                E[i, j] = 1.0
                rows.append(vec(E))
        X = np.zeros((m, n))
        X[0, 0] = 1.0
        Y = np.zeros((m, n))
        Y[1, 1] = -1.0
        kit = CounterexampleKit(LinearMap(np.array(rows), m, n), 1, None, (X, Y), 0.0)
    else:
        raise InvalidInputError(f"unknown kind {kind!r}")
    kit.verify()
    _check_order_one_isometry(kit)
    return kit


def _check_order_one_isometry(kit, trials=100, seed=0):
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        if kit.is_matrix:
            M = kit.operator
            v = np.outer(rng.standard_normal(M.m), rng.standard_normal(M.n))
        else:
            p = np.asarray(kit.operator).shape[1]
            v = np.zeros(p)
            v[rng.integers(p)] = rng.standard_normal()
        lhs = float(np.sum(kit.apply(v) ** 2))
        rhs = float(np.sum(np.asarray(v) ** 2))
        assert abs(lhs - rhs) <= KIT_TOL * max(1.0, rhs), "order-one isometry broken"
