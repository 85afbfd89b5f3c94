"""Null space property: exact LP certification for signals, falsification for matrices.

For a matrix ``A`` and order ``k`` the certified quantity is

    max over beta in N(A), ||beta||_1 <= 1 of ||beta_{max(k)}||_1,

computed as a maximum of linear programs, one per support and sign
pattern.  The property holds when it is below 1/2 and fails above it;
values within ``TAU`` of 1/2 are reported as ``boundary``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import numerics
from .errors import BudgetExceededError, InvalidInputError, InvalidWitnessError
from .recovery import LinearMap, best_s_term, nuclear_norm

__all__ = [
    "NspCertificate",
    "MatrixNspWitness",
    "TAU",
    "null_space_basis",
    "nsp_certify_signal",
    "nsp_falsify_matrix",
    "failing_pair_from_witness",
    "verdict",
]

TAU = 1e-9
DEFAULT_BUDGET = 1_000_000


def verdict(value, tau=TAU):
    if value <= 0.5 - tau:
        return "holds"
    if value >= 0.5 + tau:
        return "fails"
    return "boundary"


@dataclass(frozen=True)
class NspCertificate:
    order: int
    status: str
    worst_value: float
    worst_support: tuple
    worst_signs: tuple
    worst_vector: np.ndarray | None


@dataclass(frozen=True)
class MatrixNspWitness:
    matrix: np.ndarray
    ratio: float
    boundary: bool


def null_space_basis(A, rtol=1e-10):
    """Orthonormal basis (as columns) of the null space of ``A``.

    Singular values at or below ``rtol * sigma_max`` count as zero.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise InvalidInputError("A must be a matrix")
    p = A.shape[1]
    if A.shape[0] == 0:
        return np.eye(p)
    f = numerics.svd(A)
    smax = f.singular[0] if f.singular.size else 0.0
    if smax == 0:
        return np.eye(p)
    rank = int(np.sum(f.singular > rtol * smax))
    return numerics.orthonormal_complement(f.right[:, :rank], p)


def _support_lp(A, support, signs):
    """max sum_i s_i beta_i over {A beta = 0, ||beta||_1 <= 1}."""
    n, p = A.shape
    cost = np.zeros(2 * p)
    for i, s in zip(support, signs):
        cost[i] = -s
        cost[p + i] = s
    sol = numerics.simplex_lp(
        cost,
        eq_lhs=np.hstack([A, -A]),
        eq_rhs=np.zeros(n),
        ub_lhs=np.ones((1, 2 * p)),
        ub_rhs=np.ones(1),
    )
    if sol.status != "optimal":
        raise RuntimeError(f"certification LP ended {sol.status}")
    beta = sol.point[:p] - sol.point[p:]
    return -sol.objective, beta


def nsp_certify_signal(A, k, budget=DEFAULT_BUDGET):
    """Exact null-space-property verdict for order ``k``.

    Supports are enumerated lexicographically; only sign patterns with a
    leading ``+1`` are solved because ``beta -> -beta`` maps the null space
    onto itself.

    Raises
    ------
    BudgetExceededError
        If ``C(p, k) * 2**k`` exceeds ``budget``.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or not 1 <= k <= A.shape[1]:
        raise InvalidInputError("bad matrix or order")
    p = A.shape[1]
    count = math.comb(p, k) * 2**k
    if count > budget:
        raise BudgetExceededError(f"{count} LPs exceed budget {budget}")
    N = null_space_basis(A)
    if N.shape[1] == 0:
        return NspCertificate(k, "holds", 0.0, tuple(range(k)), (1,) * k, None)
    best = (-math.inf, None, None, None)
    patterns = [(1,) + rest for rest in itertools.product((1, -1), repeat=k - 1)]
    for support in itertools.combinations(range(p), k):
        for signs in patterns:
            value, beta = _support_lp(A, support, signs)
            if value > best[0]:
                best = (value, support, signs, beta)
    value, support, signs, beta = best
    nrm = np.sum(np.abs(beta))
    if nrm > 0:
        beta = beta / nrm
        value = float(sum(s * beta[i] for i, s in zip(support, signs)))
    value = min(max(value, 0.0), 1.0)
    return NspCertificate(k, verdict(value), value, tuple(support), tuple(signs), beta)


# ---------------------------------------------------------------------------
# matrices
# ---------------------------------------------------------------------------

def _ratios_and_grads(X, r):
    """Top-r nuclear mass fraction of each matrix in a stack, and its supergradient."""
    left, sing, right = numerics.svd_batch(X)
    total = sing.sum(axis=1)
    top = sing[:, :r].sum(axis=1)
    safe = np.where(total > 0, total, 1.0)
    G_all = np.einsum("bik,bjk->bij", left, right)
    G_top = np.einsum("bik,bjk->bij", left[:, :, :r], right[:, :, :r])
    grad = (G_top * safe[:, None, None] - top[:, None, None] * G_all) / (safe**2)[:, None, None]
    return np.where(total > 0, top / safe, 0.0), grad


def nsp_falsify_matrix(M, r, budget=200, seed=0, iters=100, step=0.05):
    """Search the null space of ``M`` for a violation of the rank-r null space property.

    Maximizes ``||X_{max(r)}||_* / ||X||_*`` from ``budget`` starts (the
    null basis directions first, then random ones) by projected
    supergradient ascent inside the null space.  Returns a
    ``MatrixNspWitness`` when the ratio reaches ``1/2 - TAU`` and None
    otherwise; None is not a proof that the property holds.
    """
    if not isinstance(M, LinearMap):
        raise InvalidInputError("expected a LinearMap")
    N = null_space_basis(M.rep)
    d = N.shape[1]
    if d == 0:
        return None
    rng = np.random.default_rng(seed)
    C = np.eye(d)[: min(d, budget)]
    if budget > d:
        C = np.vstack([C, rng.standard_normal((budget - d, d))])
    C /= np.linalg.norm(C, axis=1, keepdims=True)

    def as_matrices(C):
        return (C @ N.T).reshape(-1, M.n, M.m).transpose(0, 2, 1)

    X = as_matrices(C)
    ratio, grad = _ratios_and_grads(X, r)
    best_ratio, best_X = ratio.copy(), X.copy()
    for t in range(iters if d > 1 else 0):
        g = grad.transpose(0, 2, 1).reshape(len(C), -1) @ N
        g -= np.einsum("bi,bi->b", g, C)[:, None] * C
        gn = np.linalg.norm(g, axis=1, keepdims=True)
        C = C + step / math.sqrt(t + 1.0) * g / np.where(gn > 1e-14, gn, np.inf)
        C /= np.linalg.norm(C, axis=1, keepdims=True)
        X = as_matrices(C)
        ratio, grad = _ratios_and_grads(X, r)
        better = ratio > best_ratio
        best_ratio[better] = ratio[better]
        best_X[better] = X[better]
    i = int(np.argmax(best_ratio))
    value = float(best_ratio[i])
    if value < 0.5 - TAU:
        return None
    W = best_X[i] / nuclear_norm(best_X[i])
    return MatrixNspWitness(W, value, abs(value - 0.5) <= TAU)


def failing_pair_from_witness(beta, k, A=None):
    """Split a violating null vector into two measurements-equal signals.

    Returns ``(gamma, eta)`` with ``gamma = beta_{max(k)}`` (k-sparse) and
    ``eta = -beta_{-max(k)}``; then ``A gamma == A eta`` and
    ``||eta||_1 <= ||gamma||_1``, so ``gamma`` is not the unique l1
    minimizer for the observation ``A gamma``.
    """
    beta = np.asarray(beta, dtype=float).ravel()
    if A is not None and np.linalg.norm(np.asarray(A) @ beta) > 1e-8:
        raise InvalidWitnessError("vector is not in the null space")
    split = best_s_term(beta, k)
    head_l1 = float(np.sum(np.abs(split.head)))
    if head_l1 < split.tail_norm - 1e-12:
        raise InvalidWitnessError("vector does not violate the null space property")
    return split.head, -split.tail
