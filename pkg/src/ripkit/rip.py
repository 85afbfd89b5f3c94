"""Restricted isometry constants.

``ric_exact_signal`` enumerates every support of size k and takes extreme
eigenvalues of the Gram submatrices.  For linear maps on matrices no exact
algorithm is attempted: ``ric_lower_matrix`` returns a certified lower bound
(the deviation actually attained at explicit rank-r witnesses).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import numerics
from .errors import BudgetExceededError, InvalidInputError
from .recovery import LinearMap

__all__ = [
    "RipEstimate",
    "ric_exact_signal",
    "ric_random_signal",
    "ric_lower_matrix",
    "rip_deviation",
    "matrix_rip_ratio",
    "scaling_lemma_report",
    "ScalingReport",
    "DEFAULT_BUDGET",
]

DEFAULT_BUDGET = 1_000_000
_CHUNK = 50_000
TIE_TOL = 1e-12


@dataclass(frozen=True)
class RipEstimate:
    """A restricted isometry constant with the witnesses that attain it.

    ``witness_low`` attains the ``1 - delta`` side and ``witness_high`` the
    ``1 + delta`` side: supports (tuples) for signals, unit-Frobenius
    matrices for linear maps.  When ``exact`` is False the value is a lower
    bound on the true constant.
    """

    value: float
    order: int
    exact: bool
    witness_low: object
    witness_high: object
    low: float
    high: float


def _supports(p, k):
    return itertools.combinations(range(p), k)


def _extremes_over(G, supports, k):
    """Yield (supports array, lo, hi) chunk by chunk."""
    while True:
        chunk = list(itertools.islice(supports, _CHUNK))
        if not chunk:
            return
        idx = np.array(chunk, dtype=np.intp).reshape(-1, k)
        sub = G[idx[:, :, None], idx[:, None, :]]
        lo, hi = numerics.sym_eig_extremes_batch(sub)
        yield idx, lo, hi


def _scan(G, supports, k):
    # values within TIE_TOL count as ties, and ties keep the earliest support
    best_lo, best_hi = math.inf, -math.inf
    arg_lo = arg_hi = None
    for idx, lo, hi in _extremes_over(G, supports, k):
        i = int(np.flatnonzero(lo <= lo.min() + TIE_TOL)[0])
        if lo[i] < best_lo - TIE_TOL:
            best_lo, arg_lo = float(lo[i]), tuple(int(v) for v in idx[i])
        j = int(np.flatnonzero(hi >= hi.max() - TIE_TOL)[0])
        if hi[j] > best_hi + TIE_TOL:
            best_hi, arg_hi = float(hi[j]), tuple(int(v) for v in idx[j])
    return best_lo, arg_lo, best_hi, arg_hi


def _check_matrix(A, k):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise InvalidInputError("A must be a matrix")
    if not 1 <= k <= A.shape[1]:
        raise InvalidInputError(f"order k={k} outside [1, {A.shape[1]}]")
    if not np.all(np.isfinite(A)):
        raise InvalidInputError("A has non-finite entries")
    return A


def ric_exact_signal(A, k, budget=DEFAULT_BUDGET):
    """Exact ``delta_k`` of ``A`` by exhaustive support enumeration.

    Supports are visited in lexicographic order; ties keep the first.

    Raises
    ------
    BudgetExceededError
        If ``C(p, k)`` exceeds ``budget``.
    """
    A = _check_matrix(A, k)
    p = A.shape[1]
    count = math.comb(p, k)
    if count > budget:
        raise BudgetExceededError(f"C({p},{k}) = {count} supports exceeds budget {budget}")
    G = A.T @ A
    lo, arg_lo, hi, arg_hi = _scan(G, _supports(p, k), k)
    value = max(hi - 1.0, 1.0 - lo, 0.0)
    return RipEstimate(value, k, True, arg_lo, arg_hi, lo, hi)


def ric_random_signal(A, k, samples, seed=0):
    """Lower bound on ``delta_k`` from uniformly sampled supports."""
    A = _check_matrix(A, k)
    p = A.shape[1]
    rng = np.random.default_rng(seed)
    sampled = (tuple(sorted(rng.choice(p, size=k, replace=False))) for _ in range(samples))
    lo, arg_lo, hi, arg_hi = _scan(A.T @ A, sampled, k)
    value = max(hi - 1.0, 1.0 - lo, 0.0)
    return RipEstimate(value, k, False, arg_lo, arg_hi, lo, hi)


def rip_deviation(A, support):
    """Extreme eigenvalues of the Gram matrix restricted to ``support``."""
    idx = np.asarray(support, dtype=np.intp)
    As = np.asarray(A, dtype=float)[:, idx]
    return numerics.sym_eig_extremes(As.T @ As)


# ---------------------------------------------------------------------------
# linear maps on matrices
# ---------------------------------------------------------------------------

def _stack_vec(X):
    return X.transpose(0, 2, 1).reshape(X.shape[0], -1)


def _stack_unvec(V, m, n):
    return V.reshape(V.shape[0], n, m).transpose(0, 2, 1)


def _retract(X, r):
    """Best rank-r approximations of a stack, renormalized to unit Frobenius norm."""
    left, sing, right = numerics.svd_batch(X)
    Y = np.einsum("bik,bk,bjk->bij", left[:, :, :r], sing[:, :r], right[:, :, :r])
    nrm = np.sqrt(np.einsum("bij,bij->b", Y, Y))
    return Y / np.where(nrm > 0, nrm, 1.0)[:, None, None]


def _energies(M, X):
    Z = _stack_vec(X) @ M.rep.T
    return np.einsum("bi,bi->b", Z, Z), Z


def _search(M, X, r, step, iters, sign):
    """Projected gradient on ``||M(X)||^2`` over unit-norm rank-r matrices.

    Every start in the stack ``X`` moves simultaneously; ``sign=+1``
    ascends and ``sign=-1`` descends.  Returns the best iterate per start.
    """
    vals, Z = _energies(M, X)
    best, best_vals = X.copy(), vals.copy()
    for _ in range(iters):
        grad = 2.0 * _stack_unvec(Z @ M.rep, M.m, M.n)
        X = _retract(X + sign * step * grad, r)
        vals, Z = _energies(M, X)
        better = sign * (vals - best_vals) > 0
        best[better] = X[better]
        best_vals[better] = vals[better]
    return best, best_vals


def ric_lower_matrix(M, r, restarts=32, iters=200, seed=0, seeds=(), step=None):
    """Lower bound on ``delta_r`` of a linear map by multi-start search.

    Parameters
    ----------
    M : LinearMap
    r : int
        Rank order.
    restarts, iters : int
        Random starts and projected-gradient iterations per start.
    seed : int
        Seed for the random starts.
    seeds : sequence of matrices
        Extra starting points, tried for both the ascent and the descent.
    step : float, optional
        Defaults to ``0.1 / ||M||**2``.

    Returns
    -------
    RipEstimate
        ``exact`` is always False; ``value`` is the deviation attained at the
        returned witnesses.
    """
    if not isinstance(M, LinearMap):
        raise InvalidInputError("expected a LinearMap")
    if not 1 <= r <= min(M.m, M.n):
        raise InvalidInputError(f"rank order r={r} outside [1, {min(M.m, M.n)}]")
    if step is None:
        nrm = M.norm()
        step = 0.1 / nrm**2 if nrm > 0 else 0.1
    rng = np.random.default_rng(seed)
    starts = [np.asarray(S, dtype=float).reshape(M.m, M.n) for S in seeds]
    starts += [rng.standard_normal((M.m, M.n)) for _ in range(restarts)]
    if not starts:
        raise InvalidInputError("need at least one start")
    X0 = _retract(np.stack(starts), r)
    X0 = X0[np.einsum("bij,bij->b", X0, X0) > 0.5]
    hi_X, hi_v = _search(M, X0, r, step, iters, +1)
    lo_X, lo_v = _search(M, X0, r, step, iters, -1)
    i, j = int(np.argmax(hi_v)), int(np.argmin(lo_v))
    hi, lo = float(hi_v[i]), float(lo_v[j])
    value = max(hi - 1.0, 1.0 - lo, 0.0)
    return RipEstimate(value, r, False, lo_X[j], hi_X[i], lo, hi)


def matrix_rip_ratio(M, X):
    """``||M(X)||^2 / ||X||_F^2``."""
    X = np.asarray(X, dtype=float)
    z = M(X)
    return float(z @ z) / float(np.sum(X * X))


# ---------------------------------------------------------------------------
# scaling lemma
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScalingReport:
    delta_k: float
    delta_sk: float
    bound: float
    holds: bool


def scaling_lemma_report(A, k, s, budget=DEFAULT_BUDGET):
    """Compare ``delta_{sk}`` against ``(2s - 1) * delta_k``."""
    if k < 2 or s < 2:
        raise InvalidInputError("the scaling lemma needs k >= 2 and s >= 2")
    dk = ric_exact_signal(A, k, budget).value
    dsk = ric_exact_signal(A, s * k, budget).value
    bound = (2 * s - 1) * dk
    return ScalingReport(dk, dsk, bound, dsk <= bound + 1e-9)
