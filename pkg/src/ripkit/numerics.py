"""Dense linear-algebra and LP kernels.

Everything here operates on small dense numpy arrays.  Eigenvalues and
singular values come from Jacobi iterations, the LP solver is a two-phase
tableau simplex with Bland's rule.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InvalidInputError, NotPositiveDefiniteError

__all__ = [
    "EIG_TOL",
    "ORTHO_TOL",
    "LP_PIVOT_TOL",
    "SvdFactors",
    "LpSolution",
    "sym_eig_extremes",
    "sym_eig_extremes_batch",
    "sym_eigvals",
    "svd",
    "svd_batch",
    "pinv",
    "orthonormal_extend",
    "orthonormal_complement",
    "cholesky",
    "cho_solve",
    "spd_solve",
    "simplex_lp",
]

EIG_TOL = 1e-10
ORTHO_TOL = 1e-12
LP_PIVOT_TOL = 1e-9

_MAX_SWEEPS = 60
_EPS = np.finfo(float).eps


def _as_finite(a, name="input"):
    arr = np.array(a, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return arr


# ---------------------------------------------------------------------------
# symmetric eigenvalues (cyclic two-sided Jacobi)
# ---------------------------------------------------------------------------

def _jacobi_diagonalize(S):
    """Run cyclic Jacobi sweeps on a stack of symmetric matrices in place.

    ``S`` has shape (N, k, k).  On return its diagonals hold the eigenvalues.
    """
    N, k, _ = S.shape
    if k == 1:
        return S
    scale = np.sqrt(np.sum(S * S, axis=(1, 2)))
    scale[scale == 0] = 1.0
    mask = ~np.eye(k, dtype=bool)
    for _ in range(_MAX_SWEEPS):
        off = np.sqrt(np.sum(S[:, mask] ** 2, axis=1))
        if np.all(off <= _EPS * scale):
            break
        for p in range(k - 1):
            for q in range(p + 1, k):
                apq = S[:, p, q]
                rotate = np.abs(apq) > _EPS * 1e-2 * scale
                if not np.any(rotate):
                    continue
                safe = np.where(rotate, apq, 1.0)
                theta = (S[:, q, q] - S[:, p, p]) / (2.0 * safe)
                t = np.where(theta >= 0, 1.0, -1.0) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
                t = np.where(rotate, t, 0.0)
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                cc, ss = c[:, None], s[:, None]
                col_p = S[:, :, p].copy()
                col_q = S[:, :, q]
                S[:, :, p] = cc * col_p - ss * col_q
                S[:, :, q] = ss * col_p + cc * col_q
                row_p = S[:, p, :].copy()
                row_q = S[:, q, :]
                S[:, p, :] = cc * row_p - ss * row_q
                S[:, q, :] = ss * row_p + cc * row_q
                S[:, p, q] = 0.0
                S[:, q, p] = 0.0
    return S


def sym_eigvals(S):
    """All eigenvalues of a symmetric matrix, ascending."""
    S = _as_finite(S, "S")
    if S.ndim != 2 or S.shape[0] != S.shape[1] or S.shape[0] == 0:
        raise InvalidInputError("S must be a non-empty square matrix")
    work = (0.5 * (S + S.T))[None].copy()
    _jacobi_diagonalize(work)
    return np.sort(np.diagonal(work[0]))


def sym_eig_extremes_batch(S):
    """Extreme eigenvalues of a stack of symmetric matrices.

    Parameters
    ----------
    S : array, shape (N, k, k)

    Returns
    -------
    lo, hi : arrays of shape (N,)
    """
    S = _as_finite(S, "S")
    if S.ndim != 3 or S.shape[1] != S.shape[2] or S.shape[1] == 0:
        raise InvalidInputError("expected a stack of square matrices")
    work = 0.5 * (S + np.swapaxes(S, 1, 2))
    _jacobi_diagonalize(work)
    d = np.diagonal(work, axis1=1, axis2=2)
    return d.min(axis=1), d.max(axis=1)


def sym_eig_extremes(S):
    """Smallest and largest eigenvalue of a symmetric matrix.

    The input is symmetrized before the Jacobi sweeps.
    """
    S = np.asarray(S, dtype=float)
    if S.ndim != 2:
        raise InvalidInputError("S must be two-dimensional")
    lo, hi = sym_eig_extremes_batch(S[None])
    return float(lo[0]), float(hi[0])


# ---------------------------------------------------------------------------
# SVD (one-sided Jacobi, round-robin ordering)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SvdFactors:
    """Thin SVD ``M = left @ diag(singular) @ right.T``."""

    left: np.ndarray
    singular: np.ndarray
    right: np.ndarray

    def reconstruct(self):
        return (self.left * self.singular) @ self.right.T


@lru_cache(maxsize=64)
def _round_robin(n):
    """Pairings covering every index pair exactly once per sweep."""
    players = list(range(n)) + ([-1] if n % 2 else [])
    size = len(players)
    rounds = []
    for _ in range(size - 1):
        pairs = [(players[i], players[size - 1 - i]) for i in range(size // 2)]
        pairs = [(min(a, b), max(a, b)) for a, b in pairs if a >= 0 and b >= 0]
        if pairs:
            rounds.append((np.array([a for a, _ in pairs]), np.array([b for _, b in pairs])))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return tuple(rounds)


def orthonormal_complement(Q, dim):
    """Orthonormal columns spanning the orthogonal complement of ``Q``.

    ``Q`` must have orthonormal columns (possibly zero of them).  Each new
    column is the standard basis vector with the largest residual after
    projection, which is always at least ``sqrt(remaining / dim)``.
    """
    basis = np.asarray(Q, dtype=float).reshape(dim, -1)
    need = dim - basis.shape[1]
    extra = np.zeros((dim, max(need, 0)))
    for j in range(need):
        current = np.hstack([basis, extra[:, :j]])
        R = np.eye(dim) - current @ current.T
        R -= current @ (current.T @ R)
        v = R[:, int(np.argmax(np.sum(R * R, axis=0)))]
        v = v - current @ (current.T @ v)
        extra[:, j] = v / np.linalg.norm(v)
    return extra


def _one_sided_jacobi(U):
    """Hestenes SVD for a stack of tall matrices, shape (N, m, n) with m >= n."""
    N, m, n = U.shape
    U = U.copy()
    V = np.broadcast_to(np.eye(n), (N, n, n)).copy()
    rounds = _round_robin(n)
    for _ in range(_MAX_SWEEPS):
        rotated = False
        for P, Q in rounds:
            up, uq = U[:, :, P], U[:, :, Q]
            alpha = np.einsum("bij,bij->bj", up, up)
            beta = np.einsum("bij,bij->bj", uq, uq)
            gamma = np.einsum("bij,bij->bj", up, uq)
            rotate = np.abs(gamma) > m * _EPS * np.sqrt(alpha * beta)
            rotate &= (alpha > 0) & (beta > 0)
            if not rotate.any():
                continue
            rotated = True
            safe = np.where(rotate, gamma, 1.0)
            zeta = (beta - alpha) / (2.0 * safe)
            t = np.where(zeta >= 0, 1.0, -1.0) / (np.abs(zeta) + np.sqrt(1.0 + zeta * zeta))
            t = np.where(rotate, t, 0.0)
            c = (1.0 / np.sqrt(1.0 + t * t))[:, None, :]
            s = c * t[:, None, :]
            U[:, :, P] = c * up - s * uq
            U[:, :, Q] = s * up + c * uq
            vp, vq = V[:, :, P], V[:, :, Q]
            V[:, :, P] = c * vp - s * vq
            V[:, :, Q] = s * vp + c * vq
        if not rotated:
            break
    sigma = np.sqrt(np.einsum("bij,bij->bj", U, U))
    order = np.argsort(-sigma, axis=1, kind="stable")
    sigma = np.take_along_axis(sigma, order, axis=1)
    U = np.take_along_axis(U, order[:, None, :], axis=2)
    V = np.take_along_axis(V, order[:, None, :], axis=2)
    cutoff = max(m, n) * _EPS * sigma[:, :1]
    live = sigma > cutoff
    sigma = np.where(live, sigma, 0.0)
    left = U / np.where(live, sigma, 1.0)[:, None, :]
    for b in np.flatnonzero(~live.all(axis=1)):
        keep = live[b]
        left[b][:, ~keep] = orthonormal_complement(left[b][:, keep], m)[:, : int(np.sum(~keep))]
    return left, sigma, V


def svd_batch(Ms):
    """Thin SVDs of a stack of equally shaped matrices.

    Returns ``(left, singular, right)`` stacks with shapes (N, m, r), (N, r)
    and (N, n, r), ``r = min(m, n)``.
    """
    Ms = _as_finite(Ms, "M")
    if Ms.ndim != 3:
        raise InvalidInputError("expected a stack of matrices")
    N, m, n = Ms.shape
    if m >= n:
        return _one_sided_jacobi(Ms)
    right, sigma, left = _one_sided_jacobi(np.swapaxes(Ms, 1, 2))
    return left, sigma, right


def svd(M):
    """Thin singular value decomposition by one-sided Jacobi.

    Returns ``SvdFactors`` with ``min(m, n)`` singular values in
    nonincreasing order; ties keep their original column order.
    """
    M = _as_finite(M, "M")
    if M.ndim != 2:
        raise InvalidInputError("M must be two-dimensional")
    m, n = M.shape
    if m == 0 or n == 0:
        return SvdFactors(np.zeros((m, 0)), np.zeros(0), np.zeros((n, 0)))
    left, sigma, right = svd_batch(M[None])
    return SvdFactors(left[0], sigma[0], right[0])


def pinv(M, rcond=1e-10):
    """Moore-Penrose pseudoinverse via ``svd``."""
    f = svd(M)
    if f.singular.size == 0 or f.singular[0] == 0:
        return np.zeros(np.asarray(M).T.shape)
    keep = f.singular > rcond * f.singular[0]
    inv = np.zeros_like(f.singular)
    inv[keep] = 1.0 / f.singular[keep]
    return (f.right * inv) @ f.left.T


# ---------------------------------------------------------------------------
# Householder basis extension
# ---------------------------------------------------------------------------

def orthonormal_extend(v, dim=None):
    """Orthogonal matrix whose first column is the unit vector ``v``.

    Built from a single Householder reflector mapping e1 onto +-v.
    """
    v = _as_finite(v, "v").ravel()
    d = v.size if dim is None else int(dim)
    if v.size != d or d == 0:
        raise InvalidInputError("v must have length dim")
    if abs(np.linalg.norm(v) - 1.0) > 1e-10:
        raise InvalidInputError("v must be a unit vector")
    e1 = np.zeros(d)
    e1[0] = 1.0
    # choose the sign that avoids cancellation in w
    flip = v[0] > 0
    w = v + e1 if flip else v - e1
    nw = np.linalg.norm(w)
    if nw == 0:
        Q = np.eye(d)
    else:
        w /= nw
        Q = np.eye(d) - 2.0 * np.outer(w, w)
    if flip:
        Q[:, 0] = -Q[:, 0]
    Q[:, 0] = v
    return Q


# ---------------------------------------------------------------------------
# Cholesky
# ---------------------------------------------------------------------------

def cholesky(S):
    """Lower-triangular ``L`` with ``L @ L.T == S``."""
    S = _as_finite(S, "S")
    n = S.shape[0]
    if S.ndim != 2 or S.shape[1] != n:
        raise InvalidInputError("S must be square")
    L = np.zeros_like(S)
    for j in range(n):
        d = S[j, j] - L[j, :j] @ L[j, :j]
        if not d > 0:
            raise NotPositiveDefiniteError(f"pivot {j} is {d:.3e}")
        L[j, j] = np.sqrt(d)
        L[j + 1:, j] = (S[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]) / L[j, j]
    return L


def cho_solve(L, rhs):
    """Solve ``L L^T x = rhs`` by forward and back substitution."""
    b = np.array(rhs, dtype=float)
    vec = b.ndim == 1
    y = b.reshape(L.shape[0], -1).copy()
    n = L.shape[0]
    for i in range(n):
        y[i] = (y[i] - L[i, :i] @ y[:i]) / L[i, i]
    for i in range(n - 1, -1, -1):
        y[i] = (y[i] - L[i + 1:, i] @ y[i + 1:]) / L[i, i]
    return y.ravel() if vec else y


def spd_solve(S, rhs):
    """Solve ``S x = rhs`` for symmetric positive-definite ``S``."""
    return cho_solve(cholesky(S), _as_finite(rhs, "rhs"))


# ---------------------------------------------------------------------------
# simplex
# ---------------------------------------------------------------------------

@dataclass
class LpSolution:
    """Outcome of ``simplex_lp``; ``point``/``objective`` only when optimal."""

    status: str
    point: np.ndarray | None = None
    objective: float | None = None
    iterations: int = 0


class _Tableau:
    def __init__(self, A, b, basis):
        self.T = np.hstack([A, b[:, None]])
        self.basis = list(basis)
        self.iterations = 0

    def set_cost(self, c):
        z = np.append(c, 0.0).astype(float)
        for i, j in enumerate(self.basis):
            if z[j] != 0.0:
                z -= z[j] * self.T[i]
        self.z = z

    def pivot(self, r, e):
        T = self.T
        T[r] /= T[r, e]
        col = T[:, e].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])
        T[:, e] = 0.0
        T[r, e] = 1.0
        self.z -= self.z[e] * T[r]
        self.z[e] = 0.0
        self.basis[r] = e
        self.iterations += 1

    def run(self, allowed, max_iter=100_000):
        """Bland's-rule iterations; returns 'optimal' or 'unbounded'."""
        T = self.T
        for _ in range(max_iter):
            cand = np.flatnonzero((self.z[:-1] < -LP_PIVOT_TOL) & allowed)
            if cand.size == 0:
                return "optimal"
            e = int(cand[0])
            col = T[:, e]
            rows = np.flatnonzero(col > LP_PIVOT_TOL)
            if rows.size == 0:
                return "unbounded"
            ratios = T[rows, -1] / col[rows]
            best = ratios.min()
            ties = rows[ratios <= best + LP_PIVOT_TOL * max(1.0, abs(best))]
            r = int(min(ties, key=lambda i: self.basis[i]))
            self.pivot(r, e)
        raise RuntimeError("simplex iteration limit reached")


def simplex_lp(cost, eq_lhs=None, eq_rhs=None, ub_lhs=None, ub_rhs=None, nonneg=None):
    """Minimize ``cost @ x`` subject to equality and upper-bound rows.

    Parameters
    ----------
    cost : array (p,)
    eq_lhs, eq_rhs : equality rows ``eq_lhs @ x == eq_rhs`` (optional)
    ub_lhs, ub_rhs : inequality rows ``ub_lhs @ x <= ub_rhs`` (optional)
    nonneg : bool array (p,), default all True
        Variables flagged False are free.

    Returns
    -------
    LpSolution
        ``status`` is one of ``optimal``, ``infeasible``, ``unbounded``.
    """
    c = _as_finite(cost, "cost").ravel()
    p = c.size
    Aeq = np.zeros((0, p)) if eq_lhs is None else _as_finite(eq_lhs, "eq_lhs").reshape(-1, p)
    beq = np.zeros(0) if eq_rhs is None else _as_finite(eq_rhs, "eq_rhs").ravel()
    Aub = np.zeros((0, p)) if ub_lhs is None else _as_finite(ub_lhs, "ub_lhs").reshape(-1, p)
    bub = np.zeros(0) if ub_rhs is None else _as_finite(ub_rhs, "ub_rhs").ravel()
    if Aeq.shape[0] != beq.size or Aub.shape[0] != bub.size:
        raise InvalidInputError("constraint rows and right-hand sides disagree")
    nn = np.ones(p, dtype=bool) if nonneg is None else np.asarray(nonneg, dtype=bool).ravel()
    if nn.size != p:
        raise InvalidInputError("nonneg must have one flag per variable")

    free = np.flatnonzero(~nn)
    # x = x_pos - x_neg for free variables (x_neg appended after the originals)
    def expand(M):
        return np.hstack([M, -M[:, free]])

    c_std = np.concatenate([c, -c[free]])
    Aeq_s, Aub_s = expand(Aeq), expand(Aub)
    nx = c_std.size
    m_eq, m_ub = Aeq_s.shape[0], Aub_s.shape[0]
    m = m_eq + m_ub
    n_slack = m_ub

    A = np.zeros((m, nx + n_slack))
    b = np.concatenate([beq, bub])
    A[:m_eq, :nx] = Aeq_s
    A[m_eq:, :nx] = Aub_s
    A[m_eq:, nx:] = np.eye(m_ub)
    neg = b < 0
    A[neg] *= -1.0
    b = np.abs(b)

    need_art = np.ones(m, dtype=bool)
    need_art[m_eq:] = neg[m_eq:]
    art_rows = np.flatnonzero(need_art)
    n_core = nx + n_slack
    A_full = np.hstack([A, np.zeros((m, art_rows.size))])
    basis = [0] * m
    for i in range(m_eq, m):
        basis[i] = nx + (i - m_eq)
    for a, i in enumerate(art_rows):
        A_full[i, n_core + a] = 1.0
        basis[i] = n_core + a

    tab = _Tableau(A_full, b.astype(float), basis)
    ncols = A_full.shape[1]
    if art_rows.size:
        phase1 = np.zeros(ncols)
        phase1[n_core:] = 1.0
        tab.set_cost(phase1)
        tab.run(np.ones(ncols, dtype=bool))
        if -tab.z[-1] > 1e-9 * max(1.0, np.abs(b).max(initial=0.0)):
            return LpSolution("infeasible", iterations=tab.iterations)
        # drive remaining artificials out of the basis, dropping redundant rows
        keep = np.ones(m, dtype=bool)
        for i in range(m):
            if tab.basis[i] >= n_core:
                row = tab.T[i, :n_core]
                nz = np.flatnonzero(np.abs(row) > LP_PIVOT_TOL)
                if nz.size:
                    tab.pivot(i, int(nz[0]))
                else:
                    keep[i] = False
        tab.T = tab.T[keep]
        tab.basis = [j for j, k in zip(tab.basis, keep) if k]
        A = A[keep]
        b = b[keep]
    tab.T = np.hstack([tab.T[:, :n_core], tab.T[:, -1:]])
    tab.set_cost(np.concatenate([c_std, np.zeros(n_slack)]))
    status = tab.run(np.ones(n_core, dtype=bool))
    if status == "unbounded":
        return LpSolution("unbounded", iterations=tab.iterations)

    x_std = np.zeros(n_core)
    basis = np.array(tab.basis, dtype=int)
    x_std[basis] = tab.T[:, -1]
    if basis.size:
        # one refinement against the original rows to shed tableau drift
        B = A[:, basis]
        try:
            refined = np.linalg.solve(B, b)
            if np.all(refined >= -1e-9):
                x_std[basis] = np.maximum(refined, 0.0)
        except np.linalg.LinAlgError:
            pass
    x = x_std[:p].copy()
    x[free] -= x_std[p:nx]
    return LpSolution("optimal", x, float(c @ x), tab.iterations)
