"""l1 and nuclear-norm recovery programs and their error bounds.

Signals: minimize ``||beta||_1`` subject to ``A beta - y`` lying in
``{0}``, an l2 ball, or the Dantzig set ``{z : ||A^T z||_inf <= eta}``.
Matrices: the same with the nuclear norm, a linear map ``M`` and the
spectral-norm Dantzig set ``{z : ||M^*(z)|| <= eta}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from . import numerics
from .errors import InfeasibleProblemError, InvalidInputError, OutOfRegimeError

__all__ = [
    "LinearMap",
    "RecoveryInstance",
    "SparseApprox",
    "SolveReport",
    "soft_threshold",
    "singular_value_threshold",
    "nuclear_norm",
    "best_s_term",
    "solve_signal",
    "solve_matrix",
    "error_bound",
    "CONSTRAINTS",
]

CONSTRAINTS = ("equality", "l2_ball", "dantzig")
FEAS_TOL = 1e-8


def vec(X):
    """Column-major vectorization."""
    return np.asarray(X, dtype=float).ravel(order="F")


def unvec(x, m, n):
    return np.asarray(x, dtype=float).reshape((m, n), order="F")


@dataclass(frozen=True)
class LinearMap:
    """Linear map from m x n matrices to R^q, stored as a q x (m n) matrix.

    The representation acts on the column-major vectorization of its input.
    """

    rep: np.ndarray
    m: int
    n: int

    def __post_init__(self):
        rep = np.asarray(self.rep, dtype=float)
        if rep.ndim != 2 or rep.shape[1] != self.m * self.n:
            raise InvalidInputError(
                f"representation has shape {rep.shape}, expected (q, {self.m * self.n})")
        if not np.all(np.isfinite(rep)):
            raise InvalidInputError("representation has non-finite entries")
        object.__setattr__(self, "rep", rep)

    @property
    def q(self):
        return self.rep.shape[0]

    def __call__(self, X):
        return self.rep @ vec(X)

    def adjoint(self, z):
        return unvec(self.rep.T @ np.asarray(z, dtype=float), self.m, self.n)

    def norm(self):
        """Operator norm (largest singular value of the representation)."""
        return float(numerics.svd(self.rep).singular[0])

    @classmethod
    def vectorization(cls, m, n, scale=1.0):
        return cls(scale * np.eye(m * n), m, n)


Operator = Union[np.ndarray, LinearMap]


@dataclass
class RecoveryInstance:
    """One recovery problem: operator, observation and constraint set."""

    operator: Operator
    observation: np.ndarray
    constraint: str = "equality"
    radius: float = 0.0
    noise_level: float = 0.0
    truth: np.ndarray | None = None

    def __post_init__(self):
        if self.constraint not in CONSTRAINTS:
            raise InvalidInputError(f"unknown constraint {self.constraint!r}")
        if self.radius < 0 or self.noise_level < 0:
            raise InvalidInputError("radius and noise level must be nonnegative")
        if self.constraint == "equality" and self.radius != 0:
            raise InvalidInputError("equality constraint requires radius 0")
        self.observation = np.asarray(self.observation, dtype=float).ravel()

    @property
    def is_matrix(self):
        return isinstance(self.operator, LinearMap)

    @property
    def truth_in_regime(self):
        """Whether the theorem hypothesis ``radius >= noise level`` holds."""
        return self.constraint == "equality" or self.radius >= self.noise_level


@dataclass(frozen=True)
class SparseApprox:
    """Best s-term (or rank-s) approximation and the norm of its remainder."""

    head: np.ndarray
    tail: np.ndarray
    tail_norm: float


@dataclass
class SolveReport:
    """Solution plus solver diagnostics."""

    solution: np.ndarray
    objective: float
    method: str
    iterations: int
    converged: bool
    primal_residual: float = 0.0
    dual_residual: float = 0.0
    history: list = field(default_factory=list, repr=False)


# ---------------------------------------------------------------------------
# proximal operators and norms
# ---------------------------------------------------------------------------

def soft_threshold(x, tau):
    """Componentwise ``sign(x) * max(|x| - tau, 0)``."""
    if tau < 0:
        raise InvalidInputError("threshold must be nonnegative")
    x = np.asarray(x, dtype=float)
    out = np.sign(x) * np.maximum(np.abs(x) - tau, 0.0)
    return float(out) if out.ndim == 0 else out


def singular_value_threshold(X, tau):
    """Soft-threshold the singular values of ``X``."""
    if tau < 0:
        raise InvalidInputError("threshold must be nonnegative")
    f = numerics.svd(X)
    return (f.left * np.maximum(f.singular - tau, 0.0)) @ f.right.T


def nuclear_norm(X):
    return float(np.sum(numerics.svd(X).singular))


def spectral_norm(X):
    s = numerics.svd(X).singular
    return float(s[0]) if s.size else 0.0


def best_s_term(v, s):
    """Keep the ``s`` largest-magnitude entries (vector) or singular values (matrix).

    Ties go to the lowest index.  ``tail_norm`` is the l1 norm of the
    remainder for vectors and its nuclear norm for matrices.
    """
    if s < 0:
        raise InvalidInputError("s must be nonnegative")
    v = np.asarray(v, dtype=float)
    if v.ndim == 1:
        keep = np.argsort(-np.abs(v), kind="stable")[:s]
        head = np.zeros_like(v)
        head[keep] = v[keep]
        tail = v - head
        return SparseApprox(head, tail, float(np.sum(np.abs(tail))))
    if v.ndim != 2:
        raise InvalidInputError("expected a vector or a matrix")
    f = numerics.svd(v)
    kept = np.where(np.arange(f.singular.size) < s, f.singular, 0.0)
    head = (f.left * kept) @ f.right.T
    return SparseApprox(head, v - head, float(np.sum(f.singular[s:])))


# ---------------------------------------------------------------------------
# LP route (signals only)
# ---------------------------------------------------------------------------

def _solve_signal_lp(A, y, constraint, eta):
    n, p = A.shape
    cost = np.ones(2 * p)
    AA = np.hstack([A, -A])
    if constraint == "equality":
        sol = numerics.simplex_lp(cost, eq_lhs=AA, eq_rhs=y)
    elif constraint == "dantzig":
        G = A.T @ AA
        Aty = A.T @ y
        sol = numerics.simplex_lp(
            cost,
            ub_lhs=np.vstack([G, -G]),
            ub_rhs=np.concatenate([eta + Aty, eta - Aty]),
        )
    else:
        raise InvalidInputError("the LP route handles equality and dantzig only")
    if sol.status == "infeasible":
        raise InfeasibleProblemError("constraint set is empty")
    if sol.status != "optimal":
        raise RuntimeError(f"unexpected LP status {sol.status}")
    beta = sol.point[:p] - sol.point[p:]
    return SolveReport(beta, float(np.sum(np.abs(beta))), "lp", sol.iterations, True)


# ---------------------------------------------------------------------------
# ADMM
# ---------------------------------------------------------------------------

def _ball_projection(center, radius):
    def project(w):
        d = w - center
        nrm = np.linalg.norm(d)
        return w if nrm <= radius else center + d * (radius / nrm)
    return project


def _box_projection(center, radius):
    def project(w):
        return np.clip(w, center - radius, center + radius)
    return project


def _spectral_projection(center, radius, m, n):
    def project(w):
        D = unvec(w - center, m, n)
        f = numerics.svd(D)
        if f.singular.size == 0 or f.singular[0] <= radius:
            return w
        clipped = (f.left * np.minimum(f.singular, radius)) @ f.right.T
        return center + vec(clipped)
    return project


BALANCE_EVERY = 50


def _balance(rho, r_p, r_d, duals, it):
    # rescaling every iteration makes the penalty oscillate; do it periodically
    if it % BALANCE_EVERY:
        return rho, duals
    if r_p > 10 * r_d:
        return rho * 2.0, [u / 2.0 for u in duals]
    if r_d > 10 * r_p:
        return rho / 2.0, [u * 2.0 for u in duals]
    return rho, duals


def _admm_equality(A, y, prox, tol, max_iter):
    """ADMM for ``min f(x) s.t. A x = y`` with an exact affine projection."""
    A_pinv = numerics.pinv(A)
    x_ls = A_pinv @ y
    if np.linalg.norm(A @ x_ls - y) > 1e-8 * max(1.0, np.linalg.norm(y)):
        raise InfeasibleProblemError("observation is outside the range of the operator")

    def project(v):
        return v - A_pinv @ (A @ v - y)

    p = A.shape[1]
    z = np.zeros(p)
    u = np.zeros(p)
    rho = 1.0
    x = project(z)
    r_p = r_d = math.inf
    it = 0
    for it in range(1, max_iter + 1):
        x = project(z - u)
        z_old = z
        z = prox(x + u, 1.0 / rho)
        u = u + x - z
        r_p = np.linalg.norm(x - z)
        r_d = rho * np.linalg.norm(z - z_old)
        if r_p < tol and r_d < tol:
            return x, it, True, r_p, r_d
        rho, (u,) = _balance(rho, r_p, r_d, [u], it)
    return x, it, False, r_p, r_d


def _admm_constrained(C, d, project_w, prox, tol, max_iter):
    """ADMM for ``min f(x) s.t. C x - d in S``.

    Splitting ``x = z`` and ``C x - d = w``; the x-update solves with the
    inverse of ``I + C^T C``, which does not depend on the penalty.
    """
    p = C.shape[1]
    K_inv = numerics.spd_solve(np.eye(p) + C.T @ C, np.eye(p))
    z = np.zeros(p)
    w = project_w(-d)
    u1 = np.zeros(p)
    u2 = np.zeros(C.shape[0])
    rho = 1.0
    x = z
    r_p = r_d = math.inf
    it = 0
    for it in range(1, max_iter + 1):
        x = K_inv @ (z - u1 + C.T @ (w + d - u2))
        Cx = C @ x - d
        z_old, w_old = z, w
        z = prox(x + u1, 1.0 / rho)
        w = project_w(Cx + u2)
        u1 = u1 + x - z
        u2 = u2 + Cx - w
        r_p = math.hypot(np.linalg.norm(x - z), np.linalg.norm(Cx - w))
        r_d = rho * np.linalg.norm((z - z_old) + C.T @ (w - w_old))
        if r_p < tol and r_d < tol:
            return x, it, True, r_p, r_d
        rho, (u1, u2) = _balance(rho, r_p, r_d, [u1, u2], it)
    return x, it, False, r_p, r_d


def _l1_prox(v, t):
    return soft_threshold(v, t)


def _nuclear_prox(m, n):
    def prox(v, t):
        return vec(singular_value_threshold(unvec(v, m, n), t))
    return prox


def _dispatch_admm(A, y, constraint, eta, prox, dantzig_projection, tol, max_iter):
    if constraint == "equality":
        return _admm_equality(A, y, prox, tol, max_iter)
    if constraint == "l2_ball":
        return _admm_constrained(A, y, _ball_projection(np.zeros(A.shape[0]), eta),
                                 prox, tol, max_iter)
    G = A.T @ A
    d = A.T @ y
    return _admm_constrained(G, d, dantzig_projection(np.zeros(G.shape[0]), eta),
                             prox, tol, max_iter)


def _check_signal_feasible(A, y, constraint, eta, x):
    if constraint == "equality":
        return np.linalg.norm(A @ x - y) <= FEAS_TOL * max(1.0, np.linalg.norm(y))
    if constraint == "l2_ball":
        return np.linalg.norm(A @ x - y) <= eta + FEAS_TOL
    return np.max(np.abs(A.T @ (A @ x - y)), initial=0.0) <= eta + FEAS_TOL


def solve_signal(inst, method="lp", tol=1e-8, max_iter=100_000):
    """Solve the l1 recovery program for a signal instance.

    Parameters
    ----------
    inst : RecoveryInstance
        Must carry a dense matrix operator.
    method : {'lp', 'admm'}
        ``lp`` handles the equality and Dantzig programs exactly by simplex;
        ``admm`` handles all three constraint types.

    Returns
    -------
    SolveReport
    """
    if inst.is_matrix:
        raise InvalidInputError("solve_signal expects a dense matrix operator")
    A = np.asarray(inst.operator, dtype=float)
    y = inst.observation
    if A.ndim != 2 or A.shape[0] != y.size:
        raise InvalidInputError("operator and observation sizes disagree")
    if method == "lp":
        return _solve_signal_lp(A, y, inst.constraint, inst.radius)
    if method != "admm":
        raise InvalidInputError(f"unknown method {method!r}")
    if inst.constraint == "l2_ball" and np.linalg.norm(y) <= inst.radius:
        zero = np.zeros(A.shape[1])
        return SolveReport(zero, 0.0, "admm", 0, True)
    x, it, ok, r_p, r_d = _dispatch_admm(
        A, y, inst.constraint, inst.radius, _l1_prox, _box_projection, tol, max_iter)
    return SolveReport(x, float(np.sum(np.abs(x))), "admm", it, ok, r_p, r_d)


def solve_matrix(inst, tol=1e-8, max_iter=100_000):
    """Solve the nuclear-norm recovery program by ADMM with singular value thresholding."""
    if not inst.is_matrix:
        raise InvalidInputError("solve_matrix expects a LinearMap operator")
    M = inst.operator
    b = inst.observation
    if b.size != M.q:
        raise InvalidInputError("operator and observation sizes disagree")
    m, n = M.m, M.n
    if inst.constraint == "l2_ball" and np.linalg.norm(b) <= inst.radius:
        zero = np.zeros((m, n))
        return SolveReport(zero, 0.0, "admm", 0, True)

    def spectral(center, radius):
        return _spectral_projection(center, radius, m, n)

    x, it, ok, r_p, r_d = _dispatch_admm(
        M.rep, b, inst.constraint, inst.radius, _nuclear_prox(m, n), spectral, tol, max_iter)
    X = unvec(x, m, n)
    return SolveReport(X, nuclear_norm(X), "admm", it, ok, r_p, r_d)


def is_feasible(inst, solution, tol=FEAS_TOL):
    """Whether ``solution`` satisfies the instance constraint within ``tol``."""
    if inst.is_matrix:
        M = inst.operator
        resid = M(solution) - inst.observation
        if inst.constraint == "equality":
            return np.linalg.norm(resid) <= tol * max(1.0, np.linalg.norm(inst.observation))
        if inst.constraint == "l2_ball":
            return np.linalg.norm(resid) <= inst.radius + tol
        return spectral_norm(M.adjoint(resid)) <= inst.radius + tol
    A = np.asarray(inst.operator, dtype=float)
    return _check_signal_feasible(A, inst.observation, inst.constraint, inst.radius,
                                  np.asarray(solution, dtype=float))


# ---------------------------------------------------------------------------
# error bounds
# ---------------------------------------------------------------------------

def tail_coefficient(delta):
    """Multiplier of ``tail / sqrt(s)`` shared by all four noisy bounds."""
    g = 1.0 - 3.0 * delta
    return (2.0 * math.sqrt(2.0) * (2.0 * delta + math.sqrt(g * delta)) + 2.0 * g) / g


def error_bound(mode, delta, eps, eta, s, tail=0.0):
    """Right-hand side of the stable-recovery bounds.

    Parameters
    ----------
    mode : {'l2', 'ds'}
        l2-ball or Dantzig noise model.
    delta : float
        Restricted isometry constant of order ``s``; must lie in [0, 1/3).
    eps, eta : float
        Noise level and constraint radius.
    s : int
        Sparsity or rank (at least 2).
    tail : float
        l1 norm of ``beta_{-max(s)}`` or nuclear norm of ``X_{-max(s)}``.
    """
    if not 0.0 <= delta < 1.0 / 3.0:
        raise OutOfRegimeError(f"delta={delta} is outside [0, 1/3)")
    if s < 2:
        raise InvalidInputError("order must be at least 2")
    if eps < 0 or eta < 0 or tail < 0:
        raise InvalidInputError("eps, eta and tail must be nonnegative")
    g = 1.0 - 3.0 * delta
    if mode == "l2":
        noise = math.sqrt(2.0 * (1.0 + delta)) / g
    elif mode == "ds":
        noise = math.sqrt(2.0 * s) / g
    else:
        raise InvalidInputError(f"unknown mode {mode!r}")
    return noise * (eps + eta) + tail_coefficient(delta) * tail / math.sqrt(s)
