"""Monte Carlo check of the Gaussian-noise oracle inequalities, and the K-functional oracle."""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ..constructions import tempered_counterexample_matrix, tempered_counterexample_signal
from ..errors import BudgetExceededError, InvalidInputError, OutOfRegimeError
from ..numerics import svd
from ..recovery import RecoveryInstance, solve_matrix, solve_signal, spectral_norm
from ..rip import ric_exact_signal
from . import generators as gen

__all__ = [
    "OracleConfig",
    "OracleRecord",
    "OracleSummary",
    "KFunctionalResult",
    "signal_lambda",
    "matrix_lambda",
    "signal_oracle_rhs",
    "matrix_oracle_rhs",
    "violation_probability_bound",
    "run_oracle_mc",
    "k_functional_min",
]


# absolute allowance on the squared error for rounding in the solvers
ORACLE_TOL = 1e-12


def signal_lambda(sigma, p):
    return 4.0 * sigma * math.sqrt((2.0 / 3.0) * math.log(p))


def matrix_lambda(sigma, m, n):
    return 16.0 * sigma * math.sqrt((1.0 / 3.0) * math.log(12.0) * max(m, n))


def signal_oracle_rhs(beta, sigma, delta):
    p = np.asarray(beta).size
    mass = float(np.sum(np.minimum(np.asarray(beta) ** 2, sigma**2)))
    return 512.0 / (3.0 * (1.0 - 3.0 * delta) ** 2) * math.log(p) * mass


def matrix_oracle_rhs(singular_values, sigma, delta, m, n):
    mass = float(np.sum(np.minimum(np.asarray(singular_values) ** 2, max(m, n) * sigma**2)))
    return 2.0**12 * math.log(12.0) / (3.0 * (1.0 - 3.0 * delta) ** 2) * mass


def violation_probability_bound(p):
    """Allowed failure probability ``1 / sqrt(pi log p)`` of the signal inequality."""
    return 1.0 / math.sqrt(math.pi * math.log(p))


@dataclass
class OracleConfig:
    """Oracle experiment settings.

    Signals use ``rows x p`` designs of order ``k``; setting ``m`` and ``n``
    switches to matrices of rank ``r``, which need the ``tempered`` operator
    because their restricted isometry constant must be known exactly.
    ``lam`` and ``gamma_penalty`` default to their theorem values.
    """

    p: int = 24
    k: int = 2
    sigma: float = 0.1
    trials: int = 200
    seed: int = 0
    rows: int = 100
    m: int = 0
    n: int = 0
    r: int = 2
    operator: str = "gaussian"
    normalize: bool = True
    amplitude: str = "gaussian"
    shrink: float = 0.5
    max_draws: int = 200
    lam: float | None = None
    gamma_penalty: float | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise InvalidInputError("trials must be at least 1")
        if self.sigma < 0:
            raise InvalidInputError("sigma must be nonnegative")
        if self.amplitude not in ("unit", "gaussian", "zero"):
            raise InvalidInputError(f"unknown amplitude {self.amplitude!r}")
        if self.is_matrix:
            if self.r < 2 or self.r > min(self.m, self.n):
                raise InvalidInputError("need 2 <= r <= min(m, n)")
            if self.operator != "tempered":
                raise InvalidInputError("matrix oracle runs need the tempered operator")
            if self.lam is None:
                self.lam = matrix_lambda(self.sigma, self.m, self.n)
        else:
            if self.k < 2 or self.k > self.p:
                raise InvalidInputError("need 2 <= k <= p")
            if self.operator not in ("gaussian", "tempered"):
                raise InvalidInputError(f"unknown operator {self.operator!r}")
            if self.lam is None:
                self.lam = signal_lambda(self.sigma, self.p)
            if self.gamma_penalty is None:
                self.gamma_penalty = 2.0 * self.sigma**2 * math.log(self.p)

    @property
    def is_matrix(self):
        return self.m > 0 or self.n > 0


@dataclass(frozen=True)
class OracleRecord:
    trial: int
    lhs: float
    rhs: float
    violated: bool
    noise_dual: float
    iters: int


@dataclass
class OracleSummary:
    violation_rate: float
    mean_ratio: float
    delta: float
    lam: float
    probability_bound: float | None
    event_rate: float
    zero_trials: int = 0
    zero_recovered: int = 0
    records: list = field(default_factory=list, repr=False)
    config: dict = field(default_factory=dict, repr=False)


def _signal_design(cfg, rng):
    if cfg.operator == "tempered":
        return tempered_counterexample_signal(cfg.p, cfg.k, cfg.shrink)
    delta = math.inf
    for _ in range(cfg.max_draws):
        A = gen.gaussian_matrix(cfg.rows, cfg.p, rng, normalize=cfg.normalize)
        delta = ric_exact_signal(A, cfg.k).value
        if delta < 1.0 / 3.0:
            return A, delta
    raise OutOfRegimeError(
        f"no {cfg.rows}x{cfg.p} draw with delta_{cfg.k} < 1/3 in {cfg.max_draws} attempts "
        f"(last {delta:.4f})")


def run_oracle_mc(cfg):
    """Run the oracle experiment.

    One operator and one truth are drawn from ``seed``; trial ``t`` draws
    its noise ``z ~ N(0, sigma^2 I)`` from ``[seed, t]`` and solves the
    Dantzig program with radius ``lam``.  A violation is ``LHS > RHS + ORACLE_TOL``.
    ``event_rate`` is the fraction of trials with dual noise at most
    ``lam / 2``; with ``amplitude='zero'`` the summary also counts trials
    whose dual noise is at most ``lam`` and the solver returned exactly 0.
    """
    rng = gen.make_rng([cfg.seed])
    if cfg.is_matrix:
        M, delta = tempered_counterexample_matrix(cfg.m, cfg.n, cfg.r, cfg.shrink)
        if cfg.amplitude == "zero":
            truth = np.zeros((cfg.m, cfg.n))
        else:
            truth = gen.low_rank(cfg.m, cfg.n, cfg.r, rng)
        rhs = matrix_oracle_rhs(svd(truth).singular, cfg.sigma, delta, cfg.m, cfg.n)
        clean = M(truth)
        dim = M.q
    else:
        A, delta = _signal_design(cfg, rng)
        if cfg.amplitude == "zero":
            truth = np.zeros(cfg.p)
        else:
            truth = gen.sparse_signal(cfg.p, cfg.k, rng, amplitude=cfg.amplitude)
        rhs = signal_oracle_rhs(truth, cfg.sigma, delta)
        clean = A @ truth
        dim = A.shape[0]
    if not 0.0 <= delta < 1.0 / 3.0:
        raise OutOfRegimeError(f"delta={delta} is outside [0, 1/3)")

    records = []
    zero_trials = zero_recovered = 0
    for t in range(cfg.trials):
        z = gen.gaussian_noise(dim, cfg.sigma, [cfg.seed, t])
        if cfg.is_matrix:
            inst = RecoveryInstance(M, clean + z, "dantzig", cfg.lam)
            rep = solve_matrix(inst)
            dual = spectral_norm(M.adjoint(z))
        else:
            inst = RecoveryInstance(A, clean + z, "dantzig", cfg.lam)
            rep = solve_signal(inst, method="lp")
            dual = float(np.max(np.abs(A.T @ z)))
        lhs = float(np.sum((rep.solution - truth) ** 2))
        records.append(OracleRecord(t, lhs, rhs, lhs > rhs + ORACLE_TOL, dual, rep.iterations))
        if cfg.amplitude == "zero" and dual <= cfg.lam:
            zero_trials += 1
            zero_recovered += int(np.max(np.abs(rep.solution)) <= 1e-12)

    ratios = [(r.lhs / r.rhs) if r.rhs > 0 else (0.0 if r.lhs <= ORACLE_TOL else math.inf) for r in records]
    return OracleSummary(
        violation_rate=sum(r.violated for r in records) / len(records),
        mean_ratio=float(np.mean(ratios)),
        delta=float(delta),
        lam=float(cfg.lam),
        probability_bound=None if cfg.is_matrix else violation_probability_bound(cfg.p),
        event_rate=sum(r.noise_dual <= cfg.lam / 2 for r in records) / len(records),
        zero_trials=zero_trials,
        zero_recovered=zero_recovered,
        records=records,
        config=asdict(cfg),
    )


@dataclass(frozen=True)
class KFunctionalResult:
    beta_bar: np.ndarray
    value: float
    support: tuple
    lam: float
    gradient_sup: float
    lemma_holds: bool


def k_functional_min(A, beta, gamma_penalty, k_max, budget=1_000_000):
    """Brute-force minimizer of ``gamma ||xi||_0 + ||A beta - A xi||^2`` over ``||xi||_0 <= k_max``.

    Supports are visited by size, then lexicographically; ties keep the
    first.  Also reports ``||A^T A (beta_bar - beta)||_inf`` against
    ``lam / 2`` with ``lam = 4 sqrt(gamma / 3)``.
    """
    A = np.asarray(A, dtype=float)
    beta = np.asarray(beta, dtype=float).ravel()
    if A.ndim != 2 or A.shape[1] != beta.size:
        raise InvalidInputError("A and beta sizes disagree")
    if gamma_penalty < 0:
        raise InvalidInputError("gamma_penalty must be nonnegative")
    p = beta.size
    k_max = min(k_max, p)
    count = sum(math.comb(p, j) for j in range(k_max + 1))
    if count > budget:
        raise BudgetExceededError(f"{count} least-squares fits exceed budget {budget}")
    target = A @ beta
    best_val, best_xi, best_S = float(target @ target), np.zeros(p), ()
    for size in range(1, k_max + 1):
        for S in itertools.combinations(range(p), size):
            cols = A[:, S]
            coef = np.linalg.lstsq(cols, target, rcond=None)[0]
            resid = target - cols @ coef
            val = gamma_penalty * size + float(resid @ resid)
            if val < best_val - 1e-14 * max(1.0, best_val):
                best_val, best_S = val, S
                best_xi = np.zeros(p)
                best_xi[list(S)] = coef
    lam = 4.0 * math.sqrt(gamma_penalty / 3.0)
    sup = float(np.max(np.abs(A.T @ (A @ (best_xi - beta))))) if p else 0.0
    return KFunctionalResult(best_xi, best_val, best_S, lam, sup, sup <= lam / 2 + 1e-12)
