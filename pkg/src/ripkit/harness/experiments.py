"""Experiment drivers: one independent, seeded task per trial.

Trial ``t`` draws everything from the stream ``[seed, t]``, so results do
not depend on the number of worker threads.  Records come back in trial
order.  A trial that raises is recorded with ``nan`` fields and
``success=False``; the sweep carries on.
"""

from __future__ import annotations

import itertools
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from ..constructions import (
    sharp_counterexample_matrix,
    sharp_counterexample_signal,
    tempered_counterexample_matrix,
    tempered_counterexample_signal,
)
from ..errors import InvalidInputError, RipkitError
from ..nsp import nsp_certify_signal
from ..recovery import (
    RecoveryInstance,
    best_s_term,
    error_bound,
    solve_matrix,
    solve_signal,
    spectral_norm,
)
from ..rip import ric_exact_signal, ric_lower_matrix, scaling_lemma_report
from . import generators as gen
from .oracle import OracleConfig, run_oracle_mc

__all__ = [
    "KINDS",
    "ExperimentConfig",
    "TrialRecord",
    "ExperimentResult",
    "run_experiment",
    "worker_count",
    "EXACT_TOL",
    "BOUND_SLACK",
]

KINDS = ("exact_recovery", "noisy_bounds", "oracle_mc", "scaling_lemma", "matrix_recovery", "nsp_sweep")
OPERATORS = ("gaussian", "tempered", "sharp")
EXACT_TOL = 1e-6
# allowance for solver accuracy when comparing an error with a bound
BOUND_SLACK = 1e-6
THIRD = 1.0 / 3.0


@dataclass
class ExperimentConfig:
    """Settings for ``run_experiment``.

    Signal kinds use an ``n x p`` design and sparsity ``k``; matrix kinds
    use ``m x n`` matrices of rank ``r`` and ``q`` measurements.
    ``noisy_bounds`` switches to matrices when ``m`` is set.  ``noise`` is
    the level ``eps`` and ``eta`` the constraint radius (defaults to
    ``noise``).  ``max_draws`` random designs are tried per trial until one
    has ``delta < 1/3``.  ``tail`` scales a dense perturbation added to the
    truth in ``noisy_bounds``.
    """

    kind: str
    n: int = 0
    p: int = 0
    k: int = 2
    q: int = 0
    m: int = 0
    r: int = 2
    trials: int = 1
    noise: float = 0.0
    eta: float | None = None
    seed: int = 0
    method: str = "lp"
    out: str | None = None
    constraint: str = "l2_ball"
    operator: str = "gaussian"
    s: int = 2
    shrink: float = 0.5
    normalize: bool = True
    amplitude: str = "unit"
    max_draws: int = 1
    tail: float = 0.0
    estimate_delta: bool = False
    certify: bool = False
    record_timing: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidInputError(f"unknown experiment kind {self.kind!r}")
        if self.operator not in OPERATORS:
            raise InvalidInputError(f"unknown operator {self.operator!r}")
        if self.trials < 1:
            raise InvalidInputError("trials must be at least 1")
        if self.max_draws < 1:
            raise InvalidInputError("max_draws must be at least 1")
        if self.noise < 0 or self.tail < 0:
            raise InvalidInputError("noise and tail must be nonnegative")
        if self.eta is None:
            self.eta = self.noise
        if self.eta < self.noise:
            raise InvalidInputError("eta must be at least the noise level")
        if self.kind == "oracle_mc":
            return
        if self.is_matrix:
            self._check_positive("m", "n", "r")
            if self.r > min(self.m, self.n):
                raise InvalidInputError("r exceeds min(m, n)")
            if self.operator == "gaussian":
                self._check_positive("q")
            if self.kind in ("matrix_recovery", "noisy_bounds") and self.r < 2:
                raise InvalidInputError("the rank-order theorems need r >= 2")
            if self.kind == "noisy_bounds" and self.operator != "tempered":
                raise InvalidInputError("matrix noisy_bounds needs the tempered operator (known delta)")
        else:
            self._check_positive("p", "k")
            if self.operator == "gaussian":
                self._check_positive("n")
            if self.k > self.p:
                raise InvalidInputError("k exceeds p")
            if self.kind in ("exact_recovery", "noisy_bounds", "scaling_lemma") and self.k < 2:
                raise InvalidInputError("the sparsity-order theorems need k >= 2")
        if self.kind == "noisy_bounds" and self.constraint not in ("l2_ball", "dantzig"):
            raise InvalidInputError("noisy_bounds needs constraint l2_ball or dantzig")
        if self.kind == "scaling_lemma" and self.s < 2:
            raise InvalidInputError("scaling_lemma needs s >= 2")

    def _check_positive(self, *names):
        for name in names:
            if getattr(self, name) < 1:
                raise InvalidInputError(f"{name} must be positive for kind {self.kind}")

    @property
    def is_matrix(self):
        return self.kind == "matrix_recovery" or (self.kind == "noisy_bounds" and self.m > 0)

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise InvalidInputError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class TrialRecord:
    """One row of the results table.

    ``delta`` is the exact (or analytic, or lower-bound) RIC used;
    ``error`` the l2 or Frobenius recovery error; ``bound`` the right-hand
    side it is compared with (0 for exact kinds).  ``scaling_lemma`` stores
    ``delta_k``, ``delta_sk`` and ``(2s-1) delta_k`` in these columns and
    ``nsp_sweep`` stores the certificate value and the threshold 1/2.
    """

    trial: int
    delta: float
    error: float
    bound: float
    success: bool
    iters: int
    wall_ms: float = 0.0


@dataclass
class ExperimentResult:
    records: list
    summary: dict
    extras: list = field(default_factory=list, repr=False)


def worker_count(tasks):
    env = os.environ.get("RIPKIT_THREADS")
    limit = int(env) if env else (os.cpu_count() or 1)
    return max(1, min(limit, tasks))


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------

def _signal_operator(cfg, rng):
    """Design matrix and its delta_k; random designs are redrawn until delta_k < 1/3."""
    if cfg.operator == "tempered":
        return tempered_counterexample_signal(cfg.p, cfg.k, cfg.shrink)
    if cfg.operator == "sharp":
        kit = sharp_counterexample_signal(cfg.p, cfg.k)
        return kit.operator, kit.claimed_ric
    for _ in range(cfg.max_draws):
        A = gen.gaussian_matrix(cfg.n, cfg.p, rng, normalize=cfg.normalize)
        delta = ric_exact_signal(A, cfg.k).value
        if delta < THIRD:
            break
    return A, delta


def _matrix_operator(cfg, rng):
    if cfg.operator == "tempered":
        return tempered_counterexample_matrix(cfg.m, cfg.n, cfg.r, cfg.shrink)
    if cfg.operator == "sharp":
        kit = sharp_counterexample_matrix(cfg.m, cfg.n, cfg.r)
        return kit.operator, kit.claimed_ric
    M = gen.gaussian_map(cfg.q, cfg.m, cfg.n, rng)
    delta = math.nan
    if cfg.estimate_delta:
        delta = ric_lower_matrix(M, cfg.r, restarts=8, iters=100, seed=int(rng.integers(2**31))).value
    return M, delta


# ---------------------------------------------------------------------------
# trials
# ---------------------------------------------------------------------------

def _colliding_pair_trial(t, kit, solve):
    """Both elements of the pair share one observation, so at most one can be recovered."""
    first, second = kit.colliding_pair
    rep = solve(kit.apply(first))
    err = max(np.linalg.norm(rep.solution - first), np.linalg.norm(rep.solution - second))
    return TrialRecord(t, kit.claimed_ric, float(err), 0.0, bool(err <= EXACT_TOL), rep.iterations), {}


def _exact_recovery(cfg, t, rng):
    if cfg.operator == "sharp":
        kit = sharp_counterexample_signal(cfg.p, cfg.k)
        return _colliding_pair_trial(
            t, kit, lambda y: solve_signal(RecoveryInstance(kit.operator, y), method=cfg.method))
    A, delta = _signal_operator(cfg, rng)
    beta = gen.sparse_signal(cfg.p, cfg.k, rng, amplitude=cfg.amplitude)
    rep = solve_signal(RecoveryInstance(A, A @ beta), method=cfg.method)
    err = float(np.linalg.norm(rep.solution - beta))
    extras = {}
    if cfg.certify:
        extras["nsp"] = nsp_certify_signal(A, cfg.k).status
    return TrialRecord(t, delta, err, 0.0, err <= EXACT_TOL, rep.iterations), extras


def _dantzig_noise(z, adjoint_norm, eps):
    dual = adjoint_norm(z)
    return z * (eps / dual) if dual > 0 else z


def _noisy_signal(cfg, t, rng):
    A, delta = _signal_operator(cfg, rng)
    beta = gen.sparse_signal(cfg.p, cfg.k, rng, amplitude=cfg.amplitude)
    if cfg.tail > 0:
        beta = beta + cfg.tail * rng.standard_normal(cfg.p)
    dim = A.shape[0]
    if cfg.constraint == "l2_ball":
        z, mode = gen.sphere_noise(dim, cfg.noise, rng), "l2"
    else:
        z = _dantzig_noise(rng.standard_normal(dim), lambda v: np.max(np.abs(A.T @ v)), cfg.noise)
        mode = "ds"
    if delta >= THIRD:
        return TrialRecord(t, delta, math.nan, math.nan, False, 0), {"out_of_regime": True}
    tail = best_s_term(beta, cfg.k).tail_norm
    bound = error_bound(mode, delta, cfg.noise, cfg.eta, cfg.k, tail)
    method = "admm" if cfg.constraint == "l2_ball" else cfg.method
    rep = solve_signal(RecoveryInstance(A, A @ beta + z, cfg.constraint, cfg.eta, cfg.noise), method=method)
    err = float(np.linalg.norm(rep.solution - beta))
    return TrialRecord(t, delta, err, bound, err <= bound + BOUND_SLACK, rep.iterations), {}


def _noisy_matrix(cfg, t, rng):
    M, delta = _matrix_operator(cfg, rng)
    X = gen.low_rank(cfg.m, cfg.n, cfg.r, rng)
    if cfg.tail > 0:
        X = X + cfg.tail * rng.standard_normal((cfg.m, cfg.n))
    if cfg.constraint == "l2_ball":
        z, mode = gen.sphere_noise(M.q, cfg.noise, rng), "l2"
    else:
        z = _dantzig_noise(rng.standard_normal(M.q), lambda v: spectral_norm(M.adjoint(v)), cfg.noise)
        mode = "ds"
    tail = best_s_term(X, cfg.r).tail_norm
    bound = error_bound(mode, delta, cfg.noise, cfg.eta, cfg.r, tail)
    rep = solve_matrix(RecoveryInstance(M, M(X) + z, cfg.constraint, cfg.eta, cfg.noise))
    err = float(np.linalg.norm(rep.solution - X))
    return TrialRecord(t, delta, err, bound, err <= bound + BOUND_SLACK, rep.iterations), {}


def _matrix_recovery(cfg, t, rng):
    if cfg.operator == "sharp":
        kit = sharp_counterexample_matrix(cfg.m, cfg.n, cfg.r)
        return _colliding_pair_trial(t, kit, lambda b: solve_matrix(RecoveryInstance(kit.operator, b)))
    M, delta = _matrix_operator(cfg, rng)
    X = gen.low_rank(cfg.m, cfg.n, cfg.r, rng)
    rep = solve_matrix(RecoveryInstance(M, M(X)))
    err = float(np.linalg.norm(rep.solution - X))
    rel = err / max(np.linalg.norm(X), 1e-300)
    return TrialRecord(t, delta, err, 0.0, err <= EXACT_TOL, rep.iterations), {"relative_error": rel}


def _scaling_lemma(cfg, t, rng):
    if cfg.operator == "sharp":
        A = sharp_counterexample_signal(cfg.p, cfg.k).operator
    else:
        A = gen.gaussian_matrix(cfg.n, cfg.p, rng, normalize=cfg.normalize)
    rep = scaling_lemma_report(A, cfg.k, cfg.s)
    return TrialRecord(t, rep.delta_k, rep.delta_sk, rep.bound, rep.holds, 0), {}


def _bp_exhaustive(A, k, method):
    """Largest basis-pursuit error over every support and sign pattern of size k.

    Uniqueness of the l1 minimizer depends only on support and signs, so
    unit magnitudes cover every k-sparse vector; ``-x`` mirrors ``x``.
    """
    p = A.shape[1]
    worst, iters = 0.0, 0
    patterns = [(1.0,) + rest for rest in itertools.product((1.0, -1.0), repeat=k - 1)]
    for support in itertools.combinations(range(p), k):
        for signs in patterns:
            x = np.zeros(p)
            x[list(support)] = signs
            rep = solve_signal(RecoveryInstance(A, A @ x), method=method)
            worst = max(worst, float(np.linalg.norm(rep.solution - x)))
            iters += rep.iterations
    return worst, iters


def _nsp_sweep(cfg, t, rng):
    A = gen.gaussian_matrix(cfg.n, cfg.p, rng, normalize=cfg.normalize)
    cert = nsp_certify_signal(A, cfg.k)
    err, iters = _bp_exhaustive(A, cfg.k, cfg.method)
    success = err <= EXACT_TOL
    agree = cert.status == "boundary" or ((cert.status == "holds") == success)
    return TrialRecord(t, cert.worst_value, err, 0.5, success, iters), {"status": cert.status, "agree": agree}


_DRIVERS = {
    "exact_recovery": _exact_recovery,
    "noisy_bounds": lambda cfg, t, rng: (_noisy_matrix if cfg.is_matrix else _noisy_signal)(cfg, t, rng),
    "matrix_recovery": _matrix_recovery,
    "scaling_lemma": _scaling_lemma,
    "nsp_sweep": _nsp_sweep,
}


def _run_trial(cfg, t):
    rng = gen.make_rng([cfg.seed, t])
    start = time.perf_counter()
    try:
        rec, extras = _DRIVERS[cfg.kind](cfg, t, rng)
    except (RipkitError, ArithmeticError, np.linalg.LinAlgError, RuntimeError) as exc:
        rec = TrialRecord(t, math.nan, math.nan, math.nan, False, 0)
        extras = {"failure": f"{type(exc).__name__}: {exc}"}
    wall = (time.perf_counter() - start) * 1e3 if cfg.record_timing else 0.0
    return TrialRecord(rec.trial, float(rec.delta), float(rec.error), float(rec.bound),
                       bool(rec.success), int(rec.iters), wall), extras


# ---------------------------------------------------------------------------
# summaries
# ---------------------------------------------------------------------------

def _finite(values):
    v = np.array([x for x in values if math.isfinite(x)], dtype=float)
    return v


def _stat(values, fn):
    v = _finite(values)
    return float(fn(v)) if v.size else math.nan


def _summarize(cfg, records, extras):
    n = len(records)
    errors = [r.error for r in records]
    deltas = [r.delta for r in records]
    summary = {
        "kind": cfg.kind,
        "trials": n,
        "successes": sum(r.success for r in records),
        "success_rate": sum(r.success for r in records) / n,
        "failures": sum("failure" in e for e in extras),
        "mean_error": _stat(errors, np.mean),
        "max_error": _stat(errors, np.max),
        "delta_min": _stat(deltas, np.min),
        "delta_max": _stat(deltas, np.max),
        "config": asdict(cfg),
    }
    in_regime = [r for r in records if r.delta < THIRD]
    if cfg.kind == "exact_recovery":
        summary["in_regime"] = len(in_regime)
        summary["in_regime_failures"] = sum(not r.success for r in in_regime)
        if cfg.certify:
            statuses = [e.get("nsp") for r, e in zip(records, extras) if r.delta < THIRD]
            summary["in_regime_nsp_not_holding"] = sum(s != "holds" for s in statuses)
            summary["nsp_holds_but_failed"] = sum(
                e.get("nsp") == "holds" and not r.success for r, e in zip(records, extras))
            summary["triangle_violations"] = (
                summary["in_regime_failures"] + summary["in_regime_nsp_not_holding"]
                + summary["nsp_holds_but_failed"])
    elif cfg.kind == "noisy_bounds":
        summary["in_regime"] = len(in_regime)
        summary["violations"] = sum(not r.success for r in in_regime)
    elif cfg.kind == "scaling_lemma":
        summary["violations"] = sum(not r.success for r in records)
    elif cfg.kind == "nsp_sweep":
        statuses = [e.get("status") for e in extras]
        summary["holds"] = statuses.count("holds")
        summary["fails"] = statuses.count("fails")
        summary["boundary"] = statuses.count("boundary")
        summary["mismatches"] = sum(not e.get("agree", False) for e in extras)
    elif cfg.kind == "matrix_recovery":
        rel = [e["relative_error"] for e in extras if "relative_error" in e]
        summary["max_relative_error"] = _stat(rel, np.max)
    return summary


def _run_oracle(cfg):
    ocfg = OracleConfig(
        p=cfg.p or 24, k=cfg.k, sigma=cfg.noise, trials=cfg.trials, seed=cfg.seed,
        rows=cfg.n if not cfg.m else 100, m=cfg.m, n=cfg.n if cfg.m else 0, r=cfg.r,
        operator="tempered" if cfg.m else cfg.operator, normalize=cfg.normalize,
        amplitude=cfg.amplitude, shrink=cfg.shrink, max_draws=cfg.max_draws)
    out = run_oracle_mc(ocfg)
    records = [TrialRecord(r.trial, out.delta, r.lhs, r.rhs, not r.violated, r.iters) for r in out.records]
    summary = _summarize(cfg, records, [{} for _ in records])
    summary.update(violation_rate=out.violation_rate, mean_ratio=out.mean_ratio, lam=out.lam,
                   probability_bound=out.probability_bound, event_rate=out.event_rate,
                   zero_trials=out.zero_trials, zero_recovered=out.zero_recovered)
    return ExperimentResult(records, summary, [{} for _ in records])


def run_experiment(cfg):
    """Run every trial of ``cfg`` and summarize.

    Returns
    -------
    ExperimentResult
        ``records`` in trial order, a JSON-ready ``summary`` and per-trial
        diagnostic ``extras``.
    """
    if isinstance(cfg, dict):
        cfg = ExperimentConfig.from_dict(cfg)
    if cfg.kind == "oracle_mc":
        return _run_oracle(cfg)
    trials = range(cfg.trials)
    workers = worker_count(cfg.trials)
    if workers == 1:
        outcomes = [_run_trial(cfg, t) for t in trials]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(lambda t: _run_trial(cfg, t), trials))
    records = [rec for rec, _ in outcomes]
    extras = [ext for _, ext in outcomes]
    return ExperimentResult(records, _summarize(cfg, records, extras), extras)
