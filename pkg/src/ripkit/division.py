"""Constructive division of a nonincreasing sequence into r capped rows.

Given ``a_1 >= ... >= a_m >= 0`` whose head (first r terms) plus a slack
dominates the tail, the tail entries ``a_{2r+1..m}`` are split across r rows
so that row ``i`` never exceeds ``(head_sum + slack) / r - a_{r+i}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleDivisionError, InvalidInputError

__all__ = ["DivisionTableau", "divide", "tableau_violations", "tail_power_check"]

FEAS_TOL = 1e-12


@dataclass(frozen=True)
class DivisionTableau:
    """Allocation ``s[i, j - 2r]`` of tail entry ``a_j`` to row ``i``."""

    r: int
    a: np.ndarray
    slack: float
    s: np.ndarray

    @property
    def m(self):
        return self.a.size

    def row_bound(self):
        return (math.fsum(self.a[: self.r]) + self.slack) / self.r

    def row_loads(self):
        """``a_{r+i} + sum_j s_ij`` for each row."""
        return np.array([
            math.fsum([self.a[self.r + i], *self.s[i]]) for i in range(self.r)
        ])

    def column_sums(self):
        return np.array([math.fsum(self.s[:, j]) for j in range(self.s.shape[1])])

    def check(self, tol=FEAS_TOL):
        return not tableau_violations(self, tol)


def tableau_violations(t, tol=FEAS_TOL):
    """List human-readable violations of the tableau constraints (empty if ok)."""
    problems = []
    if np.any(t.s < 0):
        problems.append("negative allocation")
    tail = t.a[2 * t.r:]
    for j, (got, want) in enumerate(zip(t.column_sums(), tail)):
        if abs(got - want) > tol:
            problems.append(f"column {2 * t.r + j + 1}: sum {got!r} != {want!r}")
    bound = t.row_bound()
    for i, load in enumerate(t.row_loads()):
        if load > bound + tol:
            problems.append(f"row {i + 1}: load {load!r} > {bound!r}")
    return problems


def _validate(a, r, slack):
    a = np.asarray(a, dtype=float).ravel()
    r = int(r)
    if not np.all(np.isfinite(a)) or not math.isfinite(slack):
        raise InvalidInputError("non-finite input")
    if r < 1 or a.size < 2 * r:
        raise InfeasibleDivisionError(f"need m >= 2r >= 2, got m={a.size}, r={r}")
    if slack < 0:
        raise InfeasibleDivisionError("slack must be nonnegative")
    if np.any(a < 0) or np.any(np.diff(a) > 0):
        raise InfeasibleDivisionError("sequence must be nonnegative and nonincreasing")
    head = math.fsum(a[:r]) + slack
    tail = math.fsum(a[r:])
    if head < tail - FEAS_TOL * max(1.0, head):
        raise InfeasibleDivisionError(f"head {head!r} + slack < tail {tail!r}")
    return a, r, float(slack)


def divide(a, r, slack=0.0, order=None):
    """Greedy capacity fill.

    Rows are filled in increasing index order (or in ``order`` if given)
    up to their remaining capacity, one tail column at a time.

    Raises
    ------
    InfeasibleDivisionError
        If ``m < 2r``, the sequence is not nonincreasing and nonnegative,
        or the tail outweighs head plus slack.
    """
    a, r, slack = _validate(a, r, slack)
    m = a.size
    rows = list(range(r)) if order is None else [int(i) for i in order]
    if sorted(rows) != list(range(r)):
        raise InvalidInputError("order must be a permutation of range(r)")
    bound = (math.fsum(a[:r]) + slack) / r
    cap = np.maximum(bound - a[r:2 * r], 0.0)
    s = np.zeros((r, m - 2 * r))
    for col, aj in enumerate(a[2 * r:]):
        remaining = aj
        last = rows[0]
        for i in rows:
            if remaining <= 0:
                break
            take = min(remaining, cap[i])
            if take > 0:
                s[i, col] += take
                cap[i] -= take
                remaining -= take
                last = i
        if remaining > 0:
            # rounding residue only; the precondition guarantees capacity
            if remaining > FEAS_TOL * max(1.0, aj):
                raise InfeasibleDivisionError("ran out of row capacity")
            s[last, col] += remaining
        # pin the column sum to a_j exactly
        fix = aj - math.fsum(s[:, col])
        if fix:
            s[int(np.argmax(s[:, col])), col] += fix
    return DivisionTableau(r=r, a=a, slack=slack, s=s)


def tail_power_check(a, r, slack, alpha):
    """Check the power-tail inequality for exponent ``alpha >= 1``.

    Returns whether ``sum_{j>r} a_j**alpha`` is at most
    ``r * ((sum_{i<=r} a_i**alpha / r)**(1/alpha) + slack/r)**alpha``.
    """
    if not alpha >= 1:
        raise InvalidInputError("alpha must be >= 1")
    a, r, slack = _validate(a, r, slack) if np.asarray(a).size >= 2 * r else _validate_short(a, r, slack)
    lhs = math.fsum(a[r:] ** alpha)
    head = math.fsum(a[:r] ** alpha) / r
    rhs = r * (head ** (1.0 / alpha) + slack / r) ** alpha
    return lhs <= rhs + FEAS_TOL * max(1.0, rhs)


def _validate_short(a, r, slack):
    # m < 2r is allowed here: pad with zeros as the tail lemma permits
    a = np.asarray(a, dtype=float).ravel()
    padded = np.concatenate([a, np.zeros(2 * int(r) - a.size)])
    return _validate(padded, r, slack)
