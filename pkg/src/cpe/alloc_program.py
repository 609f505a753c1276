"""Shared solver for the inverse-budget allocation programs.

Every sample-allocation program in this package has the same shape:

    minimize    sum_i tau_i
    subject to  sum_{i in D_j} 1/tau_i <= c_j      (one constraint per set D_j)
                tau_i > 0

After the substitution x_i = 1/tau_i the constraints become linear
(sum_{i in D_j} x_i <= c_j) and the objective sum_i 1/x_i is a separable
convex barrier of its own domain, so the program is solved by a log-barrier
interior-point loop with dense Newton steps.  Arms appearing in no constraint
set are dropped and reported with budget zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

REL_TOL = 1e-7


@dataclass
class ProgramSolution:
    budget: np.ndarray          # tau, length n (zeros on unconstrained arms)
    value: float                # sum of budget
    active: list[int]           # indices into the deduplicated constraint list
    constraint_sets: list[frozenset[int]]
    constraint_rhs: np.ndarray


def _dedupe(constraints: Sequence[tuple[frozenset[int], float]]):
    """Drop empty sets, keep the tightest rhs per set, prune dominated rows.

    In x = 1/tau coordinates the rows read sum_{i in D} x_i <= c with x >= 0,
    so a row (D, c) is implied by any row (D', c') with D a subset of D' and
    c' <= c.  Pruning is what keeps the verification programs (whose raw
    constraint lists repeat symmetric differences across many accuracy
    levels) well conditioned.
    """
    best: dict[frozenset[int], float] = {}
    for D, c in constraints:
        D = frozenset(D)
        if not D:
            if c < 0:
                raise ValueError("infeasible constraint: empty set with negative bound")
            continue
        if c <= 0:
            raise ValueError("constraint bound must be positive")
        if D not in best or c < best[D]:
            best[D] = c

    items = sorted(best.items(), key=lambda kv: (len(kv[0]), sorted(kv[0])))
    masks = [sum(1 << i for i in D) for D, _ in items]
    keep = []
    for j, (Dj, cj) in enumerate(items):
        dominated = False
        for k, (Dk, ck) in enumerate(items):
            if k == j or ck > cj:
                continue
            if masks[j] & ~masks[k] == 0 and (masks[k] != masks[j] or k < j):
                dominated = True
                break
        if not dominated:
            keep.append((Dj, cj))
    return keep


def solve_inverse_budget(
    n_arms: int,
    constraints: Sequence[tuple[frozenset[int], float]],
    rel_tol: float = REL_TOL,
) -> ProgramSolution:
    """Solve the allocation program; see the module docstring for the shape."""
    rows = _dedupe(constraints)
    budget = np.zeros(n_arms)
    if not rows:
        return ProgramSolution(budget, 0.0, [], [], np.zeros(0))

    sets = [D for D, _ in rows]
    rhs = np.array([c for _, c in rows], dtype=float)
    arms = sorted(set().union(*sets))
    if arms and (arms[0] < 0 or arms[-1] >= n_arms):
        raise IndexError("constraint arm index out of range")
    col = {a: k for k, a in enumerate(arms)}
    d, m = len(arms), len(rows)

    if m == 1:
        # Single constraint: AM-HM equality, x_i = c/|D| for every member.
        x = np.full(d, rhs[0] / d)
    else:
        A = np.zeros((m, d))
        for j, D in enumerate(sets):
            for a in D:
                A[j, col[a]] = 1.0
        x = _barrier_solve(A, rhs / rhs.min(), rel_tol) * rhs.min()

    for a, k in col.items():
        budget[a] = 1.0 / x[k]
    value = float(budget.sum())
    slack = rhs - np.array([x[[col[a] for a in D]].sum() for D in sets])
    active = [j for j in range(m) if slack[j] <= 1e-5 * rhs[j]]
    return ProgramSolution(budget, value, active, sets, rhs)


def _barrier_solve(A: np.ndarray, c: np.ndarray, rel_tol: float) -> np.ndarray:
    """Log-barrier loop for min sum 1/x s.t. Ax <= c (c pre-scaled to min 1)."""
    m, d = A.shape
    # Strictly feasible start: half of each arm's tightest per-member share.
    share = np.full(d, np.inf)
    for j in range(m):
        members = A[j] > 0
        share[members] = np.minimum(share[members], c[j] / members.sum())
    x = 0.5 * share

    t = max(1.0, m / _objective(x))
    for _ in range(80):
        x = _newton(A, c, x, t)
        if m / t <= 0.25 * rel_tol * _objective(x):
            break
        t *= 25.0
    return x


def _objective(x: np.ndarray) -> float:
    return float(np.sum(1.0 / x))


def _newton(A: np.ndarray, c: np.ndarray, x: np.ndarray, t: float) -> np.ndarray:
    for _ in range(60):
        s = c - A @ x
        grad = -t / x**2 + A.T @ (1.0 / s)
        H = np.diag(2.0 * t / x**3) + (A / (s**2)[:, None]).T @ A
        try:
            step = np.linalg.solve(H, -grad)
        except np.linalg.LinAlgError:
            step = -grad / np.diag(H)
        decrement = float(-grad @ step)
        if decrement <= 0:
            break

        # Largest step keeping x > 0 and all slacks > 0, then Armijo backtracking.
        alpha = 1.0
        neg = step < 0
        if np.any(neg):
            alpha = min(alpha, 0.99 * np.min(-x[neg] / step[neg]))
        As = A @ step
        pos = As > 0
        if np.any(pos):
            alpha = min(alpha, 0.99 * np.min(s[pos] / As[pos]))

        phi0 = _potential(A, c, x, t)
        while alpha > 1e-14:
            x_new = x + alpha * step
            if np.all(x_new > 0) and np.all(c - A @ x_new > 0):
                if _potential(A, c, x_new, t) <= phi0 - 0.25 * alpha * decrement:
                    break
            alpha *= 0.5
        else:
            break
        x = x + alpha * step
        if decrement < 1e-10:
            break
    return x


def _potential(A: np.ndarray, c: np.ndarray, x: np.ndarray, t: float) -> float:
    s = c - A @ x
    if np.any(x <= 0) or np.any(s <= 0):
        return np.inf
    return t * _objective(x) - float(np.sum(np.log(s)))
