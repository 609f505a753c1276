"""Explicit-family gap elimination.

The sampler keeps a shrinking collection of candidate sets.  Each level works
at a dyadic accuracy eps_j, allocates samples so that every pairwise weight
difference among survivors is estimated to eps_j / lambda, then drops sets
whose empirical weight falls a constant fraction of eps_j behind the leader.
Once a single candidate remains it is re-estimated against every set it
outlived, at the accuracy of the level that eliminated that set.

Levels start at a coarse scale (eps = 2**START_EXP) and halve: the early
levels cost about one pull per arm and make the pull count scale with the
instance's own difficulty rather than with an assumed unit bound on the
means.  The elimination and verification tests are unchanged; only the
accuracy ladder is longer at the top.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Generator, Iterable, Sequence

import numpy as np

from .alloc_program import solve_inverse_budget
from .core import (
    Allocation,
    BestSetInstance,
    EmpiricalMeans,
    GaussianEnvironment,
    IndexSet,
    canonical_sets,
    ceil_allocation,
)

DELTA0 = 0.01
LAMBDA = 10.0
START_EXP = 8       # first level accuracy 2**START_EXP
MAX_LEVELS = START_EXP + 68  # below 2**-64 the dyadic ladder is past double precision

Request = tuple[int, int]  # (arm, number of fresh pulls; the mean comes back)


@dataclass
class AlgoResult:
    answer: object | None
    error: str | None = None
    pulls: int = 0
    rounds: int = 0
    diagnostics: dict = field(default_factory=dict)

    @property
    def is_error(self) -> bool:
        return self.error is not None


def drive(gen: Generator, env: GaussianEnvironment) -> AlgoResult:
    """Run a sampling generator to completion against an environment."""
    try:
        arm, count = next(gen)
        while True:
            arm, count = gen.send(env.pull_mean(arm, count))
    except StopIteration as stop:
        return stop.value


def _sample(counts: np.ndarray, n: int) -> Generator[Request, float, EmpiricalMeans]:
    means = EmpiricalMeans.zeros(n)
    for arm in np.nonzero(counts)[0]:
        c = int(counts[arm])
        means.values[arm] = yield (int(arm), c)
        means.counts[arm] = c
    return means


def simult_est(sets: Sequence[Iterable[int]], n: int, eps: float, delta: float) -> Allocation:
    """Budget so every pairwise set-weight difference is estimated to ``eps``
    with confidence 1 - delta: constrain each symmetric difference's summed
    inverse budget by eps^2 / (2 ln(2/delta)).  Fewer than two sets need no
    samples."""
    family = canonical_sets(sets)
    if len(family) < 2:
        return np.zeros(n)
    if not (0 < eps and 0 < delta < 1):
        raise ValueError("eps must be positive and delta in (0, 1)")
    rhs = eps * eps / (2.0 * math.log(2.0 / delta))
    constraints = []
    for a in range(len(family)):
        for b in range(a + 1, len(family)):
            constraints.append((family[a] ^ family[b], rhs))
    return solve_inverse_budget(n, constraints).budget


def verify_alloc(
    rounds: Sequence[tuple[float, Sequence[IndexSet]]],
    conjectured: IndexSet,
    n: int,
    delta: float,
) -> Allocation:
    """Budget to estimate the conjectured winner against every set of every
    earlier level, to that level's accuracy eps_k / lambda."""
    if not rounds:
        return np.zeros(n)
    final = canonical_sets(rounds[-1][1])
    if final != (frozenset(conjectured),):
        raise ValueError("the final level must contain exactly the conjectured set")
    log_term = 2.0 * math.log(2.0 / delta)
    constraints = []
    for eps_k, fam in rounds:
        rhs = (eps_k / LAMBDA) ** 2 / log_term
        for A in fam:
            if frozenset(A) != frozenset(conjectured):
                constraints.append((frozenset(conjectured) ^ frozenset(A), rhs))
    if not constraints:
        return np.zeros(n)
    return solve_inverse_budget(n, constraints).budget


def naive_gap_elim_core(
    sets: Sequence[IndexSet],
    n: int,
    delta: float,
    start_exp: int = START_EXP,
) -> Generator[Request, float, AlgoResult]:
    """Sampling generator for the explicit-family eliminator.

    Yields (arm, count) requests, receives the empirical mean of count fresh
    pulls, and returns an AlgoResult.  Deterministic given the replies.
    """
    if not 0 < delta < 0.1:
        raise ValueError("delta must lie in (0, 0.1)")
    family = canonical_sets(sets)
    nf = len(family)
    surviving = family
    history: list[tuple[float, tuple[IndexSet, ...]]] = []
    base_cache: dict[tuple, np.ndarray] = {}
    total = 0
    level = 0
    per_level = []

    while True:
        if len(surviving) == 1:
            conjectured = surviving[0]
            r = level + 1
            eps_r = 2.0 ** (start_exp - r)
            rounds = history + [(eps_r, surviving)]
            alloc = ceil_allocation(verify_alloc(rounds, conjectured, n, delta / (r * nf)))
            total += int(alloc.sum())
            means = yield from _sample(alloc, n)
            w = {A: means.set_value(A) for A in family}
            accepted = all(
                w[conjectured] - w[A] >= eps_k / LAMBDA
                for eps_k, fam_k in rounds
                for A in family
                if A not in fam_k
            )
            diagnostics = {"levels": per_level, "verify_pulls": int(alloc.sum())}
            if accepted:
                return AlgoResult(conjectured, pulls=total, rounds=r, diagnostics=diagnostics)
            return AlgoResult(None, error="verification failed", pulls=total, rounds=r,
                              diagnostics=diagnostics)

        level += 1
        if level > MAX_LEVELS:
            return AlgoResult(None, error="level cap exceeded", pulls=total, rounds=level,
                              diagnostics={"levels": per_level})
        eps_j = 2.0 ** (start_exp - level)
        delta_j = DELTA0 / (10.0 * level * level * nf * nf)
        rhs = (eps_j / LAMBDA) ** 2 / (2.0 * math.log(2.0 / delta_j))

        key = surviving
        base = base_cache.get(key)
        if base is None:
            # Budget for a unit constraint bound; true budgets rescale by 1/rhs
            # because the program is positively homogeneous in the bound.
            pairs = [
                (surviving[a] ^ surviving[b], 1.0)
                for a in range(len(surviving))
                for b in range(a + 1, len(surviving))
            ]
            base = solve_inverse_budget(n, pairs).budget
            base_cache[key] = base
        alloc = ceil_allocation(base / rhs)
        total += int(alloc.sum())
        means = yield from _sample(alloc, n)

        w = {A: means.set_value(A) for A in surviving}
        opt_j = max(w.values())
        history.append((eps_j, surviving))
        survivors = tuple(A for A in surviving if w[A] >= opt_j - eps_j / 2.0 - 2.0 * eps_j / LAMBDA)
        per_level.append(
            {"level": level, "eps": eps_j, "family": surviving, "weights": w,
             "survivors": survivors, "pulls": int(alloc.sum()), "opt": opt_j}
        )
        surviving = survivors


def naive_gap_elim(env: GaussianEnvironment, instance: BestSetInstance, delta: float,
                   start_exp: int = START_EXP) -> AlgoResult:
    """Run the eliminator against a simulated environment (explicit families)."""
    if not instance.is_explicit():
        raise ValueError("the explicit-family eliminator needs an ExplicitFamily instance")
    gen = naive_gap_elim_core(instance.family.sets, instance.n, delta, start_exp=start_exp)
    return drive(gen, env)
