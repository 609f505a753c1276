"""Shared test helpers: independent brute-force solvers and instance generators.

Everything here is deliberately implemented with different algorithms than
the package (grid refinement instead of interior point, itertools filtering
instead of oracle-specific machinery) so tests cross-check two routes.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from cpe.core import BestSetInstance, ExplicitFamily, MeanProfile


def sigma3(p: float, trials: int) -> float:
    return 3.0 * math.sqrt(p * (1.0 - p) / trials)


# ---------------------------------------------------------------------------
# Brute-force solver for the inverse-budget program (n <= 3, few constraints)
# ---------------------------------------------------------------------------

def grid_inverse_budget(constraint_sets, rhs, n, rounds: int = 6, points: int = 25):
    """Grid-refinement minimizer of sum tau s.t. sum_{i in D} 1/tau_i <= c."""
    arms = sorted(set().union(*constraint_sets))
    d = len(arms)
    col = {a: j for j, a in enumerate(arms)}
    lo = np.empty(d)
    hi = np.empty(d)
    for a in arms:
        cs = [c for D, c in zip(constraint_sets, rhs) if a in D]
        lo[col[a]] = 1.0 / min(cs)
        hi[col[a]] = 4.0 * max(len(D) / c for D, c in zip(constraint_sets, rhs))

    def feasible(tau):
        return all(sum(1.0 / tau[col[a]] for a in D) <= c * (1 + 1e-12)
                   for D, c in zip(constraint_sets, rhs))

    best, best_val = None, math.inf
    for _ in range(rounds):
        axes = [np.geomspace(lo[j], hi[j], points) for j in range(d)]
        for tau in itertools.product(*axes):
            tau = np.array(tau)
            if feasible(tau) and tau.sum() < best_val:
                best, best_val = tau, float(tau.sum())
        if best is None:
            hi *= 4.0
            continue
        span = (hi / lo) ** (1.0 / (points - 1))
        lo = np.maximum(lo, best / span**2)
        hi = np.minimum(hi, best * span**2)
    full = np.zeros(n)
    for a in arms:
        full[a] = best[col[a]]
    return best_val, full


def grid_general_two_arm(mu, alt_point_fn, lo=0.05, hi=60.0, rounds=6, points=40):
    """2-d grid refinement for min x1+x2 s.t. min-over-alt weighted sqdist >= 1."""
    best, best_val = None, math.inf
    lo1 = lo2 = lo
    hi1 = hi2 = hi
    for _ in range(rounds):
        for x1 in np.geomspace(lo1, hi1, points):
            for x2 in np.geomspace(lo2, hi2, points):
                if alt_point_fn(np.array([x1, x2])) >= 1.0 - 1e-9 and x1 + x2 < best_val:
                    best, best_val = (x1, x2), x1 + x2
        span1 = (hi1 / lo1) ** (1.0 / (points - 1))
        lo1, hi1 = best[0] / span1**2, best[0] * span1**2
        lo2, hi2 = best[1] / span1**2, best[1] * span1**2
    return best_val, np.array(best)


# ---------------------------------------------------------------------------
# Brute-force family enumerations (independent of cpe.oracles)
# ---------------------------------------------------------------------------

def brute_spanning_trees(edges, num_vertices):
    out = []
    for combo in itertools.combinations(range(len(edges)), num_vertices - 1):
        parent = list(range(num_vertices))

        def find(a):
            while parent[a] != a:
                a = parent[a]
            return a

        ok = True
        for e in combo:
            u, v = edges[e]
            ru, rv = find(u), find(v)
            if ru == rv:
                ok = False
                break
            parent[ru] = rv
        if ok:
            out.append(frozenset(combo))
    return out


def brute_perfect_matchings(edges, sides):
    left, right = sides
    cell = {(u, v): i for i, (u, v) in enumerate(edges)}
    out = []
    for perm in itertools.permutations(range(right)):
        if all((u, perm[u]) in cell for u in range(left)):
            out.append(frozenset(cell[(u, perm[u])] for u in range(left)))
    return out


def brute_st_paths(edges, num_vertices, s, t, directed=False):
    adj = [[] for _ in range(num_vertices)]
    for i, (u, v) in enumerate(edges):
        adj[u].append((v, i))
        if not directed:
            adj[v].append((u, i))
    out = []

    def walk(v, visited, used):
        if v == t:
            out.append(frozenset(used))
            return
        for u, i in adj[v]:
            if u not in visited:
                walk(u, visited | {u}, used + [i])

    walk(s, {s}, [])
    return out


# ---------------------------------------------------------------------------
# Random explicit instances
# ---------------------------------------------------------------------------

def random_explicit_instance(rng, n_max=8, f_max=12, gap_floor=0.0):
    """A random explicit Best-Set instance with a unique optimum (and, when
    requested, a minimum winner-vs-runner-up gap)."""
    while True:
        n = int(rng.integers(2, n_max + 1))
        f = int(rng.integers(2, f_max + 1))
        pool = set()
        while len(pool) < f:
            members = rng.random(n) < rng.uniform(0.25, 0.75)
            if members.any():
                pool.add(frozenset(np.flatnonzero(members).tolist()))
            if len(pool) < f and rng.random() < 0.01:
                break
        if len(pool) < 2:
            continue
        means = rng.uniform(0.0, 1.0, n)
        weights = sorted((float(means[list(s)].sum()) for s in pool), reverse=True)
        if weights[0] - weights[1] <= max(gap_floor, 1e-9):
            continue
        return BestSetInstance(MeanProfile(means), ExplicitFamily(pool))


def true_gap(instance) -> float:
    weights = sorted((float(instance.profile.means[list(s)].sum()) if s else 0.0
                      for s in instance.sets()), reverse=True)
    return weights[0] - weights[1]
