"""Implicit-family gap elimination.

Surviving candidates are never materialized: the round-r family is the
threshold set {A : previous empirical weight of A >= theta}, queried through
a maximization oracle.  The allocation programs are solved by an ellipsoid
method whose separation problem -- "does some pair of surviving sets have a
large summed inverse budget across its symmetric difference?" -- is answered
approximately by two bi-objective scans (anchor a surviving set O, then
maximize the masked weight of what a second set removes from / adds to O).
The chained approximations are one-sided, so the constraint bound is
pre-tightened by the approximation factor and the returned budget is
genuinely feasible for the original program at a constant-factor objective
cost.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Generator, Sequence

import numpy as np

from .core import IndexSet, ceil_allocation, set_weight
from .naive import AlgoResult, Request, _sample, drive
from .oracles import FamilyOracle, max_weight, second_best, value_pair_witnesses

DELTA0 = 0.01
LAMBDA = 20.0
START_EXP = 8
MAX_LEVELS = START_EXP + 68


# ---------------------------------------------------------------------------
# Subroutines on threshold families
# ---------------------------------------------------------------------------

def unique(oracle: FamilyOracle, mu: np.ndarray, theta: float) -> bool:
    """Is there exactly one feasible set with mu-weight >= theta?"""
    mu = np.asarray(mu, dtype=float)
    best = max_weight(oracle, mu)
    if set_weight(mu, best) < theta:
        return False
    try:
        runner_up = second_best(oracle, mu)
    except ValueError:
        return True
    return set_weight(mu, runner_up) < theta


def _additive_witnesses(oracle, f1, f2, res1, res2):
    """Witness sets covering every feasible set within (res1, res2) additively."""
    n = max(oracle.n, 1)
    s1 = max(1.0, math.ceil(n / max(res1, 1e-12)))
    s2 = max(1.0, math.ceil(n / max(res2, 1e-12)))
    return value_pair_witnesses(oracle, np.asarray(f1, float), np.asarray(f2, float), s1, s2)


def opt_approx(
    oracle: FamilyOracle, mu: np.ndarray, theta: float, w: np.ndarray, eps: float
) -> IndexSet:
    """A set that nearly clears the mu-threshold and nearly maximizes w there:
    mu(A) >= theta - eps and w(A) >= max{w(B) : mu(B) >= theta} - eps."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    witnesses = _additive_witnesses(oracle, mu, w, eps / 4.0, eps / 4.0)
    pool = [(s, v1, v2) for s, v1, v2 in witnesses if v1 >= theta - eps / 2.0]
    if not pool:
        raise ValueError("no approximately feasible set clears the threshold")
    return max(pool, key=lambda p: (p[2], [-i for i in sorted(p[0])]))[0]


def check_approx(
    oracle: FamilyOracle,
    o_hat: IndexSet,
    mu_k: np.ndarray,
    mu_hat: np.ndarray,
    theta: float,
    eps: float,
) -> bool:
    """One-sided audit of the conjectured winner against the sets a past level
    eliminated.

    Returns True whenever every set with mu_k-weight below theta trails o_hat
    by at least 2 eps under mu_hat; returns False whenever some set below
    theta - eps trails by at most eps; in between the verdict may go either
    way."""
    witnesses = _additive_witnesses(oracle, mu_k, mu_hat, eps / 8.0, eps / 8.0)
    pool = [v2 for _, v1, v2 in witnesses if v1 <= theta - eps / 2.0]
    if not pool:
        return True
    lead = set_weight(np.asarray(mu_hat, float), o_hat) - max(pool)
    return lead > 1.5 * eps


@dataclass
class SeparationVerdict:
    violated: bool
    pair: tuple[IndexSet, IndexSet] | None
    pair_value: float      # exact summed weight across the pair's symmetric difference
    approx_max: float      # lower bound on the true maximum over relaxed pairs


def _threshold_extreme(oracle, mu, theta, slack, w, maximize, res):
    """Max (or min) of w-weight over sets whose mu-weight clears theta,
    allowing the threshold to relax by ``slack``.  Returns (set, value)."""
    witnesses = _additive_witnesses(oracle, mu, w, slack / 2.0, res)
    pool = [(s, v2) for s, v1, v2 in witnesses if v1 >= theta - slack / 2.0]
    if not pool:
        return None, None
    if maximize:
        s, v = max(pool, key=lambda p: p[1])
    else:
        s, v = min(pool, key=lambda p: p[1])
    return s, v


def _separation_engine(oracle, mu, theta_high, theta_low, y, bound):
    """Anchored pair search: the exact pair maximum over sets clearing
    theta_high lies within a factor 4 (plus the scan resolution) above the
    value found here.  Returned pair values are exact."""
    n = oracle.n
    y = np.asarray(y, dtype=float)
    anchor = max_weight(oracle, mu)
    if set_weight(mu, anchor) < theta_high:
        raise ValueError("no set clears the upper threshold")
    slack = max(theta_high - theta_low, 1e-12)
    res = bound / 32.0
    anchor_idx = list(anchor)

    masked_out = y.copy()
    masked_out[anchor_idx] = 0.0
    added_set, added = _threshold_extreme(oracle, mu, theta_high, slack, masked_out, True, res)

    masked_in = np.zeros(n)
    masked_in[anchor_idx] = y[anchor_idx]
    kept_set, kept = _threshold_extreme(oracle, mu, theta_high, slack, masked_in, False, res)
    removed = float(masked_in.sum()) - kept if kept is not None else None

    best_pair, best_val, approx = None, -math.inf, 0.0
    for other, lower in ((added_set, added), (kept_set, removed)):
        if other is None:
            continue
        approx = max(approx, lower)
        exact = float(y[list(anchor ^ other)].sum()) if anchor ^ other else 0.0
        if exact > best_val:
            best_pair, best_val = (anchor, other), exact
    if best_pair is None:
        return SeparationVerdict(False, None, 0.0, 0.0)
    return SeparationVerdict(best_val > bound, best_pair, best_val, approx)


def separation_2approx(
    oracle: FamilyOracle,
    mu: np.ndarray,
    theta_high: float,
    theta_low: float,
    alloc: np.ndarray,
    bound: float,
) -> SeparationVerdict:
    """Approximate separation for the pairwise estimation program: report a
    violating pair when twice the anchored maximum reaches ``bound``.  A
    "violated" verdict carries a concrete pair whose exact value is at least
    half the bound; a "feasible" verdict certifies no pair exceeds four times
    the anchored maximum (plus scan resolution)."""
    alloc = np.asarray(alloc, dtype=float)
    y = np.where(alloc > 0, 1.0 / np.where(alloc > 0, alloc, 1.0), 0.0)
    verdict = _separation_engine(oracle, mu, theta_high, theta_low, y, bound)
    violated = 2.0 * verdict.approx_max >= bound
    return SeparationVerdict(violated, verdict.pair, verdict.pair_value, verdict.approx_max)


# ---------------------------------------------------------------------------
# Ellipsoid solver for the implicit allocation programs
# ---------------------------------------------------------------------------

@dataclass
class EllipsoidDiag:
    iterations: int = 0
    cuts: int = 0
    objective: float = math.inf


def _exists_clearing(oracle, mu, theta, arm, containing):
    """Is there a feasible set with mu-weight >= theta that contains (or
    avoids) the given arm?  One masked maximization query."""
    big = 4.0 * (np.abs(mu).sum() + 1.0)
    masked = np.asarray(mu, dtype=float).copy()
    masked[arm] += big if containing else -big
    best = max_weight(oracle, masked)
    if containing and arm not in best:
        return False
    if not containing and arm in best:
        return False
    return set_weight(np.asarray(mu, float), best) >= theta


def _ellipsoid_min_budget(n, relevant, sigma, feas_fn, max_iters, improve_window):
    """Sliding-objective ellipsoid over y in the scaled positive orthant.

    ``feas_fn(y)`` returns None when y satisfies every (tightened) constraint
    or a violated cut (a, rhs) with a . y > rhs.  Minimizes sum 1/y_i over the
    relevant coordinates; the uniform scaled center is always feasible, so an
    incumbent exists from the first iteration.
    """
    idx = np.flatnonzero(relevant)
    d = idx.size
    if d == 0:
        return np.zeros(n), EllipsoidDiag(0, 0, 0.0)
    sig = sigma[idx]

    if d == 1:
        # One relevant arm: feasibility is monotone, binary search the edge.
        lo, hi = 0.5, 1.0
        while feas_fn(_embed(n, idx, sig * hi)) is None and hi < 1e9:
            lo, hi = hi, hi * 2.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if feas_fn(_embed(n, idx, sig * mid)) is None:
                lo = mid
            else:
                hi = mid
        y = _embed(n, idx, sig * lo)
        return y, EllipsoidDiag(60, 0, float(np.sum(1.0 / y[idx])))

    u = np.full(d, 1.0 / d)
    radius = 10.0 * d
    P = np.eye(d) * radius * radius
    best_u = u.copy()
    best_obj = float(np.sum(1.0 / (sig * u)))
    diag = EllipsoidDiag(objective=best_obj)
    floor = 1e-9
    since_improvement = 0

    for it in range(max_iters):
        diag.iterations = it + 1
        a = None
        beta = None
        low = u <= floor
        if np.any(low):
            i = int(np.argmax(low))
            a = np.zeros(d)
            a[i] = -1.0
            beta = -floor
        else:
            cut = feas_fn(_embed(n, idx, sig * u))
            if cut is not None:
                a_full, rhs = cut
                a = a_full[idx] * sig
                beta = rhs
                diag.cuts += 1
            else:
                obj = float(np.sum(1.0 / (sig * u)))
                if obj < best_obj * (1.0 - 2e-3):
                    since_improvement = 0
                else:
                    since_improvement += 1
                if obj < best_obj:
                    best_obj = obj
                    best_u = u.copy()
                if since_improvement > improve_window:
                    break
                a = -1.0 / (sig * u * u)  # gradient of sum 1/(sig u) in u
                beta = None  # central cut

        Pa = P @ a
        denom = float(a @ Pa)
        if denom <= 0 or not np.isfinite(denom):
            break
        norm = math.sqrt(denom)
        alpha = 0.0 if beta is None else max(0.0, (float(a @ u) - beta) / norm)
        if alpha >= 1.0:
            break  # cut excludes the whole ellipsoid
        g = Pa / norm
        tau = (1.0 + d * alpha) / (d + 1.0)
        u = u - tau * g
        scale = d * d * (1.0 - alpha * alpha) / (d * d - 1.0)
        P = scale * (P - (2.0 * tau / (1.0 + alpha)) * np.outer(g, g))
        if it % 64 == 63:
            P = 0.5 * (P + P.T)

    y = _embed(n, idx, sig * best_u)
    diag.objective = best_obj
    return y, diag


def _embed(n, idx, vals):
    y = np.zeros(n)
    y[idx] = vals
    return y


ELLIPSOID_DIM_CAP = 12


def _cutting_plane_min_budget(n, relevant, sigma, feas_fn, max_rounds=400):
    """Separation-oracle solver for dimensions where the ellipsoid is too slow.

    Collects the oracle's violated pair constraints and re-solves the exact
    inverse-budget program on the working set; arms no cut has touched yet
    are held at their scale ceiling so the oracle can flag them.  Terminates
    because the oracle draws cuts from a finite pair pool.
    """
    from .alloc_program import solve_inverse_budget

    idx = np.flatnonzero(relevant)
    d = idx.size
    if d == 0:
        return np.zeros(n), EllipsoidDiag(0, 0, 0.0)
    fallback = _embed(n, idx, sigma[idx] / d)  # always feasible
    cuts: dict[frozenset, float] = {}
    y = fallback
    diag = EllipsoidDiag()
    for it in range(max_rounds):
        diag.iterations = it + 1
        cut = feas_fn(y)
        if cut is None:
            diag.objective = float(np.sum(1.0 / y[idx]))
            return y, diag
        a, rhs = cut
        D = frozenset(int(i) for i in np.flatnonzero(a))
        if D in cuts and cuts[D] <= rhs:
            # the oracle re-flagged a satisfied cut through scale-ceiling arms;
            # force those arms into the program by tightening nothing further
            pass
        cuts[D] = min(rhs, cuts.get(D, math.inf))
        diag.cuts = len(cuts)
        sol = solve_inverse_budget(n, list(cuts.items()))
        y = np.where(sol.budget > 0, 1.0 / np.where(sol.budget > 0, sol.budget, 1.0), 0.0)
        free = relevant & (sol.budget == 0)
        y[free] = sigma[free]
        y[~relevant] = 0.0
    diag.objective = float(np.sum(1.0 / fallback[idx]))
    return fallback, diag


def _min_budget_solver(n, relevant, sigma, feas_fn, max_iters, improve_window):
    d = int(np.count_nonzero(relevant))
    if d > ELLIPSOID_DIM_CAP:
        return _cutting_plane_min_budget(n, relevant, sigma, feas_fn)
    return _ellipsoid_min_budget(n, relevant, sigma, feas_fn, max_iters, improve_window)


def _levels_relevance(oracle, levels):
    """Per-arm relevance and conservative coordinate scales across levels.

    ``levels`` rows: (mu, theta_high, theta_low, work_bound, anchored_only,
    anchor).  An arm matters at a level when both a clearing set containing
    it and one avoiding it exist (anchored programs fix one side to the
    anchor's membership pattern)."""
    n = oracle.n
    relevant = np.zeros(n, dtype=bool)
    sigma = np.full(n, np.inf)
    for mu, th_high, th_low, b_work, anchored_only, anchor in levels:
        for arm in range(n):
            if anchored_only:
                if arm in anchor:
                    ok = _exists_clearing(oracle, mu, th_low, arm, containing=False)
                else:
                    ok = _exists_clearing(oracle, mu, th_low, arm, containing=True)
            else:
                ok = _exists_clearing(oracle, mu, th_low, arm, True) and _exists_clearing(
                    oracle, mu, th_low, arm, False
                )
            if ok:
                relevant[arm] = True
                sigma[arm] = min(sigma[arm], b_work)
    sigma[~relevant] = 1.0
    return relevant, sigma


def simult_alloc_implicit(
    oracle: FamilyOracle,
    mu: np.ndarray,
    theta_high: float,
    theta_low: float,
    eps: float,
    delta: float | None = None,
    max_iters: int | None = None,
    log_two_over_delta: float | None = None,
) -> tuple[np.ndarray, EllipsoidDiag]:
    """Ellipsoid-solved pairwise estimation budget over a threshold family.

    Feasible for the original constraint bound eps^2 / (2 ln(2/delta)); the
    bound handed to the separation oracle is pre-tightened by the factor-4
    approximation chain so one-sided verdicts still certify feasibility.
    The confidence may be given directly or as ln(2/delta) (implicit-family
    schedules shrink delta past double-precision underflow).
    """
    if log_two_over_delta is None:
        log_two_over_delta = math.log(2.0 / delta)
    bound = eps * eps / (2.0 * log_two_over_delta)
    eta = bound / 32.0
    b_work = bound / 4.0 - eta
    levels = [(np.asarray(mu, float), theta_high, theta_low, b_work, False, frozenset())]
    relevant, sigma = _levels_relevance(oracle, levels)
    d = int(relevant.sum())
    iters = max_iters or int(16 * max(d, 2) ** 2 * math.log(1e6))

    def feas(y):
        verdict = _separation_engine(oracle, mu, theta_high, theta_low, y, b_work)
        if verdict.pair_value > b_work:
            a = np.zeros(oracle.n)
            a[list(verdict.pair[0] ^ verdict.pair[1])] = 1.0
            return a, b_work
        return None

    y, diag = _min_budget_solver(oracle.n, relevant, sigma, feas, iters,
                                 improve_window=max(120, 4 * d * (d + 1)))
    alloc = np.zeros(oracle.n)
    alloc[relevant] = 1.0 / y[relevant]
    return alloc, diag


def verify_alloc_implicit(
    oracle: FamilyOracle,
    o_hat: IndexSet,
    levels: Sequence[tuple[np.ndarray, float, float, float]],
    log_two_over_delta: float,
    max_iters: int | None = None,
) -> tuple[np.ndarray, EllipsoidDiag]:
    """Ellipsoid-solved verification budget: estimate o_hat against every set
    each past level kept, at that level's accuracy.  ``levels`` rows are
    (mu_k, theta_high_k, theta_low_k, eps_k)."""
    rows = []
    for mu_k, th_high, th_low, eps_k in levels:
        b_k = (eps_k / LAMBDA) ** 2 / (2.0 * log_two_over_delta)
        b_work = b_k / 2.0 - b_k / 16.0
        rows.append((np.asarray(mu_k, float), th_high, th_low, b_k, b_work))
    rel_rows = [(mu, th, tl, bw, True, o_hat) for mu, th, tl, _, bw in rows]
    relevant, sigma = _levels_relevance(oracle, rel_rows)
    d = int(relevant.sum())
    iters = max_iters or int(16 * max(d, 2) ** 2 * math.log(1e6))
    anchor_idx = list(o_hat)

    def feas(y):
        for mu_k, th_high, th_low, b_k, b_work in sorted(rows, key=lambda r: r[4]):
            slack = max(th_high - th_low, 1e-12)
            res = b_k / 32.0
            masked_out = y.copy()
            masked_out[anchor_idx] = 0.0
            added_set, _ = _threshold_extreme(oracle, mu_k, th_high, slack, masked_out, True, res)
            masked_in = np.zeros(oracle.n)
            masked_in[anchor_idx] = y[anchor_idx]
            kept_set, _ = _threshold_extreme(oracle, mu_k, th_high, slack, masked_in, False, res)
            for other in (added_set, kept_set):
                if other is None or other == o_hat:
                    continue
                diff = list(o_hat ^ other)
                if float(y[diff].sum()) > b_work:
                    a = np.zeros(oracle.n)
                    a[diff] = 1.0
                    return a, b_work
        return None

    y, diag = _min_budget_solver(oracle.n, relevant, sigma, feas, iters,
                                 improve_window=max(120, 4 * d * (d + 1)))
    alloc = np.zeros(oracle.n)
    alloc[relevant] = 1.0 / y[relevant]
    return alloc, diag


# ---------------------------------------------------------------------------
# The eliminator
# ---------------------------------------------------------------------------

def efficient_gap_elim_core(
    oracle: FamilyOracle,
    delta: float,
    start_exp: int = START_EXP,
) -> Generator[Request, float, AlgoResult]:
    """Sampling generator for the implicit-family eliminator."""
    if not 0 < delta < 0.1:
        raise ValueError("delta must lie in (0, 0.1)")
    n = oracle.n
    log_fam = oracle.log_count_upper

    mu_hats: list[np.ndarray] = [np.zeros(n)]   # snapshot per level, index 0 = zeros
    thetas: list[float] = [0.0]
    total = 0
    per_level = []
    alloc_cache: dict[int, tuple[np.ndarray, float]] = {}  # k -> (budget, ln(2/delta_ref))

    def eps_of(k: int) -> float:
        return 2.0 ** (start_exp - k)

    level = 0
    while True:
        r = level + 1
        th_prev = thetas[r - 1] - eps_of(r - 1) / LAMBDA
        if unique(oracle, mu_hats[r - 1], th_prev):
            log_term = math.log(2.0 * r / delta) + log_fam
            rows = [
                (mu_hats[k - 1], thetas[k - 1] - eps_of(k - 1) / LAMBDA,
                 thetas[k - 1] - 2.0 * eps_of(k - 1) / LAMBDA, eps_of(k))
                for k in range(1, r + 1)
            ]
            o_hat = max_weight(oracle, mu_hats[r - 1])
            alloc, vdiag = verify_alloc_implicit(oracle, o_hat, rows, log_term)
            counts = ceil_allocation(alloc)
            total += int(counts.sum())
            means = yield from _sample(counts, n)
            accepted = all(
                check_approx(oracle, o_hat, mu_hats[k], means.values, thetas[k],
                             eps_of(k) / LAMBDA)
                for k in range(1, r)
            )
            diagnostics = {"levels": per_level, "verify_pulls": int(counts.sum()),
                           "verify_ellipsoid": vdiag.iterations}
            if accepted:
                return AlgoResult(o_hat, pulls=total, rounds=r, diagnostics=diagnostics)
            return AlgoResult(None, error="verification failed", pulls=total, rounds=r,
                              diagnostics=diagnostics)

        level = r
        if level > MAX_LEVELS:
            return AlgoResult(None, error="level cap exceeded", pulls=total, rounds=level,
                              diagnostics={"levels": per_level})
        eps_r = eps_of(r)
        log_delta_r = math.log(2.0 * 10.0 * r**3 / DELTA0) + 2.0 * log_fam  # ln(2/delta_r)
        alloc = np.zeros(n)
        ell_iters = 0
        ell_cuts = 0
        for k in range(1, r + 1):
            cached = alloc_cache.get(k)
            if cached is None:
                budget, diag_k = simult_alloc_implicit(
                    oracle,
                    mu_hats[k - 1],
                    thetas[k - 1] - eps_of(k - 1) / LAMBDA,
                    thetas[k - 1] - 2.0 * eps_of(k - 1) / LAMBDA,
                    eps_of(k) / LAMBDA,
                    log_two_over_delta=log_delta_r,
                )
                alloc_cache[k] = (budget, log_delta_r)
                ell_iters += diag_k.iterations
                ell_cuts += diag_k.cuts
                cached = alloc_cache[k]
            budget, ref = cached
            alloc += budget * (log_delta_r / ref)
        counts = ceil_allocation(alloc)
        total += int(counts.sum())
        means = yield from _sample(counts, n)
        mu_r = means.values.copy()

        opt_set = opt_approx(oracle, mu_hats[r - 1], thetas[r - 1], mu_r, eps_of(r - 1) / LAMBDA)
        opt_r = set_weight(mu_r, opt_set)
        theta_r = opt_r - (0.5 + 2.0 / LAMBDA) * eps_r
        mu_hats.append(mu_r)
        thetas.append(theta_r)
        per_level.append({"level": r, "eps": eps_r, "theta": theta_r, "opt": opt_r,
                          "mu_hat": mu_r.copy(), "pulls": int(counts.sum()),
                          "ellipsoid_iters": ell_iters, "ellipsoid_cuts": ell_cuts})


def efficient_gap_elim(env, instance, delta: float, start_exp: int = START_EXP) -> AlgoResult:
    """Run the implicit-family eliminator against a simulated environment."""
    from .core import ExplicitFamily
    from .oracles import ExplicitOracle

    family = instance.family
    if isinstance(family, ExplicitFamily):
        family = ExplicitOracle(family.sets, instance.n)
    return drive(efficient_gap_elim_core(family, delta, start_exp=start_exp), env)
