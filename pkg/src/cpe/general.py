"""Two-stage sampler for the general identification problem over disjoint
answer regions.

Stage one samples round-robin until the confidence ball around the running
empirical mean touches exactly one region, then tops the estimate up to a
tighter radius.  Stage two solves, by cutting planes, the linear program
whose constraints demand one unit of squared-distance evidence against every
alternative mean vector, samples by that optimal profile, and accepts the
candidate only if a chi-squared-style statistic stays under threshold.  The
statistic makes wrong answers essentially impossible: an adversarial truth
inside the alternatives inflates it past the threshold.
"""

from __future__ import annotations

import math
from typing import Generator

import numpy as np

from .core import GaussianEnvironment, ceil_allocation
from .lower_bounds import solve_coverage_lp
from .naive import AlgoResult, Request
from .regions import GeneralSampInstance, batched_min_sqdist_values
from .stats import conf_radius

DELTA0 = 0.01
BETA = 64.0
STAGE1_PULL_CAP = 10**7


def lp_sample_core(
    instance: GeneralSampInstance,
    delta: float,
    stage1_cap: int = STAGE1_PULL_CAP,
) -> Generator[Request, float, AlgoResult]:
    """Sampling generator; yields (arm, count), receives batch means."""
    if not 0 < delta < 0.1:
        raise ValueError("delta must lie in (0, 0.1)")
    n = instance.n
    regions = instance.regions
    if len(regions) < 2:
        raise ValueError("need at least two answer regions")

    sums = np.zeros(n)
    ones = np.ones(n)
    caches = [dict() for _ in regions]
    t = 0
    total = 0
    while True:
        t += 1
        for arm in range(n):
            sums[arm] += yield (arm, 1)
        total += n
        mu_t = sums / t
        r_t = conf_radius(t, n, DELTA0)
        ball = (3.0 * r_t) ** 2
        dists = batched_min_sqdist_values(regions, ones, mu_t, caches)
        hits = np.flatnonzero(dists <= ball + 1e-12)
        if hits.size == 1:
            candidate = int(hits[0])
            break
        if total > stage1_cap:
            return AlgoResult(None, error="stage-one pull cap exceeded", pulls=total,
                              rounds=t)

    alpha = r_t / math.sqrt(8.0 * n)
    refine = int(math.ceil((2.0 * n + 3.0 * math.log(2.0 / DELTA0)) / (alpha * alpha)))
    mu_bar = np.zeros(n)
    for arm in range(n):
        mu_bar[arm] = yield (arm, refine)
    total += n * refine

    alt = tuple(reg for k, reg in enumerate(regions) if k != candidate)
    nearest_alt = float(batched_min_sqdist_values(alt, ones, mu_bar).min())
    diagnostics = {"stage1_rounds": t, "radius": r_t, "candidate": candidate,
                   "stage1_pulls": total, "mu_stage1": mu_t.copy(), "mu_bar": mu_bar.copy()}
    if nearest_alt <= r_t * r_t:
        return AlgoResult(None, error="refined estimate still touches the alternatives",
                          pulls=total, rounds=t, diagnostics=diagnostics)

    try:
        x_star, lp_value, _ = solve_coverage_lp(mu_bar, alt)
    except RuntimeError as exc:
        return AlgoResult(None, error=f"verification LP failed: {exc}", pulls=total,
                          rounds=t, diagnostics=diagnostics)
    diagnostics["lp_value"] = lp_value
    diagnostics["lp_bound"] = n / (r_t * r_t)  # the LP value can never exceed this

    log_term = math.log(1.0 / delta) + n
    counts = ceil_allocation(BETA * x_star * log_term)
    stat = 0.0
    for arm in np.nonzero(counts)[0]:
        value = yield (int(arm), int(counts[arm]))
        stat += counts[arm] * (value - mu_bar[arm]) ** 2
    total += int(counts.sum())
    threshold = 36.0 * log_term
    diagnostics.update({"statistic": stat, "threshold": threshold,
                        "stage2_pulls": int(counts.sum())})
    if stat <= threshold:
        return AlgoResult(candidate, pulls=total, rounds=t, diagnostics=diagnostics)
    return AlgoResult(None, error="verification statistic exceeded its threshold",
                      pulls=total, rounds=t, diagnostics=diagnostics)


def lp_sample(env: GaussianEnvironment, instance: GeneralSampInstance, delta: float,
              stage1_cap: int = STAGE1_PULL_CAP) -> AlgoResult:
    from .naive import drive

    return drive(lp_sample_core(instance, delta, stage1_cap=stage1_cap), env)
