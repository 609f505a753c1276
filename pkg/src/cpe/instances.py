"""Hard-instance generators and the staged ball tester.

* ``nw_design`` -- families of equal-size subsets with small pairwise
  intersections (rejection-sampled; the combinatorial core of the
  worst-case constructions).
* ``disj_sets_instance`` -- two disjoint feasible sets whose per-arm gaps
  wildly overstate the instance's true difficulty.
* ``or_instance`` -- all-zero means versus exactly one raised arm, as a
  two-region general identification instance.
* ``ball_test`` -- distinguishes "the mean profile equals u" from "it is at
  least r away in Euclidean norm" with near-linear pulls, by sampling
  geometrically fewer arms at geometrically higher precision per stage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import BestSetInstance, ExplicitFamily, GaussianEnvironment, MeanProfile
from .naive import AlgoResult
from .regions import CountAboveRegion, GeneralSampInstance, point_region


@dataclass(frozen=True)
class DesignFamily:
    n: int
    m: int
    ell: int
    sets: tuple[frozenset[int], ...]


def nw_design(n: int, m: int, seed: int, max_attempts: int = 100) -> DesignFamily:
    """Sample ``m`` uniform subsets of size n // 10 until all pairwise
    intersections are at most half a set; abandon a family on the first
    violation and retry, erroring out after ``max_attempts`` families."""
    if n < 20:
        raise ValueError("need n >= 20 so that sets have at least two elements")
    if m < 2:
        raise ValueError("need at least two sets")
    ell = n // 10
    rng = np.random.default_rng(seed)
    for _ in range(max_attempts):
        sets: list[frozenset[int]] = []
        ok = True
        for _ in range(m):
            cand = frozenset(int(i) for i in rng.choice(n, size=ell, replace=False))
            if any(len(cand & prev) > ell / 2 for prev in sets):
                ok = False
                break
            sets.append(cand)
        if ok:
            return DesignFamily(n, m, ell, tuple(sets))
    raise RuntimeError(f"no admissible design found in {max_attempts} attempts "
                       f"(m={m} is too large for n={n})")


def disj_sets_instance(k: int, eps: float) -> BestSetInstance:
    """2k arms; the only feasible sets are the first k (mean eps each) and the
    last k (mean zero).  Every per-arm gap is k*eps, so the summed inverse
    gap-squared hardness undershoots the true allocation bound by 2k."""
    if k < 1 or eps <= 0:
        raise ValueError("need k >= 1 and eps > 0")
    means = np.concatenate([np.full(k, float(eps)), np.zeros(k)])
    family = ExplicitFamily([list(range(k)), list(range(k, 2 * k))])
    return BestSetInstance(MeanProfile(means), family)


def or_instance(n: int, delta_gap: float, special: int | None = None) -> GeneralSampInstance:
    """Either all means are zero (answer: the singleton region at the origin)
    or exactly one arm has mean ``delta_gap`` (answer: the count-one region
    above the halfway threshold)."""
    if not 0 < delta_gap <= 1:
        raise ValueError("delta_gap must lie in (0, 1]")
    means = np.zeros(n)
    if special is not None:
        if not 0 <= special < n:
            raise IndexError("special arm out of range")
        means[special] = delta_gap
    regions = (CountAboveRegion(delta_gap / 2.0, 1, n), point_region(np.zeros(n)))
    return GeneralSampInstance(MeanProfile(means), regions)


@dataclass(frozen=True)
class BallTestConfig:
    u: np.ndarray
    r: float
    c1: float = 12.0
    c2: float = 32.0

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        object.__setattr__(self, "u", u)
        if not 0.0 < self.r <= 1.0:
            raise ValueError("r must lie in (0, 1]")
        if u.size < 2:
            raise ValueError("need at least two arms")


def ball_test(env: GaussianEnvironment, config: BallTestConfig, delta: float,
              rng: np.random.Generator) -> AlgoResult:
    """Stage k draws about c1 n ln(n) 2^-k ln(1/delta) arms (with replacement,
    uniformly) and samples each c2 r^-2 2^k (ln n + ln(1/delta)) times: any
    empirical mean further than r 2^(-k/2-1) from u fires "outside".  A mean
    profile r away in l2 concentrates its energy in some dyadic magnitude
    bucket, and exactly one stage is tuned to catch that bucket.

    A firing stage is completed before returning, so pull accounting stays
    the closed-form stage total.
    """
    n = env.n
    if config.u.size != n:
        raise ValueError("center length must match the number of arms")
    if not 0 < delta < 0.5:
        raise ValueError("delta must lie in (0, 0.5)")
    pulls_before = env.total_pulls
    log_n = math.log(n)
    log_d = math.log(1.0 / delta)
    stages = math.ceil(math.log2(n)) + 2
    fired = False
    fired_stage = 0
    for k in range(1, stages + 1):
        draws = math.ceil(config.c1 * n * log_n * 2.0 ** (-k) * log_d)
        per_arm = math.ceil(config.c2 * 2.0**k * (log_n + log_d) / (config.r**2))
        limit = config.r * 2.0 ** (-k / 2.0 - 1.0)
        arms = rng.integers(0, n, size=draws)
        for arm, copies in zip(*np.unique(arms, return_counts=True)):
            means = env.pull_mean_group(int(arm), per_arm, int(copies))
            if not fired and np.any(np.abs(means - config.u[arm]) > limit):
                fired = True
                fired_stage = k
        if fired:
            break
    answer = "outside" if fired else "inside"
    return AlgoResult(answer, pulls=env.total_pulls - pulls_before,
                      rounds=fired_stage if fired else stages,
                      diagnostics={"stages": stages, "fired_stage": fired_stage})


def ball_truth(means: np.ndarray, config: BallTestConfig) -> str:
    dist = float(np.linalg.norm(np.asarray(means, float) - config.u))
    if dist == 0.0:
        return "inside"
    if dist >= config.r:
        return "outside"
    raise ValueError("mean profile falls between the two answer regions")
