"""Instance-complexity measures: the convex-program sample bound for Best-Set
instances, the classical per-arm gap hardness it dominates, and the
cutting-plane solver for the general-sampler linear program.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .alloc_program import solve_inverse_budget
from .core import BestSetInstance, arm_gap, set_weight
from .regions import GeneralSampInstance, Region, region_min_sqdist

CUT_TOL = 1e-6
MAX_CUTS = 500


@dataclass
class LowSolution:
    """Optimum of an instance-complexity program."""

    value: float
    allocation: np.ndarray
    certificate: list  # active constraints: sets (Best-Set) or cut points (general)


@dataclass
class HardnessReport:
    value: float
    per_arm: np.ndarray  # 1/gap^2 terms; zero where the arm is unconstrained


def best_set_lower_bound(instance: BestSetInstance) -> LowSolution:
    """Solve  min sum tau  s.t.  sum_{i in O^A} 1/tau_i <= [w(O)-w(A)]^2  for A != O.

    Arms outside every symmetric difference appear in no constraint and get
    budget zero.  A single-set family has no constraints and value 0.
    """
    sets = instance.sets()
    opt = instance.optimum
    w_opt = set_weight(instance.profile, opt)
    constraints = []
    for A in sets:
        if A == opt:
            continue
        gap = w_opt - set_weight(instance.profile, A)
        constraints.append((opt ^ A, gap * gap))
    sol = solve_inverse_budget(instance.n, constraints)
    certificate = [tuple(sorted(sol.constraint_sets[j])) for j in sol.active]
    return LowSolution(sol.value, sol.budget, certificate)


def gap_hardness(instance: BestSetInstance) -> HardnessReport:
    """Sum of 1/gap^2 over the arms, skipping unconstrained arms."""
    per_arm = np.zeros(instance.n)
    for i in range(instance.n):
        g = arm_gap(instance, i)
        if g is not None:
            per_arm[i] = 1.0 / (g * g)
    return HardnessReport(float(per_arm.sum()), per_arm)


def solve_coverage_lp(
    center: np.ndarray,
    alt_regions: tuple[Region, ...],
    tol: float = CUT_TOL,
    max_cuts: int = MAX_CUTS,
) -> tuple[np.ndarray, float, list[np.ndarray]]:
    """Cutting-plane solver for  min sum x  s.t.  sum_i (p_i - c_i)^2 x_i >= 1
    for every point p in the union of ``alt_regions``, x >= 0.

    Each round solves the LP over the current finite cut set and asks every
    alternative region for its weighted nearest point; minima below 1 - tol
    contribute cuts at their minimizers.  Plain cut accumulation crawls on
    degenerate supports (an LP vertex zeroes some coordinate, the region
    escapes through it, the next vertex zeroes another), so the loop is
    stabilized in-out style: it keeps a feasible iterate, queries the
    midpoint between it and the LP solution, and stops when the two values
    meet.  Seeded with the cut at the globally nearest alternative point
    under unit weights.
    """
    from scipy.optimize import linprog

    center = np.asarray(center, dtype=float)
    n = center.size
    ones = np.ones(n)
    seeds = [region_min_sqdist(r, ones, center) for r in alt_regions]
    nearest = min(range(len(alt_regions)), key=lambda k: seeds[k][0])
    d0 = seeds[nearest][0]
    if d0 <= 0:
        raise ValueError("the center lies in the closure of an alternative region")
    cuts = [(seeds[nearest][1] - center) ** 2]
    x_in = ones / (d0 * (1.0 - tol))  # feasible: every region is at least d0 away

    def violations(x):
        found = []
        for region in alt_regions:
            val, point = region_min_sqdist(region, x, center)
            if val < 1.0 - tol:
                found.append((point - center) ** 2)
        return found

    for _ in range(max_cuts):
        C = np.array(cuts)
        res = linprog(ones, A_ub=-C, b_ub=-np.ones(len(cuts)), bounds=(0, None), method="highs")
        if not res.success:
            raise RuntimeError(f"cut-set LP failed: {res.message}")
        x_lp = res.x
        lower, upper = float(x_lp.sum()), float(x_in.sum())
        if upper <= lower * (1.0 + 0.1 * tol) or not violations(x_lp):
            if not violations(x_lp):
                return x_lp, float(x_lp.sum()), cuts
            return x_in, upper, cuts
        x_q = 0.5 * (x_lp + x_in)
        found = violations(x_q)
        if found:
            for coeff in found:
                if all(np.max(np.abs(coeff - old)) > 1e-14 for old in cuts):
                    cuts.append(coeff)
        else:
            x_in = x_q
    raise RuntimeError("cutting-plane loop did not converge within the cut cap")


def general_lower_bound(instance: GeneralSampInstance) -> LowSolution:
    """Optimum of the general-sampler program around the true mean profile."""
    alt = tuple(r for k, r in enumerate(instance.regions) if k != instance.truth)
    if not alt:
        return LowSolution(0.0, np.zeros(instance.n), [])
    x, value, cuts = solve_coverage_lp(instance.profile.means, alt)
    active = [c for c in cuts if abs(float(c @ x) - 1.0) <= 1e-5]
    return LowSolution(value, x, active)
