"""Probabilistic tail bounds and divergences used by the allocation programs,
confidence radii, and the test suite.

All bounds are clamped into [0, 1]: the raw exponential expressions exceed 1
for weak parameters and downstream code treats them as probabilities.
Logarithms are natural throughout.
"""

from __future__ import annotations

import math


def kl_gaussian(mu1: float, mu2: float) -> float:
    """KL divergence between unit-variance Gaussians: (mu1 - mu2)**2 / 2."""
    return 0.5 * (float(mu1) - float(mu2)) ** 2


def binary_rel_entropy(x: float, y: float) -> float:
    """Binary relative entropy d(x, y) = x ln(x/y) + (1-x) ln((1-x)/(1-y))."""
    x, y = float(x), float(y)
    if not (0.0 < x < 1.0 and 0.0 < y < 1.0):
        raise ValueError("binary_rel_entropy requires arguments in the open interval (0, 1)")
    return x * math.log(x / y) + (1.0 - x) * math.log((1.0 - x) / (1.0 - y))


def sum_dev_tail(epsilon: float, inverse_budget_sum: float) -> float:
    """Deviation bound for a sum of empirical means over a set of arms.

    With tau_i samples of arm i, the probability that the summed empirical
    means deviate from the summed true means by at least ``epsilon`` is at
    most ``2 exp(-epsilon^2 / (2 * sum_i 1/tau_i))``.
    """
    epsilon, inv = float(epsilon), float(inverse_budget_sum)
    if epsilon <= 0 or inv <= 0:
        raise ValueError("epsilon and inverse_budget_sum must be positive")
    return min(1.0, 2.0 * math.exp(-(epsilon**2) / (2.0 * inv)))


def chi2_tail(n: int, x: float) -> float:
    """Upper bound exp(-x) on P[X >= 2n + 3x] for X chi-squared with n dof."""
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    x = float(x)
    if x < 0:
        raise ValueError("x must be nonnegative")
    return min(1.0, math.exp(-x))


def conf_radius(t: int, n: int, delta0: float) -> float:
    """Stage-one confidence radius sqrt([2n + 3 ln(4 t^2 / delta0)] / t).

    The radius bounds the Euclidean error of the n-dimensional empirical mean
    after t round-robin pulls per arm, with per-step failure delta0 / (4 t^2).
    """
    if int(t) != t or t < 1:
        raise ValueError("t must be a positive integer")
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    delta0 = float(delta0)
    if not 0.0 < delta0 < 1.0:
        raise ValueError("delta0 must lie in (0, 1)")
    return math.sqrt((2.0 * n + 3.0 * math.log(4.0 * t * t / delta0)) / t)
