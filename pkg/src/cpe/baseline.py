"""The per-arm-confidence strawman: estimate every single arm to a target
accuracy and read the answer off the empirical weights.

This is the style of strategy a per-arm confidence-bound sampler is forced
into, and its pull count scales linearly with the number of arms even on
instances whose allocation bound is flat in n; it exists so experiments can
demonstrate the separation.
"""

from __future__ import annotations

import math

import numpy as np

from .core import BestSetInstance, GaussianEnvironment
from .naive import AlgoResult


def uniform_baseline(
    env: GaussianEnvironment,
    instance: BestSetInstance,
    per_arm_eps: float,
    delta: float,
) -> AlgoResult:
    """Pull every arm to +-eps/2 accuracy with per-arm confidence delta/n,
    then return the feasible set with the largest empirical weight."""
    if per_arm_eps <= 0 or not 0 < delta < 1:
        raise ValueError("need per_arm_eps > 0 and delta in (0, 1)")
    n = instance.n
    tau = int(math.ceil(8.0 * math.log(2.0 * n / delta) / per_arm_eps**2))
    values = np.array([env.pull_mean(arm, tau) for arm in range(n)])
    sets = instance.sets()
    answer = max(sets, key=lambda s: (float(values[list(s)].sum()) if s else 0.0,
                                      [-i for i in sorted(s)]))
    return AlgoResult(answer, pulls=n * tau, rounds=1)
