"""Combinatorial pure-exploration bandit toolkit.

Instance-complexity programs, gap-elimination samplers for explicit and
oracle-backed feasible families, a two-stage sampler for general answer
regions, a parallel-simulation correctness booster, hard-instance
generators, and a seeded experiment harness with a CLI (``cpe``).
"""

from .core import (
    Allocation,
    BestSetInstance,
    EmpiricalMeans,
    ExplicitFamily,
    GaussianEnvironment,
    MeanProfile,
    arm_gap,
    group_index,
    set_weight,
)
from .efficient import efficient_gap_elim
from .general import lp_sample
from .instances import BallTestConfig, ball_test, disj_sets_instance, nw_design, or_instance
from .lower_bounds import best_set_lower_bound, gap_hardness, general_lower_bound
from .naive import AlgoResult, naive_gap_elim, simult_est, verify_alloc
from .oracles import (
    ExplicitOracle,
    MatchingOracle,
    ParetoPoint,
    PathOracle,
    SpanningTreeOracle,
    exact_decide,
    max_weight,
    pareto_eps,
    second_best,
)
from .parallel import parallel_simulate
from .regions import (
    CountAboveRegion,
    GeneralSampInstance,
    PolyhedronRegion,
    TopSetRegion,
    region_min_sqdist,
)

__all__ = [
    "AlgoResult", "Allocation", "BallTestConfig", "BestSetInstance",
    "CountAboveRegion", "EmpiricalMeans", "ExplicitFamily", "ExplicitOracle",
    "GaussianEnvironment", "GeneralSampInstance", "MatchingOracle", "MeanProfile",
    "ParetoPoint", "PathOracle", "PolyhedronRegion", "SpanningTreeOracle",
    "TopSetRegion", "arm_gap", "ball_test", "best_set_lower_bound",
    "disj_sets_instance", "efficient_gap_elim", "exact_decide", "gap_hardness",
    "general_lower_bound", "group_index", "lp_sample", "max_weight",
    "naive_gap_elim", "nw_design", "or_instance", "parallel_simulate",
    "pareto_eps", "region_min_sqdist", "second_best", "set_weight", "simult_est",
    "verify_alloc",
]

__version__ = "0.1.0"
