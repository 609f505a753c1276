"""Seeded trial batches over any of the samplers, with CSV reporting.

Each trial gets an independent environment derived from (seed, trial); rows
are assembled in trial order so a fixed seed reproduces the output file
exactly (pass ``timing=False`` to zero the wall-clock column, which is
reported for convenience and is never part of any acceptance check).
"""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .baseline import uniform_baseline
from .core import GaussianEnvironment
from .efficient import efficient_gap_elim_core
from .formats import LoadedInstance, best_set_as_general, load_instance
from .general import lp_sample, lp_sample_core
from .instances import ball_test, ball_truth
from .lower_bounds import best_set_lower_bound, gap_hardness, general_lower_bound
from .naive import AlgoResult, drive, naive_gap_elim_core
from .oracles import ExplicitOracle, FamilyOracle
from .parallel import parallel_simulate
from .regions import region_min_sqdist

ALGORITHMS = (
    "naive", "efficient", "lpsample", "ball", "uniform",
    "wrapped-naive", "wrapped-efficient", "wrapped-lpsample",
)

CSV_HEADER = "trial,seed,answer,correct,total_pulls,rounds,wall_ms"


@dataclass
class ExperimentConfig:
    instance_path: str
    algorithm: str
    delta: float
    trials: int
    seed: int
    out_path: str | None = None
    baseline_eps: float | None = None
    workers: int = 1
    timing: bool = True

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 0 < self.delta < 0.1:
            raise ValueError("delta must lie in (0, 0.1)")


@dataclass
class RunRow:
    trial: int
    seed: int
    answer: str
    correct: bool
    total_pulls: int
    rounds: int
    wall_ms: int


@dataclass
class RunReport:
    rows: list[RunRow]
    error_rate: float
    pull_quantiles: dict[str, float]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER.split(","))
        for row in self.rows:
            writer.writerow([row.trial, row.seed, row.answer, int(row.correct),
                             row.total_pulls, row.rounds, row.wall_ms])
        return buf.getvalue()


def trial_seed(seed: int, trial: int) -> int:
    return int(np.random.SeedSequence(entropy=int(seed), spawn_key=(int(trial),))
               .generate_state(1)[0])


def _fmt_answer(answer) -> str:
    if answer is None:
        return "error"
    if isinstance(answer, frozenset):
        return "|".join(str(i) for i in sorted(answer))
    return str(answer)


def run_trial(loaded: LoadedInstance, algorithm: str, delta: float, seed_t: int,
              baseline_eps: float | None = None) -> tuple[AlgoResult, str, bool]:
    """One seeded trial; returns (result, answer string, correctness)."""
    env = GaussianEnvironment(loaded.profile, seed_t)

    if algorithm in ("naive", "wrapped-naive", "uniform"):
        inst = loaded.best_set
        if inst is None or not inst.is_explicit():
            raise ValueError(f"{algorithm} needs an explicit Best-Set instance")
        if algorithm == "naive":
            result = drive(naive_gap_elim_core(inst.family.sets, inst.n, delta), env)
        elif algorithm == "uniform":
            if baseline_eps is None:
                raise ValueError("the uniform baseline needs --baseline-eps")
            result = uniform_baseline(env, inst, baseline_eps, delta)
        else:
            result = parallel_simulate(
                lambda conf: naive_gap_elim_core(inst.family.sets, inst.n, conf), delta, env)
        return result, _fmt_answer(result.answer), result.answer == inst.optimum

    if algorithm in ("efficient", "wrapped-efficient"):
        inst = loaded.best_set
        if inst is None:
            raise ValueError(f"{algorithm} needs a Best-Set instance")
        oracle = inst.family
        if not isinstance(oracle, FamilyOracle):
            oracle = ExplicitOracle(inst.family.sets, inst.n)
        if algorithm == "efficient":
            result = drive(efficient_gap_elim_core(oracle, delta), env)
        else:
            result = parallel_simulate(
                lambda conf: efficient_gap_elim_core(oracle, conf), delta, env)
        return result, _fmt_answer(result.answer), result.answer == inst.optimum

    if algorithm in ("lpsample", "wrapped-lpsample"):
        if loaded.kind == "general":
            gi = loaded.general
        elif loaded.best_set is not None and loaded.best_set.is_explicit():
            gi = best_set_as_general(loaded.best_set)
        else:
            raise ValueError("lpsample needs a general instance or an explicit Best-Set file")
        if algorithm == "lpsample":
            result = lp_sample(env, gi, delta)
        else:
            result = parallel_simulate(lambda conf: lp_sample_core(gi, conf), delta, env)
        return result, _fmt_answer(result.answer), result.answer == gi.truth

    if algorithm == "ball":
        if loaded.kind != "ball":
            raise ValueError("the ball tester needs a ball instance document")
        profile, config = loaded.ball
        rng = np.random.Generator(np.random.Philox(
            np.random.SeedSequence(entropy=seed_t, spawn_key=(2**20,))))
        result = ball_test(env, config, delta, rng)
        return result, _fmt_answer(result.answer), result.answer == ball_truth(
            profile.means, config)

    raise ValueError(f"unknown algorithm {algorithm!r}")


_POOL_STATE: dict = {}


def _pool_init(path, algorithm, delta, baseline_eps):
    _POOL_STATE["loaded"] = load_instance(path)
    _POOL_STATE["args"] = (algorithm, delta, baseline_eps)


def _pool_trial(task):
    trial, seed_t, timing = task
    algorithm, delta, baseline_eps = _POOL_STATE["args"]
    return _timed_trial(_POOL_STATE["loaded"], algorithm, delta, trial, seed_t,
                        baseline_eps, timing)


def _timed_trial(loaded, algorithm, delta, trial, seed_t, baseline_eps, timing):
    start = time.perf_counter()
    result, answer, correct = run_trial(loaded, algorithm, delta, seed_t, baseline_eps)
    wall = int(round(1000.0 * (time.perf_counter() - start))) if timing else 0
    return RunRow(trial, seed_t, answer, correct, result.pulls, result.rounds, wall)


def run_experiment(config: ExperimentConfig) -> RunReport:
    loaded = load_instance(config.instance_path)
    tasks = [(t, trial_seed(config.seed, t), config.timing) for t in range(config.trials)]

    if config.workers > 1:
        import multiprocessing as mp

        with mp.Pool(config.workers, initializer=_pool_init,
                     initargs=(config.instance_path, config.algorithm, config.delta,
                               config.baseline_eps)) as pool:
            rows = pool.map(_pool_trial, tasks)
    else:
        rows = [_timed_trial(loaded, config.algorithm, config.delta, t, s,
                             config.baseline_eps, timing)
                for (t, s, timing) in tasks]

    rows.sort(key=lambda r: r.trial)
    pulls = np.array([r.total_pulls for r in rows], dtype=float)
    report = RunReport(
        rows=rows,
        error_rate=float(np.mean([not r.correct for r in rows])),
        pull_quantiles={"p10": float(np.quantile(pulls, 0.10)),
                        "p50": float(np.quantile(pulls, 0.50)),
                        "p90": float(np.quantile(pulls, 0.90))},
    )
    if config.out_path:
        with open(config.out_path, "w", encoding="utf-8") as fh:
            fh.write(report.to_csv())
    return report


# ---------------------------------------------------------------------------
# Lower-bound reporting
# ---------------------------------------------------------------------------

LB_HEADER = "kind,low,hardness,delta,ratio"


@dataclass
class LbReport:
    kind: str
    low: float
    hardness: float | None
    delta_gap: float
    ratio: float
    allocation: np.ndarray
    certificate: list = field(default_factory=list)

    def csv_rows(self, full: bool = False) -> str:
        hard = "" if self.hardness is None else f"{self.hardness:.10g}"
        lines = [LB_HEADER,
                 f"{self.kind},{self.low:.10g},{hard},{self.delta_gap:.10g},{self.ratio:.10g}"]
        if full:
            lines.append("arm,tau")
            lines.extend(f"{i},{v:.10g}" for i, v in enumerate(self.allocation))
            lines.append("active_constraints")
            lines.extend(str(c) for c in self.certificate)
        return "\n".join(lines) + "\n"


def compute_lb_report(instance_path: str) -> LbReport:
    loaded = load_instance(instance_path)
    if loaded.kind == "best_set":
        inst = loaded.best_set
        low = best_set_lower_bound(inst)
        hard = gap_hardness(inst)
        weights = sorted((float(inst.profile.means[list(s)].sum()) if s else 0.0
                          for s in inst.sets()), reverse=True)
        delta_gap = weights[0] - weights[1] if len(weights) > 1 else math.inf
        ratio = low.value / hard.value if hard.value > 0 else math.nan
        return LbReport("best_set", low.value, hard.value, delta_gap, ratio,
                        low.allocation, low.certificate)
    if loaded.kind == "general":
        gi = loaded.general
        low = general_lower_bound(gi)
        ones = np.ones(gi.n)
        alt = [r for k, r in enumerate(gi.regions) if k != gi.truth]
        delta_gap = math.sqrt(min(region_min_sqdist(r, ones, gi.profile.means)[0]
                                  for r in alt)) if alt else math.inf
        ratio = low.value * delta_gap**2 if math.isfinite(delta_gap) else math.nan
        return LbReport("general", low.value, None, delta_gap, ratio,
                        low.allocation, low.certificate)
    raise ValueError("lower-bound reports apply to best_set and general instances")
