"""Acceptance gate: one test per criterion, each printing a PASS line with
its measured quantities (run with ``pytest tests/test_acceptance.py -v -s``).

Statistical checks use three-sigma slack on binomial frequencies; scaling
checks compare pull medians; closed-form checks pin relative tolerances.
"""

import itertools
import json
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from conftest import random_explicit_instance, sigma3
from cpe.alloc_program import solve_inverse_budget
from cpe.baseline import uniform_baseline
from cpe.core import BestSetInstance, ExplicitFamily, GaussianEnvironment, MeanProfile, set_weight
from cpe.efficient import efficient_gap_elim, simult_alloc_implicit
from cpe.formats import best_set_as_general, instance_document
from cpe.general import lp_sample
from cpe.instances import BallTestConfig, ball_test, disj_sets_instance, nw_design
from cpe.lower_bounds import best_set_lower_bound, gap_hardness
from cpe.naive import naive_gap_elim, naive_gap_elim_core
from cpe.oracles import ExplicitOracle
from cpe.parallel import parallel_simulate
from cpe.regions import CountAboveRegion, GeneralSampInstance


def report(num, ok, detail):
    flag = "PASS" if ok else "FAIL"
    print(f"[criterion {num:02d}] {flag}: {detail}")
    assert ok, f"criterion {num:02d}: {detail}"


def test_c01_lower_bound_closed_forms(tmp_path):
    budget = 0.0
    worst = 0.0
    for k in (2, 4, 8):
        for eps in (0.25, 0.5):
            path = tmp_path / f"disj_{k}_{eps}.json"
            path.write_text(json.dumps(instance_document(disj_sets_instance(k, eps))))
            start = time.perf_counter()
            out = subprocess.run([sys.executable, "-m", "cpe.cli", "lb", str(path)],
                                 capture_output=True, text=True, timeout=30)
            wall = time.perf_counter() - start
            budget = max(budget, wall)
            fields = out.stdout.strip().splitlines()[1].split(",")
            low, hard = float(fields[1]), float(fields[2])
            worst = max(worst,
                        abs(low - 4.0 / eps**2) / (4.0 / eps**2),
                        abs(hard - 2.0 / (k * eps**2)) / (2.0 / (k * eps**2)))
    report(1, worst <= 0.005 and budget < 1.0,
           f"max relative error {worst:.2e} (tol 0.5%), slowest call {budget:.2f}s (< 1s)")


def test_c02_low_dominates_gap_hardness():
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    margin = math.inf
    for _ in range(200):
        inst = random_explicit_instance(rng, n_max=8, f_max=12)
        low = best_set_lower_bound(inst).value
        hard = gap_hardness(inst).value
        assert low >= hard * (1.0 - 1e-6), (low, hard)
        if hard > 0:
            margin = min(margin, low / hard)
    wall = time.perf_counter() - start
    report(2, wall < 30.0, f"200 instances, min Low/H ratio {margin:.3f} >= 1, {wall:.1f}s (< 30s)")


def test_c03_wrapped_eliminator_delta_correct():
    inst = BestSetInstance(MeanProfile(np.array([0.1, 0.0])), ExplicitFamily([[0], [1]]))
    delta, trials = 0.05, 2000
    start = time.perf_counter()
    wrong = 0
    for seed in range(trials):
        env = GaussianEnvironment(inst.profile, seed)
        res = parallel_simulate(
            lambda conf: naive_gap_elim_core(inst.family.sets, inst.n, conf), delta, env)
        assert not res.is_error
        wrong += res.answer != inst.optimum
    wall = time.perf_counter() - start
    rate = wrong / trials
    limit = delta + sigma3(delta, trials)
    report(3, rate <= limit and wall < 300.0,
           f"wrong-answer rate {rate:.4f} <= {limit:.4f}, {wall:.0f}s (< 300s)")


def test_c04_arm_count_separation():
    eps, delta, trials = 0.25, 0.005, 500
    start = time.perf_counter()
    med_elim, med_base = {}, {}
    for k in (8, 32):
        inst = disj_sets_instance(k, eps)
        elim, base = [], []
        for seed in range(trials):
            env = GaussianEnvironment(inst.profile, seed)
            res = naive_gap_elim(env, inst, delta)
            assert res.answer == inst.optimum
            elim.append(res.pulls)
            env = GaussianEnvironment(inst.profile, 10**6 + seed)
            base.append(uniform_baseline(env, inst, eps, delta).pulls)
        med_elim[k] = float(np.median(elim))
        med_base[k] = float(np.median(base))
    wall = time.perf_counter() - start
    r_elim = max(med_elim[32] / med_elim[8], med_elim[8] / med_elim[32])
    r_base = med_base[32] / med_base[8]
    report(4, r_elim <= 2.0 and r_base >= 3.0 and wall < 600.0,
           f"eliminator n16/n64 median ratio {r_elim:.2f} (<= 2), "
           f"per-arm baseline ratio {r_base:.2f} (>= 3), {wall:.0f}s (< 600s)")


def test_c05_cross_algorithm_consistency():
    rng = np.random.default_rng(55)
    instances = [random_explicit_instance(rng, n_max=8, f_max=12, gap_floor=0.15)
                 for _ in range(40)]
    start = time.perf_counter()
    agree = truth_a = truth_b = 0
    total = 0
    for i, inst in enumerate(instances):
        for rep in range(5):
            seed = 7000 + 100 * i + rep
            res_a = naive_gap_elim(GaussianEnvironment(inst.profile, seed), inst, 0.01)
            res_b = efficient_gap_elim(GaussianEnvironment(inst.profile, seed), inst, 0.01)
            total += 1
            agree += res_a.answer == res_b.answer
            truth_a += res_a.answer == inst.optimum
            truth_b += res_b.answer == inst.optimum
    wall = time.perf_counter() - start
    report(5, agree >= 0.95 * total and truth_a >= 0.95 * total and truth_b >= 0.95 * total
           and wall < 600.0,
           f"{total} paired trials: agreement {agree}/{total}, truth "
           f"{truth_a}/{total} and {truth_b}/{total} (>= 95%), {wall:.0f}s (< 600s)")


def test_c06_separation_oracle_soundness():
    rng = np.random.default_rng(66)
    start = time.perf_counter()
    worst_ratio = 0.0
    for _ in range(8):
        inst = random_explicit_instance(rng, n_max=8, f_max=10, gap_floor=0.05)
        oracle = ExplicitOracle(inst.family.sets, inst.n)
        mu = inst.profile.means
        values = [set_weight(mu, s) for s in oracle.sets]
        theta_high = min(values) - 0.01
        theta_low = theta_high - 0.02
        eps, delta = 0.1, 0.01
        alloc, _ = simult_alloc_implicit(oracle, mu, theta_high, theta_low, eps, delta)
        bound = eps**2 / (2.0 * math.log(2.0 / delta))
        for a, b in itertools.combinations(oracle.sets, 2):
            inv = sum(1.0 / alloc[i] for i in a ^ b)
            assert inv <= bound * (1.0 + 1e-9), "pairwise constraint violated"
        rhs = eps**2 / (2.0 * math.log(2.0 / delta))
        tight = solve_inverse_budget(
            inst.n, [(a ^ b, rhs) for a, b in itertools.combinations(oracle.sets, 2)]).value
        worst_ratio = max(worst_ratio, alloc.sum() / tight)
    wall = time.perf_counter() - start
    report(6, worst_ratio <= 8.0 and wall < 120.0,
           f"all pairwise constraints hold; objective <= {worst_ratio:.2f}x the tightened "
           f"optimum (<= 8x), {wall:.0f}s (< 120s)")


def test_c07_general_sampler_correct_and_calibrated():
    best_arm = best_set_as_general(
        BestSetInstance(MeanProfile(np.array([1.0, 0.0])), ExplicitFamily([[0], [1]])))
    threshold = GeneralSampInstance(
        MeanProfile(np.array([0.5, -0.5, 1.5])),
        tuple(CountAboveRegion(0.0, j, 3) for j in range(4)))
    delta = 0.05
    start = time.perf_counter()
    wrong = total = 0
    for gi in (best_arm, threshold):
        for seed in range(1000):
            env = GaussianEnvironment(gi.profile, seed)
            res = lp_sample(env, gi, delta)
            total += 1
            wrong += (not res.is_error) and res.answer != gi.truth
            if "lp_value" in res.diagnostics:
                assert res.diagnostics["lp_value"] <= res.diagnostics["lp_bound"] * (1 + 1e-9)
    wall = time.perf_counter() - start
    rate = wrong / total
    limit = delta + sigma3(delta, total)
    report(7, rate <= limit and wall < 300.0,
           f"wrong-answer rate {rate:.4f} <= {limit:.4f} over {total} trials; LP bound "
           f"held on every run, {wall:.0f}s (< 300s)")


def test_c08_ball_tester_accuracy_and_scaling():
    n, r, delta, trials = 64, 0.5, 0.05, 400
    cfg = BallTestConfig(np.zeros(n), r)
    start = time.perf_counter()
    inside = outside = 0
    for seed in range(trials):
        env = GaussianEnvironment(MeanProfile(np.zeros(n)), seed)
        inside += ball_test(env, cfg, delta, np.random.default_rng(seed)).answer == "inside"
        means = np.zeros(n)
        means[seed % n] = r
        env = GaussianEnvironment(MeanProfile(means), 10**7 + seed)
        outside += ball_test(env, cfg, delta,
                             np.random.default_rng(10**7 + seed)).answer == "outside"

    def median_pulls(nn):
        pulls = []
        for seed in range(5):
            env = GaussianEnvironment(MeanProfile(np.zeros(nn)), seed)
            res = ball_test(env, BallTestConfig(np.zeros(nn), r), delta,
                            np.random.default_rng(seed))
            pulls.append(res.pulls)
        return float(np.median(pulls))

    ratio = median_pulls(256) / median_pulls(64)
    wall = time.perf_counter() - start
    report(8, inside >= 0.95 * trials and outside >= 0.95 * trials and ratio <= 8.0
           and wall < 600.0,
           f"inside {inside}/{trials}, outside {outside}/{trials} (>= 95%); pull ratio "
           f"n256/n64 = {ratio:.2f} (<= 8), {wall:.0f}s (< 600s)")


def test_c09_tail_bound_monte_carlo():
    from cpe import stats

    rng = np.random.default_rng(99)
    start = time.perf_counter()
    for n, x in [(1, 0.5), (4, 1.0), (4, 2.0), (16, 2.0)]:
        draws = rng.chisquare(n, size=300_000)
        freq = float(np.mean(draws >= 2 * n + 3 * x))
        bound = stats.chi2_tail(n, x)
        assert freq <= bound + sigma3(bound, 300_000) + 1e-12, (n, x, freq, bound)
    for _ in range(6):
        k = int(rng.integers(1, 6))
        tau = rng.integers(1, 40, size=k)
        eps = float(rng.uniform(0.3, 1.5))
        bound = stats.sum_dev_tail(eps, float(np.sum(1.0 / tau)))
        dev = np.zeros(60_000)
        for i in range(k):
            dev += rng.standard_normal(60_000) / math.sqrt(tau[i])
        freq = float(np.mean(np.abs(dev) >= eps))
        assert freq <= bound + sigma3(min(bound, 0.999), 60_000) + 1e-12
    wall = time.perf_counter() - start
    report(9, wall < 120.0, f"all exceedance frequencies under their bounds, {wall:.0f}s (< 120s)")


def test_c10_design_generation():
    start = time.perf_counter()
    for n, m in ((100, 16), (200, 64)):
        design = nw_design(n, m, seed=5)
        ell = n // 10
        assert all(len(s) == ell for s in design.sets)
        for i, a in enumerate(design.sets):
            for b in design.sets[i + 1:]:
                assert len(a & b) <= ell / 2
    wall = time.perf_counter() - start
    report(10, wall < 5.0, f"designs (100,16) and (200,64) verified exhaustively, "
           f"{wall:.2f}s (< 5s)")
