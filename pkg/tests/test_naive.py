import math

import numpy as np
import pytest

from conftest import random_explicit_instance
from cpe.core import (
    BestSetInstance,
    ExplicitFamily,
    GaussianEnvironment,
    MeanProfile,
    set_weight,
)
from cpe.instances import disj_sets_instance
from cpe.naive import LAMBDA, naive_gap_elim, simult_est, verify_alloc


def test_simult_est_single_pair_closed_form():
    # one pair with symmetric difference {0, 1}: m_i = 4 ln(2/delta) / eps^2
    alloc = simult_est([frozenset({0, 2}), frozenset({1, 2})], 3, 0.1, 0.05)
    expect = 4.0 * math.log(2.0 / 0.05) / 0.1**2
    assert alloc[0] == pytest.approx(expect, rel=1e-9)
    assert alloc[1] == pytest.approx(expect, rel=1e-9)
    assert alloc[2] == 0.0
    assert alloc.sum() == pytest.approx(2951.1, abs=0.1)


def test_simult_est_degenerate_inputs():
    assert np.all(simult_est([frozenset({0})], 2, 0.1, 0.05) == 0.0)
    with pytest.raises(ValueError):
        simult_est([frozenset({0}), frozenset({1})], 2, -0.1, 0.05)


def test_simult_est_disjoint_family_symmetric_and_feasible():
    inst = disj_sets_instance(4, 0.5)
    sets = inst.sets()
    eps, delta = 0.05, 0.001
    alloc = simult_est(sets, inst.n, eps, delta)
    assert np.allclose(alloc, alloc[0])
    rhs = eps**2 / (2.0 * math.log(2.0 / delta))
    inv = float(np.sum(1.0 / alloc))
    assert inv <= rhs * (1.0 + 1e-6)
    # single active constraint: the optimum saturates it
    assert inv == pytest.approx(rhs, rel=1e-5)


def test_verify_alloc_single_round_closed_form():
    conj = frozenset({0})
    rounds = [(0.5, (conj, frozenset({1})))]
    with pytest.raises(ValueError):
        verify_alloc(rounds, conj, 2, 0.01)  # final family is not the singleton
    rounds = [(0.5, (conj, frozenset({1}))), (0.25, (conj,))]
    alloc = verify_alloc(rounds, conj, 2, 0.01)
    # tightest constraint: |symmdiff| = 2 at eps = 0.25 vs single round at 0.5;
    # the eps=0.25 level contributes no sets, so eps=0.5 with D={0,1} binds
    rhs = (0.5 / LAMBDA) ** 2 / (2.0 * math.log(2.0 / 0.01))
    assert 1.0 / alloc[0] + 1.0 / alloc[1] <= rhs * (1 + 1e-6)


def test_verify_alloc_single_arm_closed_form():
    conj = frozenset({0, 1})
    other = frozenset({1})  # symmetric difference {0}
    rounds = [(0.5, (conj, other)), (0.25, (conj,))]
    alloc = verify_alloc(rounds, conj, 2, 0.01)
    expect = 2.0 * math.log(2.0 / 0.01) * (LAMBDA / 0.5) ** 2
    assert alloc[0] == pytest.approx(expect, rel=1e-6)
    assert alloc[1] == 0.0


def test_verify_alloc_nested_rounds_feasible():
    conj = frozenset({0})
    fams = [
        (1.0, (conj, frozenset({1}), frozenset({2}))),
        (0.5, (conj, frozenset({1}))),
        (0.25, (conj,)),
    ]
    alloc = verify_alloc(fams, conj, 3, 0.01)
    log_term = 2.0 * math.log(2.0 / 0.01)
    for eps_k, fam in fams:
        rhs = (eps_k / LAMBDA) ** 2 / log_term
        for A in fam:
            if A == conj:
                continue
            inv = sum(1.0 / alloc[i] for i in conj ^ A)
            assert inv <= rhs * (1.0 + 1e-6)
    assert np.all(verify_alloc([(0.5, (conj,))], conj, 3, 0.01) == 0.0)


def test_two_set_instance_high_success():
    inst = BestSetInstance(MeanProfile(np.array([1.0, 0.0])), ExplicitFamily([[0], [1]]))
    wins = 0
    for seed in range(1000):
        env = GaussianEnvironment(inst.profile, seed)
        res = naive_gap_elim(env, inst, 0.005)
        wins += res.answer == frozenset({0})
    assert wins >= 990


def test_single_set_family_returns_without_pulls():
    inst = BestSetInstance(MeanProfile(np.array([1.0, 2.0])), ExplicitFamily([[0, 1]]))
    env = GaussianEnvironment(inst.profile, 0)
    res = naive_gap_elim(env, inst, 0.005)
    assert res.answer == frozenset({0, 1})
    assert res.pulls == 0
    assert env.total_pulls == 0


def test_budget_accounting():
    inst = disj_sets_instance(3, 0.4)
    env = GaussianEnvironment(inst.profile, 5)
    res = naive_gap_elim(env, inst, 0.01)
    assert res.pulls == env.total_pulls
    level_pulls = sum(d["pulls"] for d in res.diagnostics["levels"])
    assert res.pulls == level_pulls + res.diagnostics["verify_pulls"]


def _audited_good(inst, levels):
    """Did every level estimate every surviving pairwise difference to eps/lambda?"""
    means = inst.profile.means
    for diag in levels:
        fam, w, eps = diag["family"], diag["weights"], diag["eps"]
        for A in fam:
            for B in fam:
                est = w[A] - w[B]
                truth = set_weight(means, A) - set_weight(means, B)
                if abs(est - truth) >= eps / LAMBDA:
                    return False
    return True


def test_survival_and_sandwich_on_audited_trials():
    rng = np.random.default_rng(71)
    audited = 0
    for trial in range(30):
        inst = random_explicit_instance(rng, n_max=6, f_max=8, gap_floor=0.1)
        env = GaussianEnvironment(inst.profile, 1000 + trial)
        res = naive_gap_elim(env, inst, 0.01)
        levels = res.diagnostics.get("levels", [])
        if not _audited_good(inst, levels):
            continue
        audited += 1
        opt = inst.optimum
        w_opt = set_weight(inst.profile.means, opt)
        gaps = {A: w_opt - set_weight(inst.profile.means, A) for A in inst.sets()}
        for diag in levels:
            assert opt in diag["family"]
            assert opt in diag["survivors"]
            eps = diag["eps"]
            # survivors all have gap <= eps; everything with gap <= eps/2 survives
            for A in diag["survivors"]:
                assert gaps[A] <= eps + 1e-9
            for A in diag["family"]:
                if gaps[A] <= eps / 2.0:
                    assert A in diag["survivors"]
        assert res.answer == opt
    assert audited >= 25  # the good events are overwhelmingly likely


def test_disj_sets_scaling_smoke():
    pulls = {}
    for k in (8, 32):
        inst = disj_sets_instance(k, 0.25)
        totals = []
        for seed in range(30):
            env = GaussianEnvironment(inst.profile, seed)
            res = naive_gap_elim(env, inst, 0.005)
            assert res.answer == inst.optimum
            totals.append(res.pulls)
        pulls[k] = float(np.median(totals))
    ratio = max(pulls[32] / pulls[8], pulls[8] / pulls[32])
    assert ratio <= 2.0
