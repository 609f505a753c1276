import numpy as np
import pytest

from cpe.core import BestSetInstance, ExplicitFamily, GaussianEnvironment, MeanProfile
from cpe.naive import AlgoResult, naive_gap_elim_core
from cpe.parallel import parallel_simulate


def scripted(requests, answer=None, error=None, record=None):
    """A deterministic sampler consuming the given (arm, count) requests."""

    def factory(conf):
        def gen():
            for arm, count in requests:
                value = yield (arm, count)
                if record is not None:
                    record.append((conf, arm, count, value))
            if error is not None:
                return AlgoResult(None, error=error, pulls=sum(c for _, c in requests))
            return AlgoResult(answer, pulls=sum(c for _, c in requests))

        return gen()

    return factory


def env_of(n=1, seed=0):
    return GaussianEnvironment(MeanProfile(np.zeros(n)), seed)


def test_instant_answer_costs_nothing():
    res = parallel_simulate(scripted([], answer="done"), 0.05, env_of())
    assert res.answer == "done"
    assert res.pulls == 0
    assert res.diagnostics["winner"] == 0


def test_failover_to_second_copy_with_bounded_overhead():
    calls = []

    def factory(conf):
        k = len(calls)
        calls.append(conf)
        if k == 0:
            return scripted([(0, 1)] * 3, error="bad luck")(conf)
        return scripted([(0, 1)] * 5, answer="ok")(conf)

    res = parallel_simulate(factory, 0.04, env_of())
    assert res.answer == "ok"
    assert res.diagnostics["winner"] == 1
    # confidence split: copy k runs at delta / 2**(k+1)
    assert calls[0] == pytest.approx(0.02)
    assert calls[1] == pytest.approx(0.01)
    # overhead bound: at most 2x the winner's pulls plus the failed copy's
    per = res.diagnostics["per_copy_pulls"]
    assert per[0] == 3 and per[1] == 5
    assert res.pulls <= 2 * 5 + 3


def test_exact_schedule_accounting():
    # copy 0 errors after 3 single-sample turns (slots 1, 2, 3);
    # copy 1 wins after 5 turns, i.e. at slot 2 * 5 = 10;
    # copy 2 (spawned at slot 4) gets floor(10 / 4) = 2 turns by then;
    # copy 3 (slot 8) gets 1; copy 4 would spawn at 16 > 10 and never runs.
    order = []

    def factory(conf):
        k = len(order)
        order.append(k)
        if k == 0:
            return scripted([(0, 1)] * 3, error="x")(conf)
        if k == 1:
            return scripted([(0, 1)] * 5, answer="win")(conf)
        return scripted([(0, 1)] * 100, answer="slow")(conf)

    res = parallel_simulate(factory, 0.05, env_of())
    per = res.diagnostics["per_copy_pulls"]
    assert res.answer == "win"
    assert per[0] == 3 and per[1] == 5
    assert per.get(2, 0) == 2 and per.get(3, 0) == 1
    assert 4 not in per
    assert res.pulls == 3 + 5 + 2 + 1


def test_batched_requests_follow_slot_arithmetic():
    # copy 0 errors immediately; copy 1 asks for one batch of 4 samples,
    # completing on its 4th turn, slot 2 * 4 = 8.  Ties at a slot advance in
    # ascending copy order, so the winner returns before copy 2's second turn
    # (slot 8) and copy 3's first turn (slot 8) happen.
    def factory(conf):
        k = factory.k
        factory.k += 1
        if k == 0:
            return scripted([], error="x")(conf)
        if k == 1:
            return scripted([(0, 4)], answer="batched")(conf)
        return scripted([(0, 1)] * 50, answer="slow")(conf)

    factory.k = 0
    res = parallel_simulate(factory, 0.05, env_of())
    assert res.answer == "batched"
    per = res.diagnostics["per_copy_pulls"]
    assert per[1] == 4 and per.get(2, 0) == 1 and per.get(3, 0) == 0


def test_all_copies_fail():
    res = parallel_simulate(scripted([(0, 1)], error="nope"), 0.05, env_of(), max_copies=3)
    assert res.is_error


def test_copies_draw_from_independent_streams():
    record = []
    def factory(conf):
        if factory.k == 0:
            factory.k += 1
            return scripted([(0, 1)] * 2, error="x", record=record)(conf)
        return scripted([(0, 1)] * 2, answer="ok", record=record)(conf)

    factory.k = 0
    parallel_simulate(factory, 0.05, env_of(seed=3))
    values_by_conf = {}
    for conf, _, _, value in record:
        values_by_conf.setdefault(conf, []).append(value)
    streams = list(values_by_conf.values())
    assert len(streams) == 2 and streams[0] != streams[1]


def test_determinism_end_to_end():
    inst = BestSetInstance(MeanProfile(np.array([0.4, 0.0])), ExplicitFamily([[0], [1]]))

    def run(seed):
        env = GaussianEnvironment(inst.profile, seed)
        return parallel_simulate(
            lambda conf: naive_gap_elim_core(inst.family.sets, inst.n, conf), 0.05, env)

    a, b = run(12), run(12)
    assert a.answer == b.answer and a.pulls == b.pulls
    assert a.diagnostics["per_copy_pulls"] == b.diagnostics["per_copy_pulls"]


def test_wrapped_eliminator_smoke():
    inst = BestSetInstance(MeanProfile(np.array([0.2, 0.0])), ExplicitFamily([[0], [1]]))
    wrong = 0
    for seed in range(200):
        env = GaussianEnvironment(inst.profile, seed)
        res = parallel_simulate(
            lambda conf: naive_gap_elim_core(inst.family.sets, inst.n, conf), 0.05, env)
        assert not res.is_error
        wrong += res.answer != inst.optimum
    assert wrong <= 5
