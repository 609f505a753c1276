"""Correctness booster: interleave independent copies of a sampler at
geometrically decaying rates until one of them returns an answer.

Copy k runs at confidence delta / 2**(k+1) and is advanced at every time
slot divisible by 2**k, consuming one sample per turn.  The first copy to
terminate without an error decides the output; copies that error are
abandoned.  A routine that is usually-correct-and-cheap but occasionally
errors therefore becomes delta-correct at a constant-factor expected
overhead.

The schedule is simulated event-by-event rather than slot-by-slot: a copy
waiting on a batch of b samples completes its batch at a slot computable in
closed form (its turns are exactly the multiples of 2**k), so the loop jumps
straight between batch completions while preserving the exact slot
arithmetic.  Each copy samples from its own spawned environment stream, so
copies never share randomness.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Generator

from .core import GaussianEnvironment
from .naive import AlgoResult, Request

RunFactory = Callable[[float], Generator[Request, float, AlgoResult]]


@dataclass
class ResumableRun:
    """One suspended sampler execution: either waiting on (arm, count) or done."""

    gen: Generator[Request, float, AlgoResult]
    status: tuple = field(default=("new",))

    def start(self) -> None:
        try:
            arm, count = next(self.gen)
            self.status = ("needs", int(arm), int(count))
        except StopIteration as stop:
            self.status = ("done", stop.value)

    def resume(self, value: float) -> None:
        if self.status[0] != "needs":
            raise RuntimeError("resume called on a finished run")
        try:
            arm, count = self.gen.send(value)
            self.status = ("needs", int(arm), int(count))
        except StopIteration as stop:
            self.status = ("done", stop.value)


def parallel_simulate(
    factory: RunFactory,
    delta: float,
    env: GaussianEnvironment,
    max_total_pulls: int = 10**9,
    max_copies: int = 48,
) -> AlgoResult:
    """Boost ``factory`` (confidence -> sampling generator) to delta-correctness."""
    if not 0 < delta < 0.1:
        raise ValueError("delta must lie in (0, 0.1)")

    copies: dict[int, dict] = {}   # k -> {run, env, done_slot}
    next_k = 0
    total = 0
    per_copy_pulls: dict[int, int] = {}

    def completion_slot(k: int, now: int, count: int) -> int:
        turns_taken = now // (1 << k)
        return (1 << k) * (turns_taken + count)

    now = 0
    while True:
        spawn_slot = (1 << next_k) if next_k <= max_copies else None
        pending = [(info["done_slot"], k) for k, info in copies.items()]
        event = min(pending) if pending else None

        if spawn_slot is not None and (event is None or spawn_slot <= event[0]):
            k = next_k
            next_k += 1
            run = ResumableRun(factory(delta / 2.0 ** (k + 1)))
            run.start()
            if run.status[0] == "done":
                result: AlgoResult = run.status[1]
                per_copy_pulls[k] = 0
                if not result.is_error:
                    return _finish(result, k, total, per_copy_pulls)
                continue
            child = env.spawn(k)
            _, arm, count = run.status
            copies[k] = {
                "run": run,
                "env": child,
                "done_slot": (1 << k) * count,  # first turn is slot 2**k
            }
            per_copy_pulls[k] = 0
            continue

        if event is None:
            return AlgoResult(None, error="all interleaved copies failed", pulls=total,
                              diagnostics={"per_copy_pulls": per_copy_pulls})

        now, k = event
        info = copies[k]
        run: ResumableRun = info["run"]
        _, arm, count = run.status
        value = info["env"].pull_mean(arm, count)
        total += count
        per_copy_pulls[k] += count
        if total > max_total_pulls:
            return AlgoResult(None, error="global pull cap exceeded", pulls=total,
                              diagnostics={"per_copy_pulls": per_copy_pulls})
        run.resume(value)
        if run.status[0] == "done":
            result = run.status[1]
            del copies[k]
            if not result.is_error:
                return _finish(result, k, total, per_copy_pulls)
            continue
        _, arm, count = run.status
        info["done_slot"] = completion_slot(k, now, count)


def _finish(result: AlgoResult, winner: int, total: int, per_copy: dict[int, int]) -> AlgoResult:
    diagnostics = dict(result.diagnostics)
    diagnostics.update({"winner": winner, "per_copy_pulls": per_copy})
    return AlgoResult(result.answer, error=None, pulls=total, rounds=result.rounds,
                      diagnostics=diagnostics)
