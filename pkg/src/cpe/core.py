"""Ground-truth instances, the simulated Gaussian sampling environment, and
elementary set-weight / gap computations shared by every sampler.

Arms are indexed 0..n-1.  A feasible family is a collection of distinct
subsets of the arms; the target is the unique member with the largest total
mean.  All rewards are Gaussian with unit variance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

IndexSet = frozenset[int]

#: Per-arm sample budget (floats; ceil before pulling).
Allocation = np.ndarray

ENUM_CAP = 100_000


def canonical_sets(sets: Iterable[Iterable[int]]) -> tuple[IndexSet, ...]:
    """Freeze and sort a collection of index sets (lexicographic on sorted members)."""
    frozen = [frozenset(int(i) for i in s) for s in sets]
    frozen.sort(key=lambda s: tuple(sorted(s)))
    return tuple(frozen)


@dataclass(frozen=True)
class MeanProfile:
    """Ground-truth arm means (unit-variance Gaussian rewards)."""

    means: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.means, dtype=float)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("means must be a non-empty 1-d vector")
        if not np.all(np.isfinite(arr)):
            raise ValueError("means must be finite")
        object.__setattr__(self, "means", arr)

    @property
    def n(self) -> int:
        return int(self.means.size)


class ExplicitFamily:
    """A feasible family given as an explicit list of distinct index sets."""

    def __init__(self, sets: Iterable[Iterable[int]]):
        self.sets = canonical_sets(sets)
        if not self.sets:
            raise ValueError("family must contain at least one set")
        if len(set(self.sets)) != len(self.sets):
            raise ValueError("family sets must be distinct")
        for s in self.sets:
            if any(i < 0 for i in s):
                raise ValueError("arm indices must be nonnegative")

    def __len__(self) -> int:
        return len(self.sets)

    def __iter__(self) -> Iterator[IndexSet]:
        return iter(self.sets)

    def min_arms(self) -> int:
        return max((max(s) + 1 for s in self.sets if s), default=0)


def set_weight(profile: MeanProfile | np.ndarray, s: Iterable[int]) -> float:
    """Total weight of an index set under a mean vector; the empty set weighs 0."""
    values = profile.means if isinstance(profile, MeanProfile) else np.asarray(profile, dtype=float)
    idx = list(s)
    if not idx:
        return 0.0
    if min(idx) < 0 or max(idx) >= values.size:
        raise IndexError(f"arm index out of range for {values.size} arms")
    return float(values[idx].sum())


@dataclass(frozen=True)
class BestSetInstance:
    """A mean profile plus a feasible family with a unique optimum.

    ``family`` is either an :class:`ExplicitFamily` or any oracle object
    exposing ``enumerate_sets(cap)`` (see ``cpe.oracles``).  Uniqueness of the
    optimum is checked at construction by enumeration.
    """

    profile: MeanProfile
    family: object
    _optimum: IndexSet = field(init=False, repr=False)

    def __post_init__(self) -> None:
        sets = self.sets()
        weights = [set_weight(self.profile, s) for s in sets]
        order = sorted(range(len(sets)), key=lambda i: -weights[i])
        if len(sets) > 1 and weights[order[0]] <= weights[order[1]]:
            raise ValueError("feasible family does not have a unique maximum-weight set")
        object.__setattr__(self, "_optimum", sets[order[0]])

    @property
    def n(self) -> int:
        return self.profile.n

    @property
    def optimum(self) -> IndexSet:
        return self._optimum

    def is_explicit(self) -> bool:
        return isinstance(self.family, ExplicitFamily)

    def sets(self, cap: int = ENUM_CAP) -> tuple[IndexSet, ...]:
        """Materialize the family (explicit list, or oracle enumeration up to ``cap``)."""
        if isinstance(self.family, ExplicitFamily):
            return self.family.sets
        return canonical_sets(self.family.enumerate_sets(cap=cap))


def arm_gap(instance: BestSetInstance, arm: int) -> float | None:
    """Per-arm optimality gap.

    For an arm inside the optimum O: weight(O) minus the best feasible set
    avoiding the arm.  For an arm outside O: weight(O) minus the best feasible
    set containing it.  Returns ``None`` (the "unconstrained" marker) when no
    qualifying alternative exists, so callers can drop the 1/gap**2 term
    instead of doing infinity arithmetic.
    """
    if not 0 <= arm < instance.n:
        raise IndexError("arm index out of range")
    opt = instance.optimum
    w_opt = set_weight(instance.profile, opt)
    if arm in opt:
        candidates = [s for s in instance.sets() if arm not in s]
    else:
        candidates = [s for s in instance.sets() if arm in s]
    if not candidates:
        return None
    best = max(set_weight(instance.profile, s) for s in candidates)
    return w_opt - best


def group_index(gap: float) -> int:
    """Dyadic group of a positive gap: the unique r >= 0 with gap in (2**-(r+1), 2**-r].

    Gaps above 1 are clamped into group 0.  Exact powers of two sit at the
    top of their group (0.5 -> 1).  Implemented with ``frexp`` so boundaries
    are resolved exactly in binary floating point.
    """
    if not (isinstance(gap, (int, float)) and math.isfinite(gap)) or gap <= 0:
        raise ValueError("gap must be a positive finite number")
    mantissa, exponent = math.frexp(float(gap))  # gap = mantissa * 2**exponent, mantissa in [0.5, 1)
    r = 1 - exponent if mantissa == 0.5 else -exponent
    return max(r, 0)


class GaussianEnvironment:
    """Simulated unit-variance Gaussian arms with pull accounting.

    Randomness is counter-based: one independent stream per (seed, stream
    key, arm), so runs are bit-reproducible and spawned sub-environments
    (used by the parallel meta-runner) never share draws.

    ``pull_mean(arm, count)`` returns the empirical mean of ``count`` fresh
    pulls, drawn as a single N(mu, 1/count) variate.  This is distributionally
    identical to averaging ``count`` unit-variance draws and is what makes
    desk-scale experiments with multi-million-sample budgets tractable.
    """

    def __init__(self, profile: MeanProfile, seed: int, stream: tuple[int, ...] = ()):
        self.profile = profile
        self.seed = int(seed)
        self.stream = tuple(int(k) for k in stream)
        self.pulls = np.zeros(profile.n, dtype=np.int64)
        self._rngs: dict[int, np.random.Generator] = {}

    def _rng(self, arm: int) -> np.random.Generator:
        rng = self._rngs.get(arm)
        if rng is None:
            ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self.stream + (arm,))
            rng = np.random.Generator(np.random.Philox(ss))
            self._rngs[arm] = rng
        return rng

    @property
    def n(self) -> int:
        return self.profile.n

    @property
    def total_pulls(self) -> int:
        return int(self.pulls.sum())

    def pull(self, arm: int) -> float:
        return self.pull_mean(arm, 1)

    def pull_mean(self, arm: int, count: int) -> float:
        if not 0 <= arm < self.n:
            raise IndexError("arm index out of range")
        count = int(count)
        if count < 1:
            raise ValueError("count must be >= 1")
        self.pulls[arm] += count
        mu = float(self.profile.means[arm])
        return mu + float(self._rng(arm).standard_normal()) / math.sqrt(count)

    def pull_mean_group(self, arm: int, count_each: int, copies: int) -> np.ndarray:
        """``copies`` independent empirical means of ``count_each`` pulls each."""
        if not 0 <= arm < self.n:
            raise IndexError("arm index out of range")
        count_each, copies = int(count_each), int(copies)
        if count_each < 1 or copies < 1:
            raise ValueError("count_each and copies must be >= 1")
        self.pulls[arm] += count_each * copies
        mu = float(self.profile.means[arm])
        return mu + self._rng(arm).standard_normal(copies) / math.sqrt(count_each)

    def spawn(self, key: int) -> "GaussianEnvironment":
        """Independent child environment (fresh streams, own counters)."""
        return GaussianEnvironment(self.profile, self.seed, self.stream + (int(key),))


@dataclass
class EmpiricalMeans:
    """Per-arm empirical means; ``values[i]`` is meaningful only where ``counts[i] > 0``."""

    values: np.ndarray
    counts: np.ndarray

    @classmethod
    def zeros(cls, n: int) -> "EmpiricalMeans":
        return cls(np.zeros(n), np.zeros(n, dtype=np.int64))

    def set_value(self, s: Iterable[int]) -> float:
        """Empirical weight of a set; unpulled arms contribute 0 (they cancel in
        any comparison the samplers make, see the allocation programs)."""
        return set_weight(self.values, s)


def ceil_allocation(alloc: Allocation) -> np.ndarray:
    """Round a real-valued budget up to integers (zeros stay zero)."""
    arr = np.asarray(alloc, dtype=float)
    if np.any(arr < 0):
        raise ValueError("allocation entries must be nonnegative")
    return np.ceil(arr - 1e-12).astype(np.int64).clip(min=0)
