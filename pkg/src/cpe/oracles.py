"""Implicit-family machinery: maximization oracles over combinatorial
families (explicit lists, spanning trees, perfect bipartite matchings, s-t
paths), exact-total-weight deciders, approximate Pareto curves, and
second-best computation.

Arms are edge indices for the graph-backed families.  All oracles are
immutable after construction and queries are pure.  Desk-scale note: the
exact-version backend is a true pseudo-polynomial DP only for paths in
directed acyclic graphs; trees, matchings, and undirected paths fall back to
enumeration with a hard cap and a clear error beyond it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .core import IndexSet, canonical_sets

ENUMERATION_CAP = 1_000_000
_MATRIX_CACHE_LIMIT = 65_536


@dataclass(frozen=True)
class ParetoPoint:
    set: IndexSet
    f1: float
    f2: float


def _lex_key(s: IndexSet) -> tuple[int, ...]:
    return tuple(sorted(s))


def _scan_best(sets: Sequence[IndexSet], w: np.ndarray) -> IndexSet:
    best, best_val, best_key = None, -math.inf, None
    for s in sets:
        val = float(w[list(s)].sum()) if s else 0.0
        key = _lex_key(s)
        if val > best_val + 1e-15 or (abs(val - best_val) <= 1e-15 and key < best_key):
            best, best_val, best_key = s, val, key
    return best


class FamilyOracle:
    """Base class; subclasses fill in kind-specific queries."""

    kind: str = "abstract"
    n: int = 0
    log_count_upper: float = 0.0

    def max_weight(self, w: np.ndarray) -> IndexSet:
        raise NotImplementedError

    def enumerate_sets(self, cap: int = ENUMERATION_CAP) -> Iterator[IndexSet]:
        raise NotImplementedError

    # -- shared enumeration cache ------------------------------------------
    def _materialize(self, cap: int = ENUMERATION_CAP):
        cached = getattr(self, "_sets_cache", None)
        if cached is None:
            cached = canonical_sets(self.enumerate_sets(cap=cap))
            object.__setattr__(self, "_sets_cache", cached)
            if len(cached) <= _MATRIX_CACHE_LIMIT:
                M = np.zeros((len(cached), self.n))
                for r, s in enumerate(cached):
                    M[r, list(s)] = 1.0
                object.__setattr__(self, "_matrix_cache", M)
        return cached

    def _set_values(self, f: np.ndarray) -> np.ndarray:
        sets = self._materialize()
        M = getattr(self, "_matrix_cache", None)
        if M is not None:
            return M @ f
        return np.array([f[list(s)].sum() if s else 0.0 for s in sets])


class ExplicitOracle(FamilyOracle):
    kind = "explicit_list"

    def __init__(self, sets: Iterable[Iterable[int]], n: int):
        self.sets = canonical_sets(sets)
        if not self.sets:
            raise ValueError("explicit family must be nonempty")
        self.n = int(n)
        if any(max(s, default=-1) >= self.n for s in self.sets):
            raise ValueError("set index exceeds arm count")
        self.log_count_upper = math.log(len(self.sets))

    def max_weight(self, w):
        return _scan_best(self.sets, np.asarray(w, dtype=float))

    def enumerate_sets(self, cap: int = ENUMERATION_CAP):
        if len(self.sets) > cap:
            raise RuntimeError("family exceeds the enumeration cap")
        return iter(self.sets)


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, a):
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[ra] = rb
        return True


class SpanningTreeOracle(FamilyOracle):
    """Spanning trees of a connected simple undirected graph; arms = edges."""

    kind = "spanning_tree"

    def __init__(self, edges: Sequence[tuple[int, int]], num_vertices: int):
        self.edges = [(int(u), int(v)) for u, v in edges]
        self.num_vertices = int(num_vertices)
        self.n = len(self.edges)
        if self.num_vertices < 2:
            raise ValueError("spanning trees need at least two vertices")
        seen = set()
        for u, v in self.edges:
            if u == v:
                raise ValueError("self-loops are not allowed")
            if not (0 <= u < self.num_vertices and 0 <= v < self.num_vertices):
                raise ValueError("edge endpoint out of range")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ValueError("parallel edges are not supported for spanning trees")
            seen.add(key)
        uf = _UnionFind(self.num_vertices)
        for u, v in self.edges:
            uf.union(u, v)
        if len({uf.find(v) for v in range(self.num_vertices)}) != 1:
            raise ValueError("graph is disconnected: no spanning tree exists")
        # Exact count via the matrix-tree determinant (equals the Cayley
        # bound V**(V-2) on complete graphs, far tighter on sparse ones --
        # the confidence schedules pay for ln|F|, so tight matters).
        L = np.zeros((self.num_vertices, self.num_vertices))
        for u, v in self.edges:
            L[u, u] += 1.0
            L[v, v] += 1.0
            L[u, v] -= 1.0
            L[v, u] -= 1.0
        sign, logdet = np.linalg.slogdet(L[1:, 1:])
        self.log_count_upper = max(0.0, float(logdet)) if sign > 0 else 0.0

    def max_weight(self, w):
        w = np.asarray(w, dtype=float)
        order = sorted(range(self.n), key=lambda e: (-w[e], e))
        uf = _UnionFind(self.num_vertices)
        chosen = []
        for e in order:
            u, v = self.edges[e]
            if uf.union(u, v):
                chosen.append(e)
        return frozenset(chosen)

    def enumerate_sets(self, cap: int = ENUMERATION_CAP):
        import networkx as nx

        G = nx.Graph()
        G.add_nodes_from(range(self.num_vertices))
        for idx, (u, v) in enumerate(self.edges):
            G.add_edge(u, v, idx=idx)
        count = 0
        for tree in nx.SpanningTreeIterator(G):
            count += 1
            if count > cap:
                raise RuntimeError("family exceeds the enumeration cap")
            yield frozenset(d["idx"] for _, _, d in tree.edges(data=True))


class MatchingOracle(FamilyOracle):
    """Perfect matchings of a bipartite graph with equal sides; arms = edges."""

    kind = "bipartite_matching"

    def __init__(self, edges: Sequence[tuple[int, int]], sides: tuple[int, int]):
        self.left, self.right = int(sides[0]), int(sides[1])
        if self.left != self.right or self.left < 1:
            raise ValueError("perfect matchings need equal, positive sides")
        self.edges = [(int(u), int(v)) for u, v in edges]
        self.n = len(self.edges)
        self._cell: dict[tuple[int, int], int] = {}
        for idx, (u, v) in enumerate(self.edges):
            if not (0 <= u < self.left and 0 <= v < self.right):
                raise ValueError("edge endpoint out of range")
            if (u, v) in self._cell:
                raise ValueError("parallel edges are not supported for matchings")
            self._cell[(u, v)] = idx
        self.log_count_upper = sum(math.log(k) for k in range(2, self.left + 1))
        self.max_weight(np.zeros(self.n))  # fails fast when no perfect matching exists

    def max_weight(self, w):
        from scipy.optimize import linear_sum_assignment

        w = np.asarray(w, dtype=float)
        big = 4.0 * (np.abs(w).sum() + 1.0)
        M = np.full((self.left, self.right), -big)
        for (u, v), idx in self._cell.items():
            M[u, v] = w[idx]
        rows, cols = linear_sum_assignment(M, maximize=True)
        chosen = []
        for u, v in zip(rows, cols):
            if (u, v) not in self._cell:
                raise ValueError("graph admits no perfect matching")
            chosen.append(self._cell[(u, v)])
        return frozenset(chosen)

    def enumerate_sets(self, cap: int = ENUMERATION_CAP):
        from itertools import permutations

        count = 0
        for perm in permutations(range(self.right)):
            if all((u, perm[u]) in self._cell for u in range(self.left)):
                count += 1
                if count > cap:
                    raise RuntimeError("family exceeds the enumeration cap")
                yield frozenset(self._cell[(u, perm[u])] for u in range(self.left))


class PathOracle(FamilyOracle):
    """s-t paths; arms = edges.  Directed inputs must be acyclic (the exact
    decider then runs a value-expanded DP); undirected graphs are enumerated."""

    kind = "st_path"

    def __init__(
        self,
        edges: Sequence[tuple[int, int]],
        num_vertices: int,
        s: int,
        t: int,
        directed: bool = False,
    ):
        self.edges = [(int(u), int(v)) for u, v in edges]
        self.num_vertices = int(num_vertices)
        self.s, self.t = int(s), int(t)
        self.directed = bool(directed)
        self.n = len(self.edges)
        if self.s == self.t:
            raise ValueError("s and t must differ")
        for u, v in self.edges:
            if not (0 <= u < self.num_vertices and 0 <= v < self.num_vertices):
                raise ValueError("edge endpoint out of range")
        self._adj: list[list[tuple[int, int]]] = [[] for _ in range(self.num_vertices)]
        for idx, (u, v) in enumerate(self.edges):
            self._adj[u].append((v, idx))
            if not self.directed:
                self._adj[v].append((u, idx))
        for nbrs in self._adj:
            nbrs.sort(key=lambda p: p[1])
        self._topo = self._topological_order() if self.directed else None
        if self.directed and self._topo is None:
            raise ValueError("directed path graphs must be acyclic")
        if not self._reachable():
            raise ValueError("no s-t path exists")
        if self.directed:
            # exact path count by DP over the topological order
            count = [0] * self.num_vertices
            count[self.s] = 1
            for v in self._topo:
                for u, _ in self._adj[v]:
                    count[u] += count[v]
            self.log_count_upper = math.log(max(count[self.t], 1))
        else:
            self.log_count_upper = max(1, self.n) * math.log(2.0)

    def _topological_order(self):
        indeg = [0] * self.num_vertices
        for _, v in self.edges:
            indeg[v] += 1
        queue = [v for v in range(self.num_vertices) if indeg[v] == 0]
        order = []
        while queue:
            v = queue.pop()
            order.append(v)
            for u, _ in self._adj[v]:
                indeg[u] -= 1
                if indeg[u] == 0:
                    queue.append(u)
        return order if len(order) == self.num_vertices else None

    def _reachable(self):
        seen = {self.s}
        stack = [self.s]
        while stack:
            v = stack.pop()
            for u, _ in self._adj[v]:
                if u not in seen:
                    seen.add(u)
                    stack.append(u)
        return self.t in seen

    def max_weight(self, w):
        w = np.asarray(w, dtype=float)
        if self.directed:
            # DP over topological order; ties resolved toward the
            # lexicographically smallest edge set.
            best: dict[int, tuple[float, tuple[int, ...]]] = {self.s: (0.0, ())}
            for v in self._topo:
                if v not in best:
                    continue
                val, path = best[v]
                for u, idx in self._adj[v]:
                    cand = (val + float(w[idx]), tuple(sorted(path + (idx,))))
                    cur = best.get(u)
                    if cur is None or cand[0] > cur[0] + 1e-15 or (
                        abs(cand[0] - cur[0]) <= 1e-15 and cand[1] < cur[1]
                    ):
                        best[u] = cand
            if self.t not in best:
                raise ValueError("no s-t path exists")
            return frozenset(best[self.t][1])
        return _scan_best(self._materialize(), w)

    def enumerate_sets(self, cap: int = ENUMERATION_CAP):
        count = 0
        path: list[int] = []
        visited = {self.s}

        def dfs(v):
            nonlocal count
            if v == self.t:
                count += 1
                if count > cap:
                    raise RuntimeError("family exceeds the enumeration cap")
                yield frozenset(path)
                return
            for u, idx in self._adj[v]:
                if u in visited:
                    continue
                visited.add(u)
                path.append(idx)
                yield from dfs(u)
                path.pop()
                visited.remove(u)

        yield from dfs(self.s)

    def reachable_sums(self, w: Sequence[int]) -> dict[int, tuple]:
        """All achievable s-t path totals for integer edge weights on a DAG,
        mapped to backtracking info (pred vertex, pred sum, edge idx)."""
        if not self.directed:
            raise RuntimeError("the exact-value DP needs a directed acyclic graph")
        w = [int(x) for x in w]
        reach: list[dict[int, tuple] | None] = [None] * self.num_vertices
        reach[self.s] = {0: ()}
        for v in self._topo:
            if reach[v] is None:
                continue
            for u, idx in self._adj[v]:
                if reach[u] is None:
                    reach[u] = {}
                bucket = reach[u]
                for total in reach[v]:
                    nt = total + w[idx]
                    if nt not in bucket:
                        bucket[nt] = (v, total, idx)
        return reach[self.t] or {}

    def backtrack(self, w: Sequence[int], total: int) -> IndexSet:
        reach: list[dict[int, tuple] | None] = [None] * self.num_vertices
        reach[self.s] = {0: ()}
        w = [int(x) for x in w]
        for v in self._topo:
            if reach[v] is None:
                continue
            for u, idx in self._adj[v]:
                if reach[u] is None:
                    reach[u] = {}
                bucket = reach[u]
                for tot in reach[v]:
                    nt = tot + w[idx]
                    if nt not in bucket:
                        bucket[nt] = (v, tot, idx)
        node, tot, edges = self.t, total, []
        while node != self.s:
            pred, ptot, idx = reach[node][tot]
            edges.append(idx)
            node, tot = pred, ptot
        return frozenset(edges)


# ---------------------------------------------------------------------------
# Module-level operations
# ---------------------------------------------------------------------------

def max_weight(oracle: FamilyOracle, w: Sequence[float]) -> IndexSet:
    """The maximum-total-weight feasible set (deterministic tie-break)."""
    w = np.asarray(w, dtype=float)
    if w.size != oracle.n or not np.all(np.isfinite(w)):
        raise ValueError("weight vector must be finite with one entry per arm")
    return oracle.max_weight(w)


def second_best(oracle: FamilyOracle, w: Sequence[float]) -> IndexSet:
    """Best feasible set other than ``max_weight``.

    Graph families are antichains, so masking each member of the best set
    with a large negative sentinel and re-querying finds the runner-up.
    Explicit lists may contain nested sets, where masking is unsound, so they
    are scanned directly.
    """
    w = np.asarray(w, dtype=float)
    if isinstance(oracle, ExplicitOracle):
        rest = [s for s in oracle.sets if s != oracle.max_weight(w)]
        if not rest:
            raise ValueError("family has fewer than two sets")
        return _scan_best(rest, w)

    best = oracle.max_weight(w)
    big = 4.0 * (np.abs(w).sum() + 1.0)
    candidates = []
    for a in sorted(best):
        masked = w.copy()
        masked[a] = -big
        cand = oracle.max_weight(masked)
        if a not in cand:
            candidates.append(cand)
    if not candidates:
        raise ValueError("family has fewer than two sets")
    return _scan_best(candidates, w)


def exact_decide(oracle: FamilyOracle, w: Sequence[int], target: int) -> bool:
    """Does some feasible set have total integer weight exactly ``target``?"""
    w_arr = np.asarray(w)
    if w_arr.size != oracle.n:
        raise ValueError("one weight per arm required")
    if not np.issubdtype(w_arr.dtype, np.integer):
        if not np.all(w_arr == np.round(w_arr)):
            raise ValueError("exact_decide requires integer weights")
        w_arr = w_arr.astype(np.int64)
    if np.any(w_arr < 0):
        raise ValueError("exact_decide requires nonnegative weights")
    target = int(target)
    if target > int(w_arr.sum()) or target < 0:
        return False
    if isinstance(oracle, PathOracle) and oracle.directed:
        return target in oracle.reachable_sums(w_arr.tolist())
    values = oracle._set_values(w_arr.astype(float))
    return bool(np.any(np.abs(values - target) < 0.5))


def value_pair_witnesses(
    oracle: FamilyOracle,
    f1: np.ndarray,
    f2: np.ndarray,
    s1: float,
    s2: float,
    cap: int = ENUMERATION_CAP,
) -> list[tuple[IndexSet, float, float]]:
    """One witness set per achievable rounded value pair.

    Values are rounded per-arm at scales ``s1``/``s2``; the key also carries
    the cardinality so signed objectives stay distinguishable.  Witnesses are
    returned with their exact (unrounded) objective values.  DAG path
    families go through the value-expanded DP; everything else enumerates.
    """
    f1 = np.asarray(f1, dtype=float)
    f2 = np.asarray(f2, dtype=float)

    if isinstance(oracle, PathOracle) and oracle.directed:
        w1 = np.round(f1 * s1).astype(np.int64)
        w2 = np.round(f2 * s2).astype(np.int64)
        w1 -= min(0, int(w1.min()))
        w2 -= min(0, int(w2.min()))
        mc = oracle.n + 1
        m2 = int(w2.sum()) + 1
        combo = (w1 * m2 * mc + w2 * mc + 1).tolist()
        sums = oracle.reachable_sums(combo)
        if len(sums) > cap:
            raise RuntimeError("value DP exceeded the witness cap")
        out = []
        for total in sorted(sums):
            witness = oracle.backtrack(combo, total)
            idx = list(witness)
            out.append((witness, float(f1[idx].sum()), float(f2[idx].sum())))
        return out

    sets = oracle._materialize(cap)
    v1 = oracle._set_values(f1)
    v2 = oracle._set_values(f2)
    k1 = np.round(v1 * s1).astype(np.int64)
    k2 = np.round(v2 * s2).astype(np.int64)
    seen: dict[tuple[int, int, int], int] = {}
    for r, s in enumerate(sets):
        key = (int(k1[r]), int(k2[r]), len(s))
        if key not in seen:
            seen[key] = r
    return [(sets[r], float(v1[r]), float(v2[r])) for r in sorted(seen.values())]


def _scale_for(entries: np.ndarray, eps: float, n: int) -> float:
    positive = entries[entries > 0]
    if positive.size == 0:
        return 1.0
    return math.ceil(2.0 * n / (eps * float(positive.min())))


def pareto_eps(
    oracle: FamilyOracle,
    f1: Sequence[float],
    f2: Sequence[float],
    eps: float,
) -> list[ParetoPoint]:
    """An eps-approximate Pareto curve for two linear objectives (both
    maximized): every feasible set A has a returned point p with
    f1(A) <= (1+eps) f1(p) and f2(A) <= (1+eps) f2(p).

    Built from one exact-version probe per occupied cell of a rounded value
    grid; negative entries are shifted per cardinality class first (the
    multiplicative guarantee is meaningful for nonnegative objectives).
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    f1 = np.asarray(f1, dtype=float)
    f2 = np.asarray(f2, dtype=float)
    n = oracle.n
    g1 = f1 - min(0.0, float(f1.min(initial=0.0)))
    g2 = f2 - min(0.0, float(f2.min(initial=0.0)))
    s1 = _scale_for(g1, eps, max(n, 1))
    s2 = _scale_for(g2, eps, max(n, 1))
    witnesses = value_pair_witnesses(oracle, g1, g2, s1, s2)

    # Exact frontier of the witness cloud (a superset of what (1+eps)
    # coverage needs; the cloud is already at most one witness per cell).
    pts = []
    for s, _, _ in witnesses:
        idx = list(s)
        pts.append((s, float(f1[idx].sum()) if idx else 0.0, float(f2[idx].sum()) if idx else 0.0))
    pts.sort(key=lambda p: (-p[1], -p[2], _lex_key(p[0])))
    frontier: list[ParetoPoint] = []
    best2 = -math.inf
    for s, a, b in pts:
        if b > best2:
            frontier.append(ParetoPoint(s, a, b))
            best2 = b
    return frontier
