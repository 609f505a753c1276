"""Answer regions for the general sampling problem and the weighted
squared-distance minimization every verification program is built on.

Three region kinds are supported:

* ``PolyhedronRegion`` -- a closed intersection of halfspaces a.x >= b
  (a single point is the degenerate case with paired halfspaces);
* ``TopSetRegion`` -- the set of mean vectors under which a designated
  family member beats every other member (closure: pairwise halfspaces);
* ``CountAboveRegion`` -- mean vectors with exactly j coordinates above a
  threshold.

``region_min_sqdist`` minimizes sum_i w_i (x_i - c_i)^2 over the CLOSURE of a
region.  Polyhedra go through a dual projected-gradient QP with active-set
polishing; count regions have a closed form (snap the cheapest coordinates
onto the threshold).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import IndexSet, MeanProfile, canonical_sets


@dataclass(frozen=True)
class PolyhedronRegion:
    """Closure: {x : A x >= b}, one row per halfspace."""

    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        if A.shape[0] != b.size or A.shape[0] == 0:
            raise ValueError("polyhedron needs matching, nonempty A and b")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    def contains(self, x: np.ndarray, tol: float = 1e-9) -> bool:
        return bool(np.all(self.A @ x >= self.b - tol))


def point_region(v: Sequence[float]) -> PolyhedronRegion:
    """The single point {v}, encoded as paired halfspaces."""
    v = np.asarray(v, dtype=float)
    eye = np.eye(v.size)
    return PolyhedronRegion(np.vstack([eye, -eye]), np.concatenate([v, -v]))


@dataclass(frozen=True)
class TopSetRegion:
    """Mean vectors under which ``top`` is the strictly best set of the family."""

    top: IndexSet
    family: tuple[IndexSet, ...]
    n: int

    def __post_init__(self):
        object.__setattr__(self, "top", frozenset(self.top))
        object.__setattr__(self, "family", canonical_sets(self.family))
        if self.top not in self.family:
            raise ValueError("top set must belong to the family")

    def as_polyhedron(self) -> PolyhedronRegion:
        cached = getattr(self, "_poly_cache", None)
        if cached is not None:
            return cached
        rows, rhs = [], []
        for other in self.family:
            if other == self.top:
                continue
            a = np.zeros(self.n)
            for i in self.top - other:
                a[i] = 1.0
            for i in other - self.top:
                a[i] = -1.0
            rows.append(a)
            rhs.append(0.0)
        if not rows:  # single-set family: whole space
            rows, rhs = [np.zeros(self.n)], [0.0]
        poly = PolyhedronRegion(np.array(rows), np.array(rhs))
        object.__setattr__(self, "_poly_cache", poly)
        return poly

    def contains(self, x: np.ndarray, tol: float = 1e-9) -> bool:
        return self.as_polyhedron().contains(x, tol)


@dataclass(frozen=True)
class CountAboveRegion:
    """Mean vectors with exactly ``j`` coordinates strictly above ``theta``."""

    theta: float
    j: int
    n: int

    def __post_init__(self):
        if not 0 <= self.j <= self.n:
            raise ValueError("count j must lie in [0, n]")

    def contains(self, x: np.ndarray, tol: float = 0.0) -> bool:
        return int(np.sum(x > self.theta)) == self.j


Region = PolyhedronRegion | TopSetRegion | CountAboveRegion


def region_min_sqdist(
    region: Region,
    weights: np.ndarray,
    center: np.ndarray,
    cache: dict | None = None,
) -> tuple[float, np.ndarray]:
    """Minimize sum_i w_i (x_i - c_i)^2 over the closure of ``region``.

    Returns (value, argmin).  ``weights`` must be nonnegative; zero-weight
    coordinates are free to move (the reported value uses the true weights).
    ``cache`` (one dict per region) warm-starts the projection across calls
    with slowly moving centers, which is what keeps per-step confidence
    checks cheap inside sampling loops.
    """
    w = np.asarray(weights, dtype=float)
    c = np.asarray(center, dtype=float)
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")

    if isinstance(region, CountAboveRegion):
        return _count_above_min(region, w, c)
    poly = region.as_polyhedron() if isinstance(region, TopSetRegion) else region
    return _polyhedron_min(poly, w, c, cache)


def _count_above_min(region: CountAboveRegion, w, c):
    # Closure: some size-j coordinate set sits at >= theta, the rest at <= theta.
    # The optimal move snaps coordinates onto theta, so pick the j coordinates
    # whose "raise to theta" cost minus "lower to theta" cost is smallest.
    theta, j = region.theta, region.j
    up = w * np.maximum(theta - c, 0.0) ** 2     # cost to make coordinate >= theta
    down = w * np.maximum(c - theta, 0.0) ** 2   # cost to make coordinate <= theta
    order = np.argsort(up - down, kind="stable")
    chosen = order[:j]
    x = c.copy()
    below = chosen[c[chosen] < theta]
    x[below] = theta
    rest = order[j:]
    above = rest[c[rest] > theta]
    x[above] = theta
    value = float(up[below].sum() + down[above].sum())
    return value, x


def _polyhedron_min(poly: PolyhedronRegion, w, c, cache=None, iters: int = 4000):
    A, b = poly.A, poly.b
    viol = b - A @ c
    if np.all(viol <= 0):
        return 0.0, c.copy()

    scale = float(np.max(w)) if np.max(w) > 0 else 1.0
    w_reg = np.maximum(w, 1e-7 * scale)
    inv2w = 1.0 / (2.0 * w_reg)

    if A.shape[0] == 1:
        # Single halfspace: project in the weighted metric, closed form.
        a = A[0]
        x = c + a * (2.0 * inv2w) * (viol[0] / float(a @ (2.0 * inv2w * a)))
        return float(np.sum(w * (x - c) ** 2)), x

    # Zero-weight regularization puts ~1e10 conditioning into the KKT systems,
    # so constraint residuals bottom out near 1e-10; anything at 1e-8 is exact
    # for the 1e-6-scale tolerances the callers work to.
    btol = 1e-8 * (1.0 + float(np.abs(b).max()))
    w_key = w.tobytes()

    # Warm path: re-solve on the previously active rows (centers that drift
    # slowly keep the same active set, so this is one tiny KKT solve).
    if cache is not None and cache.get("w_key") == w_key:
        warm = _active_set_solve(A, b, w_reg, c, cache.get("active", ()), btol)
        if warm is not None:
            x, active = warm
            cache["active"] = active
            return float(np.sum(w * (x - c) ** 2)), x

    # Cold start: projected gradient on the dual -- maximize
    # -1/4 l^T K l + l^T (b - A c) over l >= 0 with x(l) = c + (A^T l)/(2w);
    # the feasible-set projection is a clip -- then active-set polishing.
    K = (A * inv2w) @ A.T
    eigs = np.linalg.eigvalsh(K) if K.shape[0] <= 64 else None
    L = float(eigs[-1]) if eigs is not None else float(np.linalg.norm(K, ord=np.inf))
    step = 1.0 / max(L, 1e-30)
    lam = np.zeros(b.size)
    x = c
    for _ in range(iters):
        x = c + (A.T @ lam) * inv2w
        g = b - A @ x
        lam_new = np.maximum(lam + step * g, 0.0)
        if np.max(np.abs(lam_new - lam)) <= 1e-12 * (1.0 + np.max(np.abs(lam))):
            lam = lam_new
            break
        lam = lam_new
    x = c + (A.T @ lam) * inv2w

    active = tuple(int(i) for i in np.where((lam > 1e-12) | (b - A @ x > -10 * btol))[0])
    polished = _active_set_solve(A, b, w_reg, c, active, btol)
    if polished is None and A.shape[0] <= 12:
        polished = _exhaustive_active_sets(A, b, w_reg, c, btol)
    if polished is not None:
        x, active = polished
    else:
        for _ in range(200):  # last-resort: cyclic single-row projections
            viol = b - A @ x
            worst = int(np.argmax(viol))
            if viol[worst] <= btol:
                break
            a = A[worst]
            x = x + a * inv2w * (viol[worst] / float((a * inv2w) @ a))
        active = tuple(int(i) for i in np.where(b - A @ x > -10 * btol)[0])
    if cache is not None:
        cache["w_key"] = w_key
        cache["active"] = active
    value = float(np.sum(w * (x - c) ** 2))
    return value, x


def _exhaustive_active_sets(A, b, w_reg, c, btol):
    """Exact fallback: try every subset of rows as the active set."""
    from itertools import combinations

    best = None
    best_val = np.inf
    m = A.shape[0]
    for size in range(m + 1):
        for rows in combinations(range(m), size):
            sol = _kkt_on(A, b, w_reg, c, np.array(rows, dtype=int))
            if sol is None:
                continue
            x, mult = sol
            mtol = 1e-6 * (1.0 + float(np.abs(mult).max(initial=0.0)))
            if np.any(mult < -mtol) or np.any(b - A @ x > btol):
                continue
            val = float(np.sum(w_reg * (x - c) ** 2))
            if val < best_val:
                best, best_val = (x, rows), val
    return best


def _kkt_on(A, b, w_reg, c, active):
    inv2w = 0.5 / w_reg
    if active.size == 0:
        return c.copy(), np.zeros(0)
    Aa = A[active]
    G = (Aa * inv2w) @ Aa.T
    rhs = b[active] - Aa @ c
    try:
        mult = np.linalg.solve(G, rhs)
    except np.linalg.LinAlgError:
        try:
            mult = np.linalg.solve(G + 1e-12 * np.eye(active.size), rhs)
        except np.linalg.LinAlgError:
            return None
    return c + (Aa.T @ mult) * inv2w, mult


def _active_set_solve(A, b, w_reg, c, active0, btol):
    """Iterated equality-constrained KKT solves: drop rows with negative
    multipliers, add the worst violated row, until optimal.  Returns
    (x, active rows) or None when the iteration degenerates."""
    active = np.array(sorted(set(int(i) for i in active0)), dtype=int)
    n = c.size
    inv2w = 0.5 / w_reg
    seen = set()
    for _ in range(3 * A.shape[0] + 8):
        key = tuple(active)
        if key in seen:
            return None
        seen.add(key)
        if active.size == 0:
            if np.all(A @ c >= b - btol):
                return c.copy(), ()
            active = np.array([int(np.argmax(b - A @ c))])
        Aa = A[active]
        d = Aa.shape[0]
        if d == 1:
            a = Aa[0]
            denom = float((a * inv2w) @ a)
            if denom <= 0:
                return None
            kappa = (b[active[0]] - float(a @ c)) / denom
            x = c + kappa * a * inv2w
            mult = np.array([kappa])
        else:
            # Eliminate x = c + (Aa^T mult) (2w)^-1 from the stationarity
            # condition; solve the d x d system on the multipliers.
            G = (Aa * inv2w) @ Aa.T
            rhs = b[active] - Aa @ c
            try:
                mult = np.linalg.solve(G, rhs)
            except np.linalg.LinAlgError:
                try:
                    mult = np.linalg.solve(G + 1e-12 * np.eye(d), rhs)
                except np.linalg.LinAlgError:
                    return None
            x = c + (Aa.T @ mult) * inv2w
        mtol = 1e-6 * (1.0 + float(np.abs(mult).max(initial=0.0)))
        if np.any(mult < -mtol):  # wrongly activated row: release and retry
            active = active[mult >= -mtol]
            continue
        viol = b - A @ x
        if np.all(viol <= btol):
            return x, tuple(int(i) for i in active)
        worst = int(np.argmax(viol))
        if worst in active:
            return None
        active = np.sort(np.append(active, worst))
    return None


def batched_min_sqdist_values(
    regions: Sequence[Region],
    w: np.ndarray,
    c: np.ndarray,
    caches: Sequence[dict] | None = None,
) -> np.ndarray:
    """Minimum weighted squared distances to many regions at once (values only).

    Count regions sharing a threshold are evaluated together: their costs for
    every count j are prefix sums of one sorted snap-cost vector.
    """
    values = np.empty(len(regions))
    count_groups: dict[float, list[int]] = {}
    half_rows, half_rhs, half_idx = [], [], []
    for k, region in enumerate(regions):
        if isinstance(region, CountAboveRegion):
            count_groups.setdefault(region.theta, []).append(k)
            continue
        poly = region.as_polyhedron() if isinstance(region, TopSetRegion) else region
        if poly.A.shape[0] == 1:
            half_rows.append(poly.A[0])
            half_rhs.append(poly.b[0])
            half_idx.append(k)
        else:
            values[k] = region_min_sqdist(region, w, c,
                                          caches[k] if caches is not None else None)[0]
    if half_idx:
        B = np.array(half_rows)
        viol = np.maximum(np.array(half_rhs) - B @ c, 0.0)
        w_reg = np.maximum(w, 1e-7 * max(float(np.max(w)), 1.0))
        denom = (B * B / w_reg) @ np.ones_like(c)
        vals = np.where(viol > 0, viol * viol / denom, 0.0)
        # exact only where the halfspace actually binds with the true weights
        for pos, k in enumerate(half_idx):
            values[k] = float(vals[pos]) if np.isfinite(vals[pos]) else 0.0
    for theta, idxs in count_groups.items():
        up = w * np.maximum(theta - c, 0.0) ** 2
        down = w * np.maximum(c - theta, 0.0) ** 2
        prefix = np.concatenate([[0.0], np.cumsum(np.sort(up - down))])
        total_down = float(down.sum())
        for k in idxs:
            values[k] = total_down + prefix[regions[k].j]
    return values


@dataclass(frozen=True)
class GeneralSampInstance:
    """A mean profile plus pairwise-disjoint answer regions, exactly one of
    which contains the profile."""

    profile: MeanProfile
    regions: tuple[Region, ...]
    truth: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "regions", tuple(self.regions))
        containing = [k for k, r in enumerate(self.regions) if r.contains(self.profile.means)]
        if len(containing) != 1:
            raise ValueError(
                f"mean profile must lie in exactly one region (found {len(containing)})"
            )
        object.__setattr__(self, "truth", containing[0])

    @property
    def n(self) -> int:
        return self.profile.n
