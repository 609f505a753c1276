"""Instance description documents (JSON).

One document per instance, always with a ``means`` vector.  Exactly one of
the following selects the instance kind:

``family`` -- a Best-Set instance::

    {"means": [...], "family": {"explicit": [[0, 1], [2, 3]]}}
    {"means": [...], "family": {"oracle": "spanning_tree",
                                "graph": {"edges": [[0,1], ...], "num_vertices": 4}}}
    {"means": [...], "family": {"oracle": "matching",
                                "graph": {"edges": [[0,0], ...], "sides": [3, 3]}}}
    {"means": [...], "family": {"oracle": "path",
                                "graph": {"edges": [[0,1], ...], "num_vertices": 5,
                                          "s": 0, "t": 4, "directed": true}}}

Arms are edge indices (order of the ``edges`` list) for oracle families.

``regions`` -- a general identification instance; each region is one of::

    {"halfspaces": [{"a": [...], "b": 0.0}, ...]}     # closure a.x >= b
    {"top_set": [0, 1]}                               # needs all regions top_set
    {"count_above": {"theta": 0.0, "j": 2}}

``ball`` -- a center/radius distinguishing instance::

    {"means": [...], "ball": {"u": [...], "r": 0.5}}

All indices are 0-based.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .core import BestSetInstance, ExplicitFamily, MeanProfile
from .instances import BallTestConfig
from .oracles import MatchingOracle, PathOracle, SpanningTreeOracle
from .regions import (
    CountAboveRegion,
    GeneralSampInstance,
    PolyhedronRegion,
    TopSetRegion,
)


@dataclass
class LoadedInstance:
    kind: str  # "best_set" | "general" | "ball"
    best_set: BestSetInstance | None = None
    general: GeneralSampInstance | None = None
    ball: tuple[MeanProfile, BallTestConfig] | None = None

    @property
    def profile(self) -> MeanProfile:
        if self.kind == "best_set":
            return self.best_set.profile
        if self.kind == "general":
            return self.general.profile
        return self.ball[0]


def parse_instance(doc: dict) -> LoadedInstance:
    if "means" not in doc:
        raise ValueError("instance document needs a 'means' vector")
    profile = MeanProfile(np.asarray(doc["means"], dtype=float))
    selectors = [k for k in ("family", "regions", "ball") if k in doc]
    if len(selectors) != 1:
        raise ValueError("exactly one of 'family', 'regions', 'ball' must be present")

    if "family" in doc:
        return LoadedInstance("best_set", best_set=BestSetInstance(
            profile, _parse_family(doc["family"], profile.n)))
    if "regions" in doc:
        return LoadedInstance("general", general=GeneralSampInstance(
            profile, _parse_regions(doc["regions"], profile.n)))
    ball = doc["ball"]
    config = BallTestConfig(np.asarray(ball["u"], dtype=float), float(ball["r"]),
                            c1=float(ball.get("c1", BallTestConfig.c1)),
                            c2=float(ball.get("c2", BallTestConfig.c2)))
    return LoadedInstance("ball", ball=(profile, config))


def _parse_family(spec: dict, n: int):
    if "explicit" in spec:
        return ExplicitFamily(spec["explicit"])
    kind = spec.get("oracle")
    graph = spec.get("graph", {})
    edges = [tuple(e) for e in graph.get("edges", [])]
    if len(edges) != n:
        raise ValueError("oracle families need one arm (mean) per edge")
    if kind == "spanning_tree":
        return SpanningTreeOracle(edges, int(graph["num_vertices"]))
    if kind == "matching":
        return MatchingOracle(edges, tuple(graph["sides"]))
    if kind == "path":
        return PathOracle(edges, int(graph["num_vertices"]), int(graph["s"]),
                          int(graph["t"]), directed=bool(graph.get("directed", False)))
    raise ValueError(f"unknown family specification: {sorted(spec)}")


def _parse_regions(specs: list, n: int):
    top_sets = [frozenset(int(i) for i in s["top_set"]) for s in specs if "top_set" in s]
    if top_sets and len(top_sets) != len(specs):
        raise ValueError("top_set regions must make up the whole region list")
    regions = []
    for spec in specs:
        if "halfspaces" in spec:
            A = np.array([h["a"] for h in spec["halfspaces"]], dtype=float)
            b = np.array([h["b"] for h in spec["halfspaces"]], dtype=float)
            regions.append(PolyhedronRegion(A, b))
        elif "top_set" in spec:
            regions.append(TopSetRegion(frozenset(int(i) for i in spec["top_set"]),
                                        tuple(top_sets), n))
        elif "count_above" in spec:
            c = spec["count_above"]
            regions.append(CountAboveRegion(float(c["theta"]), int(c["j"]), n))
        else:
            raise ValueError(f"unknown region specification: {sorted(spec)}")
    return tuple(regions)


def load_instance(path: str) -> LoadedInstance:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(
            f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from None
    try:
        return parse_instance(doc)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"{path}: malformed instance document ({exc})") from None


def best_set_as_general(instance: BestSetInstance) -> GeneralSampInstance:
    """Express a Best-Set instance as disjoint top-set answer regions."""
    sets = instance.sets()
    regions = tuple(TopSetRegion(s, sets, instance.n) for s in sets)
    return GeneralSampInstance(instance.profile, regions)


def instance_document(obj) -> dict:
    """Serialize a generated instance back to its JSON document."""
    from .instances import BallTestConfig  # noqa: F401 (kind check below)

    if isinstance(obj, BestSetInstance):
        if not isinstance(obj.family, ExplicitFamily):
            raise ValueError("only explicit families serialize directly")
        return {"means": obj.profile.means.tolist(),
                "family": {"explicit": [sorted(s) for s in obj.family.sets]}}
    if isinstance(obj, GeneralSampInstance):
        regions = []
        for region in obj.regions:
            if isinstance(region, CountAboveRegion):
                regions.append({"count_above": {"theta": region.theta, "j": region.j}})
            elif isinstance(region, TopSetRegion):
                regions.append({"top_set": sorted(region.top)})
            elif isinstance(region, PolyhedronRegion):
                regions.append({"halfspaces": [
                    {"a": row.tolist(), "b": float(bi)}
                    for row, bi in zip(region.A, region.b)
                ]})
        return {"means": obj.profile.means.tolist(), "regions": regions}
    raise TypeError(f"cannot serialize {type(obj).__name__}")
