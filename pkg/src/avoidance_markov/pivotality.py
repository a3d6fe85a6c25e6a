"""Node pivotality for a fixed source/target pair.

Four scores are available for a third node ``k``:

* ``ath`` -- ``H_s^t - (H_s^{k,not t} + H_k^t)``, ``-inf`` when the walk
  can never reach ``k`` before ``t`` (``k`` is non-pivotal);
* ``ch``  -- ``H_s^t - (H_s^k + H_k^t)``, the negated forced-detour cost;
* ``shp`` -- the same construction with shortest-path lengths over edge costs;
* ``mf``  -- fraction of the ``s -> t`` max flow lost when ``k`` is deleted,
  with affinities as capacities.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .avoidance import FEASIBILITY_EPS, AvoidanceQuery, avoidance_hitting_time, via_sweep
from .classical import fundamental_for, hitting_time
from .graph import Chain, Graph, GraphError

__all__ = [
    "METRICS",
    "PivotalityReport",
    "ath",
    "ch",
    "shp",
    "mf",
    "rank",
    "shortest_distances",
    "max_flow",
    "color_map",
]

METRICS = ("ath", "ch", "shp", "mf")


def _distinct(s: int, t: int, k: int) -> None:
    if len({s, t, k}) != 3:
        raise GraphError("source, target and node must be distinct")


def _hit(c: Chain, src: int, dst: int) -> float:
    f = fundamental_for(c, (dst,))
    return float(hitting_time(f)[f.partition.position(src)])


def ath(c: Chain, s: int, t: int, k: int) -> float:
    _distinct(s, t, k)
    leg = avoidance_hitting_time(c, AvoidanceQuery(s, k, frozenset({t})))
    if not leg.feasible:
        return -np.inf
    return _hit(c, s, t) - (leg.value + _hit(c, k, t))


def ch(c: Chain, s: int, t: int, k: int) -> float:
    _distinct(s, t, k)
    return _hit(c, s, t) - (_hit(c, s, k) + _hit(c, k, t))


def shortest_distances(g: Graph, source: int) -> np.ndarray:
    """Dijkstra over edge costs; unreachable nodes get ``inf``."""
    adj: list[list[tuple[int, float]]] = [[] for _ in range(g.node_count)]
    for e in g.edges:
        if e.cost < 0:
            raise GraphError("shortest paths need nonnegative edge costs")
        adj[e.src].append((e.dst, e.cost))
    dist = np.full(g.node_count, np.inf)
    dist[source] = 0.0
    heap = [(0.0, source)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for v, w in adj[u]:
            nd = d + w
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


def shp(g: Graph, s: int, t: int, k: int, _dist: dict | None = None) -> float:
    _distinct(s, t, k)
    cache = {} if _dist is None else _dist
    for x in (s, k):
        if x not in cache:
            cache[x] = shortest_distances(g, x)
    if not np.isfinite(cache[s][t]):
        raise GraphError(f"target {g.label(t)} is unreachable from {g.label(s)}")
    via = cache[s][k] + cache[k][t]
    if not np.isfinite(via):
        return -np.inf
    return float(cache[s][t] - via)


def max_flow(g: Graph, s: int, t: int, removed: Iterable[int] = ()) -> float:
    """Edmonds-Karp max flow with affinities as capacities; ``removed`` nodes are deleted."""
    gone = set(removed)
    if s in gone or t in gone:
        return 0.0
    n = g.node_count
    cap: list[dict[int, float]] = [dict() for _ in range(n)]
    for e in g.edges:
        if e.src in gone or e.dst in gone or e.src == e.dst:
            continue
        cap[e.src][e.dst] = cap[e.src].get(e.dst, 0.0) + e.affinity
        cap[e.dst].setdefault(e.src, 0.0)
    total = 0.0
    while True:
        parent = {s: s}
        queue = deque([s])
        while queue and t not in parent:
            u = queue.popleft()
            for v, r in cap[u].items():
                if r > 0 and v not in parent:
                    parent[v] = u
                    queue.append(v)
        if t not in parent:
            return total
        push = np.inf
        v = t
        while v != s:
            u = parent[v]
            push = min(push, cap[u][v])
            v = u
        v = t
        while v != s:
            u = parent[v]
            cap[u][v] -= push
            cap[v][u] += push
            v = u
        total += push


def mf(g: Graph, s: int, t: int, k: int, _base: float | None = None) -> float:
    _distinct(s, t, k)
    base = max_flow(g, s, t) if _base is None else _base
    if base <= 0:
        raise GraphError(f"no flow from {g.label(s)} to {g.label(t)}")
    return float((base - max_flow(g, s, t, removed=(k,))) / base)


def color_map(scores: dict[int, float]) -> dict[int, str]:
    """White-to-red shading of finite scores; ``-inf`` (non-pivotal) is black."""
    finite = [v for v in scores.values() if np.isfinite(v)]
    lo, hi = (min(finite), max(finite)) if finite else (0.0, 0.0)
    out = {}
    for k, v in scores.items():
        if not np.isfinite(v):
            out[k] = "#000000"
            continue
        u = 1.0 if hi == lo else (v - lo) / (hi - lo)
        level = int(round(255 * (1.0 - u)))
        out[k] = f"#FF{level:02X}{level:02X}"
    return out


@dataclass
class PivotalityReport:
    source: int
    target: int
    labels: tuple[str, ...]
    nodes: list[int]
    scores: dict[str, dict[int, float]]
    feasibility: dict[int, float]
    primary: str = "ath"
    ranking: list[int] = field(default_factory=list)
    colors: dict[int, str] = field(default_factory=dict)

    def value(self, metric: str, label: str) -> float:
        return self.scores[metric][self.labels.index(label)]


def _ranking(nodes: Sequence[int], scores: dict[int, float], labels: Sequence[str]) -> list[int]:
    """Descending score, non-pivotal last, ties by label.

    Scores are compared at 12 significant digits so that nodes equal up to
    round-off (e.g. symmetric ones) tie.
    """

    def key(k):
        v = scores[k]
        return (0, -float(f"{v:.12g}"), labels[k]) if np.isfinite(v) else (1, 0.0, labels[k])

    return sorted(nodes, key=key)


def rank(
    c: Chain,
    g: Graph,
    s: int,
    t: int,
    metrics: Iterable[str] = ("ath",),
    primary: str | None = None,
) -> PivotalityReport:
    """Score every node other than ``s`` and ``t`` and rank by ``primary``.

    ATH comes from a single shared factorization (see ``via_sweep``), and
    the feasibility ``Q_s^{k, not t}`` is always reported with it.
    """
    metrics = [m.lower() for m in metrics]
    for m in metrics:
        if m not in METRICS:
            raise GraphError(f"unknown metric {m!r}")
    if not metrics:
        raise GraphError("no metrics requested")
    primary = primary or ("ath" if "ath" in metrics else metrics[0])
    if primary not in metrics:
        raise GraphError(f"ranking metric {primary!r} was not requested")
    if s == t:
        raise GraphError("source and target must differ")
    nodes = [k for k in range(c.n) if k not in (s, t)]
    sweep = via_sweep(c, s, t)
    feasibility = {k: float(sweep.feasibility[k]) for k in nodes}
    scores: dict[str, dict[int, float]] = {}
    if "ath" in metrics:
        scores["ath"] = {
            k: (sweep.hit_time - float(sweep.transit_time[k]))
            if feasibility[k] >= FEASIBILITY_EPS
            else -np.inf
            for k in nodes
        }
    if "ch" in metrics:
        h_st = sweep.hit_time
        scores["ch"] = {k: h_st - (_hit(c, s, k) + float(sweep.onward_time[k])) for k in nodes}
    if "shp" in metrics:
        cache: dict = {}
        scores["shp"] = {k: shp(g, s, t, k, cache) for k in nodes}
    if "mf" in metrics:
        base = max_flow(g, s, t)
        scores["mf"] = {k: mf(g, s, t, k, base) for k in nodes}
    labels = c.labels
    ranking = _ranking(nodes, scores[primary], labels)
    colors = color_map(scores[primary])
    return PivotalityReport(s, t, labels, nodes, scores, feasibility, primary, ranking, colors)
