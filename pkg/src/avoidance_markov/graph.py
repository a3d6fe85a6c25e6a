"""Weighted directed graphs, random-walk chains and absorbing partitions.

Each edge carries two numbers: an *affinity* ``a_ij`` that drives the
transition probabilities ``P = D^{-1} A`` and a *cost* ``w_ij`` that drives
hitting costs.  Everything is dense: the intended scale is a few thousand
nodes at most.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence

import numpy as np

__all__ = [
    "GraphError",
    "GraphParseError",
    "DanglingNodeError",
    "StrandedStatesError",
    "Edge",
    "Graph",
    "Chain",
    "ChainPartition",
    "load_graph",
    "dump_graph",
    "build_chain",
    "partition",
]

ROW_SUM_TOL = 1e-12


class GraphError(ValueError):
    """Invalid graph, chain or partition."""

    #: position of the offending item in the edge list, when known
    item: int | None = None


class GraphParseError(GraphError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DanglingNodeError(GraphError):
    def __init__(self, nodes: Sequence[str]):
        self.nodes = tuple(nodes)
        super().__init__(f"node(s) with zero out-degree: {', '.join(self.nodes)}")


class StrandedStatesError(GraphError):
    def __init__(self, states: Sequence[int], labels: Sequence[str]):
        self.states = tuple(states)
        names = ", ".join(labels[i] for i in states)
        super().__init__(f"absorbing set unreachable from transient state(s): {names}")


@dataclass(frozen=True)
class Edge:
    src: int
    dst: int
    affinity: float
    cost: float


@dataclass(frozen=True)
class Graph:
    """Directed weighted graph with dense 0-based node indices.

    Undirected graphs are stored already expanded into two directed edges
    per undirected edge; ``directed`` only records how the graph was read.
    """

    node_labels: tuple[str, ...]
    edges: tuple[Edge, ...]
    directed: bool = True
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        labels = tuple(str(x) for x in self.node_labels)
        if not labels:
            raise GraphError("graph has no nodes")
        if len(set(labels)) != len(labels):
            raise GraphError("node labels must be unique")
        object.__setattr__(self, "node_labels", labels)
        object.__setattr__(self, "_index", {lab: i for i, lab in enumerate(labels)})
        n = len(labels)
        seen = set()
        for e in self.edges:
            if not (0 <= e.src < n and 0 <= e.dst < n):
                raise GraphError(f"edge {e.src}->{e.dst} references a missing node")
            if not e.affinity > 0 or not np.isfinite(e.affinity):
                raise GraphError(f"edge {labels[e.src]}->{labels[e.dst]} has non-positive affinity")
            if not np.isfinite(e.cost):
                raise GraphError(f"edge {labels[e.src]}->{labels[e.dst]} has non-finite cost")
            if (e.src, e.dst) in seen:
                raise GraphError(f"duplicate edge {labels[e.src]}->{labels[e.dst]}")
            seen.add((e.src, e.dst))

    @classmethod
    def from_edges(
        cls,
        labels: Iterable[str],
        edges: Iterable[tuple],
        directed: bool = True,
    ) -> "Graph":
        """Build a graph from ``(src, dst, affinity[, cost])`` tuples of labels.

        Undirected input is expanded, parallel edges are collapsed by summing
        affinities (their costs must agree) and zero-affinity edges are dropped.
        Labels of edge endpoints missing from ``labels`` are appended in order.
        """
        order = list(dict.fromkeys(str(x) for x in labels))
        index = {lab: i for i, lab in enumerate(order)}
        merged: dict[tuple[int, int], list[float]] = {}

        def node(label) -> int:
            label = str(label)
            if label not in index:
                index[label] = len(order)
                order.append(label)
            return index[label]

        for k, item in enumerate(edges):
            src, dst, affinity = item[0], item[1], float(item[2])
            cost = float(item[3]) if len(item) > 3 and item[3] is not None else affinity
            i, j = node(src), node(dst)
            if affinity < 0:
                exc = GraphError(f"negative affinity on edge {src}->{dst}")
                exc.item = k
                raise exc
            if affinity == 0:
                continue
            pairs = [(i, j)] if directed or i == j else [(i, j), (j, i)]
            for key in pairs:
                if key in merged:
                    if merged[key][1] != cost:
                        a, b = order[key[0]], order[key[1]]
                        exc = GraphError(f"duplicate edge {a}->{b} with conflicting costs")
                        exc.item = k
                        raise exc
                    merged[key][0] += affinity
                else:
                    merged[key] = [affinity, cost]
        es = tuple(Edge(i, j, a, c) for (i, j), (a, c) in merged.items())
        return cls(tuple(order), es, directed)

    @property
    def node_count(self) -> int:
        return len(self.node_labels)

    def index(self, label) -> int:
        try:
            return self._index[str(label)]
        except KeyError:
            raise KeyError(f"unknown node label {label!r}") from None

    def label(self, i: int) -> str:
        return self.node_labels[i]

    def affinity_matrix(self) -> np.ndarray:
        a = np.zeros((self.node_count, self.node_count))
        for e in self.edges:
            a[e.src, e.dst] = e.affinity
        return a

    def cost_matrix(self) -> np.ndarray:
        w = np.zeros((self.node_count, self.node_count))
        for e in self.edges:
            w[e.src, e.dst] = e.cost
        return w

    def successors(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.node_count)]
        for e in self.edges:
            out[e.src].append(e.dst)
        return out

    def without(self, nodes: Iterable[int]) -> "Graph":
        """Copy of the graph with ``nodes`` and their incident edges deleted."""
        drop = set(nodes)
        keep = [i for i in range(self.node_count) if i not in drop]
        remap = {old: new for new, old in enumerate(keep)}
        es = tuple(
            Edge(remap[e.src], remap[e.dst], e.affinity, e.cost)
            for e in self.edges
            if e.src in remap and e.dst in remap
        )
        return Graph(tuple(self.node_labels[i] for i in keep), es, self.directed)


def _parse_float(text: str, what: str, line: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise GraphParseError(f"{what} {text!r} is not a number", line) from None
    if not np.isfinite(value):
        raise GraphParseError(f"{what} {text!r} is not finite", line)
    return value


def _load_csv(text: str, directed: bool) -> Graph:
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        fields = [f.strip() for f in next(csv.reader([stripped]))]
        if len(fields) not in (3, 4):
            raise GraphParseError(f"expected 3 or 4 fields, got {len(fields)}", lineno)
        src, dst = fields[0], fields[1]
        if not src or not dst:
            raise GraphParseError("empty node label", lineno)
        affinity = _parse_float(fields[2], "affinity", lineno)
        if affinity < 0:
            raise GraphParseError(f"negative affinity {affinity}", lineno)
        cost = _parse_float(fields[3], "cost", lineno) if len(fields) == 4 else None
        rows.append((src, dst, affinity, cost, lineno))
    if not rows:
        raise GraphParseError("no edges found")
    try:
        return Graph.from_edges([], [r[:4] for r in rows], directed)
    except GraphError as exc:
        lineno = rows[exc.item][4] if exc.item is not None else None
        raise GraphParseError(str(exc), lineno) from None


def _load_json(text: str, directed: bool | None) -> Graph:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphParseError(exc.msg, exc.lineno) from None
    if not isinstance(doc, dict) or "edges" not in doc:
        raise GraphParseError("expected an object with an 'edges' array")
    is_directed = bool(doc.get("directed", True if directed is None else directed))
    nodes = doc.get("nodes", [])
    edges = []
    for k, e in enumerate(doc["edges"]):
        try:
            affinity = float(e["affinity"])
            cost = float(e["cost"]) if e.get("cost") is not None else None
            edges.append((str(e["src"]), str(e["dst"]), affinity, cost))
        except (KeyError, TypeError, ValueError):
            raise GraphParseError(f"malformed edge #{k}: {e!r}") from None
        if affinity < 0:
            raise GraphParseError(f"negative affinity on edge #{k}")
    try:
        return Graph.from_edges([str(x) for x in nodes], edges, is_directed)
    except GraphError as exc:
        raise GraphParseError(str(exc)) from None


def load_graph(source: IO | bytes | str, format: str = "csv", directed: bool = True) -> Graph:
    """Read a graph from an edge-list csv or a JSON document.

    For JSON the document's own ``directed`` field wins over the argument.
    """
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, bytes):
        try:
            source = source.decode("utf-8")
        except UnicodeDecodeError:
            raise GraphParseError("input is not valid UTF-8") from None
    if format == "csv":
        return _load_csv(source, directed)
    if format == "json":
        return _load_json(source, None)
    raise ValueError(f"unknown graph format {format!r}")


def dump_graph(g: Graph, format: str = "csv") -> str:
    """Serialize ``g``; undirected graphs are written with one line per edge pair."""
    items = []
    for e in g.edges:
        if not g.directed and e.src > e.dst:
            continue
        items.append((g.label(e.src), g.label(e.dst), e.affinity, e.cost))
    if format == "csv":
        buf = io.StringIO()
        buf.write("# src,dst,affinity,cost\n")
        for src, dst, a, c in items:
            buf.write(f"{src},{dst},{a!r},{c!r}\n")
        return buf.getvalue()
    if format == "json":
        doc = {
            "directed": g.directed,
            "nodes": list(g.node_labels),
            "edges": [{"src": s, "dst": d, "affinity": a, "cost": c} for s, d, a, c in items],
        }
        return json.dumps(doc, indent=1) + "\n"
    raise ValueError(f"unknown graph format {format!r}")


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Chain:
    """Random walk on a graph.

    ``out_cost[i]`` is the expected cost of one step out of ``i``.  It is
    computed from affinities as ``sum_j a_ij w_ij / d_i`` so that unit costs
    give exactly 1.0.
    """

    transition: np.ndarray
    cost: np.ndarray
    out_degree: np.ndarray
    out_cost: np.ndarray
    labels: tuple[str, ...]

    @property
    def n(self) -> int:
        return self.transition.shape[0]


def build_chain(g: Graph) -> Chain:
    a = g.affinity_matrix()
    w = g.cost_matrix()
    d = a.sum(axis=1)
    dangling = [g.label(i) for i in np.flatnonzero(d <= 0)]
    if dangling:
        raise DanglingNodeError(dangling)
    p = a / d[:, None]
    r = (a * w).sum(axis=1) / d
    return Chain(_frozen(p), _frozen(w), _frozen(d), _frozen(r), g.node_labels)


def _can_reach(p: np.ndarray, targets: Iterable[int]) -> np.ndarray:
    """Boolean mask of states from which some state in ``targets`` is reachable."""
    edge = p > 0
    ok = np.zeros(p.shape[0], dtype=bool)
    ok[list(targets)] = True
    count = int(ok.sum())
    while True:
        ok = ok | edge[:, ok].any(axis=1)
        grown = int(ok.sum())
        if grown == count:
            return ok
        count = grown


@dataclass(frozen=True, eq=False)
class ChainPartition:
    chain: Chain
    transient: tuple[int, ...]
    absorbing: tuple[int, ...]
    p_tt: np.ndarray
    p_ta: np.ndarray
    #: row of each chain state in the transient blocks, -1 for absorbing states
    rows: np.ndarray = field(repr=False, default=None)

    def position(self, state: int) -> int:
        """Row/column of ``state`` in the transient blocks."""
        r = int(self.rows[state]) if 0 <= state < len(self.rows) else -1
        if r < 0:
            raise KeyError(f"state {state} is not transient")
        return r

    def absorbing_position(self, state: int) -> int:
        try:
            return self.absorbing.index(state)
        except ValueError:
            raise KeyError(f"state {state} is not absorbing") from None


def _split(c: Chain, absorbing: tuple[int, ...]) -> ChainPartition:
    aset = set(absorbing)
    transient = tuple(i for i in range(c.n) if i not in aset)
    t_idx = np.array(transient, dtype=int)
    a_idx = np.array(absorbing, dtype=int)
    rows = np.full(c.n, -1, dtype=int)
    rows[t_idx] = np.arange(len(transient))
    p_tt = c.transition[t_idx][:, t_idx]
    p_ta = c.transition[t_idx][:, a_idx]
    return ChainPartition(c, transient, absorbing, _frozen(p_tt), _frozen(p_ta), _frozen(rows))


def partition(c: Chain, absorbing: Iterable[int], check: bool = True) -> ChainPartition:
    """Split ``c`` into transient states (kept in index order) and ``absorbing``.

    ``check=False`` skips the reachability test; only for callers that
    already know every transient state can reach the absorbing set.
    """
    absorbing = tuple(dict.fromkeys(int(x) for x in absorbing))
    n = c.n
    if not absorbing:
        raise GraphError("absorbing set is empty")
    if any(not 0 <= a < n for a in absorbing):
        raise GraphError("absorbing state out of range")
    if len(absorbing) >= n:
        raise GraphError("absorbing set must be a strict subset of the states")
    if check:
        ok = _can_reach(c.transition, absorbing)
        if not ok.all():
            aset = set(absorbing)
            stranded = [i for i in np.flatnonzero(~ok) if i not in aset]
            raise StrandedStatesError(stranded, c.labels)
    return _split(c, absorbing)
