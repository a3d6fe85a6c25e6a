"""Example topologies and seeded random graphs.

All generators use unit affinities and unit costs.

``example1``
    Directed 5-node graph: two routes from 1 to 4 (``1-2-3-4`` and
    ``1-5-4``) closed by the edge ``4 -> 1``.  An undirected reading cannot
    give the same CH score for nodes 2, 3 and 5; this directed one gives the
    reference pivotality table exactly.
``example2(L2, N2)``
    Undirected.  A two-hop path ``s-g-t``, a three-hop branch
    ``s-k1-m1-t`` and a branch ``s-k2`` continued by ``N2`` internally
    disjoint chains of ``L2`` hops from ``k2`` to ``t``.  Where the short
    path attaches is a free choice of the reconstruction; this is the
    simplest reading, symmetric in ``k1``/``k2`` for ``L2=2, N2=1``.  For
    ``L2=1`` the parallel chains collapse to one ``k2-t`` edge of affinity
    ``N2``.
``example3b``
    Undirected path ``1-2-3``.
``fat_tree(h)``
    Data-center fat-tree: ``(h/2)^2`` core switches, ``h`` pods of ``h/2``
    aggregation and ``h/2`` edge switches, ``h/2`` hosts per edge switch.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .graph import Graph, GraphError

__all__ = [
    "GeneratorSpec",
    "example1",
    "example2",
    "example3b",
    "fat_tree",
    "random_graph",
    "two_block_graph",
    "generate",
    "parse_spec",
]

MAX_ATTEMPTS = 1000


def example1() -> Graph:
    edges = [("1", "2", 1), ("2", "3", 1), ("3", "4", 1), ("1", "5", 1), ("5", "4", 1), ("4", "1", 1)]
    return Graph.from_edges(["1", "2", "3", "4", "5"], edges, directed=True)


def example2(L2: int = 2, N2: int = 1) -> Graph:
    if L2 < 1 or N2 < 1:
        raise GraphError("example2 needs L2 >= 1 and N2 >= 1")
    labels = ["s", "t", "g", "k1", "m1", "k2"]
    edges = [("s", "g", 1), ("g", "t", 1), ("s", "k1", 1), ("k1", "m1", 1), ("m1", "t", 1), ("s", "k2", 1)]
    for j in range(1, N2 + 1):
        prev = "k2"
        for i in range(1, L2):
            node = f"c{j}_{i}"
            labels.append(node)
            edges.append((prev, node, 1))
            prev = node
        edges.append((prev, "t", 1))
    return Graph.from_edges(labels, edges, directed=False)


def example3b() -> Graph:
    return Graph.from_edges(["1", "2", "3"], [("1", "2", 1), ("2", "3", 1)], directed=False)


def fat_tree(h: int = 6) -> Graph:
    if h < 2 or h % 2:
        raise GraphError("fat-tree arity must be an even integer >= 2")
    half = h // 2
    cores = [f"core{i}" for i in range(half * half)]
    labels = list(cores)
    edges = []
    hosts = []
    for pod in range(h):
        aggs = [f"agg{pod}_{a}" for a in range(half)]
        edge_sw = [f"edge{pod}_{e}" for e in range(half)]
        labels += aggs + edge_sw
        for a, agg in enumerate(aggs):
            # aggregation switch a of every pod uplinks to core group a
            for c in range(half):
                edges.append((agg, cores[a * half + c], 1))
            for e in edge_sw:
                edges.append((agg, e, 1))
        for e, sw in enumerate(edge_sw):
            for x in range(half):
                host = f"host{pod}_{e}_{x}"
                hosts.append(host)
                edges.append((sw, host, 1))
    return Graph.from_edges(labels + hosts, edges, directed=False)


def _strongly_connected(adj: np.ndarray) -> bool:
    n = adj.shape[0]

    def reach(m):
        seen = np.zeros(n, dtype=bool)
        seen[0] = True
        stack = [0]
        while stack:
            i = stack.pop()
            for j in np.flatnonzero(m[i]):
                if not seen[j]:
                    seen[j] = True
                    stack.append(j)
        return seen.all()

    return reach(adj) and reach(adj.T)


def random_graph(n: int, edge_prob: float, seed: int, directed: bool = True) -> Graph:
    """Erdos-Renyi graph without self-loops, redrawn until (strongly) connected."""
    if n < 2:
        raise GraphError("random graph needs n >= 2")
    if not 0 < edge_prob <= 1:
        raise GraphError("edge_prob must be in (0, 1]")
    rng = np.random.default_rng(seed)
    for _ in range(MAX_ATTEMPTS):
        draw = rng.random((n, n)) < edge_prob
        np.fill_diagonal(draw, False)
        if not directed:
            draw = np.triu(draw, 1)
            draw = draw | draw.T
        if _strongly_connected(draw):
            labels = [str(i) for i in range(n)]
            pairs = zip(*np.nonzero(np.triu(draw, 1) if not directed else draw))
            edges = [(str(i), str(j), 1.0) for i, j in pairs]
            return Graph.from_edges(labels, edges, directed=directed)
    raise GraphError(f"no connected graph after {MAX_ATTEMPTS} attempts (n={n}, p={edge_prob})")


def two_block_graph(n1: int, n2: int, edge_prob: float, seed: int) -> tuple[Graph, int, int, int]:
    """Two random connected undirected blocks glued at one cut vertex.

    Returns ``(graph, s, t, cut)`` with ``s`` in the first block and ``t``
    in the second.
    """
    rng = np.random.default_rng(seed)
    a = random_graph(n1, edge_prob, int(rng.integers(2**31)), directed=False)
    b = random_graph(n2, edge_prob, int(rng.integers(2**31)), directed=False)
    # the last node of block a is identified with node 0 of block b
    cut = n1 - 1
    labels = [str(i) for i in range(n1 + n2 - 1)]
    edges = [(str(e.src), str(e.dst), 1.0) for e in a.edges if e.src < e.dst]
    shift = lambda i: i + n1 - 1
    edges += [(str(shift(e.src)), str(shift(e.dst)), 1.0) for e in b.edges if e.src < e.dst]
    g = Graph.from_edges(labels, edges, directed=False)
    s = int(rng.integers(0, n1 - 1))
    t = int(rng.integers(n1, n1 + n2 - 1))
    return g, s, t, cut


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    L2: int = 2
    N2: int = 1
    arity: int = 6
    n: int = 10
    edge_prob: float = 0.3
    seed: int = 0
    directed: bool = True


def generate(spec: GeneratorSpec) -> Graph:
    if spec.kind == "example1":
        return example1()
    if spec.kind == "example2":
        return example2(spec.L2, spec.N2)
    if spec.kind == "example3b":
        return example3b()
    if spec.kind == "fat-tree":
        return fat_tree(spec.arity)
    if spec.kind == "random":
        return random_graph(spec.n, spec.edge_prob, spec.seed, spec.directed)
    raise GraphError(f"unknown generator {spec.kind!r}")


_KINDS = ("example1", "example2", "example3b", "fat-tree", "random")


def parse_spec(text: str) -> GeneratorSpec:
    """Parse ``kind[:key=value,...]``.

    Examples: ``example1``, ``example2:L2=20,N2=2``, ``fat-tree:6``,
    ``random:n=12,p=0.3,seed=4,undirected``.  A bare number after
    ``fat-tree:`` is the arity.
    """
    kind, _, rest = text.strip().partition(":")
    kind = kind.replace("_", "-").lower()
    if kind == "fattree":
        kind = "fat-tree"
    if kind not in _KINDS:
        raise GraphError(f"unknown generator {kind!r}; expected one of {', '.join(_KINDS)}")
    kw: dict = {"kind": kind}
    for item in filter(None, (x.strip() for x in rest.split(","))):
        if item in ("directed", "undirected"):
            kw["directed"] = item == "directed"
            continue
        if re.fullmatch(r"\d+", item) and kind == "fat-tree":
            kw["arity"] = int(item)
            continue
        key, sep, value = item.partition("=")
        if not sep:
            raise GraphError(f"malformed generator option {item!r}")
        key = {"l2": "L2", "n2": "N2", "h": "arity", "p": "edge_prob", "k": "arity"}.get(key.lower(), key.lower())
        try:
            if key in ("L2", "N2", "arity", "n", "seed"):
                kw[key] = int(value)
            elif key == "edge_prob":
                kw[key] = float(value)
            elif key == "directed":
                kw[key] = value.lower() in ("1", "true", "yes")
            else:
                raise GraphError(f"unknown generator option {key!r}")
        except ValueError:
            raise GraphError(f"bad value for {key}: {value!r}") from None
    return GeneratorSpec(**kw)
