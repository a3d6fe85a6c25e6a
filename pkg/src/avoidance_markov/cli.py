"""Command-line front end.

Subcommands: ``metrics``, ``avoid``, ``pivotality``, ``gen`` and ``verify``.
Exit codes: 0 success, 1 a verification check failed, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .avoidance import (
    FEASIBILITY_EPS,
    AvoidanceQuery,
    avoidance_fundamental,
    avoidance_hitting_cost,
    avoidance_hitting_time,
    via_sweep,
)
from .classical import (
    IDENTITY_RTOL,
    absorption_probabilities,
    fundamental_for,
    hitting_cost,
    hitting_time,
)
from .graph import Graph, GraphError, build_chain, dump_graph, load_graph
from .identities import IDENTITIES, identity_sweep
from .netgen import generate, parse_spec, random_graph
from .oracle import RNG_ALGORITHM, estimate_all, series_metrics
from .pivotality import METRICS, rank

__all__ = ["RunConfig", "main", "format_number"]

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
MC_REL_TOL = 0.02


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    graph: str | None = None
    gen: str | None = None
    format: str = "csv"
    directed: bool = False
    source: str | None = None
    target: str | None = None
    avoid: list[str] = field(default_factory=list)
    via: str | None = None
    absorbing: list[str] = field(default_factory=list)
    metrics: list[str] = field(default_factory=lambda: list(METRICS))
    output: str = "csv"
    out: str | None = None
    mc_samples: int | None = None
    seed: int = 42
    series_k: int = 200
    corpus: int = 10


# ---- formatting -------------------------------------------------------------


def format_number(v) -> str:
    """Six significant digits with ``inf``/``-inf`` literals."""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.6g}"


def _json_value(v):
    if isinstance(v, (bool, str)) or v is None:
        return v
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(v, dict):
        return {str(k): _json_value(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_value(x) for x in v]
    return v


def _csv(columns: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(x if isinstance(x, str) else format_number(x) for x in row) + "\n")
    return buf.getvalue()


def _table(columns: Sequence[str], rows: Sequence[Sequence], output: str, extra: dict | None = None) -> str:
    if output == "csv":
        return _csv(columns, rows)
    if output == "json":
        doc = dict(extra or {})
        doc["rows"] = [dict(zip(columns, row)) for row in rows]
        return json.dumps(_json_value(doc), indent=1) + "\n"
    raise UsageError(f"output format {output!r} is not available for this command")


def _dot_id(label: str) -> str:
    return '"' + label.replace("\\", "\\\\").replace('"', '\\"') + '"'


# ---- input ------------------------------------------------------------------


def _load(cfg: RunConfig) -> Graph:
    if cfg.gen and cfg.graph:
        raise UsageError("give either --graph or --gen, not both")
    if cfg.gen:
        return generate(parse_spec(cfg.gen))
    if not cfg.graph:
        raise UsageError("a graph is required (--graph PATH or --gen SPEC)")
    if os.path.exists(cfg.graph):
        with open(cfg.graph, "rb") as fh:
            return load_graph(fh, cfg.format, directed=cfg.directed)
    try:
        spec = parse_spec(cfg.graph)
    except GraphError:
        raise UsageError(f"no such graph file: {cfg.graph}") from None
    return generate(spec)


def _node(g: Graph, label: str | None, flag: str) -> int:
    if label is None:
        raise UsageError(f"{flag} is required")
    try:
        return g.index(label)
    except KeyError:
        raise UsageError(f"{flag}: unknown node {label!r}") from None


def _nodes(g: Graph, labels: Sequence[str], flag: str) -> list[int]:
    return [_node(g, x, flag) for x in labels]


# ---- commands ---------------------------------------------------------------


def cmd_metrics(cfg: RunConfig) -> tuple[str, int]:
    g = _load(cfg)
    if not cfg.absorbing:
        raise UsageError("--absorbing needs at least one node")
    absorbing = list(dict.fromkeys(_nodes(g, cfg.absorbing, "--absorbing")))
    c = build_chain(g)
    f = fundamental_for(c, absorbing)
    h = hitting_time(f)
    u = hitting_cost(f, c)
    q = absorption_probabilities(f)
    part = f.partition
    cols = ["node", "H", "U"] + [f"Q:{g.label(a)}" for a in part.absorbing]
    rows = [[g.label(x), h[i], u[i], *q.values[i]] for i, x in enumerate(part.transient)]
    extra = {"absorbing": [g.label(a) for a in part.absorbing], "condition": f.condition}
    return _table(cols, rows, cfg.output, extra), EXIT_OK


def cmd_avoid(cfg: RunConfig) -> tuple[str, int]:
    g = _load(cfg)
    s = _node(g, cfg.source, "--source")
    t = _node(g, cfg.target, "--target")
    c = build_chain(g)
    if cfg.via is not None:
        if cfg.avoid:
            raise UsageError("--via and --avoid cannot be combined")
        o = _node(g, cfg.via, "--via")
        if len({s, t, o}) != 3:
            raise UsageError("source, target and via node must be distinct")
        sweep = via_sweep(c, s, t)
        feas = float(sweep.feasibility[o])
        transit = float(sweep.transit_time[o]) if feas >= FEASIBILITY_EPS else math.inf
        cols = ["source", "target", "via", "feasibility", "transit_time", "hitting_time"]
        rows = [[g.label(s), g.label(t), g.label(o), feas, transit, sweep.hit_time]]
        return _table(cols, rows, cfg.output), EXIT_OK
    avoid = _nodes(g, cfg.avoid, "--avoid")
    try:
        q = AvoidanceQuery(s, t, frozenset(avoid))
    except GraphError as exc:
        raise UsageError(str(exc)) from None
    ht = avoidance_hitting_time(c, q)
    hc = avoidance_hitting_cost(c, q)
    cols = ["source", "target", "avoid", "feasibility", "hitting_time", "hitting_cost"]
    avoid_text = ";".join(g.label(o) for o in sorted(q.avoid))
    rows = [[g.label(s), g.label(t), avoid_text, ht.feasibility, ht.value, hc.value]]
    return _table(cols, rows, cfg.output), EXIT_OK


def cmd_pivotality(cfg: RunConfig) -> tuple[str, int]:
    g = _load(cfg)
    s = _node(g, cfg.source, "--source")
    t = _node(g, cfg.target, "--target")
    if s == t:
        raise UsageError("source and target must differ")
    metrics = [m.strip().lower() for m in cfg.metrics if m.strip()]
    bad = [m for m in metrics if m not in METRICS]
    if bad or not metrics:
        raise UsageError(f"--metrics must be a subset of {','.join(METRICS)}")
    c = build_chain(g)
    rep = rank(c, g, s, t, metrics)
    position = {k: i + 1 for i, k in enumerate(rep.ranking)}
    cols = ["node", "feasibility", *metrics, "rank"]
    rows = [
        [g.label(k), rep.feasibility[k], *(rep.scores[m][k] for m in metrics), position[k]]
        for k in rep.nodes
    ]
    if cfg.output == "dot":
        return _pivotality_dot(g, rep, metrics), EXIT_OK
    extra = {
        "source": g.label(s),
        "target": g.label(t),
        "ranked_by": rep.primary,
        "ranking": [g.label(k) for k in rep.ranking],
    }
    return _table(cols, rows, cfg.output, extra), EXIT_OK


def _pivotality_dot(g: Graph, rep, metrics: Sequence[str]) -> str:
    kind, arrow = ("digraph", "->") if g.directed else ("graph", "--")
    lines = [f"{kind} pivotality {{"]
    for i, label in enumerate(g.node_labels):
        attrs = ["style=filled"]
        if i == rep.source:
            attrs += ['fillcolor="#FFFFFF"', "shape=box"]
            text = f"{label}\\nsource"
        elif i == rep.target:
            attrs += ['fillcolor="#FFFFFF"', "shape=doublecircle"]
            text = f"{label}\\ntarget"
        else:
            color = rep.colors[i]
            attrs.append(f'fillcolor="{color}"')
            if color == "#000000":
                attrs.append('fontcolor="#FFFFFF"')
            parts = [f"feasibility={format_number(rep.feasibility[i])}"]
            parts += [f"{m}={format_number(rep.scores[m][i])}" for m in metrics]
            text = label + "\\n" + "\\n".join(parts)
        attrs.append("label=" + _dot_id(text).replace("\\\\n", "\\n"))
        lines.append(f"  {_dot_id(label)} [{', '.join(attrs)}];")
    for e in g.edges:
        if not g.directed and e.src > e.dst:
            continue
        lines.append(f"  {_dot_id(g.label(e.src))} {arrow} {_dot_id(g.label(e.dst))};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def cmd_gen(cfg: RunConfig) -> tuple[str, int]:
    spec = cfg.gen or cfg.graph
    if not spec:
        raise UsageError("gen needs --gen SPEC")
    g = generate(parse_spec(spec))
    if cfg.output not in ("csv", "json"):
        raise UsageError("gen writes csv or json")
    return dump_graph(g, cfg.output), EXIT_OK


# ---- verify -----------------------------------------------------------------


def _corpus(cfg: RunConfig) -> list[tuple[str, Graph]]:
    if cfg.graph or cfg.gen:
        g = _load(cfg)
        return [((cfg.gen or cfg.graph).replace(",", ";"), g)]
    rng = np.random.default_rng(cfg.seed)
    out = []
    for directed in (True, False):
        for i in range(cfg.corpus):
            n = int(rng.integers(4, 11))
            seed = int(rng.integers(2**31))
            p = 0.3 if directed else 0.25
            tag = f"random:n={n};p={p};seed={seed};{'directed' if directed else 'undirected'}"
            out.append((tag, random_graph(n, p, seed, directed)))
    return out


def _queries(c, rng, count: int) -> list[AvoidanceQuery]:
    """Up to ``count`` distinct single-avoid queries with feasibility >= 0.05."""
    triples = [(s, t, o) for s in range(c.n) for t in range(c.n) for o in range(c.n) if len({s, t, o}) == 3]
    order = rng.permutation(len(triples))
    out = []
    for i in order:
        s, t, o = triples[i]
        q = AvoidanceQuery(s, t, frozenset({o}))
        if avoidance_hitting_time(c, q).feasibility >= 0.05:
            out.append(q)
        if len(out) == count:
            break
    return out


def _mc_checks(c, q, samples: int, seed: int) -> list[tuple[str, float, float, float, bool]]:
    """``(quantity, closed form, estimate, z, ok)`` for every conditioned quantity."""
    est = estimate_all(c, q, samples, seed, min_accepted=samples, max_samples=50 * samples)
    af = avoidance_fundamental(c, q)
    closed = {
        "feasibility": af.source_feasibility,
        "hitting-time": avoidance_hitting_time(c, q).value,
        "hitting-cost": avoidance_hitting_cost(c, q).value,
    }
    row = af.source_row
    for m, v in zip(af.transient, row):
        closed[f"visits:{m}"] = float(v)
    out = []
    for name, x in closed.items():
        r = est[name]
        diff = abs(r.estimate - x)
        if r.standard_error > 0:
            z = (r.estimate - x) / r.standard_error
        else:
            # a degenerate sample (e.g. every walk accepted) agrees up to round-off
            z = 0.0 if diff <= 1e-9 * max(1.0, abs(x)) else math.inf
        ok = diff <= max(3 * r.standard_error, MC_REL_TOL * abs(x))
        out.append((name, x, r.estimate, z, ok))
    return out


def cmd_verify(cfg: RunConfig) -> tuple[str, int]:
    corpus = _corpus(cfg)
    samples = cfg.mc_samples if cfg.mc_samples is not None else 20000
    if samples < 1 or cfg.series_k < 1:
        raise UsageError("--mc-samples and --series-k must be positive")
    lines = [f"# rng {RNG_ALGORITHM}, seed {cfg.seed}", f"# graphs {len(corpus)}"]
    failed = False

    total = None
    for _, g in corpus:
        sweep = identity_sweep(build_chain(g))
        total = sweep if total is None else total.merge(sweep)
    lines.append("identity,max_residual,checked,status")
    for name in IDENTITIES:
        ok = total.max_residual[name] <= IDENTITY_RTOL
        failed |= not ok
        lines.append(f"{name},{total.max_residual[name]:.3e},{total.checked[name]},{'ok' if ok else 'FAIL'}")

    rng = np.random.default_rng(cfg.seed)
    per_graph = 3 if len(corpus) == 1 else 1
    mc_rows, series_rows = [], []
    for tag, g in corpus:
        c = build_chain(g)
        for q in _queries(c, rng, per_graph):
            name = f"{g.label(q.source)}->{g.label(q.target)} avoid {g.label(next(iter(q.avoid)))}"
            checks = _mc_checks(c, q, samples, cfg.seed)
            worst = max(checks, key=lambda r: abs(r[3]))
            ok = all(r[4] for r in checks)
            failed |= not ok
            mc_rows.append(f"{tag},{name},{len(checks)},{format_number(abs(worst[3]))},{worst[0]},{'ok' if ok else 'FAIL'}")
            sr = series_metrics(c, q, cfg.series_k)
            if not sr.converged:
                series_rows.append(f"{tag},{name},{format_number(sr.envelope)},,,unconverged")
                continue
            h = avoidance_hitting_time(c, q)
            err_h = abs(sr.hitting_time - h.value)
            err_q = abs(sr.feasibility - h.feasibility)
            ok = err_h <= sr.hitting_time_tail + 1e-6 and err_q <= sr.feasibility_tail + 1e-6
            failed |= not ok
            series_rows.append(
                f"{tag},{name},{format_number(sr.envelope)},{err_h:.3e},{err_q:.3e},{'ok' if ok else 'FAIL'}"
            )
    lines.append("graph,query,mc_checks,max_abs_z,worst,status")
    lines += mc_rows
    lines.append("graph,query,series_envelope,hitting_time_error,feasibility_error,status")
    lines += series_rows
    lines.append("FAIL" if failed else "PASS")
    return "\n".join(lines) + "\n", EXIT_FAIL if failed else EXIT_OK


COMMANDS = {
    "metrics": cmd_metrics,
    "avoid": cmd_avoid,
    "pivotality": cmd_pivotality,
    "gen": cmd_gen,
    "verify": cmd_verify,
}


# ---- argument parsing -------------------------------------------------------


def _split(text: str | None) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()] if text else []


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="avoidance-markov",
        description="Classical and avoidance random-walk metrics and node pivotality.",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--graph", help="edge-list file, or a generator spec such as example1")
    parser.add_argument("--gen", help="generator spec, e.g. example2:L2=20,N2=2 or fat-tree:6")
    parser.add_argument("--format", choices=("csv", "json"), default="csv", help="input graph format")
    parser.add_argument("--directed", action="store_true", help="read csv edges as directed")
    parser.add_argument("--source")
    parser.add_argument("--target")
    parser.add_argument("--avoid", help="comma-separated avoid set")
    parser.add_argument("--via", help="via node for the transit hitting time")
    parser.add_argument("--absorbing", help="comma-separated absorbing set")
    parser.add_argument("--metrics", default=",".join(METRICS), help="subset of ath,ch,shp,mf")
    parser.add_argument("--output", choices=("csv", "json", "dot"), default="csv")
    parser.add_argument("--out", help="write the report here instead of stdout")
    parser.add_argument("--mc-samples", type=int, help="accepted walks per query in verify")
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--series-k", type=int, default=200)
    parser.add_argument("--corpus", type=int, default=10, help="random graphs per kind in verify")
    return parser


def parse_config(argv: Sequence[str] | None = None) -> RunConfig:
    a = build_parser().parse_args(argv)
    return RunConfig(
        command=a.command,
        graph=a.graph,
        gen=a.gen,
        format=a.format,
        directed=a.directed,
        source=a.source,
        target=a.target,
        avoid=_split(a.avoid),
        via=a.via,
        absorbing=_split(a.absorbing),
        metrics=_split(a.metrics),
        output=a.output,
        out=a.out,
        mc_samples=a.mc_samples,
        seed=a.seed,
        series_k=a.series_k,
        corpus=a.corpus,
    )


def main(argv: Sequence[str] | None = None) -> int:
    cfg = parse_config(argv)
    try:
        text, code = COMMANDS[cfg.command](cfg)
    except (UsageError, GraphError, KeyError, OSError, ValueError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_USAGE
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
