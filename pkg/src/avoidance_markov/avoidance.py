"""Avoidance and transit metrics.

A walk from ``s`` is run until it first hits ``t`` and is conditioned on not
touching the avoid set ``O`` on the way.  All conditioned quantities are
obtained from the classical chain in which both ``t`` and ``O`` absorb: with
``F = F^{t,O}`` and ``q_m = Q_m^{t, not O}``,

    F_avoid[s, m] = F[s, m] * q[m] / q[s]

and hitting times and costs follow as (weighted) row sums of ``F_avoid``.
The general set form is the only code path; a single avoid node is the
``|O| = 1`` case.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .classical import FundamentalMatrix, fundamental_for, hitting_time
from .graph import Chain, GraphError

__all__ = [
    "FEASIBILITY_EPS",
    "AvoidanceQuery",
    "AvoidanceResult",
    "AvoidanceFundamental",
    "ViaSweep",
    "avoidance_fundamental",
    "avoidance_hitting_time",
    "avoidance_hitting_cost",
    "transit_hitting_time",
    "conditioned_transition",
    "via_sweep",
]

# probabilities below this are structural zeros
FEASIBILITY_EPS = 1e-12


@dataclass(frozen=True)
class AvoidanceQuery:
    source: int
    target: int
    avoid: frozenset = frozenset()

    def __post_init__(self):
        avoid = frozenset(int(o) for o in self.avoid)
        object.__setattr__(self, "avoid", avoid)
        if self.source == self.target:
            raise GraphError("source and target must differ")
        if self.source in avoid or self.target in avoid:
            raise GraphError("avoid set must not contain the source or the target")

    def check(self, c: Chain) -> None:
        for x in (self.source, self.target, *self.avoid):
            if not 0 <= x < c.n:
                raise GraphError(f"state {x} out of range")


@dataclass(frozen=True)
class AvoidanceResult:
    feasibility: float
    value: float

    @property
    def feasible(self) -> bool:
        return self.feasibility >= FEASIBILITY_EPS


@dataclass(frozen=True, eq=False)
class AvoidanceFundamental:
    """Conditioned visit counts over the transient states ``V - O - {t}``.

    Rows of sources whose feasibility is below ``FEASIBILITY_EPS`` are +inf.
    """

    query: AvoidanceQuery
    transient: tuple[int, ...]
    values: np.ndarray
    feasibility: np.ndarray
    base: FundamentalMatrix = field(repr=False)

    @property
    def source_row(self) -> np.ndarray:
        return self.values[self.base.partition.position(self.query.source)]

    @property
    def source_feasibility(self) -> float:
        return float(self.feasibility[self.base.partition.position(self.query.source)])


def _target_absorption(f: FundamentalMatrix, t: int) -> np.ndarray:
    p = f.partition
    return np.clip(f.values @ p.p_ta[:, p.absorbing_position(t)], 0.0, 1.0)


def _core(c: Chain, t: int, avoid: Iterable[int]) -> tuple[FundamentalMatrix, np.ndarray]:
    f = fundamental_for(c, (t, *sorted(avoid)))
    return f, _target_absorption(f, t)


def _conditioned_visits(f: FundamentalMatrix, q: np.ndarray) -> np.ndarray:
    ok = q >= FEASIBILITY_EPS
    out = np.full_like(f.values, np.inf)
    out[ok] = f.values[ok] * q[None, :] / q[ok, None]
    return out


def avoidance_fundamental(c: Chain, q: AvoidanceQuery) -> AvoidanceFundamental:
    q.check(c)
    f, feas = _core(c, q.target, q.avoid)
    values = _conditioned_visits(f, feas)
    values.setflags(write=False)
    return AvoidanceFundamental(q, f.partition.transient, values, feas, f)


def avoidance_hitting_time(c: Chain, q: AvoidanceQuery) -> AvoidanceResult:
    af = avoidance_fundamental(c, q)
    feas = af.source_feasibility
    if feas < FEASIBILITY_EPS:
        return AvoidanceResult(feas, np.inf)
    row = af.source_row
    return AvoidanceResult(feas, float(row @ np.ones(row.shape[0])))


def _conditioned_out_cost(c: Chain, f: FundamentalMatrix, t: int, feas: np.ndarray) -> np.ndarray:
    """Mean step cost out of each transient state on the conditioned walk.

    The successor weights ``p_mi Q_i`` are normalized by their own sum (which
    equals ``Q_m`` for a transient ``m``) so that unit costs give exactly 1.
    Successors with zero feasibility drop out; so do infeasible rows.
    """
    full = np.zeros(c.n)
    full[list(f.partition.transient)] = feas
    full[t] = 1.0
    rows = list(f.partition.transient)
    weights = c.transition[rows] * full[None, :]
    norm = weights.sum(axis=1)
    r = np.zeros(len(rows))
    ok = feas >= FEASIBILITY_EPS
    r[ok] = (weights[ok] * c.cost[rows][ok]).sum(axis=1) / norm[ok]
    return r


def avoidance_hitting_cost(c: Chain, q: AvoidanceQuery) -> AvoidanceResult:
    af = avoidance_fundamental(c, q)
    feas = af.source_feasibility
    if feas < FEASIBILITY_EPS:
        return AvoidanceResult(feas, np.inf)
    r = _conditioned_out_cost(c, af.base, q.target, af.feasibility)
    row = np.where(np.isfinite(af.source_row), af.source_row, 0.0)
    return AvoidanceResult(feas, float(row @ r))


def transit_hitting_time(c: Chain, s: int, t: int, o: int) -> float:
    """Expected steps from ``s`` to ``t`` for a walk forced through ``o`` first."""
    if len({s, t, o}) != 3:
        raise GraphError("source, target and via node must be distinct")
    leg = avoidance_hitting_time(c, AvoidanceQuery(s, o, frozenset({t})))
    if not leg.feasible:
        return np.inf
    f = fundamental_for(c, (t,))
    return leg.value + float(hitting_time(f)[f.partition.position(o)])


def conditioned_transition(c: Chain, t: int, avoid: Iterable[int] = ()) -> tuple[np.ndarray, np.ndarray]:
    """Doob-transformed walk ``P~_ij = P_ij Q_j / Q_i`` on feasible states.

    Returns ``(states, P~)`` where ``states`` lists the feasible transient
    states followed by ``t``; ``t`` is made absorbing.  Classical metrics of
    this chain are the avoidance metrics of the original one.
    """
    f, feas = _core(c, t, avoid)
    trans = np.array(f.partition.transient)
    ok = feas >= FEASIBILITY_EPS
    states = np.append(trans[ok], t)
    h = np.zeros(c.n)
    h[trans] = feas
    h[t] = 1.0
    sub = c.transition[np.ix_(states, states)] * h[states][None, :] / h[states][:, None]
    sub[-1] = 0.0
    sub[-1, -1] = 1.0
    return states, sub


@dataclass(frozen=True, eq=False)
class ViaSweep:
    """Per-node quantities for ``s -> k -> t`` from one factorization of ``F^t``.

    Arrays are indexed by chain state; entries at ``t`` (and ``s`` for the
    avoidance leg) are NaN.
    """

    source: int
    target: int
    hit_time: float  # H_s^t
    feasibility: np.ndarray  # Q_s^{k, not t}
    avoid_time: np.ndarray  # H_s^{k, not t}
    onward_time: np.ndarray  # H_k^t

    @property
    def transit_time(self) -> np.ndarray:
        return self.avoid_time + self.onward_time


def via_sweep(c: Chain, s: int, t: int) -> ViaSweep:
    """``Q_s^{k,not t}`` and ``H_s^{k,not t}`` for every ``k`` at once.

    With ``F = F^t`` and ``G = F @ F``, absorbing ``k`` as well turns the
    avoidance leg into ``G_sk / F_sk - G_kk / F_kk`` and its feasibility into
    ``F_sk / F_kk``, so the whole sweep costs one solve and one product.
    """
    if s == t:
        raise GraphError("source and target must differ")
    f = fundamental_for(c, (t,))
    trans = np.array(f.partition.transient)
    fv = f.values
    g = fv @ fv
    si = f.partition.position(s)
    diag_f = np.diag(fv)
    feas = np.clip(fv[si] / diag_f, 0.0, 1.0)
    ok = feas >= FEASIBILITY_EPS
    leg = np.full(len(trans), np.inf)
    with np.errstate(divide="ignore", invalid="ignore"):
        leg[ok] = g[si, ok] / fv[si, ok] - np.diag(g)[ok] / diag_f[ok]
    h = hitting_time(f)

    def scatter(v):
        out = np.full(c.n, np.nan)
        out[trans] = v
        return out

    feas_all, leg_all = scatter(feas), scatter(leg)
    feas_all[s] = leg_all[s] = np.nan
    return ViaSweep(s, t, float(h[si]), feas_all, leg_all, scatter(h))
