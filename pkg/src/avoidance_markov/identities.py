"""Identity suite for the avoidance metrics.

Every identity is evaluated as two independently computed sides and reported
as a relative residual ``|a - b| / max(1, |a|, |b|)``.  For a fixed target
``t`` all avoid nodes ``o`` and sources ``s`` are handled at once: the
matrices ``F^{x}`` for single absorbing states and ``F^{t,o}`` for every pair
are obtained from batched inverses in full state indexing (rows and columns
of absorbing states are zero).

Checked identities (``F = F^t``, ``D = F^{t,o}``, ``q = Q^{t, not o}``):

visits_row_sum
    ``H_s^{t, not o}`` as the row sum of the avoidance fundamental matrix
    against ``sum_m D_sm q_m / q_s``.
cost_row_sum
    ``U_s^{t, not o}`` from the conditioned out-costs against
    ``sum_m D_sm sum_i p_mi w_mi q_i / q_s``.
set_time_split
    ``H_s^{t,o} = Q^{t, not o} H^{t, not o} + Q^{o, not t} H^{o, not t}``.
time_decomposition
    ``H_s^t = Q^{t, not o} H^{t, not o} + Q^{o, not t} (H^{o, not t} + H_o^t)``.
set_time_reduction
    ``H_s^{t,o} = H_s^t - Q_s^{o, not t} H_o^t``.
visits_from_avoid_inverse / visits_from_target_inverse
    the avoidance fundamental matrix rebuilt from ``F^o`` and from ``F^t``.
time_from_avoid_inverse / time_from_target_inverse
    the avoidance hitting time from the same two routes.
rank_one_update
    ``D`` from ``F`` by the rank-one update against the direct inverse.
normalized_column
    ``Q_s^{o, not t} = F_so / F_oo`` against ``D P[:, o]``.
absorption_row_sum
    ``Q^{t, not o} + Q^{o, not t} = 1``.
empty_avoid
    the avoidance formula with no avoid node against ``H^t``.

Terms ``0 * inf`` are taken as 0 when the probability is below
``FEASIBILITY_EPS``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .avoidance import FEASIBILITY_EPS, AvoidanceQuery
from .classical import IDENTITY_RTOL
from .graph import Chain, GraphError, StrandedStatesError, _can_reach

__all__ = [
    "IDENTITIES",
    "IdentityReport",
    "IdentitySweep",
    "relative_residual",
    "identity_residuals",
    "identity_sweep",
    "verify_identities",
]

IDENTITIES = (
    "visits_row_sum",
    "cost_row_sum",
    "set_time_split",
    "time_decomposition",
    "set_time_reduction",
    "visits_from_avoid_inverse",
    "visits_from_target_inverse",
    "time_from_avoid_inverse",
    "time_from_target_inverse",
    "rank_one_update",
    "normalized_column",
    "absorption_row_sum",
    "empty_avoid",
)


def relative_residual(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    with np.errstate(invalid="ignore"):
        scale = np.maximum(1.0, np.maximum(np.abs(a), np.abs(b)))
        return np.abs(a - b) / scale


def _times(q, x):
    """``q * x`` with ``0 * inf = 0`` below the feasibility threshold."""
    with np.errstate(invalid="ignore"):
        return np.where(q < FEASIBILITY_EPS, 0.0, q * x)


def _absorbing_inverses(p: np.ndarray, sets: Sequence[Sequence[int]]) -> tuple[np.ndarray, np.ndarray]:
    """Embedded ``(I - P_TT)^{-1}`` for each absorbing set, stacked.

    Rows and columns of absorbing states are zero.  Sets that strand some
    state are flagged in the returned mask and their slice is NaN.
    """
    n = p.shape[0]
    k = len(sets)
    ok = np.array([_can_reach(p, a).all() for a in sets], dtype=bool)
    m = np.broadcast_to(np.eye(n) - p, (k, n, n)).copy()
    for i, a in enumerate(sets):
        a = list(a)
        if not ok[i]:
            m[i] = np.eye(n)
            continue
        m[i, a, :] = 0.0
        m[i, :, a] = 0.0
        m[i, a, a] = 1.0
    inv = np.linalg.inv(m)
    np.maximum(inv, 0.0, out=inv)
    for i, a in enumerate(sets):
        a = list(a)
        inv[i, a, a] = 0.0
    inv[~ok] = np.nan
    return inv, ok


def identity_residuals(
    c: Chain, t: int, avoid: Iterable[int] | None = None
) -> tuple[np.ndarray, dict[str, np.ndarray]]:
    """Residuals of every identity for target ``t``.

    Returns ``(nodes, residuals)``: ``nodes`` are the avoid nodes checked
    (all ``o != t`` by default) and each residual array has shape
    ``(len(nodes), n)`` indexed by source.  NaN marks sources where the
    identity does not apply (``s`` in ``{t, o}``, an infeasible query, or a
    pair ``{t, o}`` that strands some state).
    """
    p = np.asarray(c.transition, dtype=float)
    w = np.asarray(c.cost, dtype=float)
    n = c.n
    nodes = np.array([o for o in range(n) if o != t] if avoid is None else list(avoid), dtype=int)
    if np.any(nodes == t) or np.any((nodes < 0) | (nodes >= n)):
        raise GraphError("avoid nodes must be valid states other than the target")
    single, single_ok = _absorbing_inverses(p, [(t,)] + [(int(o),) for o in nodes])
    if not single_ok[0]:
        stranded = np.flatnonzero(~_can_reach(p, [t]))
        raise StrandedStatesError([int(i) for i in stranded], c.labels)
    f = single[0]
    e = single[1:]
    d, pair_ok = _absorbing_inverses(p, [(t, int(o)) for o in nodes])
    k = len(nodes)
    ar = np.arange(k)
    ones = np.ones(n)

    h_t = f @ ones
    qt = d @ p[:, t]  # (k, n)
    qo = np.einsum("osm,mo->os", d, p[:, nodes])
    h_to = d @ ones

    valid = pair_ok[:, None] & np.ones((k, n), dtype=bool)
    valid[:, t] = False
    valid[ar, nodes] = False

    res: dict[str, np.ndarray] = {}
    with np.errstate(divide="ignore", invalid="ignore"):
        feas_t = valid & (qt >= FEASIBILITY_EPS)
        # conditioned visit counts and hitting times
        fav = d * qt[:, None, :] / qt[:, :, None]
        h_av = fav.sum(axis=2)
        h_av_doob = np.einsum("osm,om->os", d, qt) / qt
        h_av_o = np.einsum("osm,om->os", d, qo) / qo
        res["visits_row_sum"] = np.where(feas_t, relative_residual(h_av, h_av_doob), np.nan)

        # conditioned costs
        q_full = qt.copy()
        q_full[:, t] = 1.0
        q_full[ar, nodes] = 0.0
        numer = q_full @ (p * w).T
        norm = q_full @ p.T
        r = np.where(qt >= FEASIBILITY_EPS, numer / norm, 0.0)
        u_av = np.einsum("osm,om->os", np.where(np.isfinite(fav), fav, 0.0), r)
        u_doob = np.einsum("osm,om->os", d, numer) / qt
        res["cost_row_sum"] = np.where(feas_t, relative_residual(u_av, u_doob), np.nan)

        split = _times(qt, h_av) + _times(qo, h_av_o)
        res["set_time_split"] = np.where(valid, relative_residual(h_to, split), np.nan)
        h_o = h_t[nodes][:, None]
        theorem = _times(qt, h_av) + _times(qo, h_av_o + h_o)
        res["time_decomposition"] = np.where(valid, relative_residual(h_t[None, :], theorem), np.nan)
        res["set_time_reduction"] = np.where(valid, relative_residual(h_to, h_t[None, :] - qo * h_o), np.nan)
        res["absorption_row_sum"] = np.where(valid, relative_residual(qt + qo, 1.0), np.nan)

        # avoidance fundamental matrix through F^o
        eo_t = e[:, :, t]  # F^o_{.t}
        eo_tt = e[:, t, t]
        rel5 = e[:, None, :, t] * (e / eo_t[:, :, None] - e[:, t, None, :] / eo_tt[:, None, None])
        feas5 = feas_t & single_ok[1:, None]
        mvalid = valid[:, None, :]
        r5 = np.where(mvalid, relative_residual(rel5, fav), 0.0).max(axis=2)
        res["visits_from_avoid_inverse"] = np.where(feas5, r5, np.nan)
        res["time_from_avoid_inverse"] = np.where(
            feas5, relative_residual(np.where(mvalid, rel5, 0.0).sum(axis=2), h_av), np.nan
        )

        # avoidance fundamental matrix through F^t
        f_so = f[:, nodes].T  # (k, n)
        f_oo = f[nodes, nodes]
        f_om = f[nodes, :]
        f_mo = f[:, nodes].T
        rel6 = (
            (f_oo[:, None, None] * f[None, :, :] - f_so[:, :, None] * f_om[:, None, :])
            * (f_oo[:, None] - f_mo)[:, None, :]
            / (f_oo[:, None, None] * (f_oo[:, None] - f_so)[:, :, None])
        )
        r6 = np.where(mvalid, relative_residual(rel6, fav), 0.0).max(axis=2)
        res["visits_from_target_inverse"] = np.where(feas_t, r6, np.nan)
        ff = f @ f
        ff_so = ff[:, nodes].T
        ff_oo = ff[nodes, nodes]
        h6 = (
            f_oo[:, None] * h_t[None, :]
            - f_so * h_t[nodes][:, None]
            - ff_so
            + (f_so / f_oo[:, None]) * ff_oo[:, None]
        ) / (f_oo[:, None] - f_so)
        res["time_from_target_inverse"] = np.where(feas_t, relative_residual(h6, h_av), np.nan)

        # rank-one update and normalized column
        inc = f[None, :, :] - f_so[:, :, None] * f_om[:, None, :] / f_oo[:, None, None]
        ra1 = np.where(mvalid, relative_residual(inc, d), 0.0).max(axis=2)
        res["rank_one_update"] = np.where(valid, ra1, np.nan)
        res["normalized_column"] = np.where(valid, relative_residual(f_so / f_oo[:, None], qo), np.nan)

        # no avoid node: the conditioning is trivial
        q_empty = f @ p[:, t]
        h_empty = (f @ q_empty) / q_empty
        src = np.ones(n, dtype=bool)
        src[t] = False
        res["empty_avoid"] = np.broadcast_to(
            np.where(src, relative_residual(h_empty, h_t), np.nan), (k, n)
        ).copy()
    return nodes, res


@dataclass(frozen=True)
class IdentitySweep:
    """Worst residual and number of applicable triples per identity."""

    max_residual: dict[str, float]
    checked: dict[str, int]

    def ok(self, tol: float = IDENTITY_RTOL) -> bool:
        return all(v <= tol for v in self.max_residual.values())

    def merge(self, other: "IdentitySweep") -> "IdentitySweep":
        return IdentitySweep(
            {k: max(self.max_residual.get(k, 0.0), other.max_residual.get(k, 0.0)) for k in IDENTITIES},
            {k: self.checked.get(k, 0) + other.checked.get(k, 0) for k in IDENTITIES},
        )


def identity_sweep(c: Chain, targets: Iterable[int] | None = None) -> IdentitySweep:
    """Run the identity suite over all ``(s, t, o)`` triples of ``c``."""
    worst = dict.fromkeys(IDENTITIES, 0.0)
    count = dict.fromkeys(IDENTITIES, 0)
    for t in range(c.n) if targets is None else targets:
        _, res = identity_residuals(c, int(t))
        for name, arr in res.items():
            applicable = ~np.isnan(arr)
            count[name] += int(applicable.sum())
            if applicable.any():
                worst[name] = max(worst[name], float(arr[applicable].max()))
    return IdentitySweep(worst, count)


@dataclass
class IdentityReport:
    query: AvoidanceQuery
    residuals: dict[str, float] = field(default_factory=dict)
    skipped: list[str] = field(default_factory=list)

    def max_residual(self) -> float:
        return max(self.residuals.values(), default=0.0)

    def ok(self, tol: float = IDENTITY_RTOL) -> bool:
        return self.max_residual() <= tol


def verify_identities(c: Chain, q: AvoidanceQuery) -> IdentityReport:
    """Residuals of the single-avoid-node identities for one query.

    Identities that do not apply (an infeasible conditioning, so that one
    side is infinite) are listed in ``skipped``; the others, including
    the time decomposition with its annihilated term, are reported.
    """
    q.check(c)
    if len(q.avoid) != 1:
        raise GraphError("the identity suite needs exactly one avoid node")
    (o,) = q.avoid
    _, res = identity_residuals(c, q.target, [o])
    report = IdentityReport(q)
    for name in IDENTITIES:
        v = float(res[name][0, q.source])
        if np.isnan(v):
            report.skipped.append(name)
        else:
            report.residuals[name] = v
    return report
