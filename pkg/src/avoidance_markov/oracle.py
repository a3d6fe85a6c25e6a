"""Independent oracles for the closed forms.

Two routes that never touch a linear solve:

* rejection sampling -- walks are run until they stop in ``O`` or ``t``;
  those ending in ``t`` realize the conditioned expectations directly;
* truncated power series -- the walk-sum expressions
  ``sum_k [P_TT^{k-1} P_TA]_st`` (feasibility), ``sum_k k [...]_st`` (hitting
  time numerator) and ``sum_k [P_TT^k]_sm`` (visits), with a rigorous tail
  bound from ``rho = ||P_TT^K||_inf``.

Randomness: numpy's Philox counter-based generator.  Walks are drawn in
fixed blocks of ``BLOCK`` and block ``b`` is keyed by ``(seed, b)``, so an
estimate does not depend on how blocks are spread over workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .avoidance import AvoidanceQuery
from .graph import Chain, GraphError

__all__ = [
    "RNG_ALGORITHM",
    "BLOCK",
    "WalkSample",
    "WalkBatch",
    "EstimateReport",
    "SeriesResult",
    "sample_walk",
    "sample_walks",
    "estimate_avoidance",
    "estimate_all",
    "series_metrics",
]

RNG_ALGORITHM = "numpy.random.Philox(SeedSequence([seed, block]))"
BLOCK = 8192
DEFAULT_MAX_STEPS = 10**6
SERIES_CONVERGED = 1e-8


def _rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(block)])))


@dataclass(frozen=True)
class WalkSample:
    states: tuple[int, ...]
    cost: float
    outcome: str  # "hit-target" | "hit-avoid" | "truncated"

    @property
    def steps(self) -> int:
        return len(self.states) - 1


def sample_walk(
    c: Chain,
    s: int,
    stop: Iterable[int],
    max_steps: int = DEFAULT_MAX_STEPS,
    rng_seed: int = 0,
    target: int | None = None,
) -> WalkSample:
    """One walk from ``s`` until it enters ``stop``.

    ``target`` (default: the smallest stop state) decides whether a stop is
    reported as ``hit-target`` or ``hit-avoid``.
    """
    stop = set(int(x) for x in stop)
    if not stop:
        raise GraphError("stop set is empty")
    if max_steps < 1:
        raise GraphError("max_steps must be >= 1")
    target = min(stop) if target is None else target
    cum = np.cumsum(c.transition, axis=1)
    rng = _rng(rng_seed, 0)
    states = [s]
    cost = 0.0
    cur = s
    if cur in stop:
        return WalkSample(tuple(states), cost, "hit-target" if cur == target else "hit-avoid")
    for _ in range(max_steps):
        nxt = int(np.searchsorted(cum[cur], rng.random() * cum[cur, -1], side="right"))
        nxt = min(nxt, c.n - 1)
        cost += c.cost[cur, nxt]
        states.append(nxt)
        cur = nxt
        if cur in stop:
            return WalkSample(tuple(states), cost, "hit-target" if cur == target else "hit-avoid")
    return WalkSample(tuple(states), cost, "truncated")


@dataclass
class WalkBatch:
    """Per-walk summaries; ``visits[i, m]`` counts time steps spent at ``m`` before stopping."""

    steps: np.ndarray
    cost: np.ndarray
    terminal: np.ndarray  # -1 for truncated walks
    visits: np.ndarray

    def __len__(self) -> int:
        return self.steps.shape[0]


def _sample_block(c: Chain, s: int, stop: np.ndarray, size: int, max_steps: int, seed: int, block: int) -> WalkBatch:
    n = c.n
    cum = np.cumsum(c.transition, axis=1)
    cum[:, -1] = np.inf  # guards against round-off in the last bin
    is_stop = np.zeros(n, dtype=bool)
    is_stop[stop] = True
    rng = _rng(seed, block)
    cur = np.full(size, s, dtype=np.int64)
    steps = np.zeros(size, dtype=np.int64)
    cost = np.zeros(size)
    terminal = np.full(size, -1, dtype=np.int64)
    visits = np.zeros((size, n), dtype=np.int64)
    active = np.arange(size)
    if is_stop[s]:
        terminal[:] = s
        return WalkBatch(steps, cost, terminal, visits)
    for _ in range(max_steps):
        if active.size == 0:
            break
        here = cur[active]
        visits[active, here] += 1
        u = rng.random(active.size)
        nxt = (u[:, None] >= cum[here]).sum(axis=1)
        cost[active] += c.cost[here, nxt]
        steps[active] += 1
        cur[active] = nxt
        done = is_stop[nxt]
        terminal[active[done]] = nxt[done]
        active = active[~done]
    return WalkBatch(steps, cost, terminal, visits)


def sample_walks(
    c: Chain,
    s: int,
    stop: Iterable[int],
    n_samples: int,
    rng_seed: int = 0,
    max_steps: int = DEFAULT_MAX_STEPS,
    first_block: int = 0,
    workers: int = 1,
) -> WalkBatch:
    """``n_samples`` walks in blocks ``first_block, first_block + 1, ...``."""
    stop = np.array(sorted(set(int(x) for x in stop)), dtype=np.int64)
    if stop.size == 0:
        raise GraphError("stop set is empty")
    nblocks = math.ceil(n_samples / BLOCK)
    sizes = [min(BLOCK, n_samples - b * BLOCK) for b in range(nblocks)]

    def run(b):
        return _sample_block(c, s, stop, sizes[b], max_steps, rng_seed, first_block + b)

    if workers > 1 and nblocks > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run, range(nblocks)))
    else:
        parts = [run(b) for b in range(nblocks)]
    if not parts:
        return WalkBatch(np.zeros(0, np.int64), np.zeros(0), np.zeros(0, np.int64), np.zeros((0, c.n), np.int64))
    return WalkBatch(
        np.concatenate([p.steps for p in parts]),
        np.concatenate([p.cost for p in parts]),
        np.concatenate([p.terminal for p in parts]),
        np.concatenate([p.visits for p in parts]),
    )


@dataclass
class EstimateReport:
    estimate: float
    standard_error: float
    samples_accepted: int
    samples_total: int
    samples_truncated: int = 0
    rng: str = RNG_ALGORITHM
    seed: int = 0

    @property
    def acceptance_rate(self) -> float:
        return self.samples_accepted / self.samples_total if self.samples_total else 0.0

    @property
    def infeasible_evidence(self) -> bool:
        """No walk reached the target: the estimate is undefined."""
        return self.samples_accepted == 0


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    if x.size == 0:
        return math.nan, math.nan
    if x.size == 1:
        return float(x[0]), math.inf
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def estimate_all(
    c: Chain,
    q: AvoidanceQuery,
    n_samples: int,
    rng_seed: int = 0,
    *,
    min_accepted: int = 0,
    max_samples: int | None = None,
    max_steps: int = DEFAULT_MAX_STEPS,
    workers: int = 1,
) -> dict[str, EstimateReport]:
    """Every quantity from one batch of walks.

    Keys: ``hitting-time``, ``hitting-cost``, ``feasibility`` and
    ``visits:<m>`` for each state ``m`` outside ``O`` and ``{t}``.  With
    ``min_accepted`` more blocks are drawn until that many walks reached the
    target or ``max_samples`` walks were drawn in total.
    """
    q.check(c)
    if n_samples < 1:
        raise GraphError("n_samples must be >= 1")
    stop = (q.target, *sorted(q.avoid))
    batch = sample_walks(c, q.source, stop, n_samples, rng_seed, max_steps, workers=workers)
    cap = max_samples if max_samples is not None else max(n_samples, 50 * max(min_accepted, 1))
    parts = [batch]
    drawn = len(batch)
    accepted = int((batch.terminal == q.target).sum())
    while accepted < min_accepted and drawn < cap and accepted > 0:
        more = min(cap - drawn, max(BLOCK, (min_accepted - accepted) * drawn // max(accepted, 1)))
        more = math.ceil(more / BLOCK) * BLOCK
        extra = sample_walks(c, q.source, stop, more, rng_seed, max_steps, first_block=math.ceil(drawn / BLOCK), workers=workers)
        parts.append(extra)
        drawn += len(extra)
        accepted += int((extra.terminal == q.target).sum())
    if len(parts) > 1:
        batch = WalkBatch(
            np.concatenate([p.steps for p in parts]),
            np.concatenate([p.cost for p in parts]),
            np.concatenate([p.terminal for p in parts]),
            np.concatenate([p.visits for p in parts]),
        )
    total = len(batch)
    truncated = int((batch.terminal < 0).sum())
    ok = batch.terminal == q.target
    acc = int(ok.sum())

    def report(est, se):
        return EstimateReport(est, se, acc, total, truncated, RNG_ALGORITHM, rng_seed)

    p_hat = acc / total
    out = {"feasibility": report(p_hat, math.sqrt(p_hat * (1 - p_hat) / total))}
    out["hitting-time"] = report(*_mean_se(batch.steps[ok].astype(float)))
    out["hitting-cost"] = report(*_mean_se(batch.cost[ok]))
    excluded = {q.target, *q.avoid}
    for m in range(c.n):
        if m not in excluded:
            out[f"visits:{m}"] = report(*_mean_se(batch.visits[ok, m].astype(float)))
    return out


def estimate_avoidance(
    c: Chain,
    q: AvoidanceQuery,
    quantity: str,
    n_samples: int,
    rng_seed: int = 0,
    **kwargs,
) -> EstimateReport:
    """Rejection-sampling estimate of one conditioned quantity.

    ``quantity`` is ``hitting-time``, ``hitting-cost``, ``feasibility`` or
    ``visits:<m>``; the feasibility estimate is the acceptance rate.
    """
    est = estimate_all(c, q, n_samples, rng_seed, **kwargs)
    if quantity not in est:
        raise GraphError(f"unknown quantity {quantity!r}")
    return est[quantity]


@dataclass
class SeriesResult:
    """Partial sums at truncation ``K`` and the tail envelope ``rho = ||P_TT^K||_inf``.

    ``*_tail`` are upper bounds on the distance to the infinite sums.
    """

    K: int
    envelope: float
    feasibility: float
    feasibility_tail: float
    hitting_time: float
    hitting_time_tail: float
    states: tuple[int, ...]
    visits: np.ndarray
    visits_tail: np.ndarray
    converged: bool = field(default=False)


def series_metrics(c: Chain, q: AvoidanceQuery, K: int = 200) -> SeriesResult:
    """Truncated walk sums for the conditioned hitting time, feasibility and visits.

    Only matrix-vector products with ``P_TT`` are used.  Let ``rho`` be the
    max row sum of ``P_TT^K``; any ``k`` in block ``[jK, (j+1)K)`` has
    ``||P_TT^k|| <= rho^j``, which bounds every tail geometrically.
    """
    q.check(c)
    if K < 1:
        raise GraphError("K must be >= 1")
    absorbing = {q.target, *q.avoid}
    trans = [i for i in range(c.n) if i not in absorbing]
    pos = {x: i for i, x in enumerate(trans)}
    p_tt = c.transition[np.ix_(trans, trans)]
    b = c.transition[trans, q.target]
    n = len(trans)
    si = pos[q.source]

    # forward: x_k = e_s' P^k ; backward: y_k = P^k b
    x = np.zeros(n)
    x[si] = 1.0
    y = b.copy()
    visits_s = np.zeros(n)  # sum_{k<K} [P^k]_{s,m}
    reach = np.zeros(n)  # sum_{k<K} [P^k b]_m
    numer = 0.0
    power = np.eye(n)
    for k in range(1, K + 1):
        # term k uses P^{k-1}
        visits_s += x
        reach += y
        numer += k * (x @ b)
        x = x @ p_tt
        y = p_tt @ y
        power = power @ p_tt
    rho = float(np.abs(power).sum(axis=1).max()) if n else 0.0
    denom = reach[si]

    if rho < 1:
        geo = rho / (1 - rho)
        tail_d = K * geo  # bounds sum_{k>K} ||P^{k-1}||
        tail_n = K * K * (2 * rho - rho * rho) / (1 - rho) ** 2
    else:
        tail_d = tail_n = math.inf

    if denom > 0:
        h = numer / denom
        lo = numer / (denom + tail_d)
        hi = (numer + tail_n) / denom
        h_tail = max(h - lo, hi - h)
    else:
        h, h_tail = math.inf, math.inf

    # conditioned visits: S_sm * R_m / R_s with interval bounds on each factor
    if denom > 0:
        v = visits_s * reach / denom
        hi_v = (visits_s + tail_d) * (reach + tail_d) / denom
        lo_v = visits_s * reach / (denom + tail_d)
        v_tail = np.maximum(v - lo_v, hi_v - v)
    else:
        v = np.full(n, math.inf)
        v_tail = np.full(n, math.inf)
    return SeriesResult(
        K=K,
        envelope=rho,
        feasibility=float(denom),
        feasibility_tail=float(tail_d),
        hitting_time=float(h),
        hitting_time_tail=float(h_tail),
        states=tuple(trans),
        visits=v,
        visits_tail=v_tail,
        converged=rho < SERIES_CONVERGED,
    )
