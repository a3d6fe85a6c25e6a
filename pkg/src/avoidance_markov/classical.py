"""Classical absorbing-chain metrics.

``F = (I - P_TT)^{-1}`` counts expected visits to transient states before
absorption; hitting times, hitting costs and absorption probabilities are
all read off ``F``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Iterable

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack

from .graph import Chain, ChainPartition, GraphError, partition

__all__ = [
    "SingularChainError",
    "IllConditionedWarning",
    "FundamentalMatrix",
    "AbsorptionMatrix",
    "fundamental_matrix",
    "fundamental_for",
    "hitting_time",
    "hitting_cost",
    "absorption_probabilities",
    "incremental_fundamental",
    "absorption_from_fundamental",
    "on_all_states",
]

SOLVE_TOL = 1e-9
IDENTITY_RTOL = 1e-8
COND_WARN = 1e12


class SingularChainError(GraphError):
    def __init__(self, message: str, condition: float = np.inf):
        self.condition = condition
        super().__init__(f"{message} (condition estimate {condition:.3g})")


class IllConditionedWarning(RuntimeWarning):
    pass


@dataclass(frozen=True, eq=False)
class FundamentalMatrix:
    values: np.ndarray
    partition: ChainPartition
    condition: float = 1.0

    def entry(self, i: int, m: int) -> float:
        """``F_im`` addressed by chain state indices."""
        p = self.partition
        return float(self.values[p.position(i), p.position(m)])

    def row(self, i: int) -> np.ndarray:
        return self.values[self.partition.position(i)]

    @property
    def ill_conditioned(self) -> bool:
        return self.condition > COND_WARN


@dataclass(frozen=True, eq=False)
class AbsorptionMatrix:
    values: np.ndarray
    partition: ChainPartition

    def entry(self, i: int, a: int) -> float:
        p = self.partition
        return float(self.values[p.position(i), p.absorbing_position(a)])


def _factor(m: np.ndarray) -> tuple[tuple, float]:
    """LU-factor ``m`` and estimate its 1-norm condition number."""
    anorm = np.linalg.norm(m, 1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(m, check_finite=False)
    if not np.all(np.isfinite(lu)) or np.any(np.diag(lu) == 0):
        raise SingularChainError("I - P_TT is singular")
    rcond, info = lapack.dgecon(lu, anorm, norm="1")
    cond = np.inf if rcond == 0 else 1.0 / rcond
    return (lu, piv), cond


def fundamental_matrix(p: ChainPartition) -> FundamentalMatrix:
    """``(I - P_TT)^{-1}`` by a pivoted LU solve against the identity."""
    k = len(p.transient)
    m = np.eye(k) - p.p_tt
    lu, cond = _factor(m)
    if not np.isfinite(cond) or cond > 1e15:
        raise SingularChainError("I - P_TT is numerically singular", cond)
    f = sla.lu_solve(lu, np.eye(k), check_finite=False)
    if cond > COND_WARN:
        warnings.warn(
            f"fundamental matrix is ill-conditioned (cond ~ {cond:.3g})",
            IllConditionedWarning,
            stacklevel=2,
        )
    # visit counts are nonnegative; clip round-off below zero
    np.maximum(f, 0.0, out=f)
    f.setflags(write=False)
    return FundamentalMatrix(f, p, cond)


def fundamental_for(c: Chain, absorbing: Iterable[int]) -> FundamentalMatrix:
    return fundamental_matrix(partition(c, absorbing))


def hitting_time(f: FundamentalMatrix) -> np.ndarray:
    """Expected steps to absorption from each transient state (row sums of F)."""
    return f.values @ np.ones(f.values.shape[1])


def hitting_cost(f: FundamentalMatrix, c: Chain | None = None) -> np.ndarray:
    """Expected accumulated cost to absorption, ``U = F r`` with ``r`` the mean out-cost."""
    c = f.partition.chain if c is None else c
    r = c.out_cost[list(f.partition.transient)]
    return f.values @ r


def absorption_probabilities(f: FundamentalMatrix, p: ChainPartition | None = None) -> AbsorptionMatrix:
    p = f.partition if p is None else p
    q = f.values @ p.p_ta
    np.clip(q, 0.0, 1.0, out=q)
    q.setflags(write=False)
    return AbsorptionMatrix(q, p)


def on_all_states(f: FundamentalMatrix, values: np.ndarray, fill: float = 0.0) -> np.ndarray:
    """Scatter a per-transient vector onto all chain states, ``fill`` on absorbing ones.

    With the default ``fill`` this gives the ``H_t = 0`` convention for
    walks that start inside the absorbing set.
    """
    out = np.full(f.partition.chain.n, fill, dtype=float)
    out[list(f.partition.transient)] = values
    return out


def incremental_fundamental(f1: FundamentalMatrix, extra: Iterable[int]) -> FundamentalMatrix:
    """Fundamental matrix after also making the states in ``extra`` absorbing.

    Uses ``F'_im = F_im - F_{i,X} (F_{X,X})^{-1} F_{X,m}`` on the rows and
    columns that stay transient, without touching ``P``.
    """
    p1 = f1.partition
    extra = tuple(dict.fromkeys(int(x) for x in extra))
    if not extra:
        return f1
    xpos = np.array([p1.position(x) for x in extra])
    xset = set(extra)
    keep_states = tuple(s for s in p1.transient if s not in xset)
    keep = p1.rows[np.array(keep_states, dtype=int)]
    block = f1.values[np.ix_(xpos, xpos)]
    try:
        lu, cond = _factor(block)
    except SingularChainError:
        raise SingularChainError("F block of the added absorbing states is singular") from None
    if not np.isfinite(cond) or cond > 1e15:
        raise SingularChainError("F block of the added absorbing states is singular", cond)
    right = f1.values[np.ix_(xpos, keep)]
    left = f1.values[np.ix_(keep, xpos)]
    f = f1.values[np.ix_(keep, keep)] - left @ sla.lu_solve(lu, right, check_finite=False)
    np.maximum(f, 0.0, out=f)
    f.setflags(write=False)
    # anything that reached the old absorbing set still reaches the larger one
    p2 = partition(p1.chain, p1.absorbing + extra, check=False)
    if p2.transient != keep_states:
        raise AssertionError("transient ordering mismatch")
    return FundamentalMatrix(f, p2, f1.condition)


def absorption_from_fundamental(f: FundamentalMatrix, j: int) -> np.ndarray:
    """``Q_i^{j, not O} = F_ij / F_jj`` for every transient ``i`` of ``f``.

    The result is indexed like ``f``'s transient states and is 1 at ``j``.
    """
    col = f.values[:, f.partition.position(j)]
    return col / col[f.partition.position(j)]
