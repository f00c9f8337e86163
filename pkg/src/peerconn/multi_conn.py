"""Objectives for a peer that spreads its load over several connections.

A peer receiving requests at aggregate rate ``Lambda`` forwards them over
``d`` connections at rates ``lambda_i``. Each connection runs at its own
optimal disconnect probability. Two objectives score a split:

* OPR, off-time per request: total off-time over total queue length.
* SOPR, the variant where ``lambda_0`` is served locally at no connection
  cost, contributing a queue but no off-time.

The traversal helpers model a request hopping from peer to peer until some
peer serves it locally.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from peerconn.analytic import (
    ConnectionParams,
    off_time,
    optimal_disconnect_prob,
    queue_length,
)
from peerconn.errors import DomainError


@dataclass(frozen=True)
class RatePlan:
    """Per-connection arrival rates.

    When ``local`` is true, ``rates[0]`` is served by the peer itself and the
    remaining entries are forwarded.
    """

    rates: tuple[float, ...]
    local: bool = False

    def __post_init__(self) -> None:
        rates = tuple(float(r) for r in self.rates)
        object.__setattr__(self, "rates", rates)
        if not rates:
            raise DomainError("a rate plan needs at least one rate")
        if self.local and len(rates) < 2:
            raise DomainError("a plan with a local rate needs at least one forwarded rate")
        for r in rates:
            if not (math.isfinite(r) and r >= 0.0):
                raise DomainError(f"rates must be nonnegative and finite, got {r!r}")

    @property
    def total(self) -> float:
        return math.fsum(self.rates)

    @property
    def d(self) -> int:
        return len(self.rates)

    @property
    def forwarded(self) -> tuple[float, ...]:
        return self.rates[1:] if self.local else self.rates

    @property
    def local_rate(self) -> float:
        return self.rates[0] if self.local else 0.0

    def check_bounds(self, params: ConnectionParams) -> None:
        """Raise unless every rate is strictly below ``1/t_s``."""
        for r in self.rates:
            if r * params.t_s >= 1.0:
                raise DomainError(
                    f"rate {r!r} violates the bound lambda < 1/t_s = {params.max_rate!r}"
                )


@dataclass(frozen=True)
class TraversalStats:
    p_s: float
    k: float
    mean_hop_queue: float
    total_queue: float


def leg_terms(lam: float, params: ConnectionParams) -> tuple[float, float]:
    """Off-time and queue length of one connection at its optimal ``p``.

    An idle leg is off all the time and holds no queue: ``(1.0, 0.0)``.
    """
    p = optimal_disconnect_prob(lam, params)
    return off_time(lam, p, params), queue_length(lam, p, params)


def local_queue_length(lam0: float, params: ConnectionParams) -> float:
    """Queue at the peer itself, ``rho0^2/(1 - rho0)`` with ``rho0 = lam0*t_s``."""
    if lam0 < 0.0:
        raise DomainError(f"local rate must be nonnegative, got {lam0!r}")
    rho0 = lam0 * params.t_s
    if rho0 >= 1.0:
        raise DomainError(f"local utilization {rho0!r} must be below 1")
    return rho0**2 / (1.0 - rho0)


def _as_plan(plan: RatePlan | Sequence[float], local: bool) -> RatePlan:
    if isinstance(plan, RatePlan):
        return plan
    return RatePlan(tuple(plan), local=local)


def opr(plan: RatePlan | Sequence[float], params: ConnectionParams) -> float:
    """Off-time per request over all connections of ``plan``."""
    plan = _as_plan(plan, local=False)
    plan.check_bounds(params)
    terms = [leg_terms(r, params) for r in plan.rates]
    denom = math.fsum(length for _, length in terms)
    if denom == 0.0:
        raise DomainError("OPR is undefined when every connection is idle")
    return math.fsum(xi for xi, _ in terms) / denom


def sopr(plan: RatePlan | Sequence[float], params: ConnectionParams) -> float:
    """Service off-time per request; ``plan.rates[0]`` is served locally."""
    plan = _as_plan(plan, local=True)
    if not plan.local:
        raise DomainError("SOPR needs a plan with a local rate")
    plan.check_bounds(params)
    l0 = local_queue_length(plan.local_rate, params)
    terms = [leg_terms(r, params) for r in plan.forwarded]
    denom = l0 + math.fsum(length for _, length in terms)
    if denom == 0.0:
        raise DomainError("SOPR is undefined when there is no load at all")
    return math.fsum(xi for xi, _ in terms) / denom


# Vectorized forms used by the optimizer. Rows of ``rates`` are candidate
# plans. No validation: callers keep rates inside [0, 1/t_s).


def leg_terms_batch(rates: np.ndarray, params: ConnectionParams) -> tuple[np.ndarray, np.ndarray]:
    """Elementwise :func:`leg_terms`; overloaded legs get ``L = inf``."""
    t_c, t_s = params.t_c, params.t_s
    rates = np.asarray(rates, dtype=float)
    a = 1.0 / (2.0 * t_c + t_s)
    safe = np.where(rates > 0.0, rates, 1.0)
    with np.errstate(over="ignore"):
        middle = (1.0 - rates * t_s) / (2.0 * safe * t_c)
    p = np.where(rates <= a, 1.0, np.where(rates * t_s <= 1.0, middle, 0.0))
    es = p * t_c + t_s
    rho = rates * es
    scv = t_c**2 * p * (1.0 - p) / es**2
    stable = rho < 1.0
    gap = np.where(stable, 1.0 - rho, 1.0)
    length = np.where(stable, rho**2 / gap * (1.0 + scv) / 2.0, np.inf)
    xi = np.where(stable, p * (1.0 - rho), 0.0)
    return xi, length


def opr_batch(rates: np.ndarray, params: ConnectionParams) -> np.ndarray:
    """OPR of each row; an infinite queue anywhere scores 0."""
    xi, length = leg_terms_batch(rates, params)
    with np.errstate(divide="ignore", invalid="ignore"):
        return xi.sum(axis=-1) / length.sum(axis=-1)


def sopr_batch(rates: np.ndarray, params: ConnectionParams) -> np.ndarray:
    """SOPR of each row, column 0 being the local rate."""
    rates = np.asarray(rates, dtype=float)
    xi, length = leg_terms_batch(rates[..., 1:], params)
    rho0 = rates[..., 0] * params.t_s
    l0 = np.where(rho0 < 1.0, rho0**2 / np.where(rho0 < 1.0, 1.0 - rho0, 1.0), np.inf)
    with np.errstate(divide="ignore", invalid="ignore"):
        return xi.sum(axis=-1) / (l0 + length.sum(axis=-1))


def service_probability(lam0: float, total: float) -> float:
    """Chance a request is served at the peer it reaches, ``lam0 / Lambda``."""
    if not total > 0.0:
        raise DomainError(f"aggregate rate must be positive, got {total!r}")
    if not lam0 > 0.0:
        raise DomainError("local rate must be positive, otherwise requests never terminate")
    if lam0 > total:
        raise DomainError(f"local rate {lam0!r} exceeds aggregate rate {total!r}")
    return lam0 / total


def expected_hops(p_s: float) -> float:
    """Mean number of peers a request visits, including the one that serves it."""
    if not (0.0 < p_s <= 1.0):
        raise DomainError(f"service probability must lie in (0, 1], got {p_s!r}")
    return 1.0 / p_s


def mean_hop_queue(plan: RatePlan, params: ConnectionParams) -> float:
    """Forwarding-weighted mean queue length seen by a request leaving the peer."""
    if not plan.local:
        raise DomainError("traversal needs a plan with a local rate")
    plan.check_bounds(params)
    forwarded_total = math.fsum(plan.forwarded)
    if forwarded_total == 0.0:
        raise DomainError("no forwarded traffic, so the per-hop queue is undefined")
    return math.fsum(leg_terms(r, params)[1] * r for r in plan.forwarded) / forwarded_total


def total_queue_series(p_s: float, mean_hop_queue: float, l0: float, truncation: int) -> float:
    """Total queue length met by a request, summing the hop series to ``truncation`` terms."""
    if not (0.0 < p_s <= 1.0):
        raise DomainError(f"service probability must lie in (0, 1], got {p_s!r}")
    if truncation < 1:
        raise DomainError(f"truncation must be at least 1, got {truncation!r}")
    i = np.arange(1, truncation + 1, dtype=float)
    terms = p_s * (1.0 - p_s) ** (i - 1) * (mean_hop_queue * (i - 1) + l0)
    return math.fsum(terms)


def total_queue_closed(p_s: float, mean_hop_queue: float, l0: float) -> float:
    """Limit of :func:`total_queue_series`: ``Lq_hat*(1 - p_s)/p_s + L0``."""
    if not (0.0 < p_s <= 1.0):
        raise DomainError(f"service probability must lie in (0, 1], got {p_s!r}")
    return mean_hop_queue * (1.0 - p_s) / p_s + l0


def traversal(plan: RatePlan, params: ConnectionParams) -> TraversalStats:
    """Hop count and queue totals for a plan whose ``rates[0]`` is served locally.

    With no forwarded traffic every request is served on arrival and the
    per-hop queue is reported as 0.
    """
    if not plan.local:
        raise DomainError("traversal needs a plan with a local rate")
    p_s = service_probability(plan.local_rate, plan.total)
    l0 = local_queue_length(plan.local_rate, params)
    if math.fsum(plan.forwarded) == 0.0:
        hop_queue = 0.0
    else:
        hop_queue = mean_hop_queue(plan, params)
    return TraversalStats(
        p_s=p_s,
        k=expected_hops(p_s),
        mean_hop_queue=hop_queue,
        total_queue=total_queue_closed(p_s, hop_queue, l0),
    )
