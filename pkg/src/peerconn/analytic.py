"""Closed-form model of a single on-demand connection.

A peer receives Poisson requests at rate ``lambda`` and serves each one over a
connection that costs ``t_c`` seconds to establish and ``t_s`` seconds to use.
After each service the connection is dropped with probability ``p``, so the
service time is two-point distributed: ``t_c + t_s`` w.p. ``p``, ``t_s``
otherwise. The server is treated as M/G/1.

Everything here is a pure function of floats. Overload (utilization >= 1)
is reported through ``math.inf`` queue lengths rather than exceptions, except
where a quantity has no meaning at all under overload.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from peerconn.errors import DomainError

INF = math.inf


@dataclass(frozen=True)
class ConnectionParams:
    """Connection setup time ``t_c`` and service time ``t_s``, in seconds."""

    t_c: float = 1.0
    t_s: float = 1.0

    def __post_init__(self) -> None:
        for name in ("t_c", "t_s"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be positive and finite, got {value!r}")

    @property
    def max_rate(self) -> float:
        """Saturation rate ``1/t_s`` of a connection that never disconnects."""
        return 1.0 / self.t_s


@dataclass(frozen=True)
class ConnectionMetrics:
    """Every derived quantity of one connection at a given rate and ``p``.

    ``queue_length`` and ``waiting_time`` are ``math.inf`` when ``rho >= 1``;
    ``stable`` flags that case explicitly. ``off_time`` is ``nan`` under
    overload because it is undefined there.
    """

    lam: float
    p: float
    expected_service: float
    rho: float
    eta: float
    scv: float
    queue_length: float
    off_time: float
    waiting_time: float

    @property
    def stable(self) -> bool:
        return self.rho < 1.0


def _check_p(p: float) -> None:
    if not (0.0 <= p <= 1.0):
        raise DomainError(f"probability must lie in [0, 1], got {p!r}")


def _check_rate(lam: float) -> None:
    if not (lam >= 0.0 and math.isfinite(lam)):
        raise DomainError(f"rate must be nonnegative and finite, got {lam!r}")


def expected_service_time(p: float, params: ConnectionParams) -> float:
    """Mean service time ``p*t_c + t_s``."""
    _check_p(p)
    return p * params.t_c + params.t_s


def utilization(lam: float, p: float, params: ConnectionParams) -> float:
    """Offered load ``lam * E[s]``. Not clamped; values >= 1 mean overload."""
    _check_rate(lam)
    return lam * expected_service_time(p, params)


def efficiency(p: float, lam: float, params: ConnectionParams) -> float:
    """Connection efficiency: one minus the connecting and idling fractions.

    The connecting fraction is ``rho * p*t_c / E[s]`` and the idling fraction
    is ``(1 - rho) * (1 - p)``. Not clamped, so a poor ``p`` can give a
    negative value.
    """
    rho = utilization(lam, p, params)
    es = p * params.t_c + params.t_s
    return 1.0 - rho * (p * params.t_c) / es - (1.0 - rho) * (1.0 - p)


def efficiency_expanded(p: float, lam: float, params: ConnectionParams) -> float:
    """Algebraically equal form ``1 - lam*p*t_c - (1 - rho)(1 - p)``."""
    rho = utilization(lam, p, params)
    return 1.0 - lam * p * params.t_c - (1.0 - rho) * (1.0 - p)


def threshold_a(params: ConnectionParams) -> float:
    """Rate ``1/(2 t_c + t_s)`` at or below which always disconnecting is optimal."""
    return 1.0 / (2.0 * params.t_c + params.t_s)


def optimal_disconnect_prob(lam: float, params: ConnectionParams) -> float:
    """Disconnect probability that maximizes :func:`efficiency` at rate ``lam``.

    Piecewise: 1 up to and including :func:`threshold_a`, then
    ``(1 - lam*t_s) / (2*lam*t_c)`` up to and including ``1/t_s``, and 0
    beyond.
    """
    _check_rate(lam)
    if lam <= threshold_a(params):
        return 1.0
    if lam <= params.max_rate:
        return (1.0 - lam * params.t_s) / (2.0 * lam * params.t_c)
    return 0.0


def service_time_scv(p: float, params: ConnectionParams) -> float:
    """Squared coefficient of variation of the two-point service time."""
    es = expected_service_time(p, params)
    return params.t_c**2 * p * (1.0 - p) / es**2


def queue_length(lam: float, p: float, params: ConnectionParams) -> float:
    """Pollaczek mean queue length ``rho^2/(1-rho) * (1+C^2)/2``.

    Returns ``math.inf`` when ``rho >= 1``.
    """
    rho = utilization(lam, p, params)
    if rho >= 1.0:
        return INF
    scv = service_time_scv(p, params)
    return rho**2 / (1.0 - rho) * (1.0 + scv) / 2.0


def off_time(lam: float, p: float, params: ConnectionParams) -> float:
    """Fraction of time the connection is fully off, ``p*(1 - rho)``."""
    rho = utilization(lam, p, params)
    if rho > 1.0:
        raise DomainError(f"off-time undefined under overload (rho={rho!r})")
    return p * (1.0 - rho)


def waiting_time(queue_length: float, lam: float) -> float:
    """Mean wait ``L_q / lam`` (Little's law)."""
    if not lam > 0.0:
        raise DomainError(f"waiting time needs a positive rate, got {lam!r}")
    if queue_length < 0.0:
        raise DomainError(f"queue length must be nonnegative, got {queue_length!r}")
    return queue_length / lam


def metrics(lam: float, params: ConnectionParams) -> ConnectionMetrics:
    """Evaluate every per-connection quantity at the optimal ``p`` for ``lam``.

    At ``lam == 0`` the waiting time is reported as 0 (empty queue).
    """
    p = optimal_disconnect_prob(lam, params)
    rho = utilization(lam, p, params)
    length = queue_length(lam, p, params)
    if lam == 0.0:
        wait = 0.0
    else:
        wait = waiting_time(length, lam)
    return ConnectionMetrics(
        lam=lam,
        p=p,
        expected_service=expected_service_time(p, params),
        rho=rho,
        eta=efficiency(p, lam, params),
        scv=service_time_scv(p, params),
        queue_length=length,
        off_time=off_time(lam, p, params) if rho <= 1.0 else math.nan,
        waiting_time=wait,
    )
