"""Restarted simulated annealing over the rate simplex.

The feasible set is ``{x : sum(x) = Lambda, 0 <= x_i <= ub}`` with
``ub = (1/t_s)(1 - 1e-9)``. Moves shift mass between two coordinates,
so every visited point stays on the simplex without penalty terms.

All restarts advance together as rows of one array. Each restart's random
numbers come from its own stream spawned off ``SeedSequence(seed)`` and are
drawn up front, so a restart's trajectory does not depend on how many other
restarts run beside it.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from peerconn.analytic import ConnectionParams
from peerconn.errors import DomainError
from peerconn.multi_conn import RatePlan, opr_batch, sopr_batch

Objective = Callable[[np.ndarray], np.ndarray]
ObjectiveKind = Literal["opr", "sopr"]

# Rates are kept this far (relative) below 1/t_s so queues stay finite.
BOUND_MARGIN = 1e-9
# Move size shrinks geometrically to this fraction of step_scale by the last step.
FINAL_STEP_FRACTION = 1e-3


@dataclass(frozen=True)
class AnnealConfig:
    initial_temperature: float = 1.0
    cooling_factor: float = 0.999
    steps_per_restart: int = 20_000
    restarts: int = 50
    step_scale: float = 0.1
    seed: int = 0

    def __post_init__(self) -> None:
        if not (self.initial_temperature > 0 and math.isfinite(self.initial_temperature)):
            raise DomainError("initial_temperature must be positive")
        if not (0.0 < self.cooling_factor < 1.0):
            raise DomainError("cooling_factor must lie in (0, 1)")
        if self.steps_per_restart < 1 or self.restarts < 1:
            raise DomainError("steps_per_restart and restarts must be positive")
        if not self.step_scale > 0:
            raise DomainError("step_scale must be positive")
        if not (0 <= self.seed < 2**64):
            raise DomainError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class OptimizationResult:
    best_plan: RatePlan
    best_value: float
    restart_values: tuple[float, ...]
    evaluations: int
    restart_plans: tuple[RatePlan, ...] = field(default=(), repr=False)


def rowwise(fn: Callable[[RatePlan], float], local: bool = False) -> Objective:
    """Adapt a scalar plan objective to the batched form :func:`anneal` calls."""

    def batched(rates: np.ndarray) -> np.ndarray:
        return np.array([fn(RatePlan(tuple(row), local=local)) for row in np.atleast_2d(rates)])

    return batched


def upper_bound(params: ConnectionParams) -> float:
    return params.max_rate * (1.0 - BOUND_MARGIN)


def check_feasible(d: int, total: float, params: ConnectionParams) -> None:
    if d < 1:
        raise DomainError(f"need at least one connection, got d={d!r}")
    if not (0.0 < total <= d * upper_bound(params)):
        raise DomainError(
            f"aggregate rate {total!r} must lie in (0, d/t_s) = (0, {d * params.max_rate!r})"
        )


def project_to_box_simplex(y: np.ndarray, total: float, ub: float) -> np.ndarray:
    """Euclidean projection of ``y`` onto ``{sum = total, 0 <= x <= ub}``."""
    lo, hi = float(y.min()) - ub, float(y.max())
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if np.clip(y - mid, 0.0, ub).sum() > total:
            lo = mid
        else:
            hi = mid
    x = np.clip(y - 0.5 * (lo + hi), 0.0, ub)
    # Push the leftover round-off into coordinates that have room.
    for i in range(len(x)):
        residual = total - x.sum()
        if residual == 0.0:
            break
        x[i] = min(max(x[i] + residual, 0.0), ub)
    return x


def canonical(rates: Sequence[float], local: bool) -> tuple[float, ...]:
    """Sort descending; a local rate stays in front and only the rest are sorted."""
    rates = [float(r) for r in rates]
    if local:
        return (rates[0], *sorted(rates[1:], reverse=True))
    return tuple(sorted(rates, reverse=True))


def _clean(values: np.ndarray) -> np.ndarray:
    return np.where(np.isnan(values), 0.0, values)


def anneal(
    objective: Objective,
    d: int,
    total: float,
    params: ConnectionParams,
    config: AnnealConfig | None = None,
    *,
    local: bool = False,
) -> OptimizationResult:
    """Maximize ``objective`` over rate splits of ``total`` across ``d`` connections.

    ``objective`` maps an ``(n, d)`` array of candidate rate vectors to ``n``
    values. Non-finite queue lengths are expected to surface as a value of
    0, and ``nan`` is also scored 0.
    """
    config = config or AnnealConfig()
    check_feasible(d, total, params)
    if local and d < 2:
        raise DomainError("a local rate plus forwarding needs d >= 2")
    ub = upper_bound(params)

    if d == 1:
        x = np.array([[total]])
        value = float(_clean(objective(x))[0])
        plan = RatePlan((total,), local=local)
        return OptimizationResult(plan, value, (value,) * config.restarts, 1, (plan,) * config.restarts)

    n_rest, n_steps = config.restarts, config.steps_per_restart
    starts = np.empty((n_rest, d))
    pick_i = np.empty((n_rest, n_steps), dtype=np.intp)
    pick_j = np.empty((n_rest, n_steps), dtype=np.intp)
    move_u = np.empty((n_rest, n_steps))
    accept_u = np.empty((n_rest, n_steps))
    for r, child in enumerate(np.random.SeedSequence(config.seed).spawn(n_rest)):
        rng = np.random.default_rng(child)
        starts[r] = project_to_box_simplex(rng.dirichlet(np.ones(d)) * total, total, ub)
        pick_i[r] = rng.integers(0, d, n_steps)
        pick_j[r] = (pick_i[r] + rng.integers(1, d, n_steps)) % d
        move_u[r] = rng.random(n_steps)
        accept_u[r] = rng.random(n_steps)

    rows = np.arange(n_rest)
    x = starts
    f = _clean(objective(x))
    best_x, best_f = x.copy(), f.copy()
    temperature = config.initial_temperature
    max_move = config.step_scale * params.max_rate
    shrink = FINAL_STEP_FRACTION ** (1.0 / n_steps)

    for k in range(n_steps):
        ii, jj = pick_i[:, k], pick_j[:, k]
        xi, xj = x[rows, ii], x[rows, jj]
        delta = np.minimum(np.minimum(move_u[:, k] * max_move, xi), ub - xj)
        pair = xi + xj
        new_j = np.minimum(pair - (xi - delta), ub)
        cand = x.copy()
        cand[rows, ii] = np.maximum(pair - new_j, 0.0)
        cand[rows, jj] = new_j
        fc = _clean(objective(cand))
        gain = fc - f
        with np.errstate(over="ignore"):
            accept = (gain >= 0.0) | (accept_u[:, k] < np.exp(gain / temperature))
        x = np.where(accept[:, None], cand, x)
        f = np.where(accept, fc, f)
        better = f > best_f
        best_x[better] = x[better]
        best_f[better] = f[better]
        temperature *= config.cooling_factor
        max_move *= shrink

    plans = tuple(RatePlan(canonical(row, local), local=local) for row in best_x)
    values = _clean(objective(np.array([p.rates for p in plans])))
    winner = int(np.argmax(values))
    return OptimizationResult(
        best_plan=plans[winner],
        best_value=float(values[winner]),
        restart_values=tuple(float(v) for v in values),
        evaluations=n_rest * (n_steps + 1) + n_rest,
        restart_plans=plans,
    )


def objective_for(kind: ObjectiveKind, params: ConnectionParams) -> Objective:
    if kind == "opr":
        return lambda rates: opr_batch(rates, params)
    if kind == "sopr":
        return lambda rates: sopr_batch(rates, params)
    raise DomainError(f"unknown objective {kind!r}")


def optimize_opr(
    d: int, total: float, params: ConnectionParams, config: AnnealConfig | None = None
) -> OptimizationResult:
    return anneal(objective_for("opr", params), d, total, params, config)


def optimize_sopr(
    d: int, total: float, params: ConnectionParams, config: AnnealConfig | None = None
) -> OptimizationResult:
    """Maximize SOPR; ``best_plan.rates[0]`` is the locally served rate."""
    return anneal(objective_for("sopr", params), d, total, params, config, local=True)


@dataclass(frozen=True)
class SweepRow:
    total: float
    rates: tuple[float, ...]
    value: float
    error: str | None = None


def sweep(
    kind: ObjectiveKind,
    d: int,
    totals: Sequence[float],
    params: ConnectionParams,
    config: AnnealConfig | None = None,
) -> list[SweepRow]:
    """Optimize at each aggregate rate. Per-point failures become flagged rows."""
    if kind not in ("opr", "sopr"):
        raise DomainError(f"unknown objective {kind!r}")
    optimize = optimize_opr if kind == "opr" else optimize_sopr
    rows = []
    for total in totals:
        try:
            result = optimize(d, float(total), params, config)
        except DomainError as exc:
            rows.append(SweepRow(float(total), (math.nan,) * d, math.nan, str(exc)))
            continue
        rows.append(SweepRow(float(total), result.best_plan.rates, result.best_value))
    return rows


@dataclass(frozen=True)
class ClusterReport:
    """How well a rate vector splits into at most two tight groups.

    ``spread`` is the largest within-group range after the best split, in
    units of ``1/t_s``. ``n_high`` counts the members of the upper group
    (all of them when one group suffices). ``active`` counts rates above
    ``tolerance/t_s``.
    """

    groups: int
    n_high: int
    spread: float
    active: int
    ok: bool


def cluster_report(rates: Sequence[float], params: ConnectionParams, tolerance: float = 0.05) -> ClusterReport:
    xs = sorted((float(r) * params.t_s for r in rates), reverse=True)
    active = sum(1 for v in xs if v > tolerance)
    whole = xs[0] - xs[-1]
    if whole <= tolerance or len(xs) == 1:
        return ClusterReport(1, len(xs), whole, active, True)
    best_spread, best_cut = math.inf, 1
    for cut in range(1, len(xs)):
        spread = max(xs[0] - xs[cut - 1], xs[cut] - xs[-1])
        if spread < best_spread:
            best_spread, best_cut = spread, cut
    return ClusterReport(2, best_cut, best_spread, active, best_spread <= tolerance)
