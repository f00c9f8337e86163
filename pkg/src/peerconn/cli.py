"""Command-line driver. Every command writes CSV.

Exit status: 0 on success, 2 for bad flags or inputs that fail validation,
3 when a computation hits a numerical domain error.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import io
import math
import sys
from collections.abc import Iterable, Iterator, Sequence
from pathlib import Path

import numpy as np

from peerconn.analytic import ConnectionParams, efficiency, metrics, optimal_disconnect_prob
from peerconn.annealer import AnnealConfig, check_feasible, sweep
from peerconn.errors import DomainError
from peerconn.multi_conn import RatePlan, local_queue_length, total_queue_series, traversal
from peerconn.sim import DEFAULT_ARRIVALS, SimConfig, sweep_simulation

EXIT_USAGE = 2
EXIT_DOMAIN = 3

POINT_COLUMNS = [
    "lambda",
    "p",
    "expected_service",
    "rho",
    "eta",
    "scv",
    "queue_length",
    "off_time",
    "waiting_time",
]
ETA_COLUMNS = ["normalized_lambda", "lambda", "p_star", "eta"]
SIM_COLUMNS = ["lambda", "p", "eta_sim"]
TRAVERSAL_COLUMNS = ["p_s", "k", "mean_hop_queue", "total_series", "total_closed"]

# Parameter families plotted against normalized rate, and the load-split cases.
ETA_FAMILIES = [(1.0, 1.0), (2.0, 1.0), (3.0, 1.0), (4.0, 1.0), (1.0, 2.0), (1.0, 3.0), (1.0, 4.0)]
OPR_CASES = [(2, 1.0, 1.0), (3, 1.0, 1.0), (5, 1.0, 1.0), (10, 1.0, 1.0), (5, 5.0, 1.0), (5, 1.0, 5.0)]
SOPR_CASES = [(3, 1.0, 1.0), (5, 1.0, 1.0)]


class UsageError(Exception):
    pass


def fmt(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x == 0.0:
        return "0"
    return f"{x:.12g}"


def render(header: Sequence[str], rows: Iterable[Sequence[float]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


@contextlib.contextmanager
def validating() -> Iterator[None]:
    """Report domain errors raised while checking inputs as usage errors."""
    try:
        yield
    except DomainError as exc:
        raise UsageError(str(exc)) from exc


def _params(args: argparse.Namespace) -> ConnectionParams:
    with validating():
        return ConnectionParams(args.tc, args.ts)


def _anneal_config(args: argparse.Namespace) -> AnnealConfig:
    with validating():
        return AnnealConfig(
            initial_temperature=args.temp,
            cooling_factor=args.cooling,
            steps_per_restart=args.steps,
            restarts=args.restarts,
            step_scale=args.step_scale,
            seed=args.seed,
        )


def normalized_grid(points: int) -> np.ndarray:
    """``points`` evenly spaced values in (0, 1], ending at 1."""
    if points < 2:
        raise UsageError(f"--points must be at least 2, got {points}")
    return np.linspace(1.0 / points, 1.0, points)


def interior_grid(points: int, upper: float) -> np.ndarray:
    """``points`` evenly spaced values strictly inside (0, upper)."""
    if points < 1:
        raise UsageError(f"--points must be at least 1, got {points}")
    return np.arange(1, points + 1) * upper / (points + 1)


def point_row(lam: float, params: ConnectionParams) -> list[float]:
    m = metrics(lam, params)
    return [
        m.lam,
        m.p,
        m.expected_service,
        m.rho,
        m.eta,
        m.scv,
        m.queue_length,
        m.off_time,
        m.waiting_time,
    ]


def eta_sweep_csv(params: ConnectionParams, points: int) -> str:
    rows = []
    for x in normalized_grid(points):
        lam = x * params.max_rate
        p = optimal_disconnect_prob(lam, params)
        rows.append([x, lam, p, efficiency(p, lam, params)])
    return render(ETA_COLUMNS, rows)


def simulate_csv(params: ConnectionParams, lambdas: Sequence[float], arrivals: int, seed: int) -> str:
    rows = sweep_simulation(lambdas, params, arrivals=arrivals, seed=seed)
    return render(SIM_COLUMNS, ([r.lam, r.p, r.efficiency] for r in rows))


def optimize_csv(
    kind: str, d: int, totals: Sequence[float], params: ConnectionParams, config: AnnealConfig
) -> str:
    header = ["Lambda", *(f"lambda_{i}" for i in range(d)), "value"]
    rows = sweep(kind, d, totals, params, config)
    return render(header, ([r.total, *r.rates, r.value] for r in rows))


def traversal_row(plan: RatePlan, params: ConnectionParams, truncation: int) -> list[float]:
    stats = traversal(plan, params)
    l0 = local_queue_length(plan.local_rate, params)
    return [
        stats.p_s,
        stats.k,
        stats.mean_hop_queue,
        total_queue_series(stats.p_s, stats.mean_hop_queue, l0, truncation),
        stats.total_queue,
    ]


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def cmd_point(args: argparse.Namespace) -> None:
    params = _params(args)
    if args.lam is None:
        raise UsageError("point requires --lambda")
    if not (args.lam >= 0 and math.isfinite(args.lam)):
        raise UsageError(f"--lambda must be nonnegative, got {args.lam}")
    _emit(render(POINT_COLUMNS, [point_row(args.lam, params)]), args.out)


def cmd_eta_sweep(args: argparse.Namespace) -> None:
    params = _params(args)
    _emit(eta_sweep_csv(params, args.points), args.out)


def cmd_simulate(args: argparse.Namespace) -> None:
    params = _params(args)
    if args.arrivals < 1:
        raise UsageError(f"--arrivals must be positive, got {args.arrivals}")
    if args.lam is not None:
        with validating():
            SimConfig(args.lam, 0.0, params, args.arrivals, args.seed)
        lambdas = [args.lam]
    else:
        lambdas = list(normalized_grid(args.points) * params.max_rate)
    _emit(simulate_csv(params, lambdas, args.arrivals, args.seed), args.out)


def cmd_optimize(args: argparse.Namespace) -> None:
    params = _params(args)
    config = _anneal_config(args)
    if args.objective == "sopr" and args.d < 2:
        raise UsageError("sopr needs --d of at least 2")
    if args.Lambda is not None:
        with validating():
            check_feasible(args.d, args.Lambda, params)
        totals = [args.Lambda]
    else:
        if args.d < 1:
            raise UsageError(f"--d must be positive, got {args.d}")
        totals = list(interior_grid(args.points, args.d * params.max_rate))
    _emit(optimize_csv(args.objective, args.d, totals, params, config), args.out)


def cmd_traversal(args: argparse.Namespace) -> None:
    params = _params(args)
    if args.lambda0 is None or args.Lambda is None:
        raise UsageError("traversal requires --lambda0 and --Lambda")
    if args.truncation < 1:
        raise UsageError(f"--truncation must be positive, got {args.truncation}")
    try:
        forwarded = [float(v) for v in args.rates.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"--rates must be comma-separated numbers: {exc}") from exc
    with validating():
        plan = RatePlan((args.lambda0, *forwarded) if forwarded else (args.lambda0, 0.0), local=True)
        plan.check_bounds(params)
    if not (0 <= args.lambda0 <= args.Lambda):
        raise UsageError("--lambda0 must lie in [0, --Lambda]")
    if abs(math.fsum(forwarded) - (args.Lambda - args.lambda0)) > 1e-9:
        raise UsageError("--rates must sum to Lambda - lambda0")
    row = traversal_row(plan, params, args.truncation)
    _emit(render(TRAVERSAL_COLUMNS, [row]), args.out)


def write_paper_figures(
    out_dir: Path, points: int, arrivals: int, config: AnnealConfig
) -> list[Path]:
    """Write one CSV per figure panel and return the paths in write order."""
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    def put(name: str, text: str) -> None:
        path = out_dir / name
        path.write_text(text)
        written.append(path)

    for t_c, t_s in ETA_FAMILIES:
        params = ConnectionParams(t_c, t_s)
        tag = f"tc{fmt(t_c)}_ts{fmt(t_s)}"
        put(f"eta_theory_{tag}.csv", eta_sweep_csv(params, points))
        lambdas = list(normalized_grid(points) * params.max_rate)
        put(f"eta_sim_{tag}.csv", simulate_csv(params, lambdas, arrivals, config.seed))
    for kind, cases in (("opr", OPR_CASES), ("sopr", SOPR_CASES)):
        for d, t_c, t_s in cases:
            params = ConnectionParams(t_c, t_s)
            totals = list(interior_grid(points, d * params.max_rate))
            name = f"{kind}_d{d}_tc{fmt(t_c)}_ts{fmt(t_s)}.csv"
            put(name, optimize_csv(kind, d, totals, params, config))
    return written


def cmd_paper_figures(args: argparse.Namespace) -> None:
    config = _anneal_config(args)
    if args.arrivals < 1:
        raise UsageError(f"--arrivals must be positive, got {args.arrivals}")
    normalized_grid(args.points)
    out_dir = Path(args.out or "figures")
    for path in write_paper_figures(out_dir, args.points, args.arrivals, config):
        print(path)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="peerconn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--tc", type=float, default=1.0, help="connection setup time t_c")
        p.add_argument("--ts", type=float, default=1.0, help="service time t_s")
        p.add_argument("--out", default=None, help="output path (default: stdout)")

    def anneal_flags(p: argparse.ArgumentParser) -> None:
        defaults = AnnealConfig()
        p.add_argument("--restarts", type=int, default=defaults.restarts)
        p.add_argument("--steps", type=int, default=defaults.steps_per_restart)
        p.add_argument("--cooling", type=float, default=defaults.cooling_factor)
        p.add_argument("--temp", type=float, default=defaults.initial_temperature)
        p.add_argument("--step-scale", type=float, default=defaults.step_scale)
        p.add_argument("--seed", type=int, default=defaults.seed)

    p = sub.add_parser("point", help="all metrics at one rate, at the optimal p")
    common(p)
    p.add_argument("--lambda", dest="lam", type=float)
    p.set_defaults(func=cmd_point)

    p = sub.add_parser("eta-sweep", help="optimal p and efficiency over (0, 1/t_s]")
    common(p)
    p.add_argument("--points", type=int, default=100)
    p.set_defaults(func=cmd_eta_sweep)

    p = sub.add_parser("simulate", help="simulated efficiency at the optimal p")
    common(p)
    p.add_argument("--lambda", dest="lam", type=float, help="single rate (default: a grid)")
    p.add_argument("--points", type=int, default=20)
    p.add_argument("--arrivals", type=int, default=DEFAULT_ARRIVALS)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("optimize", help="best load split across d connections")
    common(p)
    p.add_argument("--objective", choices=["opr", "sopr"], default="opr")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--Lambda", dest="Lambda", type=float, help="aggregate rate (default: a grid)")
    p.add_argument("--points", type=int, default=50)
    anneal_flags(p)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("traversal", help="hops and queue totals for a forwarding split")
    common(p)
    p.add_argument("--lambda0", type=float, help="locally served rate")
    p.add_argument("--Lambda", dest="Lambda", type=float, help="aggregate rate")
    p.add_argument("--rates", default="", help="comma-separated forwarded rates")
    p.add_argument("--truncation", type=int, default=10_000)
    p.set_defaults(func=cmd_traversal)

    p = sub.add_parser("paper-figures", help="write every figure panel's data as CSV")
    p.add_argument("--out", default=None, help="output directory (default: ./figures)")
    p.add_argument("--points", type=int, default=50)
    p.add_argument("--arrivals", type=int, default=DEFAULT_ARRIVALS)
    anneal_flags(p)
    p.set_defaults(func=cmd_paper_figures)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except UsageError as exc:
        print(f"peerconn: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as exc:
        print(f"peerconn: domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    return 0


if __name__ == "__main__":
    sys.exit(main())
