"""Connection-efficiency model for peers that connect on demand."""

from peerconn.analytic import (
    ConnectionMetrics,
    ConnectionParams,
    efficiency,
    expected_service_time,
    metrics,
    off_time,
    optimal_disconnect_prob,
    queue_length,
    service_time_scv,
    threshold_a,
    utilization,
    waiting_time,
)
from peerconn.annealer import (
    AnnealConfig,
    OptimizationResult,
    anneal,
    cluster_report,
    optimize_opr,
    optimize_sopr,
    sweep,
)
from peerconn.errors import DomainError
from peerconn.multi_conn import (
    RatePlan,
    TraversalStats,
    expected_hops,
    mean_hop_queue,
    opr,
    service_probability,
    sopr,
    total_queue_closed,
    total_queue_series,
    traversal,
)
from peerconn.sim import SimConfig, SimReport, simulate_connection, sweep_simulation

__all__ = [
    "AnnealConfig",
    "ConnectionMetrics",
    "ConnectionParams",
    "DomainError",
    "OptimizationResult",
    "RatePlan",
    "SimConfig",
    "SimReport",
    "TraversalStats",
    "anneal",
    "cluster_report",
    "efficiency",
    "expected_hops",
    "expected_service_time",
    "mean_hop_queue",
    "metrics",
    "off_time",
    "optimal_disconnect_prob",
    "optimize_opr",
    "optimize_sopr",
    "opr",
    "queue_length",
    "service_probability",
    "service_time_scv",
    "simulate_connection",
    "sopr",
    "sweep",
    "sweep_simulation",
    "threshold_a",
    "total_queue_closed",
    "total_queue_series",
    "traversal",
    "utilization",
    "waiting_time",
]
