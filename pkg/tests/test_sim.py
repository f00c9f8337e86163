import math

import numpy as np
import pytest

from peerconn.analytic import ConnectionParams, efficiency, optimal_disconnect_prob
from peerconn.errors import DomainError
from peerconn.sim import (
    SimConfig,
    derive_seed,
    make_rng,
    simulate_connection,
    sweep_simulation,
)

UNIT = ConnectionParams(1.0, 1.0)


def reference_loop(lam, p, t_c, t_s, arrivals, seed, idle_gap_when_down=True):
    """Straight transcription of the arrival loop, one draw at a time."""
    rng = make_rng(seed)
    connected, waste, now, arrival = False, 0.0, 0.0, 0.0
    for _ in range(arrivals):
        x = rng.random()
        arrival += (-1.0 / lam) * math.log(1.0 - x)
        diff = max(0.0, arrival - now)
        if connected:
            waste += diff
            now += diff + t_s
        else:
            waste += t_c
            now += t_s + t_c + (diff if idle_gap_when_down else 0.0)
        connected = not (rng.random() < p)
    return waste, now


@pytest.mark.parametrize("kwargs", [{"lam": 0.0}, {"p": 1.5}, {"arrivals": 0}, {"seed": -1}])
def test_config_validation(kwargs):
    base = {"lam": 0.5, "p": 0.5, "params": UNIT}
    with pytest.raises(DomainError):
        SimConfig(**{**base, **kwargs})


def test_default_arrivals():
    assert SimConfig(0.5, 0.5, UNIT).arrivals == 5000


@pytest.mark.parametrize("idle_gap", [True, False])
@pytest.mark.parametrize("lam,p", [(0.5, 0.5), (0.1, 1.0), (0.9, 0.0), (0.3, 0.2)])
def test_matches_reference_loop(lam, p, idle_gap):
    report = simulate_connection(SimConfig(lam, p, ConnectionParams(2.0, 0.7), 700, 42), idle_gap_when_down=idle_gap)
    waste, now = reference_loop(lam, p, 2.0, 0.7, 700, 42, idle_gap)
    assert report.waste == pytest.approx(waste, rel=1e-12)
    assert report.elapsed == pytest.approx(now, rel=1e-12)


def test_low_load_always_disconnect_is_efficient():
    report = simulate_connection(SimConfig(1e-3, 1.0, UNIT, 5000, 1))
    assert report.efficiency >= 0.99
    assert report.arrivals_processed == 5000


def test_literal_loop_ignores_idle_gaps():
    report = simulate_connection(SimConfig(1e-3, 1.0, UNIT, 5000, 1), idle_gap_when_down=False)
    assert report.efficiency == pytest.approx(0.5, abs=1e-12)


def test_matches_theory_at_midpoint():
    report = simulate_connection(SimConfig(0.5, 0.5, UNIT, 5000, 3))
    assert report.efficiency == pytest.approx(0.625, abs=0.05)


def test_deterministic():
    config = SimConfig(0.5, 0.5, UNIT, 5000, 99)
    assert simulate_connection(config) == simulate_connection(config)


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("lam,p", [(0.01, 1.0), (0.5, 0.5), (0.95, 0.0), (2.0, 0.3)])
def test_efficiency_in_unit_interval(lam, p, seed):
    r = simulate_connection(SimConfig(lam, p, ConnectionParams(3.0, 1.0), 2000, seed))
    assert 0.0 <= r.waste <= r.elapsed
    assert 0.0 <= r.efficiency <= 1.0


@pytest.mark.parametrize("lam", [0.05, 0.3, 1.0, 4.0])
def test_always_disconnect_wastes_exactly_setup_time(lam):
    params = ConnectionParams(2.0, 1.0)
    r = simulate_connection(SimConfig(lam, 1.0, params, 3000, 5))
    assert r.waste == pytest.approx(3000 * params.t_c, rel=1e-12)
    assert r.efficiency == pytest.approx(1 - 3000 * params.t_c / r.elapsed, rel=1e-12)


@pytest.mark.parametrize("lam", [0.2, 0.5, 0.8])
def test_never_disconnect_tracks_utilization(lam):
    r = simulate_connection(SimConfig(lam, 0.0, UNIT, 5000, 8))
    assert r.efficiency == pytest.approx(efficiency(0.0, lam, UNIT), abs=0.05)
    assert efficiency(0.0, lam, UNIT) == pytest.approx(lam)


def test_standard_error_across_seeds():
    effs = [simulate_connection(SimConfig(0.5, 0.5, UNIT, 5000, s)).efficiency for s in range(30)]
    assert np.std(effs, ddof=1) / math.sqrt(30) < 0.02
    assert np.mean(effs) == pytest.approx(0.625, abs=0.02)


def test_derive_seed_is_stable_and_distinct():
    assert derive_seed(0, 3) == derive_seed(0, 3)
    assert len({derive_seed(0, i) for i in range(100)}) == 100
    assert derive_seed(0, 1) != derive_seed(1, 1)


def test_sweep_uses_optimal_p_and_derived_seeds():
    lambdas = np.linspace(0.05, 1.0, 20)
    rows = sweep_simulation(lambdas, UNIT, arrivals=5000, seed=4)
    assert len(rows) == 20
    for i, row in enumerate(rows):
        assert row.p == optimal_disconnect_prob(row.lam, UNIT)
        assert row.seed == derive_seed(4, i)
        assert abs(row.efficiency - efficiency(row.p, row.lam, UNIT)) <= 0.05


def test_sweep_single_point_equals_direct_run():
    (row,) = sweep_simulation([0.4], UNIT, seed=12)
    direct = simulate_connection(SimConfig(0.4, optimal_disconnect_prob(0.4, UNIT), UNIT, 5000, derive_seed(12, 0)))
    assert row.efficiency == direct.efficiency


def test_sweep_order_independent():
    forward = sweep_simulation([0.2, 0.6], UNIT, arrivals=500, seed=1)
    single = sweep_simulation([0.2], UNIT, arrivals=500, seed=1)
    assert forward[0] == single[0]


def test_sweep_fixed_p_and_errors():
    rows = sweep_simulation([0.5, -1.0], UNIT, use_optimal_p=False, p=0.25, arrivals=200)
    assert rows[0].p == 0.25 and rows[0].error is None
    assert rows[1].error is not None and math.isnan(rows[1].efficiency)
    with pytest.raises(DomainError):
        sweep_simulation([0.5], UNIT, use_optimal_p=False)


@pytest.mark.parametrize("t_c,t_s", [(1, 1), (2, 1), (3, 1), (4, 1), (1, 2), (1, 3), (1, 4)])
def test_figure_families_run(t_c, t_s):
    params = ConnectionParams(t_c, t_s)
    rows = sweep_simulation(np.linspace(0.1, 1.0, 5) * params.max_rate, params, arrivals=1000)
    assert all(0 <= r.efficiency <= 1 for r in rows)
