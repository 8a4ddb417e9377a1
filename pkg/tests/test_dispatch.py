import math

import numpy as np
import pytest

from nucflex import lookup
from nucflex.dispatch import (
    MODES,
    ScenarioConfig,
    SeriesData,
    metrics,
    nuclear_unit,
    run,
)
from nucflex.errors import InputError
from nucflex.reactivity import DegradationParams, reactivity_margin
from nucflex.scenario_io import synth_case
from nucflex.uc import GeneratorSpec, StorageSpec


def flat(hours, demand, vre=0.0):
    return SeriesData(np.full(hours, float(demand)), np.full(hours, float(vre)))


def test_mode_encoding():
    g = nuclear_unit("N", 1000.0, 1)
    assert g.p_min_base == 1.0 and g.ramp_up is None
    g3 = nuclear_unit("N", 1000.0, 3)
    assert g3.p_min_base == 0.2 and g3.ramp_down == 250.0
    assert set(MODES) == {1, 2, 3}
    with pytest.raises(InputError):
        nuclear_unit("N", 1000.0, 4)


def test_config_invariants(shipped_table):
    fleet = [nuclear_unit("N1", 1000.0, 2)]
    with pytest.raises(InputError):
        ScenarioConfig(2, fleet, shipped_table, horizon_days=3, refuel_days=0)
    with pytest.raises(InputError):
        ScenarioConfig(2, fleet, shipped_table, horizon_days=1, window_hours=72)
    cfg = ScenarioConfig(2, fleet, shipped_table, horizon_days=9)
    assert cfg.n_windows == 3
    with pytest.raises(InputError):
        run(cfg, flat(100, 0.0))


def test_zero_demand_keeps_fuel(shipped_table):
    fleet = [nuclear_unit("N1", 1000.0, 3)]
    cfg = ScenarioConfig(3, fleet, shipped_table, horizon_days=9, initial_k={"N1": 1.01})
    res = run(cfg, flat(216, 0.0, 500.0))
    assert res.series("alpha", "N1").tolist() == [0.0, 0.0, 0.0]
    assert np.all(res.series("k_eff", "N1") == 1.01)
    assert res.events == []
    m = metrics(res)
    assert m.nse_pct == 0.0 and m.curtailment_pct == 100.0


def test_symmetric_reactors(shipped_table):
    fleet = [nuclear_unit("A", 1000.0, 2), nuclear_unit("B", 1000.0, 2)]
    cfg = ScenarioConfig(2, fleet, shipped_table, horizon_days=9)
    res = run(cfg, flat(216, 2500.0))
    for attr in ("k_eff", "alpha", "pmin_frac", "deadtime_hr"):
        assert res.series(attr, "A").tolist() == res.series(attr, "B").tolist()


def test_refuel_cycle(shipped_table):
    p = DegradationParams()
    fleet = [nuclear_unit("N1", 1000.0, 1)]
    # each full-power window burns 3m: 1+5m -> 1+2m -> 1-m, refuel at window 2
    k0 = 1.0 + 5 * p.m
    cfg = ScenarioConfig(1, fleet, shipped_table, horizon_days=60, initial_k={"N1": k0})
    res = run(cfg, flat(60 * 24, 5000.0))
    assert len(res.events) == 1
    ev = res.events[0]
    assert ev.start_hour == 144 and ev.duration_hours == 35 * 24
    assert ev.k_after == p.k_BOL and ev.k_before <= 1.0
    gen = np.concatenate([s.p[0] for s in res.solutions])
    assert np.all(gen[ev.start_hour:ev.end_hour] == 0.0)
    assert gen[ev.end_hour] == 1000.0
    k = res.series("k_eff", "N1")
    end_window = ev.end_hour // 72
    assert k[end_window] == p.k_BOL
    assert k[end_window + 1] == pytest.approx(p.k_BOL - 3 * p.m * res.series("alpha", "N1")[end_window])
    offline = res.series("refueling", "N1")
    assert offline[2:end_window + 1].all() and not offline[:2].any()
    assert not offline[end_window + 1:].any()
    assert all(math.isnan(v) for v in res.series("margin_pcm", "N1")[2:end_window])
    assert res.first_refuel_hour() == 144


def test_margin_feasibility(shipped_table):
    bundle = synth_case(3, 9)
    fleet = [nuclear_unit("N1", 1000.0, 3), nuclear_unit("N2", 1000.0, 3),
             GeneratorSpec("gas", 800.0, 0.3, 400.0, 400.0, 2, 2, 30.0)]
    cfg = ScenarioConfig(3, fleet, shipped_table, horizon_days=9,
                         initial_k={"N1": 1.045, "N2": 1.012}, storage=StorageSpec(500.0, 4.0))
    res = run(cfg, bundle.series())
    for n, (sol, inst) in enumerate(zip(res.solutions, res.instances)):
        for gi, g in enumerate(inst.generators):
            if not g.is_nuclear:
                continue
            row = [r for r in res.trajectory if r.window == n and r.reactor == g.id][0]
            pmin_q, dead_q = lookup.query(shipped_table, reactivity_margin(row.k_eff))
            on = sol.z_on[gi] == 1
            assert np.all(sol.p[gi][on] >= max(pmin_q, g.p_min_base) * g.p_max - 1e-6)
            assert inst.limits[g.id].min_dn_effective >= math.ceil(dead_q)


def test_metrics_match_hand_sums(shipped_table):
    fleet = [nuclear_unit("N1", 1000.0, 2, c_var=3.0)]
    cfg = ScenarioConfig(2, fleet, shipped_table, horizon_days=6, c_nse=500.0)
    demand = np.concatenate([np.full(72, 1200.0), np.full(72, 600.0)])
    vre = np.concatenate([np.zeros(72), np.full(72, 300.0)])
    res = run(cfg, SeriesData(demand, vre))
    m = metrics(res)
    nse = sum(float(s.nse.sum()) for s in res.solutions)
    used = sum(float(s.vre_used.sum()) for s in res.solutions)
    gen = sum(float(s.p.sum()) for s in res.solutions)
    assert m.windows == 2
    assert m.demand_mwh == demand.sum()
    assert m.nse_mwh == pytest.approx(nse)
    assert m.nse_pct == pytest.approx(100 * nse / demand.sum())
    assert m.curtailment_pct == pytest.approx(100 * (vre.sum() - used) / vre.sum())
    assert m.variable_cost == pytest.approx(3.0 * gen)
    assert m.nse_penalty == pytest.approx(500.0 * nse)
    objectives = sum(s.objective for s in res.solutions)
    assert m.cost_total == pytest.approx(objectives, rel=1e-12)
    parts = m.variable_cost + m.start_cost + m.shut_cost + m.nse_penalty
    assert parts == pytest.approx(objectives, rel=1e-6)
    assert m.cost_without_penalty == pytest.approx(objectives - m.nse_penalty)
    assert m.nse_operational_mwh + m.nse_refueling_mwh == pytest.approx(m.nse_mwh)


def test_curtailment_undefined_without_vre(shipped_table):
    fleet = [nuclear_unit("N1", 1000.0, 1)]
    cfg = ScenarioConfig(1, fleet, shipped_table, horizon_days=3)
    m = metrics(run(cfg, flat(72, 1000.0)))
    assert not m.curtailment_defined and m.curtailment_pct == 0.0
    assert m.nse_pct == 0.0
    assert m.first_refuel_hour == math.inf
