"""Instance builders shared by the MILP, UC and acceptance tests."""
from __future__ import annotations

import numpy as np

from nucflex.uc import BoundaryState, GeneratorSpec, StorageSpec, UCInstance, UnitBoundary, UnitLimits


def nuclear(id="N1", p_max=1000.0, p_min=0.2, ramp=250.0, min_up=1, min_dn=1, c_var=2.8, c_start=0.0,
            c_shut=0.0):
    return GeneratorSpec(id, p_max, p_min, ramp, ramp, min_up, min_dn, c_var, c_start, c_shut, True)


def stable_ramp_instance(stable_hours=2):
    """One reactor whose cheapest schedule follows the nine rows of the ramp example.

    Output path 1000 -> 750 -> 500 -> 500 -> 500 -> 750 -> 1000 -> 1000 -> off.
    The last hour has zero demand and no storage, so the unit must trip.
    """
    g = nuclear()
    demand = np.array([1000, 750, 500, 500, 500, 750, 1000, 1000, 0], dtype=float)
    return UCInstance(
        T=9, demand=demand, vre_available=np.zeros(9), generators=(g,),
        boundary=BoundaryState({"N1": UnitBoundary(True, 1000.0)}),
        stable_hours=stable_hours,
    )


def random_uc_instance(rng: np.random.Generator) -> UCInstance:
    """Desk-scale instance with at most 2 generators, T <= 8 and at most 24 binaries."""
    layout = rng.integers(4)
    if layout == 0:
        kinds, T = ["nuc"], int(rng.integers(1, 5))
    elif layout == 1:
        kinds, T = ["th"], int(rng.integers(1, 9))
    elif layout == 2:
        kinds, T = ["th", "th"], int(rng.integers(1, 5))
    else:
        kinds, T = ["nuc", "th"], int(rng.integers(1, 3))
    gens, units, limits = [], {}, {}
    for i, kind in enumerate(kinds):
        p_max = float(rng.choice([50.0, 80.0, 100.0, 120.0]))
        ramp = float(rng.choice([20.0, 40.0, p_max]))
        gid = f"G{i}"
        g = GeneratorSpec(
            gid, p_max, float(rng.choice([0.0, 0.2, 0.5])), ramp, ramp,
            int(rng.integers(1, 4)), int(rng.integers(1, 4)),
            float(rng.uniform(1, 30)), float(rng.uniform(0, 5)), float(rng.uniform(0, 5)),
            kind == "nuc",
        )
        gens.append(g)
        on = bool(rng.random() < 0.7)
        if on:
            p0 = float(rng.uniform(g.p_min_base * p_max, p_max))
            last_rd = int(kind == "nuc" and rng.random() < 0.3)
            units[gid] = UnitBoundary(True, p0, int(rng.integers(0, 5)), 10**6, last_rd,
                                      int(rng.integers(0, 3)) if kind == "nuc" else 0)
        else:
            units[gid] = UnitBoundary(False, 0.0, 10**6, int(rng.integers(0, 5)))
        if kind == "nuc":
            pmin = max(g.p_min_base, float(rng.choice([0.0, 0.4, 0.7, 1.0])))
            offline = int(rng.integers(0, 3)) if rng.random() < 0.2 else 0
            limits[gid] = UnitLimits(pmin, max(g.min_dn_base, int(rng.integers(1, 5))), offline)
    cap = sum(g.p_max for g in gens)
    demand = rng.uniform(0.1, 1.1, T) * cap
    vre = rng.uniform(0, 0.5, T) * cap if rng.random() < 0.5 else np.zeros(T)
    storage = StorageSpec(0.3 * cap, 2.0) if rng.random() < 0.4 else None
    soc = float(rng.uniform(0, storage.energy)) if storage else 0.0
    return UCInstance(
        T=T, demand=np.round(demand, 3), vre_available=np.round(vre, 3), generators=tuple(gens),
        boundary=BoundaryState(units, soc), storage=storage, limits=limits,
        c_nse=float(rng.choice([100.0, 1000.0])), stable_hours=int(rng.integers(0, 3)),
    )
