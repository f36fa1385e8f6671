"""Independent reference computations used by the tests."""

from __future__ import annotations

import numpy as np

from survsim.failure import NeighborhoodView, NeighborRecord
from survsim.scenario import AreaKind, RobotRole

KIND_ROLE = {AreaKind.WORKING: RobotRole.SCOUT, AreaKind.CONNECTING: RobotRole.ARCHIVIST,
             AreaKind.MONITORING: RobotRole.SUPERVISOR}


def random_view(rng: np.random.Generator, model: int, max_neighbors: int = 6) -> NeighborhoodView:
    """A view whose rates are consistent with the model's failure unit.

    Robots carry their own rate; areas carry one rate per area (model 2) or
    one rate per area kind (model 3).
    """
    kind_rate = {k: float(rng.uniform(0, 1)) for k in AreaKind}
    area_ids = rng.integers(0, 4, size=max_neighbors)
    area_kind = {a: AreaKind(int(rng.integers(1, 4))) for a in range(4)}
    area_rate = {a: float(rng.uniform(0, 1)) for a in range(4)}
    view = NeighborhoodView(1000, RobotRole.SCOUT, 0, AreaKind.WORKING, 0.5, 0.5)
    for i in range(int(rng.integers(1, max_neighbors + 1))):
        a = int(area_ids[i])
        kind = area_kind[a]
        lam = kind_rate[kind] if model == 3 else area_rate[a]
        view.update(NeighborRecord(i, KIND_ROLE[kind], a, kind, float(rng.uniform(0, 1)), lam,
                                   frozenset(), 0.0))
    return view


def monte_carlo_fp(model: int, view: NeighborhoodView, samples: int,
                   rng: np.random.Generator) -> float:
    """Fraction of sampled worlds in which every neighbor of ``view`` is dead.

    Model 1 draws each robot independently; model 2 draws each distinct area
    and kills its robots together; model 3 draws each distinct area kind.
    """
    recs = list(view.records.values())
    if model == 1:
        rates = np.array([r.failure_rate for r in recs])
        dead = rng.random((samples, len(recs))) < rates
        return float(dead.all(axis=1).mean())
    unit = (lambda r: r.home_area) if model == 2 else (lambda r: r.area_kind)
    units = {}
    for r in recs:
        units.setdefault(unit(r), r.area_failure_rate)
    keys = list(units)
    unit_dead = rng.random((samples, len(keys))) < np.array([units[k] for k in keys])
    col = {k: i for i, k in enumerate(keys)}
    robot_dead = unit_dead[:, [col[unit(r)] for r in recs]]
    return float(robot_dead.all(axis=1).mean())


def census_report(storage_events, alive, item_types, produced, sr):
    """SA/RF/CD/CRF by brute force over (robot, data_id) storage events."""
    copies = set((r, d) for r, d in storage_events if r in alive)
    sa, rf = {}, {}
    for s, req in sr.items():
        n = produced.get(s, 0)
        mine = [(r, d) for r, d in copies if item_types[d] == s]
        if n == 0:
            sa[s], rf[s] = 1.0, 0.0
            continue
        sa[s] = len({d for _, d in mine}) / n
        rf[s] = len(mine) / n
    cd = 100.0 * sum(abs(sa[s] - sr[s]) for s in sr)
    return sa, rf, cd, sum(rf.values())


def reference_neighborhoods(r: float) -> dict[str, NeighborhoodView]:
    """Four hand-built neighborhoods: two scouts in one or two working areas,
    optionally joined by an archivist whose rates are a quarter of the scouts'."""
    def view(*recs):
        v = NeighborhoodView(1000, RobotRole.SCOUT, 0, AreaKind.WORKING, r, r)
        for rec in recs:
            v.update(rec)
        return v

    def scout(i, area):
        return NeighborRecord(i, RobotRole.SCOUT, area, AreaKind.WORKING, r, r)

    arch = NeighborRecord(2, RobotRole.ARCHIVIST, 10, AreaKind.CONNECTING, r / 4, r / 4)
    return {
        "2SC-1WA": view(scout(0, 0), scout(1, 0)),
        "2SC-2WA": view(scout(0, 0), scout(1, 1)),
        "2SC-1AR-1WA-1CA": view(scout(0, 0), scout(1, 0), arch),
        "2SC-1AR-2WA-1CA": view(scout(0, 0), scout(1, 1), arch),
    }
