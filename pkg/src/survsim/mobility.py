"""Modified random waypoint mobility inside assigned areas.

Scouts and supervisors pick uniform waypoints and speeds inside their area
(no pause time). Archivists sweep their stripe end to end, reversing at the
limits, with the lateral coordinate re-drawn at every reversal.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TextIO

import numpy as np

from .rng import stream
from .scenario import AreaSpec, RobotRole, RobotSpec, Scenario

_END_EPS = 1e-9


@dataclass(frozen=True)
class RobotKinematics:
    position: tuple[float, float]
    waypoint: tuple[float, float]
    speed: float
    sweep_direction: int = 0  # +1/-1 for archivists, 0 otherwise


class Fleet:
    """Array-backed kinematic state for a set of robots (one row per robot)."""

    def __init__(self, lo, hi, speed_lo, speed_hi, sweeper, axis,
                 pos, waypoint, speed, direction):
        self.lo = np.asarray(lo, dtype=float).reshape(-1, 2)
        self.hi = np.asarray(hi, dtype=float).reshape(-1, 2)
        self.speed_lo = np.asarray(speed_lo, dtype=float).reshape(-1)
        self.speed_hi = np.asarray(speed_hi, dtype=float).reshape(-1)
        self.sweeper = np.asarray(sweeper, dtype=bool).reshape(-1)
        self.axis = np.asarray(axis, dtype=int).reshape(-1)
        self.pos = np.array(pos, dtype=float).reshape(-1, 2)
        self.waypoint = np.array(waypoint, dtype=float).reshape(-1, 2)
        self.speed = np.array(speed, dtype=float).reshape(-1)
        self.direction = np.array(direction, dtype=int).reshape(-1)

    def __len__(self):
        return len(self.pos)

    @classmethod
    def for_scenario(cls, scenario: Scenario, rng: np.random.Generator) -> Fleet:
        """Initial state: uniform position, waypoint and speed in the home area.

        Archivists start at a stripe end (alternating ends within a stripe)
        and head for the opposite end, so a 1000 s mission covers the stripe.
        """
        n = len(scenario.robots)
        lo = np.empty((n, 2)); hi = np.empty((n, 2))
        slo = np.empty(n); shi = np.empty(n)
        sweeper = np.zeros(n, dtype=bool); axis = np.zeros(n, dtype=int)
        rank_in_area: dict[int, int] = {}
        ranks = np.zeros(n, dtype=int)
        for r in scenario.robots:
            a = scenario.area(r.home_area)
            b = a.bounds
            lo[r.robot_id] = (b.x0, b.y0)
            hi[r.robot_id] = (b.x1, b.y1)
            slo[r.robot_id], shi[r.robot_id] = a.speed_range
            if r.role is RobotRole.ARCHIVIST:
                sweeper[r.robot_id] = True
                axis[r.robot_id] = a.long_axis
            ranks[r.robot_id] = rank_in_area.get(r.home_area, 0)
            rank_in_area[r.home_area] = ranks[r.robot_id] + 1

        pos = lo + rng.random((n, 2)) * (hi - lo)
        wp = lo + rng.random((n, 2)) * (hi - lo)
        speed = slo + rng.random(n) * (shi - slo)
        direction = np.zeros(n, dtype=int)
        for i in np.flatnonzero(sweeper):
            ax = axis[i]
            if ranks[i] % 2 == 0:
                pos[i, ax], direction[i], wp[i, ax] = lo[i, ax], 1, hi[i, ax]
            else:
                pos[i, ax], direction[i], wp[i, ax] = hi[i, ax], -1, lo[i, ax]
        return cls(lo, hi, slo, shi, sweeper, axis, pos, wp, speed, direction)

    def advance(self, idx: np.ndarray, dt: float, rng: np.random.Generator) -> None:
        """Move robots ``idx`` (ascending indices) forward by ``dt`` seconds."""
        if len(idx) == 0:
            return
        pos = self.pos[idx]
        wp = self.waypoint[idx]
        step = self.speed[idx] * dt
        vec = wp - pos
        dist = np.hypot(vec[:, 0], vec[:, 1])
        arrived = dist <= step
        sw = self.sweeper[idx]
        if sw.any():
            ax = self.axis[idx]
            rows = np.arange(len(idx))
            p_long = pos[rows, ax]
            d = self.direction[idx]
            at_end = np.where(d > 0, p_long >= self.hi[idx][rows, ax] - _END_EPS,
                              p_long <= self.lo[idx][rows, ax] + _END_EPS)
            arrived |= sw & at_end
        safe = np.where(dist > 0, dist, 1.0)
        moved = pos + vec * (step / safe)[:, None]
        new = np.where(arrived[:, None], np.where((dist <= step)[:, None], wp, pos), moved)
        np.clip(new, self.lo[idx], self.hi[idx], out=new)
        self.pos[idx] = new

        hit = idx[arrived]
        if len(hit) == 0:
            return
        lo, hi = self.lo[hit], self.hi[hit]
        new_wp = lo + rng.random((len(hit), 2)) * (hi - lo)
        self.speed[hit] = self.speed_lo[hit] + rng.random(len(hit)) * (self.speed_hi[hit] - self.speed_lo[hit])
        swh = self.sweeper[hit]
        if swh.any():
            for k in np.flatnonzero(swh):
                i = hit[k]
                ax = self.axis[i]
                self.direction[i] = -self.direction[i] if self.direction[i] else 1
                new_wp[k, ax] = self.hi[i, ax] if self.direction[i] > 0 else self.lo[i, ax]
        self.waypoint[hit] = new_wp

    def kinematics(self, i: int) -> RobotKinematics:
        return RobotKinematics(tuple(self.pos[i]), tuple(self.waypoint[i]),
                               float(self.speed[i]), int(self.direction[i]))

    def positions(self) -> dict[int, tuple[float, float]]:
        return {i: (float(x), float(y)) for i, (x, y) in enumerate(self.pos)}


def step(robot: RobotSpec, area: AreaSpec, kin: RobotKinematics, dt: float,
         rng: np.random.Generator) -> RobotKinematics:
    """Advance one robot by ``dt`` seconds; returns the new kinematic state."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    b = area.bounds
    sweeper = robot.role is RobotRole.ARCHIVIST
    fleet = Fleet((b.x0, b.y0), (b.x1, b.y1), area.speed_range[0], area.speed_range[1],
                  sweeper, area.long_axis, kin.position, kin.waypoint, kin.speed,
                  kin.sweep_direction)
    fleet.advance(np.array([0]), dt, rng)
    return fleet.kinematics(0)


def positions_at(scenario: Scenario, t: float, seed: int | None = None,
                 dt: float = 1.0) -> dict[int, tuple[float, float]]:
    """Positions of every robot at time ``t`` (no failures), iterating at tick ``dt``."""
    if t < 0:
        raise ValueError("t must be non-negative")
    rng = stream(scenario.seed if seed is None else seed, "mobility")
    fleet = Fleet.for_scenario(scenario, rng)
    everyone = np.arange(len(fleet))
    for _ in range(int(round(t / dt))):
        fleet.advance(everyone, dt, rng)
    return fleet.positions()


def write_trace(fh: TextIO, t: float, pos: np.ndarray, ids=None) -> None:
    """Append one movement-trace line per robot: ``t robot_id x y``."""
    ids = range(len(pos)) if ids is None else ids
    fh.writelines(f"{t:g} {i} {pos[i, 0]:.3f} {pos[i, 1]:.3f}\n" for i in ids)
