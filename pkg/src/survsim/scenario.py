"""Mission scenarios: operation area, sub-areas and the robot fleet."""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass
from typing import Mapping

from .config import ConfigError, ScenarioConfig
from .rng import stream


class PlacementFailure(RuntimeError):
    """Working areas could not be placed without overlap."""


class UnknownArea(KeyError):
    pass


class AreaKind(enum.IntEnum):
    WORKING = 1
    CONNECTING = 2
    MONITORING = 3


class RobotRole(enum.IntEnum):
    SCOUT = 1
    ARCHIVIST = 2
    SUPERVISOR = 3

    @property
    def collects(self) -> bool:
        """Supervisors act as archivists for data collection."""
        return self is not RobotRole.SCOUT


ROLE_FOR_KIND = {
    AreaKind.WORKING: RobotRole.SCOUT,
    AreaKind.CONNECTING: RobotRole.ARCHIVIST,
    AreaKind.MONITORING: RobotRole.SUPERVISOR,
}


@dataclass(frozen=True)
class Rect:
    x0: float
    y0: float
    x1: float
    y1: float

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def height(self) -> float:
        return self.y1 - self.y0

    @property
    def centroid(self) -> tuple[float, float]:
        return ((self.x0 + self.x1) / 2, (self.y0 + self.y1) / 2)

    def overlaps(self, other: Rect) -> bool:
        # shared edges do not count as overlap
        return (self.x0 < other.x1 and other.x0 < self.x1
                and self.y0 < other.y1 and other.y0 < self.y1)

    def contains(self, x: float, y: float, eps: float = 1e-9) -> bool:
        return (self.x0 - eps <= x <= self.x1 + eps) and (self.y0 - eps <= y <= self.y1 + eps)

    def within(self, other: Rect) -> bool:
        return (other.x0 <= self.x0 and self.x1 <= other.x1
                and other.y0 <= self.y0 and self.y1 <= other.y1)


@dataclass(frozen=True)
class AreaSpec:
    area_id: int
    kind: AreaKind
    bounds: Rect
    speed_range: tuple[float, float]
    failure_rate: float = 0.0

    def __post_init__(self):
        if not 0 <= self.failure_rate <= 1:
            raise ConfigError(f"area failure rate {self.failure_rate} outside [0, 1]")
        if self.speed_range[0] > self.speed_range[1]:
            raise ConfigError("speed min > max")

    @property
    def long_axis(self) -> int:
        """0 when the area is wider than tall (sweeps along x), else 1."""
        return 0 if self.bounds.width >= self.bounds.height else 1


@dataclass(frozen=True)
class RobotSpec:
    robot_id: int
    role: RobotRole
    home_area: int
    failure_rate: float = 0.0

    def __post_init__(self):
        if not 0 <= self.failure_rate <= 1:
            raise ConfigError(f"robot failure rate {self.failure_rate} outside [0, 1]")


@dataclass(frozen=True)
class Scenario:
    operation_bounds: Rect
    areas: tuple[AreaSpec, ...]
    robots: tuple[RobotSpec, ...]
    seed: int

    def area(self, area_id: int) -> AreaSpec:
        if 0 <= area_id < len(self.areas) and self.areas[area_id].area_id == area_id:
            return self.areas[area_id]
        for a in self.areas:
            if a.area_id == area_id:
                return a
        raise UnknownArea(area_id)

    def areas_of(self, kind: AreaKind) -> list[AreaSpec]:
        return [a for a in self.areas if a.kind is kind]

    def robots_of(self, role: RobotRole) -> list[RobotSpec]:
        return [r for r in self.robots if r.role is role]

    def robots_in(self, area_id: int) -> list[RobotSpec]:
        return [r for r in self.robots if r.home_area == area_id]

    def home(self, robot: RobotSpec) -> AreaSpec:
        return self.area(robot.home_area)


def _grid_shape(count: int) -> tuple[int, int]:
    cols = math.ceil(math.sqrt(count))
    while count % cols:
        cols += 1
    return count // cols, cols


def generate_scenario(config: ScenarioConfig, seed: int) -> Scenario:
    """Lay out areas and robots for one mission; a pure function of (config, seed)."""
    rng = stream(seed, "placement")
    W, H = config.width, config.height
    op = Rect(0.0, 0.0, W, H)
    s = config.working_size
    if config.working_areas and (s > W or s > H):
        raise ConfigError("working area does not fit in the operation area")

    areas: list[AreaSpec] = []
    placed: list[Rect] = []
    for _ in range(config.working_areas):
        for _attempt in range(config.placement_attempts):
            x0, y0 = rng.uniform(0.0, W - s), rng.uniform(0.0, H - s)
            rect = Rect(float(x0), float(y0), float(x0) + s, float(y0) + s)
            if not any(rect.overlaps(p) for p in placed):
                break
        else:
            raise PlacementFailure(
                f"could not place working area {len(placed)} after "
                f"{config.placement_attempts} attempts")
        placed.append(rect)
        areas.append(AreaSpec(len(areas), AreaKind.WORKING, rect, config.scout_speed))

    half = config.stripe_width / 2
    for k in range(config.vertical_stripes):
        cx = W * (k + 1) / (config.vertical_stripes + 1)
        rect = Rect(max(0.0, cx - half), 0.0, min(W, cx + half), H)
        areas.append(AreaSpec(len(areas), AreaKind.CONNECTING, rect, config.archivist_speed))
    for k in range(config.horizontal_stripes):
        cy = H * (k + 1) / (config.horizontal_stripes + 1)
        rect = Rect(0.0, max(0.0, cy - half), W, min(H, cy + half))
        areas.append(AreaSpec(len(areas), AreaKind.CONNECTING, rect, config.archivist_speed))

    rows, cols = _grid_shape(config.monitoring_areas)
    for r in range(rows):
        for c in range(cols):
            rect = Rect(W * c / cols, H * r / rows, W * (c + 1) / cols, H * (r + 1) / rows)
            areas.append(AreaSpec(len(areas), AreaKind.MONITORING, rect, config.supervisor_speed))

    per_area = {
        AreaKind.WORKING: config.scouts_per_area,
        AreaKind.CONNECTING: config.archivists_per_area,
        AreaKind.MONITORING: config.supervisors_per_area,
    }
    robots: list[RobotSpec] = []
    # scouts by area index, then archivists, then supervisors
    for kind in (AreaKind.WORKING, AreaKind.CONNECTING, AreaKind.MONITORING):
        for area in areas:
            if area.kind is kind:
                for _ in range(per_area[kind]):
                    robots.append(RobotSpec(len(robots), ROLE_FOR_KIND[kind], area.area_id))

    assert all(a.bounds.within(op) for a in areas)
    return Scenario(op, tuple(areas), tuple(robots), int(seed))


def with_failure_rates(scenario: Scenario, rate: float,
                       role_rates: Mapping[RobotRole, float] | None = None,
                       kind_rates: Mapping[AreaKind, float] | None = None) -> Scenario:
    """Attach anticipated failure rates.

    By default only scouts and working areas are failure-prone (rate ``rate``);
    archivists, supervisors, connecting and monitoring areas get 0.
    """
    if not 0 <= rate <= 1:
        raise ConfigError(f"failure rate {rate} outside [0, 1]")
    rho = {RobotRole.SCOUT: rate, RobotRole.ARCHIVIST: 0.0, RobotRole.SUPERVISOR: 0.0}
    lam = {AreaKind.WORKING: rate, AreaKind.CONNECTING: 0.0, AreaKind.MONITORING: 0.0}
    rho.update(role_rates or {})
    lam.update(kind_rates or {})
    areas = tuple(dataclasses.replace(a, failure_rate=lam[a.kind]) for a in scenario.areas)
    robots = tuple(dataclasses.replace(r, failure_rate=rho[r.role]) for r in scenario.robots)
    return dataclasses.replace(scenario, areas=areas, robots=robots)


def area_neighbors(scenario: Scenario, area_id: int, k: int) -> list[int]:
    """The k working areas whose centroids are closest to ``area_id``'s.

    Ties go to the lower area id; the query area itself is never returned.
    """
    area = scenario.area(area_id)
    if area.kind is not AreaKind.WORKING:
        raise ValueError(f"area {area_id} is not a working area")
    others = [a for a in scenario.areas_of(AreaKind.WORKING) if a.area_id != area_id]
    if k < 0 or k > len(others):
        raise ValueError(f"k={k} must be in [0, {len(others)}]")
    cx, cy = area.bounds.centroid

    def key(a: AreaSpec):
        ax, ay = a.bounds.centroid
        return (math.hypot(ax - cx, ay - cy), a.area_id)

    return [a.area_id for a in sorted(others, key=key)[:k]]


def export_placement(scenario: Scenario, positions: Mapping[int, tuple[float, float]]) -> str:
    """Plain-text listing: one line per robot with id, role, area and initial position."""
    lines = ["# robot_id role area_id area_kind x y"]
    for r in scenario.robots:
        x, y = positions[r.robot_id]
        kind = scenario.area(r.home_area).kind
        lines.append(f"{r.robot_id} {r.role.name.lower()} {r.home_area} "
                     f"{kind.name.lower()} {x:.3f} {y:.3f}")
    return "\n".join(lines) + "\n"
