"""Failure schedules and neighborhood failure probability."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, TextIO

import numpy as np

from .config import ConfigError, TimingConfig
from .rng import stream
from .scenario import AreaKind, RobotRole, Scenario, area_neighbors


class AlreadyDead(RuntimeError):
    pass


class FailureModel(enum.IntEnum):
    INDEPENDENT_ROBOT = 1
    INDEPENDENT_AREA = 2
    CLUSTERED_AREA = 3


@dataclass(frozen=True)
class FailureEvent:
    time: float
    victims: frozenset[int]


@dataclass(frozen=True)
class FailureSchedule:
    events: tuple[FailureEvent, ...]
    model: FailureModel
    rate: float

    @property
    def victims(self) -> set[int]:
        return {v for e in self.events for v in e.victims}

    def to_text(self) -> str:
        lines = [f"# model={int(self.model)} rate={self.rate!r}"]
        for e in self.events:
            lines.append(f"{e.time!r} " + " ".join(map(str, sorted(e.victims))))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> FailureSchedule:
        lines = text.strip().splitlines()
        head = dict(kv.split("=") for kv in lines[0].lstrip("# ").split())
        events = []
        for line in lines[1:]:
            t, *ids = line.split()
            events.append(FailureEvent(float(t), frozenset(int(i) for i in ids)))
        return cls(tuple(events), FailureModel(int(head["model"])), float(head["rate"]))


def failure_count(rate: float, n: int) -> int:
    """round-half-up(rate * n); the epsilon absorbs binary float error."""
    return int(math.floor(rate * n + 0.5 + 1e-9))


def build_failure_schedule(scenario: Scenario, model: FailureModel | int, rate: float,
                           seed: int, timing: TimingConfig | None = None) -> FailureSchedule:
    """Timed scout failures realizing one failure model.

    Only scouts are scheduled; archivists and supervisors are reliable.
    """
    model = FailureModel(model)
    if not 0 <= rate <= 1:
        raise ConfigError(f"failure rate {rate} outside [0, 1]")
    timing = timing or TimingConfig()
    rng = stream(seed, "failures")
    # a mission shorter than the warm-up fails its robots at the very end
    end = timing.duration
    start = min(timing.warmup, end)
    scouts = sorted(r.robot_id for r in scenario.robots_of(RobotRole.SCOUT))
    working = sorted(a.area_id for a in scenario.areas_of(AreaKind.WORKING))
    by_area: dict[int, list[int]] = {a: [] for a in working}
    for r in scenario.robots_of(RobotRole.SCOUT):
        by_area[r.home_area].append(r.robot_id)

    events: list[FailureEvent] = []
    if model is FailureModel.INDEPENDENT_ROBOT:
        k = failure_count(rate, len(scouts))
        if k:
            chosen = rng.choice(scouts, size=k, replace=False)
            times = rng.uniform(start, end, size=k)
            events = [FailureEvent(float(t), frozenset([int(v)])) for v, t in zip(chosen, times)]
    elif model is FailureModel.INDEPENDENT_AREA:
        k = failure_count(rate, len(working))
        if k:
            chosen = rng.choice(working, size=k, replace=False)
            times = rng.uniform(start, end, size=k)
            events = [FailureEvent(float(t), frozenset(by_area[int(a)]))
                      for a, t in zip(chosen, times)]
    else:
        k = failure_count(rate, len(working))
        if k:
            seed_area = int(rng.choice(working))
            hit = [seed_area] + area_neighbors(scenario, seed_area, k - 1)
            t = float(rng.uniform(end - timing.clustered_window * end, end))
            events = [FailureEvent(t, frozenset(v for a in hit for v in by_area[a]))]
    events = [e for e in events if e.victims]
    events.sort(key=lambda e: (e.time, min(e.victims)))
    return FailureSchedule(tuple(events), model, float(rate))


@dataclass(frozen=True)
class NeighborRecord:
    robot_id: int
    role: RobotRole
    home_area: int
    area_kind: AreaKind
    failure_rate: float  # rho of the robot
    area_failure_rate: float  # lambda of its area
    repo_digest: frozenset[int] = frozenset()
    last_hello_time: float = 0.0


@dataclass
class NeighborhoodView:
    """HELLO-derived knowledge of the 1-hop neighborhood of one robot."""
    owner: int
    role: RobotRole
    home_area: int
    area_kind: AreaKind
    failure_rate: float
    area_failure_rate: float
    staleness: float = 15.0
    records: dict[int, NeighborRecord] = field(default_factory=dict)
    version: int = 0
    # lower bound on the oldest record time; lets expire() skip the scan
    _oldest: float = field(default=math.inf, repr=False, compare=False)

    def __post_init__(self):
        self.records.pop(self.owner, None)
        self._oldest = min((r.last_hello_time for r in self.records.values()), default=math.inf)

    def update(self, rec: NeighborRecord) -> None:
        if rec.robot_id == self.owner:
            return
        self.records[rec.robot_id] = rec
        if rec.last_hello_time < self._oldest:
            self._oldest = rec.last_hello_time
        self.version += 1

    def expire(self, now: float) -> None:
        if now - self._oldest <= self.staleness:
            return
        records = self.records
        stale = [i for i, r in records.items() if now - r.last_hello_time > self.staleness]
        for i in stale:
            del records[i]
        self._oldest = min((r.last_hello_time for r in records.values()), default=math.inf)
        if stale:
            self.version += 1

    def live(self, now: float) -> list[NeighborRecord]:
        self.expire(now)
        return list(self.records.values())


def failure_probability(model: FailureModel | int, view: NeighborhoodView,
                        neighbors: Iterable[NeighborRecord] | None = None) -> float:
    """Probability that the whole neighborhood fails under ``model``.

    ``neighbors`` defaults to every record in the view. With no neighbors
    only the owner's own robot (model 1) or area (models 2, 3) rate counts.
    """
    model = FailureModel(model)
    recs = list(view.records.values()) if neighbors is None else list(neighbors)
    if not recs:
        return view.failure_rate if model is FailureModel.INDEPENDENT_ROBOT else view.area_failure_rate
    fp = 1.0
    if model is FailureModel.INDEPENDENT_ROBOT:
        for r in recs:
            fp *= r.failure_rate
    else:
        # one factor per failure unit (area, or area kind for clustered
        # failures); should records disagree on a unit's rate, the lowest
        # one counts, which keeps FP non-increasing as neighbors are added
        unit = (lambda r: r.home_area) if model is FailureModel.INDEPENDENT_AREA else (lambda r: r.area_kind)
        lams: dict = {}
        for r in recs:
            key = unit(r)
            lams[key] = min(lams.get(key, 1.0), r.area_failure_rate)
        for lam in lams.values():
            fp *= lam
    return fp


def apply_failure(alive: np.ndarray | set, victims: Iterable[int]) -> None:
    """Mark victims dead in place; dead robots stop moving and communicating."""
    victims = list(victims)
    as_set = isinstance(alive, set)
    for v in victims:
        is_alive = v in alive if as_set else bool(alive[v])
        if not is_alive:
            raise AlreadyDead(v)
    for v in victims:
        if as_set:
            alive.discard(v)
        else:
            alive[v] = False


def write_schedule(schedule: FailureSchedule, fh: TextIO) -> None:
    fh.write(schedule.to_text())
