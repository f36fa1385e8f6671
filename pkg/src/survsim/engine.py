"""Tick-driven simulation loop.

Per tick: (1) mobility step, (2) due failures, (3) due data creations,
(4) due HELLOs, (5) radio delivery and protocol handlers. Steps 3-4 run in
ascending robot id; step 5 drains a FIFO of bursts, appending any responses
so that multi-hop replication completes within the tick. Data a robot queues
while an earlier burst of the same TTL is still waiting joins that burst.
"""

from __future__ import annotations

import heapq
import logging
from collections import deque
from dataclasses import dataclass, field
from typing import TextIO

import numpy as np

from .config import ProtocolConfig, RadioConfig, TimingConfig
from .failure import FailureModel, FailureSchedule, apply_failure, build_failure_schedule
from .mobility import Fleet, write_trace
from .protocol import (Burst, DataItem, HelloMessage, NodeState, Technique, deliver_burst,
                       deliver_packet)
from .radio import Medium
from .rng import UniformBuffer, stream
from .scenario import RobotRole, Scenario, with_failure_rates

log = logging.getLogger(__name__)

# runaway guard; far above anything a default 1000 s mission produces
MAX_BURSTS_PER_TICK = 5_000_000


@dataclass
class SimulationRun:
    scenario: Scenario
    technique: Technique | str
    model: FailureModel | int
    rate: float
    seed: int
    timing: TimingConfig = field(default_factory=TimingConfig)
    radio: RadioConfig = field(default_factory=RadioConfig)
    protocol: ProtocolConfig = field(default_factory=ProtocolConfig)
    schedule: FailureSchedule | None = None
    event_log: TextIO | None = None
    movement_trace: TextIO | None = None
    record_storage: bool = False

    def __post_init__(self):
        self.technique = Technique(self.technique)
        self.model = FailureModel(self.model)
        if self.timing.duration < 0:
            raise ValueError("duration must be non-negative")


@dataclass
class RunHistory:
    census: dict[int, np.ndarray]  # alive robot -> sorted stored data ids
    alive: frozenset[int]
    produced: dict[int, int]
    item_types: np.ndarray  # data id -> type
    death_times: dict[int, float]
    transmissions: int = 0
    data_transmissions: int = 0
    hello_transmissions: int = 0
    receptions: int = 0
    drops: int = 0
    storage_events: list[tuple[int, int]] | None = None  # (robot, data id)


def run(sim: SimulationRun) -> RunHistory:
    tech, model = sim.technique, sim.model
    pcfg, timing = sim.protocol, sim.timing
    scen = with_failure_rates(sim.scenario, sim.rate)
    schedule = sim.schedule
    if schedule is None:
        schedule = build_failure_schedule(scen, model, sim.rate, sim.seed, timing)

    n = len(scen.robots)
    n_types = len(pcfg.surv_requirements)
    storage_log: list | None = [] if sim.record_storage else None
    c_lo, c_hi = pcfg.creation_period
    h_lo, h_hi = pcfg.hello_period
    scouts = [r.robot_id for r in scen.robots if r.role is RobotRole.SCOUT]
    # every creation timer fires at most duration / c_lo times
    capacity = len(scouts) * n_types * (int(timing.duration // c_lo) + 1) + 1
    stored = np.zeros((n, capacity), dtype=bool)
    relayed = np.zeros((n, capacity), dtype=bool)
    item_types = np.zeros(capacity, dtype=np.int8)
    nodes = [NodeState(r, scen.area(r.home_area), tech, model, pcfg, storage_log,
                       stored[r.robot_id], relayed[r.robot_id])
             for r in scen.robots]
    batched = not tech.adaptive

    mob_rng = stream(sim.seed, "mobility")
    data_rng = UniformBuffer(stream(sim.seed, "data"))
    hello_rng = UniformBuffer(stream(sim.seed, "hello"))
    fleet = Fleet.for_scenario(scen, mob_rng)
    medium = Medium(sim.radio, stream(sim.seed, "radio"), timing.tick)
    alive = np.ones(n, dtype=bool)
    death_times: dict[int, float] = {}

    data_timers = []
    for rid in scouts:
        for s in range(1, n_types + 1):
            data_timers.append((data_rng.uniform(c_lo, c_hi), rid, s))
    heapq.heapify(data_timers)
    hello_timers = [(hello_rng.uniform(0.0, h_hi), nd.robot_id)
                    for nd in nodes if nd.beacons]
    heapq.heapify(hello_timers)
    failures = deque(schedule.events)

    seq = 0  # mission-wide creation counter
    produced = {s: 0 for s in range(1, n_types + 1)}
    srs = pcfg.surv_requirements
    data_size, hello_size = pcfg.data_size, pcfg.hello_size
    hello_tx = data_tx = 0
    elog = sim.event_log

    n_ticks = int(np.floor(timing.duration / timing.tick + 1e-9))
    if sim.movement_trace is not None:
        write_trace(sim.movement_trace, 0.0, fleet.pos)
    for tick in range(1, n_ticks + 1):
        now = tick * timing.tick
        # robots failing during this tick neither move nor talk in it
        while failures and failures[0].time <= now:
            ev = failures.popleft()
            apply_failure(alive, ev.victims)
            for v in ev.victims:
                death_times[v] = ev.time
        fleet.advance(np.flatnonzero(alive), timing.tick, mob_rng)
        if sim.movement_trace is not None:
            write_trace(sim.movement_trace, now, fleet.pos, np.flatnonzero(alive))
        medium.update(fleet.pos, alive)

        queue: deque = deque()
        pending: dict[tuple[int, int], Burst] = {}
        due = []
        while data_timers and data_timers[0][0] <= now:
            t_due, rid, s = heapq.heappop(data_timers)
            if not alive[rid]:
                continue
            due.append((rid, s, t_due))
            heapq.heappush(data_timers, (t_due + data_rng.uniform(c_lo, c_hi), rid, s))
        due.sort()
        for rid, s, t_due in due:
            item = DataItem(seq, s, srs[s - 1], t_due, rid, data_size)
            item_types[seq] = s
            seq += 1
            produced[s] += 1
            out = nodes[rid].on_data_created(item, now)
            if out is not None:
                _enqueue(queue, pending, rid, out)

        hellos = []
        while hello_timers and hello_timers[0][0] <= now:
            t_due, rid = heapq.heappop(hello_timers)
            if not alive[rid]:
                continue
            hellos.append(rid)
            heapq.heappush(hello_timers, (t_due + hello_rng.uniform(h_lo, h_hi), rid))
        for rid in sorted(hellos):
            hello = nodes[rid].emit_hello(now)
            if hello is not None:
                queue.append((rid, hello))

        bursts = 0
        while queue:
            sender, payload = queue.popleft()
            bursts += 1
            if bursts > MAX_BURSTS_PER_TICK:
                raise RuntimeError(f"replication did not settle within tick {tick}")
            if isinstance(payload, HelloMessage):
                hello_tx += 1
                if elog is not None:
                    elog.write(f"{now:g} {sender} hello - - -\n")
                for j, _ in medium.transmit(sender, (payload,), hello_size):
                    out = nodes[j].on_hello_received(payload, now)
                    if out is not None:
                        _enqueue(queue, pending, j, out)
                continue
            parts = pending.pop((sender, payload))
            payload = parts[0] if len(parts) == 1 else _join(parts)
            data_tx += payload.count
            if elog is not None:
                elog.writelines(f"{now:g} {sender} data {m.data_id} "
                                f"{'-' if m.surv_remaining is None else repr(m.surv_remaining)} "
                                f"{m.ttl}\n" for m in payload.messages())
            if batched:
                if payload.count == 1:
                    got = [j for j, _ in medium.transmit(sender, payload.ids, data_size)]
                    outs = deliver_packet(nodes, stored, relayed, got, int(payload.ids[0]),
                                          payload.ttl)
                else:
                    receivers, hits = medium.transmit_hits(sender, payload.count, data_size)
                    outs = deliver_burst(nodes, stored, relayed, receivers, hits, payload,
                                         distinct=len(parts) == 1)
                for j, out in outs:
                    _enqueue(queue, pending, j, out)
            else:
                for j, got in medium.transmit(sender, range(payload.count), data_size):
                    sub = payload if len(got) == payload.count else Burst(
                        [payload.ids[k] for k in got], 1, [payload.surv[k] for k in got])
                    out = nodes[j].on_data_received(sub, now)
                    if out is not None:
                        _enqueue(queue, pending, j, out)

    census = {nd.robot_id: nd.stored_ids() for nd in nodes if alive[nd.robot_id]}
    return RunHistory(
        census=census,
        alive=frozenset(int(i) for i in np.flatnonzero(alive)),
        produced=produced,
        item_types=item_types[:seq].copy(),
        death_times=death_times,
        transmissions=medium.transmissions,
        data_transmissions=data_tx,
        hello_transmissions=hello_tx,
        receptions=medium.receptions,
        drops=medium.drops,
        storage_events=storage_log,
    )


def _enqueue(queue: deque, pending: dict, sender: int, burst: Burst) -> None:
    """Queue a data burst. Data a robot queues while an earlier burst of the
    same TTL still waits joins that burst, so the backlog goes out back to
    back."""
    key = (sender, burst.ttl)
    waiting = pending.get(key)
    if waiting is None:
        pending[key] = [burst]
        queue.append(key)
    else:
        waiting.append(burst)


def _join(parts: list[Burst]) -> Burst:
    if parts[0].surv is not None:
        return Burst([d for b in parts for d in b.ids], parts[0].ttl,
                     [v for b in parts for v in b.surv])
    return Burst(np.concatenate([np.asarray(b.ids, dtype=np.int64) for b in parts]),
                 parts[0].ttl)
