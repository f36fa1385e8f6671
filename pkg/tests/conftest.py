from __future__ import annotations

import math
from collections import deque

import numpy as np
import pytest

from survsim.config import ProtocolConfig, RadioConfig, TimingConfig
from survsim.protocol import NodeState
from survsim.scenario import AreaKind, AreaSpec, Rect, RobotRole, RobotSpec, Scenario

# sigma -> 0 and no congestion: every robot within range hears every packet
LOSSLESS = RadioConfig(shadowing_sigma_db=1e-6, per_tick_node_budget=math.inf)
# one item per type every 5 s, exactly
STEADY = ProtocolConfig(creation_period=(5.0, 5.0))


def box_scenario(n_scouts=1, n_archivists=1, n_supervisors=1, side=100.0, seed=0) -> Scenario:
    """All robots confined to one side x side square, so everyone stays in range."""
    rect = Rect(0.0, 0.0, side, side)
    areas = (AreaSpec(0, AreaKind.WORKING, rect, (1.0, 5.0)),
             AreaSpec(1, AreaKind.CONNECTING, rect, (5.0, 10.0)),
             AreaSpec(2, AreaKind.MONITORING, rect, (10.0, 15.0)))
    robots = []
    for role, area, count in ((RobotRole.SCOUT, 0, n_scouts),
                              (RobotRole.ARCHIVIST, 1, n_archivists),
                              (RobotRole.SUPERVISOR, 2, n_supervisors)):
        for _ in range(count):
            robots.append(RobotSpec(len(robots), role, area))
    return Scenario(rect, areas, tuple(robots), seed)


def make_node(robot_id, technique, role=RobotRole.SCOUT, area_id=0, kind=AreaKind.WORKING,
              rho=0.0, lam=0.0, model=1, cfg=None) -> NodeState:
    area = AreaSpec(area_id, kind, Rect(0, 0, 100, 100), (1.0, 5.0), lam)
    robot = RobotSpec(robot_id, role, area_id, rho)
    return NodeState(robot, area, technique, model, cfg or ProtocolConfig())


def propagate(nodes, adjacency, sender, burst, now=1.0, limit=100_000):
    """Lossless hop-by-hop delivery of ``burst`` over a fixed topology.

    Returns the list of (sender, burst) transmissions in order.
    """
    log = []
    queue = deque([(sender, burst)])
    while queue:
        s, b = queue.popleft()
        log.append((s, b))
        if len(log) > limit:
            raise AssertionError("replication did not terminate")
        for j in adjacency[s]:
            out = nodes[j].on_data_received(b, now)
            if out is not None:
                queue.append((j, out))
    return log


@pytest.fixture
def short_timing():
    return TimingConfig(duration=60.0, warmup=10.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# verdict lines collected by the acceptance suite, echoed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
