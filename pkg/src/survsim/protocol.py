"""Per-robot replication state machines.

Techniques:
    br      broadcast each item once at creation (TTL 1)
    fl      flood each item at creation with TTL ``ttl_full``
    brcbr   br + cumulative single-hop rebroadcast on archivist HELLO
    brclfl  br + cumulative limited flood (TTL ``ttl_limited``) on archivist HELLO
    adlh    failure-adaptive replication, HELLO digest = last 10 item ids
    adfh    failure-adaptive replication, HELLO digest = full repository

Handlers mutate only their own node and return the burst the node broadcasts
in response (zero propagation delay; the engine transmits it). On the air a
burst is a sequence of data ids sharing one TTL, plus per-packet remaining
survivability for the adaptive technique.

Data ids are a mission-wide creation counter, so storage and the flood
seen-set are bitmaps indexed by id. Nodes of one run may share a single
(robots x items) matrix; ``deliver_burst`` then handles all receivers of a
non-adaptive burst at once with the same outcome as calling
``on_data_received`` on each.
"""

from __future__ import annotations

import enum
from collections import OrderedDict
from dataclasses import dataclass
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from .config import ProtocolConfig
from .failure import FailureModel, NeighborhoodView, NeighborRecord, failure_probability
from .scenario import AreaSpec, RobotRole, RobotSpec


class Technique(str, enum.Enum):
    BR = "br"
    FL = "fl"
    BRCBR = "brcbr"
    BRCLFL = "brclfl"
    ADLH = "adlh"
    ADFH = "adfh"

    @property
    def adaptive(self) -> bool:
        return self in (Technique.ADLH, Technique.ADFH)

    @property
    def cumulative(self) -> bool:
        return self in (Technique.BRCBR, Technique.BRCLFL)


class DataItem(NamedTuple):
    data_id: int  # mission-wide sequence number
    data_type: int  # 1, 2, 3
    surv_requirement: float
    created_at: float
    producer: int = -1
    size: int = 500


class DataMessage(NamedTuple):
    data_id: int
    surv_remaining: float
    ttl: int = 1


class Burst(NamedTuple):
    """Packets one robot broadcasts back to back."""
    ids: Sequence[int]  # list or int64 array
    ttl: int = 1
    surv: list[float] | None = None  # adaptive only, parallel to ids

    @property
    def count(self) -> int:
        return len(self.ids)

    def messages(self) -> Iterator[DataMessage]:
        surv = self.surv if self.surv is not None else [None] * len(self.ids)
        for d, s in zip(self.ids, surv):
            yield DataMessage(int(d), s, self.ttl)


@dataclass(frozen=True)
class HelloMessage:
    sender: int
    role: RobotRole
    home_area: int
    area_kind: int
    failure_rate: float
    area_failure_rate: float
    repo_digest: frozenset[int]
    time: float

    def record(self, now: float) -> NeighborRecord:
        return NeighborRecord(self.sender, self.role, self.home_area, self.area_kind,
                              self.failure_rate, self.area_failure_rate,
                              self.repo_digest, now)


def _has_repeats(ids: np.ndarray) -> bool:
    srt = np.sort(ids)
    return bool((srt[1:] == srt[:-1]).any())


def first_occurrences(ids: np.ndarray) -> np.ndarray | None:
    """Positions of the first copy of each id in packet order, or None when
    the ids are already distinct."""
    _, first = np.unique(ids, return_index=True)
    if len(first) == len(ids):
        return None
    first.sort()
    return first


class NodeState:
    """Replication state of one robot.

    ``stored`` is the local storage S as a bitmap over data ids and
    ``relayed`` the flood seen-set; both may be rows of matrices shared by
    the whole run (then they cannot grow past the run's item capacity).
    ``B`` and ``Q`` are the immediate and delayed transmission queues of the
    adaptive technique. ``storage_log``, when given, receives
    ``(robot_id, data_id)`` for every first-time store.
    """

    def __init__(self, robot: RobotSpec, area: AreaSpec, technique: Technique | str,
                 model: FailureModel | int = FailureModel.INDEPENDENT_ROBOT,
                 cfg: ProtocolConfig | None = None, storage_log: list | None = None,
                 stored: np.ndarray | None = None, relayed: np.ndarray | None = None):
        self.cfg = cfg or ProtocolConfig()
        self.robot = robot
        self.robot_id = robot.robot_id
        self.role = robot.role
        self.area = area
        self.technique = Technique(technique)
        self.adaptive = self.technique.adaptive
        self.cumulative = self.technique.cumulative
        self.model = FailureModel(model)
        self._own_bits = stored is None
        self.stored = np.zeros(256, dtype=bool) if stored is None else stored
        self.relayed = np.zeros(len(self.stored), dtype=bool) if relayed is None else relayed
        self.since_hello: list[np.ndarray] = []  # ids new since the last archivist HELLO
        self.last_archivist_hello_at: float | None = None
        self.view = NeighborhoodView(robot.robot_id, robot.role, robot.home_area, area.kind,
                                     robot.failure_rate, area.failure_rate,
                                     staleness=self.cfg.staleness)
        self.B: list[DataMessage] = []
        self.Q: list[DataMessage] = []
        self._q_version = -1
        self.recent: OrderedDict[int, None] = OrderedDict()
        self.repo: set[int] | None = set() if self.technique is Technique.ADFH else None
        self.collector = robot.role.collects
        self.storage_log = storage_log

    # -- storage -----------------------------------------------------------

    def has(self, data_id: int) -> bool:
        return data_id < len(self.stored) and bool(self.stored[data_id])

    def stored_ids(self) -> np.ndarray:
        return np.flatnonzero(self.stored)

    def _ensure(self, data_id: int) -> None:
        if data_id < len(self.stored):
            return
        if not self._own_bits:
            raise IndexError(f"data id {data_id} beyond the shared storage capacity")
        size = max(2 * len(self.stored), data_id + 1)
        for name in ("stored", "relayed"):
            old = getattr(self, name)
            grown = np.zeros(size, dtype=bool)
            grown[:len(old)] = old
            setattr(self, name, grown)

    def store(self, data_id: int) -> bool:
        """Add to S; False when the id was already stored."""
        self._ensure(data_id)
        if self.stored[data_id]:
            return False
        self.stored[data_id] = True
        if self.repo is not None:
            self.repo.add(data_id)
        if self.storage_log is not None:
            self.storage_log.append((self.robot_id, data_id))
        return True

    def _store_many(self, ids: np.ndarray) -> np.ndarray:
        """Store distinct ``ids``; returns the previously absent ones, in order."""
        if len(ids):
            self._ensure(int(ids.max()))
        new = ids[~self.stored[ids]]
        if len(new):
            self.stored[new] = True
            if self.storage_log is not None:
                self.storage_log.extend((self.robot_id, int(d)) for d in new)
        return new

    def _touch(self, data_id: int) -> None:
        recent = self.recent
        if data_id in recent:
            recent.move_to_end(data_id)
        else:
            recent[data_id] = None
            if len(recent) > self.cfg.digest_size:
                recent.popitem(last=False)

    # -- HELLO -------------------------------------------------------------

    @property
    def beacons(self) -> bool:
        if self.adaptive:
            return True
        return self.cumulative and self.collector

    def emit_hello(self, now: float) -> HelloMessage | None:
        if not self.beacons:
            return None
        if self.technique is Technique.ADLH:
            digest = frozenset(self.recent)
        elif self.technique is Technique.ADFH:
            digest = frozenset(self.repo)
        else:
            digest = frozenset()
        return HelloMessage(self.robot_id, self.role, self.area.area_id, self.area.kind,
                            self.robot.failure_rate, self.area.failure_rate, digest, now)

    def on_hello_received(self, hello: HelloMessage, now: float) -> Burst | None:
        self.view.update(hello.record(now))
        if self.collector:
            return None
        if self.adaptive:
            self.scout_check_q(now)
            return self._drain()
        if self.cumulative and hello.role.collects:
            self.last_archivist_hello_at = now
            if not self.since_hello:
                return None
            burst = np.sort(np.concatenate(self.since_hello))  # creation order
            self.since_hello = []
            if self.technique is Technique.BRCBR:
                return Burst(burst, 1)
            self.relayed[burst] = True
            return Burst(burst, self.cfg.ttl_limited)
        return None

    # -- data --------------------------------------------------------------

    def on_data_created(self, item: DataItem, now: float) -> Burst | None:
        d = item.data_id
        self.store(d)
        if self.adaptive:
            self._touch(d)
            self.scout_send_data(DataMessage(d, item.surv_requirement, 1), now)
            return self._drain()
        ids = np.array([d], dtype=np.int64)
        if self.cumulative:
            self.since_hello.append(ids)
        self.relayed[d] = True
        return Burst(ids, self.cfg.ttl_full if self.technique is Technique.FL else 1)

    def on_data_received(self, burst: Burst, now: float) -> Burst | None:
        """Handle the packets of one burst that reached this robot."""
        if self.adaptive:
            ids = [int(d) for d in burst.ids]
            if self.collector:
                for d in ids:
                    self.store(d)
                    self._touch(d)
                return None
            surv = burst.surv if burst.surv is not None else [0.0] * len(ids)
            for d, s in zip(ids, surv):
                self.store(d)
                self._touch(d)
                if s > 0:
                    self.scout_send_data(DataMessage(d, s, 1), now)
                self.scout_check_q(now)
            return self._drain()

        ids = np.asarray(burst.ids, dtype=np.int64)
        first = first_occurrences(ids)
        if first is not None:
            ids = ids[first]
        new = self._store_many(ids)
        if self.collector:
            return None
        if self.cumulative and len(new):
            self.since_hello.append(new)
        ttl = burst.ttl - 1
        if ttl <= 0:
            return None
        fwd = ids[~self.relayed[ids]]
        if not len(fwd):
            return None
        self.relayed[fwd] = True
        return Burst(fwd, ttl)

    # -- adaptive technique ------------------------------------------------

    def scout_send_data(self, msg: DataMessage, now: float) -> None:
        """Decide whether ``msg`` goes out now (B), later (Q) or not at all."""
        data_id = msg.data_id
        lacking = [r for r in self.view.live(now) if data_id not in r.repo_digest]
        fp = failure_probability(self.model, self.view, lacking)
        diff = msg.surv_remaining - (1.0 - fp)
        if lacking:
            surv = diff / len(lacking) if diff > 0 else 0.0
            self.B.append(DataMessage(data_id, surv, 1))
            self._touch(data_id)
        elif diff > 0:
            self.Q.append(msg)

    def scout_check_q(self, now: float) -> None:
        self.view.expire(now)
        if not self.Q or self.view.version == self._q_version:
            # unchanged view: every queued item would be re-queued as is
            return
        pending, self.Q = self.Q, []
        for m in pending:
            if m.surv_remaining > 0:
                self.scout_send_data(m, now)
        self._q_version = self.view.version

    def _drain(self) -> Burst | None:
        if not self.B:
            return None
        out, self.B = self.B, []
        return Burst([m.data_id for m in out], 1, [m.surv_remaining for m in out])


def deliver_burst(nodes: Sequence[NodeState], stored: np.ndarray, relayed: np.ndarray,
                  receivers: np.ndarray, hits: np.ndarray, burst: Burst,
                  distinct: bool = True) -> list[tuple[int, Burst]]:
    """Non-adaptive reception of one burst by many robots at once.

    ``stored``/``relayed`` are the run's shared matrices (rows are the nodes'
    bitmaps) and ``hits[r, c]`` tells whether ``receivers[r]`` got packet
    ``c``. Pass ``distinct=False`` when the burst may repeat an id. Returns
    the relay bursts in receiver order, exactly as ``on_data_received``
    would produce them one receiver at a time.
    """
    ids = np.asarray(burst.ids, dtype=np.int64)
    if not distinct and _has_repeats(ids):
        # each receiver keeps its own first-heard order, so go one at a time
        out = []
        for r, j in enumerate(receivers.tolist()):
            got = ids[hits[r]]
            keep = first_occurrences(got)
            if keep is not None:
                got = got[keep]
            if len(got):
                out += deliver_burst(nodes, stored, relayed, np.array([j], dtype=np.int64),
                                     np.ones((1, len(got)), dtype=bool), Burst(got, burst.ttl))
        return out
    new = hits & ~stored[receivers[:, None], ids]
    r_new, c_new = np.nonzero(new)
    if len(r_new):
        new_ids = ids[c_new]
        stored[receivers[r_new], new_ids] = True
        counts = np.bincount(r_new, minlength=len(receivers)).tolist()
        start = 0
        for j, n in zip(receivers.tolist(), counts):
            if n:
                node = nodes[j]
                if node.storage_log is not None:
                    node.storage_log.extend((j, int(d)) for d in new_ids[start:start + n])
                if node.cumulative and not node.collector:
                    node.since_hello.append(new_ids[start:start + n])
                start += n
    ttl = burst.ttl - 1
    if ttl <= 0:
        return []
    relays = np.fromiter((not nodes[j].collector for j in receivers.tolist()),
                         dtype=bool, count=len(receivers))
    if not relays.any():
        return []
    who = receivers[relays]
    fwd = hits[relays] & ~relayed[who[:, None], ids]
    r_fwd, c_fwd = np.nonzero(fwd)
    if not len(r_fwd):
        return []
    fwd_ids = ids[c_fwd]
    relayed[who[r_fwd], fwd_ids] = True
    counts = np.bincount(r_fwd, minlength=len(who)).tolist()
    out, start = [], 0
    for j, n in zip(who.tolist(), counts):
        if n:
            out.append((j, Burst(fwd_ids[start:start + n], ttl)))
            start += n
    return out


def deliver_packet(nodes: Sequence[NodeState], stored: np.ndarray, relayed: np.ndarray,
                   receivers: Sequence[int], data_id: int, ttl: int) -> list[tuple[int, Burst]]:
    """Single-packet counterpart of ``deliver_burst``."""
    out = []
    for j in receivers:
        node = nodes[j]
        if not stored[j, data_id]:
            stored[j, data_id] = True
            if node.storage_log is not None:
                node.storage_log.append((j, data_id))
            if node.cumulative and not node.collector:
                node.since_hello.append(np.array([data_id], dtype=np.int64))
        if ttl > 1 and not node.collector and not relayed[j, data_id]:
            relayed[j, data_id] = True
            out.append((j, Burst(np.array([data_id], dtype=np.int64), ttl - 1)))
    return out
