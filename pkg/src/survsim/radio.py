"""Shared broadcast medium.

Reception is an independent Bernoulli trial per (packet, receiver) with a
closed-form log-normal shadowing probability, hard-gated at twice the
nominal range. Congestion is a per-node receive-byte budget that refills
every tick.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.special import ndtr

from .config import RadioConfig


class DeadSender(RuntimeError):
    pass


@dataclass(frozen=True)
class Broadcast:
    sender: int
    payload_size: int
    timestamp: float = 0.0

    def __post_init__(self):
        if self.payload_size <= 0:
            raise ValueError("payload_size must be positive")


def reception_probability(distance: float, cfg: RadioConfig) -> float:
    if distance < 0:
        raise ValueError("distance must be non-negative")
    if distance == 0:
        return 1.0
    R = cfg.tx_range
    if distance > 2 * R:
        return 0.0
    z = 10.0 * cfg.path_loss_exponent * math.log10(R / distance) / cfg.shadowing_sigma_db
    return float(ndtr(z))


def reception_matrix(dist: np.ndarray, cfg: RadioConfig) -> np.ndarray:
    """Vectorised reception_probability over an array of distances."""
    dist = np.asarray(dist, dtype=float)
    out = np.zeros_like(dist)
    R = cfg.tx_range
    near = (dist > 0) & (dist <= 2 * R)
    if near.any():
        z = (10.0 * cfg.path_loss_exponent / cfg.shadowing_sigma_db) * np.log10(R / dist[near])
        out[near] = ndtr(z)
    out[dist == 0] = 1.0
    return out


class Medium:
    """Per-tick view of who can hear whom, plus receive budgets.

    ``update`` must be called once per tick with current positions and the
    alive mask; it refills budgets. Receptions consume uniforms from ``rng``
    in a fixed order (transmission order, then receiver id, then packet).
    """

    _BLOCK = 1 << 16

    def __init__(self, cfg: RadioConfig, rng: np.random.Generator, tick: float = 1.0):
        self.cfg = cfg
        self.rng = rng
        self.capacity = cfg.node_budget(tick)
        self.transmissions = 0
        self.receptions = 0
        self.drops = 0
        self._alive: np.ndarray | None = None
        self._budget: list[float] = []
        self._offsets: list[int] = []
        self._cand_ids: list[int] = []
        self._cand_p: list[float] = []
        self._buf = np.empty(0)
        self._pos = 0

    def update(self, pos: np.ndarray, alive: np.ndarray) -> None:
        n = len(pos)
        self._alive = np.asarray(alive, dtype=bool)
        self._budget = [self.capacity] * n
        dx = np.subtract.outer(pos[:, 0], pos[:, 0])
        dy = np.subtract.outer(pos[:, 1], pos[:, 1])
        d2 = dx * dx + dy * dy
        ok = d2 <= (2 * self.cfg.tx_range) ** 2
        ok &= self._alive[None, :]
        np.fill_diagonal(ok, False)
        rows, cols = np.nonzero(ok)
        p = reception_matrix(np.sqrt(d2[rows, cols]), self.cfg)
        keep = p > 0
        rows, cols, p = rows[keep], cols[keep], p[keep]
        self._offsets = np.searchsorted(rows, np.arange(n + 1)).tolist()
        self._cand_ids = cols.tolist()
        self._cand_p = p.tolist()

    def candidates(self, sender: int) -> tuple[list[int], list[float]]:
        """(receiver ids, reception probabilities) of alive robots within 2R."""
        a, b = self._offsets[sender], self._offsets[sender + 1]
        return self._cand_ids[a:b], self._cand_p[a:b]

    def _refill(self, k: int) -> None:
        rest = self._buf[self._pos:]
        self._buf = np.concatenate([rest, self.rng.random(max(self._BLOCK, k))])
        self._pos = 0

    def _uniforms(self, k: int) -> np.ndarray:
        if self._pos + k > len(self._buf):
            self._refill(k)
        out = self._buf[self._pos:self._pos + k]
        self._pos += k
        return out

    def transmit(self, sender: int, packets: Sequence, size: int) -> list[tuple[int, Sequence]]:
        """Broadcast ``packets`` (each ``size`` bytes) back to back from ``sender``.

        Returns ``(receiver, packets received in order)`` in ascending
        receiver order; receivers that got nothing are omitted. The packet
        sequence itself is returned when everything arrived.
        """
        count = len(packets)
        if count != 1:
            receivers, hits = self.transmit_hits(sender, count, size)
            out = []
            for j, row in zip(receivers.tolist(), hits):
                if row.all():
                    out.append((j, packets))
                else:
                    out.append((j, [packets[c] for c in np.flatnonzero(row).tolist()]))
            return out
        if not self._alive[sender]:
            raise DeadSender(sender)
        self.transmissions += 1
        ids, probs = self.candidates(sender)
        budget = self._budget
        out = []
        for j, p, u in zip(ids, probs, self._uniforms(len(ids)).tolist()):
            if u < p:
                if budget[j] >= size:
                    budget[j] -= size
                    self.receptions += 1
                    out.append((j, packets))
                else:
                    self.drops += 1
        return out

    def transmit_hits(self, sender: int, count: int, size: int) -> tuple[np.ndarray, np.ndarray]:
        """Burst of ``count`` packets; returns (receivers, hits) where
        ``hits[r, c]`` says receivers[r] got packet c. Only receivers with at
        least one packet are listed."""
        if not self._alive[sender]:
            raise DeadSender(sender)
        self.transmissions += count
        ids, probs = self.candidates(sender)
        if not ids or not count:
            return np.empty(0, dtype=np.int64), np.empty((0, count), dtype=bool)
        budget = self._budget
        k = len(ids)
        hits = self._uniforms(count * k).reshape(k, count) < np.asarray(probs)[:, None]
        got = hits.sum(axis=1).tolist()
        room = [n if n * size <= budget[j] else int(budget[j] // size)
                for j, n in zip(ids, got)]
        if room != got:
            hits &= np.cumsum(hits, axis=1) <= np.asarray(room)[:, None]
            self.drops += sum(got) - sum(room)
        for j, n in zip(ids, room):
            if n:
                budget[j] -= n * size
        self.receptions += sum(room)
        keep = np.asarray(room) > 0
        return np.asarray(ids, dtype=np.int64)[keep], hits[keep]


def deliver(broadcast: Broadcast, positions: Mapping[int, tuple[float, float]],
            cfg: RadioConfig, congestion_state: dict[int, float] | None,
            rng: np.random.Generator, alive: set[int] | None = None) -> set[int]:
    """Receivers of one broadcast.

    ``congestion_state`` maps robot id -> remaining bytes this tick and is
    decremented in place (missing entries start at the full budget).
    """
    ids = sorted(positions)
    index = {r: k for k, r in enumerate(ids)}
    alive = set(ids) if alive is None else alive
    if broadcast.sender not in alive:
        raise DeadSender(broadcast.sender)
    pos = np.array([positions[r] for r in ids], dtype=float).reshape(-1, 2)
    medium = Medium(cfg, rng)
    medium.update(pos, np.array([r in alive for r in ids]))
    if congestion_state is not None:
        for r in ids:
            medium._budget[index[r]] = congestion_state.get(r, medium.capacity)
    got = medium.transmit(index[broadcast.sender], [broadcast], broadcast.payload_size)
    if congestion_state is not None:
        for r in ids:
            congestion_state[r] = float(medium._budget[index[r]])
    return {ids[j] for j, _ in got}
