"""End-of-mission survivability and replication metrics."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .engine import RunHistory


@dataclass(frozen=True)
class MetricsReport:
    sa: dict[int, float]
    rf: dict[int, float]
    cd: float  # percentage points
    crf: float
    produced: dict[int, int]
    surviving_distinct: dict[int, int]
    surviving_copies: dict[int, int]
    empty_types: tuple[int, ...] = field(default=())


def compute_report(history: RunHistory, sr: Mapping[int, float] | tuple[float, ...]) -> MetricsReport:
    """SA/RF per data type plus the cumulative deviation and replication factor.

    A type with nothing produced is flagged in ``empty_types`` and scored as
    fully survived (SA = 1, RF = 0), so an idle run has CD = sum(1 - SR).
    """
    if not isinstance(sr, Mapping):
        sr = {s: v for s, v in enumerate(sr, start=1)}
    types = np.asarray(history.item_types)
    stores = [np.asarray(ids, dtype=np.int64) for ids in history.census.values()]
    held = np.concatenate(stores) if stores else np.empty(0, dtype=np.int64)
    n_bins = max(sr) + 1
    copies_by = np.bincount(types[held], minlength=n_bins)
    distinct_by = np.bincount(types[np.unique(held)], minlength=n_bins)
    sa, rf, distinct, copies = {}, {}, {}, {}
    empty = []
    for s in sr:
        copies[s] = int(copies_by[s])
        distinct[s] = int(distinct_by[s])
        n = history.produced.get(s, 0)
        if n == 0:
            empty.append(s)
            sa[s], rf[s] = 1.0, 0.0
        else:
            sa[s] = distinct[s] / n
            rf[s] = copies[s] / n
    cd = 100.0 * sum(abs(sa[s] - sr[s]) for s in sr)
    crf = sum(rf.values())
    return MetricsReport(sa, rf, cd, crf, dict(history.produced), distinct, copies, tuple(empty))
