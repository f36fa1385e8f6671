import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_node, propagate
from survsim.config import ProtocolConfig
from survsim.failure import NeighborRecord
from survsim.protocol import (Burst, DataItem, DataMessage, HelloMessage, Technique,
                              deliver_burst, deliver_packet, first_occurrences)
from survsim.scenario import AreaKind, RobotRole


def item(d, sr=1.0, t=0.0):
    return DataItem(d, 1, sr, t, 0)


def hello_from(node, now):
    return node.emit_hello(now)


def archivist_hello(sender=50, now=1.0):
    return HelloMessage(sender, RobotRole.ARCHIVIST, 40, AreaKind.CONNECTING, 0.0, 0.0,
                        frozenset(), now)


def scout_record(i, rho, area=0, digest=frozenset(), t=0.0):
    return NeighborRecord(i, RobotRole.SCOUT, area, AreaKind.WORKING, rho, rho, digest, t)


def line(n):
    return {i: [j for j in (i - 1, i + 1) if 0 <= j < n] for i in range(n)}


# -- non-adaptive ----------------------------------------------------------

def test_br_broadcasts_once_and_receivers_stay_silent():
    nodes = [make_node(i, "br") for i in range(4)]
    out = nodes[0].on_data_created(item(0), 1.0)
    assert out.count == 1 and out.ttl == 1
    full_mesh = {i: [j for j in range(4) if j != i] for i in range(4)}
    log = propagate(nodes, full_mesh, 0, out)
    assert len(log) == 1
    assert all(n.has(0) for n in nodes)


def test_flood_chain_reaches_five_robots_with_ttl4():
    cfg = ProtocolConfig(ttl_full=4)
    nodes = [make_node(i, "fl", cfg=cfg) for i in range(5)]
    log = propagate(nodes, line(5), 0, nodes[0].on_data_created(item(0), 1.0))
    assert all(n.has(0) for n in nodes)
    assert [b.ttl for _, b in log] == [4, 3, 2, 1]
    short = [make_node(i, "fl", cfg=ProtocolConfig(ttl_full=3)) for i in range(5)]
    propagate(short, line(5), 0, short[0].on_data_created(item(0), 1.0))
    assert not short[4].has(0)


def test_flood_duplicate_is_not_forwarded_twice():
    nodes = [make_node(i, "fl") for i in range(2)]
    b = Burst(np.array([7]), 5)
    assert nodes[1].on_data_received(b, 1.0) is not None
    assert nodes[1].on_data_received(b, 2.0) is None


@pytest.mark.parametrize("n", [3, 6, 11])
def test_flood_terminates_on_a_ring(n):
    nodes = [make_node(i, "fl", cfg=ProtocolConfig(ttl_full=50)) for i in range(n)]
    ring = {i: [(i - 1) % n, (i + 1) % n] for i in range(n)}
    log = propagate(nodes, ring, 0, nodes[0].on_data_created(item(0), 1.0))
    assert len(log) <= n
    assert all(nd.has(0) for nd in nodes)


def test_brcbr_rebroadcasts_backlog_on_archivist_hello():
    node = make_node(0, "brcbr")
    for d in range(4):
        node.on_data_created(item(d), 1.0)
    burst = node.on_hello_received(archivist_hello(), 2.0)
    assert burst.count == 4 and burst.ttl == 1
    assert list(burst.ids) == [0, 1, 2, 3]
    # nothing new since that HELLO
    assert node.on_hello_received(archivist_hello(now=12.0), 12.0) is None


def test_cumulative_backlog_includes_received_items():
    node = make_node(0, "brcbr")
    node.on_data_created(item(3), 1.0)
    node.on_data_received(Burst(np.array([1, 3]), 1), 1.5)
    burst = node.on_hello_received(archivist_hello(), 2.0)
    assert list(burst.ids) == [1, 3]


def test_cumulative_scouts_ignore_scout_hellos():
    node = make_node(0, "brclfl")
    node.on_data_created(item(0), 1.0)
    other = make_node(1, "adlh")
    assert node.on_hello_received(other.emit_hello(1.0), 1.0) is None


def test_brclfl_chain_reaches_archivist_through_two_scouts():
    cfg = ProtocolConfig(ttl_limited=3)
    holder, a, b = (make_node(i, "brclfl", cfg=cfg) for i in range(3))
    arch = make_node(3, "brclfl", role=RobotRole.ARCHIVIST, area_id=40, kind=AreaKind.CONNECTING,
                     cfg=cfg)
    nodes = [holder, a, b, arch]
    holder.on_data_created(item(0), 1.0)
    burst = holder.on_hello_received(hello_from(arch, 2.0), 2.0)
    assert burst.ttl == 3
    log = propagate(nodes, line(4), 0, burst, now=2.0)
    assert arch.has(0)
    assert [s for s, _ in log] == [0, 1, 2]


def test_archivists_store_but_never_forward():
    for tech in Technique:
        arch = make_node(9, tech, role=RobotRole.ARCHIVIST, area_id=40, kind=AreaKind.CONNECTING)
        burst = Burst([5], 10, [0.5] if tech.adaptive else None)
        assert arch.on_data_received(burst, 1.0) is None
        assert arch.has(5)


def test_br_never_beacons():
    assert make_node(0, "br").emit_hello(1.0) is None
    assert make_node(0, "brcbr").emit_hello(1.0) is None
    arch = make_node(0, "brcbr", role=RobotRole.ARCHIVIST, area_id=40, kind=AreaKind.CONNECTING)
    assert arch.emit_hello(1.0) is not None


@settings(max_examples=60)
@given(ids=st.lists(st.integers(0, 40), min_size=1, max_size=15),
       tech=st.sampled_from(list(Technique)))
def test_storage_is_idempotent(ids, tech):
    node = make_node(0, tech)
    surv = [0.0] * len(ids) if tech.adaptive else None
    node.on_data_received(Burst(ids, 2, surv), 1.0)
    once = node.stored_ids().copy()
    node.on_data_received(Burst(ids, 2, surv), 2.0)
    np.testing.assert_array_equal(node.stored_ids(), once)
    assert set(once.tolist()) == set(ids)


def test_first_occurrences():
    assert first_occurrences(np.array([3, 1, 2])) is None
    assert first_occurrences(np.array([3, 1, 3, 2, 1])).tolist() == [0, 1, 3]


# -- batched delivery equals per-node handling ------------------------------

@settings(max_examples=80, deadline=None)
@given(data=st.data(), tech=st.sampled_from(["br", "fl", "brcbr", "brclfl"]),
       n=st.integers(2, 6), distinct=st.booleans())
def test_deliver_burst_matches_per_node_handling(data, tech, n, distinct):
    cap = 24
    roles = data.draw(st.lists(st.sampled_from([RobotRole.SCOUT, RobotRole.ARCHIVIST]),
                               min_size=n, max_size=n))
    if distinct:
        ids = data.draw(st.lists(st.integers(0, cap - 1), min_size=1, max_size=8, unique=True))
    else:
        ids = data.draw(st.lists(st.integers(0, cap - 1), min_size=1, max_size=8))
    ttl = data.draw(st.integers(1, 4))
    pre_stored = data.draw(st.lists(st.lists(st.booleans(), min_size=cap, max_size=cap),
                                    min_size=n, max_size=n))
    pre_relayed = data.draw(st.lists(st.lists(st.booleans(), min_size=cap, max_size=cap),
                                     min_size=n, max_size=n))
    receivers = sorted(data.draw(st.sets(st.integers(0, n - 1), min_size=1)))
    hits = np.array(data.draw(st.lists(st.lists(st.booleans(), min_size=len(ids), max_size=len(ids)),
                                       min_size=len(receivers), max_size=len(receivers))),
                    dtype=bool).reshape(len(receivers), len(ids))

    def build(shared):
        stored = np.array(pre_stored, dtype=bool)
        relayed = np.array(pre_relayed, dtype=bool)
        log = []
        nodes = []
        for i, role in enumerate(roles):
            kind = AreaKind.WORKING if role is RobotRole.SCOUT else AreaKind.CONNECTING
            nd = make_node(i, tech, role=role, kind=kind)
            if shared:
                nd.stored, nd.relayed, nd._own_bits = stored[i], relayed[i], False
            else:
                nd.stored, nd.relayed = stored[i].copy(), relayed[i].copy()
            nd.storage_log = log
            nodes.append(nd)
        return nodes, stored, relayed, log

    burst = Burst(np.array(ids, dtype=np.int64), ttl)
    a_nodes, stored, relayed, a_log = build(True)
    got = deliver_burst(a_nodes, stored, relayed, np.array(receivers, dtype=np.int64), hits, burst,
                        distinct=distinct)

    b_nodes, _, _, b_log = build(False)
    want = []
    for r, j in enumerate(receivers):
        sub = Burst(burst.ids[hits[r]], ttl)
        if not sub.count:
            continue
        out = b_nodes[j].on_data_received(sub, 1.0)
        if out is not None:
            want.append((j, out))

    assert [(j, list(b.ids), b.ttl) for j, b in got] == [(j, list(b.ids), b.ttl) for j, b in want]
    assert a_log == b_log
    for a, b in zip(a_nodes, b_nodes):
        np.testing.assert_array_equal(a.stored, b.stored)
        np.testing.assert_array_equal(a.relayed, b.relayed)
        flat = lambda nd: [int(d) for chunk in nd.since_hello for d in chunk]
        assert flat(a) == flat(b)


@settings(max_examples=60, deadline=None)
@given(n=st.integers(2, 5), data_id=st.integers(0, 9), ttl=st.integers(1, 3), data=st.data())
def test_deliver_packet_matches_deliver_burst(n, data_id, ttl, data):
    receivers = sorted(data.draw(st.sets(st.integers(0, n - 1), min_size=1)))
    pre = np.array(data.draw(st.lists(st.booleans(), min_size=n, max_size=n)))
    outs = []
    for single in (True, False):
        stored = np.zeros((n, 10), dtype=bool)
        stored[:, data_id] = pre
        relayed = stored.copy()
        nodes = [make_node(i, "fl") for i in range(n)]
        if single:
            out = deliver_packet(nodes, stored, relayed, receivers, data_id, ttl)
        else:
            out = deliver_burst(nodes, stored, relayed, np.array(receivers),
                                np.ones((len(receivers), 1), dtype=bool),
                                Burst(np.array([data_id]), ttl))
        outs.append(([(j, list(b.ids), b.ttl) for j, b in out], stored.tolist(), relayed.tolist()))
    assert outs[0] == outs[1]


# -- adaptive ---------------------------------------------------------------

def test_adaptive_three_lacking_scouts():
    node = make_node(0, "adlh", rho=0.5, lam=0.5, model=1)
    for i in (1, 2, 3):
        node.view.update(scout_record(i, 0.5))
    node.scout_send_data(DataMessage(7, 1.0), 0.0)
    (msg,) = node.B
    assert msg.surv_remaining == pytest.approx(0.125 / 3)
    assert msg.surv_remaining == pytest.approx(0.041667, abs=1e-6)


def test_adaptive_reliable_neighbor_sends_with_zero_surv():
    node = make_node(0, "adlh", rho=0.5, lam=0.5)
    node.view.update(NeighborRecord(9, RobotRole.ARCHIVIST, 40, AreaKind.CONNECTING, 0.0, 0.0))
    node.scout_send_data(DataMessage(7, 1.0), 0.0)
    assert node.B == [DataMessage(7, 0.0, 1)]
    assert node.Q == []


def test_adaptive_drop_when_own_reliability_suffices():
    node = make_node(0, "adlh", rho=0.4, lam=0.4, model=1)
    node.scout_send_data(DataMessage(7, 0.5), 0.0)
    assert node.B == [] and node.Q == []


def test_adaptive_without_neighbors_queues():
    node = make_node(0, "adfh", rho=0.1, lam=0.1)
    assert node.on_data_created(item(0), 0.0) is None
    assert [m.data_id for m in node.Q] == [0]
    assert node.has(0)


def test_adaptive_queue_drains_when_a_neighbor_appears():
    node = make_node(0, "adlh", rho=0.1, lam=0.1)
    node.on_data_created(item(0), 0.0)
    other = make_node(1, "adlh", rho=0.1, lam=0.1)
    burst = node.on_hello_received(other.emit_hello(1.0), 1.0)
    assert list(burst.ids) == [0]
    assert burst.surv[0] == pytest.approx(1.0 - 0.9)  # diff over one lacking neighbor
    assert node.Q == []


def test_adaptive_neighbor_holding_the_item_is_not_lacking():
    node = make_node(0, "adlh", rho=0.1, lam=0.1)
    node.view.update(scout_record(1, 0.1, digest=frozenset({0})))
    node.scout_send_data(DataMessage(0, 1.0), 0.0)
    assert node.B == [] and [m.data_id for m in node.Q] == [0]


def test_adaptive_empty_queue_hello_sends_nothing():
    node = make_node(0, "adlh", rho=0.1, lam=0.1)
    assert node.on_hello_received(make_node(1, "adlh").emit_hello(1.0), 1.0) is None


def test_adaptive_zero_surv_is_stored_not_forwarded():
    node = make_node(0, "adlh", rho=0.5, lam=0.5)
    node.view.update(scout_record(1, 0.5))
    assert node.on_data_received(Burst([4], 1, [0.0]), 1.0) is None
    assert node.has(4)


def test_adlh_digest_keeps_last_ten():
    node = make_node(0, "adlh", rho=0.5, lam=0.5)
    for d in range(13):
        node.on_data_created(item(d), float(d))
    assert node.emit_hello(20.0).repo_digest == frozenset(range(3, 13))
    adfh = make_node(0, "adfh", rho=0.5, lam=0.5)
    for d in range(13):
        adfh.on_data_created(item(d), float(d))
    assert adfh.emit_hello(20.0).repo_digest == frozenset(range(13))


@settings(max_examples=60, deadline=None)
@given(rhos=st.lists(st.floats(0.05, 0.95), min_size=2, max_size=8),
       sr=st.floats(0.05, 1.0), fanout=st.integers(1, 3))
def test_surv_strictly_decreases_along_a_chain(rhos, sr, fanout):
    n = len(rhos)
    nodes = [make_node(i, "adlh", rho=r, lam=r, area_id=i) for i, r in enumerate(rhos)]
    # every robot knows its chain neighbors plus ``fanout - 1`` distant ones
    for i, nd in enumerate(nodes):
        for j in line(n)[i] + list(range(100, 100 + fanout - 1)):
            nd.view.update(scout_record(j, rhos[j] if j < n else 0.5, area=j))
    best_in = [{} for _ in range(n)]  # highest surv each robot was handed per item
    best_in[0][0] = sr
    queue = [(0, nodes[0].on_data_created(item(0, sr=sr), 0.0))]
    sent = 0
    while queue:
        s, burst = queue.pop(0)
        if burst is None:
            continue
        sent += 1
        assert sent < 10 * n
        for d, v in zip(burst.ids, burst.surv):
            assert v < best_in[s][d]
        for j in line(n)[s]:
            for d, v in zip(burst.ids, burst.surv):
                best_in[j][d] = max(best_in[j].get(d, 0.0), v)
            queue.append((j, nodes[j].on_data_received(burst, 0.0)))
