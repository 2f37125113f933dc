import json
import random
from fractions import Fraction
from pathlib import Path

import pytest

from hvcviz.clock import CausalRelation
from hvcviz.fixtures import (
    FAILURE_REASON,
    chain_records,
    failure_records,
    inversion_records,
)
from hvcviz.order import (
    CorruptTraceError,
    OrderedTrace,
    alg3_key,
    build_swimlane,
    detect_violations,
    failure_report,
    isolate,
    order_traces,
    output_key,
    send_key,
    to_tsv,
)
from hvcviz.sim import SimConfig, dag_reachable, run_simulation
from hvcviz.tracelog import read_log, record_from_clocks, serialize_record

GOLDEN = Path(__file__).parent / "golden"


def small_trace(**kw):
    base = dict(n_processes=3, seed=5, duration=250, epoch_interval=10,
                epsilon=5, latency_min=1, latency_max=6, initial_skew_max=10,
                local_event_rate=Fraction(1, 8), message_rate=Fraction(1, 8))
    base.update(kw)
    return run_simulation(SimConfig(**base))


# -- fixture values, frozen from hand execution ---------------------------

def test_inversion_fixture_is_the_documented_shape():
    first, second = inversion_records()
    assert (first.sender_max_epoch, dict(first.sender_counters)) == (3, {0: 9})
    assert dict(first.output_offsets) == {0: 0}
    assert dict(first.output_counters) == {0: 9, 1: 1}
    assert send_key(second) == (3, 2)
    assert dict(second.output_counters) == {0: 9, 1: 2, 2: 1}


def test_chain_fixture_clock_values():
    r = chain_records()
    assert [x.event_type for x in r] == [
        "local", "local", "send_recv", "send_recv", "local", "send_recv"]
    assert [send_key(x) for x in r] == [
        (3, 8), (3, 9), (3, 10), (3, 2), (3, 2), (3, 3)]
    assert [output_key(x) for x in r] == [
        (3, 8), (3, 9), (3, 1), (3, 1), (3, 2), (3, 11)]
    last = r[5]
    assert dict(last.output_offsets) == {1: 0, 2: 0}
    assert dict(last.output_counters) == {0: 11, 1: 2, 2: 3}


# -- sort keys -------------------------------------------------------------

def test_send_key_reads_sender_components():
    r = chain_records()[2]
    assert send_key(r) == (3, 10)
    assert alg3_key(r) == ((3, 10), (3, 1), 0, 1, 2)


def test_send_key_defaults_missing_counter_to_zero():
    from hvcviz.clock import new_clock
    # a fresh sender carries no counters at all
    a = new_clock(0, 10, 5)
    b = new_clock(1, 10, 5).merge(a, 6)
    rec = record_from_clocks(0, "send_recv", a, b)
    assert send_key(rec) == (0, 0)


def test_sort_keys_are_lexicographic_not_summed():
    # scalar sums would put (6,1)=7 before (5,3)=8; lexicographic does not
    assert (5, 3) < (6, 1)


# -- ordering --------------------------------------------------------------

def test_alg3_inverts_the_counter_inversion_fixture():
    ot = order_traces(inversion_records(), "alg3")
    assert [r.seq for r in ot.records] == [1, 0]
    assert ot.mode == "alg3"
    assert ot.position == {1: 0, 0: 1}


def test_alg3_yields_exactly_one_violation_on_the_inversion_fixture():
    ot = order_traces(inversion_records(), "alg3")
    violations = detect_violations(ot)
    assert len(violations) == 1
    seq_a, seq_b, why = violations[0]
    assert (seq_a, seq_b) == (1, 0)
    assert "record 0" in why and "record 1" in why


def test_causal_mode_repairs_the_inversion():
    ot = order_traces(inversion_records(), "causal")
    assert [r.seq for r in ot.records] == [0, 1]
    assert detect_violations(ot) == []


def test_causal_mode_is_a_linear_extension_of_compare():
    a, b = inversion_records()
    assert a.output_clock().compare(b.output_clock()) is CausalRelation.BEFORE
    ot = order_traces([b, a], "causal")
    assert ot.position[a.seq] < ot.position[b.seq]


def test_chain_alg3_matches_golden_tsv():
    ot = order_traces(chain_records(), "alg3")
    assert to_tsv(ot) == (GOLDEN / "chain_alg3.tsv").read_text()


def test_chain_golden_survives_a_serialization_round_trip():
    lines = [serialize_record(r) for r in chain_records()]
    records, issues = read_log(lines)
    assert issues == []
    assert to_tsv(order_traces(records, "alg3")) == (GOLDEN / "chain_alg3.tsv").read_text()


def test_chain_causal_order_recovers_the_log_order():
    ot = order_traces(chain_records(), "causal")
    assert [r.seq for r in ot.records] == [0, 1, 2, 3, 4, 5]
    assert detect_violations(ot) == []


def test_order_is_a_permutation_and_input_order_independent():
    records = chain_records() + []
    rng = random.Random(0)
    for mode in ("alg3", "causal"):
        want = [r.seq for r in order_traces(records, mode).records]
        for _ in range(5):
            shuffled = records[:]
            rng.shuffle(shuffled)
            got = order_traces(shuffled, mode)
            assert [r.seq for r in got.records] == want
            assert sorted(r.seq for r in got.records) == sorted(r.seq for r in records)


def test_order_rejects_mixed_configurations():
    a = chain_records()[0]
    clock = a.output_clock()
    other = record_from_clocks(9, "local",
                               type(clock)(0, 20, 5), type(clock)(0, 20, 5))
    with pytest.raises(CorruptTraceError, match="epoch_interval"):
        order_traces([a, other])


def test_order_handles_empty_and_single_inputs():
    for mode in ("alg3", "causal"):
        assert order_traces([], mode).records == ()
        one = order_traces(chain_records()[:1], mode)
        assert [r.seq for r in one.records] == [0]
        assert detect_violations(one) == []


def test_order_rejects_unknown_mode():
    with pytest.raises(ValueError, match="mode"):
        order_traces([], "chronological")


def test_causal_mode_has_zero_violations_on_simulated_traces():
    for seed in (1, 2):
        result = small_trace(seed=seed,
                             message_failure_probability=Fraction(1, 5))
        ot = order_traces(result.records, "causal")
        assert detect_violations(ot) == []
        assert sorted(r.seq for r in ot.records) == [r.seq for r in result.records]


# -- swimlane model --------------------------------------------------------

def test_swimlane_counts_lanes_and_arrows():
    ot = order_traces(failure_records(), "causal")
    m = build_swimlane(ot)
    assert [l.pid for l in m.lanes] == [0, 1, 2]
    assert len(m.arrows) == 8
    broken = [a for a in m.arrows if a.broken]
    assert len(broken) == 3
    assert all(a.from_lane == 2 or a.to_lane == 2 for a in m.arrows)
    assert all(a.from_lane == 2 for a in broken)
    assert all(a.failure_reason == FAILURE_REASON for a in broken)


def test_swimlane_empty_trace_gives_empty_model():
    m = build_swimlane(order_traces([], "causal"))
    assert m.lanes == () and m.nodes == () and m.arrows == ()


def test_swimlane_send_recv_yields_two_nodes_and_one_arrow():
    ot = order_traces(chain_records(), "causal")
    m = build_swimlane(ot)
    sends = {n.seq for n in m.nodes if n.role == "send"}
    recvs = {n.seq for n in m.nodes if n.role == "recv"}
    assert sends == recvs == {a.seq for a in m.arrows} == {2, 3, 5}
    for a in m.arrows:
        send = next(n for n in m.nodes if n.seq == a.seq and n.role == "send")
        recv = next(n for n in m.nodes if n.seq == a.seq and n.role == "recv")
        assert (a.from_lane, a.to_lane) == (send.lane, recv.lane)
        assert (a.from_x, a.to_x) == (send.x, recv.x)


def test_swimlane_lane_positions_strictly_increase():
    # epoch x is state-based: a delayed delivery places its send endpoint
    # left of newer lane activity, so only the lane's own state sequence
    # (local/recv nodes) is monotone there; ordinal x is monotone outright
    result = small_trace(seed=7, duration=400)
    ot = order_traces(result.records, "causal")
    for time_mode, roles in (("ordinal", {"send", "recv", "local", "poll"}),
                             ("epoch", {"recv", "local", "poll"})):
        m = build_swimlane(ot, time_mode)
        per_lane = {}
        for n in m.nodes:
            if n.role in roles:
                per_lane.setdefault(n.lane, []).append(n.x)
        for xs in per_lane.values():
            assert all(a < b for a, b in zip(xs, xs[1:]))


def test_swimlane_epoch_positions_interpolate_counters():
    # max counter in epoch 3 across the chain is 11, so slots are k/12
    ot = order_traces(chain_records(), "causal")
    doc = build_swimlane(ot, "epoch").to_json_dict()
    assert [n["x"] for n in doc["nodes"]] == [
        "3.666666", "3.75", "3.833333", "3.083333",
        "3.166666", "3.083333", "3.166666", "3.25", "3.916666"]


def test_swimlane_ordinal_positions_are_integers_in_json():
    ot = order_traces(chain_records(), "causal")
    doc = build_swimlane(ot, "ordinal").to_json_dict()
    assert all(isinstance(n["x"], int) for n in doc["nodes"])
    json.dumps(doc)  # must be serializable as-is


def test_swimlane_crash_becomes_a_lane_marker_not_a_node():
    records = failure_records()
    last = records[-1].sender_clock()
    records.append(record_from_clocks(8, "crash", last, last, physical_time=60,
                                      broken=True, failure_reason="missed 3 polls"))
    m = build_swimlane(order_traces(records, "causal"))
    lane = next(l for l in m.lanes if l.pid == 2)
    assert lane.crashed and lane.crash_x is not None
    assert [l.crashed for l in m.lanes if l.pid != 2] == [False, False]
    assert all(n.seq != 8 for n in m.nodes)
    assert all(a.seq != 8 for a in m.arrows)


def test_swimlane_rejects_unknown_time_mode():
    with pytest.raises(ValueError, match="time_mode"):
        build_swimlane(order_traces([], "causal"), "wallclock")


# -- isolation -------------------------------------------------------------

def test_isolate_depth_zero_is_just_the_record():
    ot = order_traces(chain_records(), "causal")
    message = isolate(ot, 3, 0)
    assert {n.seq for n in message.nodes} == {3}
    assert len(message.arrows) == 1
    local = isolate(ot, 4, 0)
    assert {n.seq for n in local.nodes} == {4}
    assert local.arrows == ()


def test_isolate_one_hop_selects_both_neighbors():
    ot = order_traces(chain_records(), "causal")
    m = isolate(ot, 3, 1)
    assert {n.seq for n in m.nodes} == {2, 3, 4}


def test_isolate_errors():
    ot = order_traces(chain_records(), "causal")
    with pytest.raises(KeyError, match="999"):
        isolate(ot, 999, 1)
    with pytest.raises(ValueError, match="depth"):
        isolate(ot, 3, -1)


def test_isolate_keeps_nearby_failures():
    ot = order_traces(failure_records(), "causal")
    selected = {n.seq for n in isolate(ot, 5, 2).nodes}
    assert {3, 5, 7} <= selected


def test_isolate_full_depth_covers_the_comparison_cone():
    # at covering epsilon the clock order equals DAG reachability, so the
    # unbounded neighborhood must contain exactly the related records
    result = small_trace(seed=11, epsilon=600, duration=200)
    records = result.records
    ot = order_traces(records, "causal")
    target = records[len(records) // 2]
    selected = {n.seq for n in isolate(ot, target.seq, len(records)).nodes}
    clocks = {r.seq: r.output_clock() for r in records}
    cone = {s for s, c in clocks.items()
            if c.compare(clocks[target.seq]) is not CausalRelation.CONCURRENT}
    assert cone <= selected
    # creation order puts the recv event after its send, so the merge-side
    # event wins the duplicate record_seq
    by_seq = {e.record_seq: e for e in result.dag.events
              if e.record_seq is not None}
    t = by_seq[target.seq]
    for s in cone - {target.seq}:
        e = by_seq[s]
        assert (dag_reachable(result.dag, e.id, t.id)
                or dag_reachable(result.dag, t.id, e.id))


# -- failure reports -------------------------------------------------------

def test_failure_report_groups_by_transmitting_process():
    ot = order_traces(failure_records(), "causal")
    report = failure_report(ot)
    assert set(report.processes) == {2}
    entries = report.processes[2]
    assert [e.seq for e in entries] == [3, 5, 7]
    assert all(e.failure_reason == FAILURE_REASON for e in entries)
    assert [e.position for e in entries] == [ot.position[s] for s in (3, 5, 7)]
    assert report.totals == {FAILURE_REASON: 3}
    assert report.total == 3


def test_failure_report_empty_when_nothing_broke():
    report = failure_report(order_traces(chain_records(), "causal"))
    assert report.processes == {} and report.total == 0


def test_failure_report_includes_crash_records():
    from hvcviz.clock import new_clock
    c = new_clock(4, 10, 5).advance(33)
    crash = record_from_clocks(0, "crash", c, c, broken=True,
                               failure_reason="missed 3 polls")
    report = failure_report(order_traces([crash], "causal"))
    assert [e.failure_reason for e in report.processes[4]] == ["missed 3 polls"]


def test_failure_report_total_matches_broken_count_on_sim_traces():
    result = small_trace(seed=3, message_failure_probability=Fraction(1, 4))
    broken = sum(1 for r in result.records if r.broken)
    report = failure_report(order_traces(result.records, "causal"))
    assert report.total == broken > 0


def test_failure_report_json_shape():
    doc = failure_report(order_traces(failure_records(), "causal")).to_json_dict()
    assert [p["pid"] for p in doc["processes"]] == [2]
    assert doc["totals"] == {FAILURE_REASON: 3}
    assert doc["total"] == 3
    json.dumps(doc)
