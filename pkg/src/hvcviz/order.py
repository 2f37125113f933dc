"""Causal ordering of trace records, swimlane models, and failure reports.

Two orderings are offered. The ``alg3`` mode realizes the classic two-key
sort (sender epoch/counter, then output epoch/counter, then stable
tiebreaks). It is kept because its gaps are instructive: same-epoch counters
of different processes are not comparable, so the sort can invert genuinely
causal pairs. The ``causal`` mode topologically sorts the partial order
induced by clock comparison, with the alg3 key as the ready-set priority, so
its output is always a linear extension of happens-before.

Everything here is pure post-processing over immutable records.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

from hvcviz.clock import CausalRelation, HybridVectorClock
from hvcviz.tracelog import TraceRecord

ORDER_MODES = ("causal", "alg3")
TIME_MODES = ("ordinal", "epoch")


class CorruptTraceError(ValueError):
    """Records that cannot form one coherent trace."""


def send_key(r: TraceRecord) -> tuple[int, int]:
    """Sender-side sort key: (epoch, sender's own counter).

    The sender's own offset is zero by definition, so its clock collapses to
    these two components. Kept lexicographic; summing epoch and counter into
    one scalar would conflate units.
    """
    return (r.sender_max_epoch, r.sender_counters.get(r.from_node, 0))


def output_key(r: TraceRecord) -> tuple[int, int]:
    """Receiver-side analogue of send_key, used as the secondary key."""
    return (r.output_max_epoch, r.output_counters.get(r.to_node, 0))


def alg3_key(r: TraceRecord) -> tuple:
    return (send_key(r), output_key(r), r.from_node, r.to_node, r.seq)


@dataclass(frozen=True)
class OrderedTrace:
    records: tuple[TraceRecord, ...]
    mode: str
    position: dict[int, int] = field(compare=False)  # seq -> index

    def record(self, seq: int) -> TraceRecord:
        return self.records[self.position[seq]]


def _check_one_config(records: Sequence[TraceRecord]) -> None:
    configs = {(r.epoch_interval, r.output_epsilon) for r in records}
    if len(configs) > 1:
        raise CorruptTraceError(
            f"records mix epoch_interval/epsilon configurations: {sorted(configs)}")


def _before_matrix(records: Sequence[TraceRecord]) -> list[list[int]]:
    """Successor lists of the strict partial order over output clocks."""
    clocks = [r.output_clock() for r in records]
    succ: list[list[int]] = [[] for _ in records]
    for i, a in enumerate(clocks):
        for j in range(i + 1, len(clocks)):
            rel = a.compare(clocks[j])
            if rel is CausalRelation.BEFORE:
                succ[i].append(j)
            elif rel is CausalRelation.AFTER:
                succ[j].append(i)
    return succ


def order_traces(records: Sequence[TraceRecord], mode: str = "causal") -> OrderedTrace:
    """Order records; output is always a permutation of the input."""
    if mode not in ORDER_MODES:
        raise ValueError(f"mode must be one of {ORDER_MODES}, got {mode!r}")
    records = list(records)
    _check_one_config(records)
    if mode == "alg3":
        ordered = sorted(records, key=alg3_key)
    else:
        succ = _before_matrix(records)
        indegree = [0] * len(records)
        for edges in succ:
            for j in edges:
                indegree[j] += 1
        ready = [(alg3_key(records[i]), i) for i in range(len(records))
                 if indegree[i] == 0]
        heapq.heapify(ready)
        ordered = []
        while ready:
            _, i = heapq.heappop(ready)
            ordered.append(records[i])
            for j in succ[i]:
                indegree[j] -= 1
                if indegree[j] == 0:
                    heapq.heappush(ready, (alg3_key(records[j]), j))
        if len(ordered) != len(records):
            # unreachable with valid clocks: compare is a strict partial order
            left = [i for i in range(len(records)) if indegree[i] > 0]
            raise CorruptTraceError(
                f"comparison cycle among records "
                f"{records[left[0]].seq} and {records[left[1 % len(left)]].seq}")
    return OrderedTrace(tuple(ordered), mode,
                        {r.seq: i for i, r in enumerate(ordered)})


def detect_violations(ot: OrderedTrace) -> list[tuple[int, int, str]]:
    """Ordered pairs whose realized order contradicts the clocks."""
    out = []
    clocks = [r.output_clock() for r in ot.records]
    for i in range(len(ot.records)):
        for j in range(i + 1, len(ot.records)):
            if clocks[j].compare(clocks[i]) is CausalRelation.BEFORE:
                a, b = ot.records[i], ot.records[j]
                out.append((a.seq, b.seq,
                            f"record {b.seq} causally precedes record {a.seq} "
                            f"but is ordered after it"))
    return out


def to_tsv(ot: OrderedTrace) -> str:
    """Tab-separated view of an ordered trace, one record per row.

    Stable column set; golden-file diffs depend on it staying put.
    """
    header = ("seq", "event_type", "from_node", "to_node", "send_epoch",
              "send_counter", "output_epoch", "output_counter", "broken")
    lines = ["\t".join(header)]
    for r in ot.records:
        s_epoch, s_counter = send_key(r)
        o_epoch, o_counter = output_key(r)
        lines.append("\t".join(map(str, (
            r.seq, r.event_type, r.from_node, r.to_node,
            s_epoch, s_counter, o_epoch, o_counter, int(r.broken)))))
    return "\n".join(lines) + "\n"


# -- swimlane model -------------------------------------------------------

@dataclass(frozen=True)
class Lane:
    pid: int
    crashed: bool = False
    crash_x: Union[int, Fraction, None] = None
    records: int = 0


@dataclass(frozen=True)
class Node:
    seq: int
    lane: int
    role: str  # send | recv | local | poll
    x: Union[int, Fraction]
    epoch: int
    counter: int


@dataclass(frozen=True)
class Arrow:
    seq: int
    from_lane: int
    to_lane: int
    from_x: Union[int, Fraction]
    to_x: Union[int, Fraction]
    broken: bool = False
    failure_reason: Optional[str] = None


@dataclass(frozen=True)
class SwimlaneModel:
    time_mode: str
    lanes: tuple[Lane, ...]
    nodes: tuple[Node, ...]
    arrows: tuple[Arrow, ...]

    def to_json_dict(self) -> dict:
        return {
            "time_mode": self.time_mode,
            "lanes": [{"pid": l.pid, "crashed": l.crashed,
                       "crash_x": _pos(l.crash_x), "records": l.records}
                      for l in self.lanes],
            "nodes": [{"seq": n.seq, "lane": n.lane, "role": n.role,
                       "x": _pos(n.x), "epoch": n.epoch, "counter": n.counter}
                      for n in self.nodes],
            "arrows": [{"seq": a.seq, "from_lane": a.from_lane,
                        "to_lane": a.to_lane, "from_x": _pos(a.from_x),
                        "to_x": _pos(a.to_x), "broken": a.broken,
                        "failure_reason": a.failure_reason}
                       for a in self.arrows],
        }


def _pos(x: Union[int, Fraction, None]) -> Union[int, str, None]:
    """Positions: integers stay integers, rationals become decimal strings."""
    if x is None or isinstance(x, int):
        return x
    scaled = (x.numerator * 10**6) // x.denominator
    whole, frac = divmod(scaled, 10**6)
    if frac == 0:
        return str(whole)
    return f"{whole}.{frac:06d}".rstrip("0")


def _endpoints(r: TraceRecord) -> list[tuple[str, int, int, int]]:
    """(role, lane, epoch, counter) per drawn endpoint of one record."""
    if r.event_type == "send_recv":
        return [("send", r.from_node, r.sender_max_epoch,
                 r.sender_counters.get(r.from_node, 0)),
                ("recv", r.to_node, r.output_max_epoch,
                 r.output_counters.get(r.to_node, 0))]
    if r.event_type == "crash":
        return []
    return [(r.event_type, r.to_node, r.output_max_epoch,
             r.output_counters.get(r.to_node, 0))]


def build_swimlane(ot: OrderedTrace, time_mode: str = "ordinal") -> SwimlaneModel:
    """One lane per observed process; one node per record endpoint.

    Ordinal x is the record's position in the order. Epoch x interpolates
    the counter within its epoch (display only; pixel distance carries no
    causal meaning). Crash records become lane markers, not nodes.
    """
    if time_mode not in TIME_MODES:
        raise ValueError(f"time_mode must be one of {TIME_MODES}, got {time_mode!r}")
    pids = sorted({p for r in ot.records for p in (r.from_node, r.to_node)})
    lane_records = {p: 0 for p in pids}
    crash_at: dict[int, Union[int, Fraction]] = {}

    if time_mode == "epoch":
        max_counter: dict[int, int] = {}
        for r in ot.records:
            for _role, _lane, epoch, counter in _endpoints(r):
                max_counter[epoch] = max(max_counter.get(epoch, 0), counter)

        def x_of(position: int, epoch: int, counter: int) -> Union[int, Fraction]:
            return epoch + Fraction(counter, 1 + max_counter.get(epoch, 0))
    else:
        def x_of(position: int, epoch: int, counter: int) -> Union[int, Fraction]:
            return position

    nodes: list[Node] = []
    arrows: list[Arrow] = []
    for position, r in enumerate(ot.records):
        lane_records[r.from_node] += 1
        if r.to_node != r.from_node:
            lane_records[r.to_node] += 1
        if r.event_type == "crash":
            crash_at[r.to_node] = x_of(position, r.output_max_epoch,
                                       r.output_counters.get(r.to_node, 0))
            continue
        ends = [Node(r.seq, lane, role, x_of(position, epoch, counter), epoch, counter)
                for role, lane, epoch, counter in _endpoints(r)]
        nodes.extend(ends)
        if r.event_type == "send_recv":
            arrows.append(Arrow(r.seq, r.from_node, r.to_node,
                                ends[0].x, ends[1].x, r.broken, r.failure_reason))

    lanes = tuple(Lane(p, p in crash_at, crash_at.get(p), lane_records[p])
                  for p in pids)
    return SwimlaneModel(time_mode, lanes, tuple(nodes), tuple(arrows))


# -- isolation ------------------------------------------------------------

def _covering_edges(records: Sequence[TraceRecord]) -> list[set[int]]:
    """Neighbor sets of the covering relation (transitive reduction).

    A hop in isolation is one covering pair: causally ordered with nothing
    recorded in between.
    """
    n = len(records)
    succ = _before_matrix(records)
    # comparison is transitive, so succ already holds full descendant sets
    reach = [0] * n
    for i in range(n):
        bits = 0
        for j in succ[i]:
            bits |= 1 << j
        reach[i] = bits

    neighbors: list[set[int]] = [set() for _ in range(n)]
    for i in range(n):
        shadow = 0
        for j in succ[i]:
            shadow |= reach[j]
        for j in succ[i]:
            if not (shadow >> j) & 1:
                neighbors[i].add(j)
                neighbors[j].add(i)
    return neighbors


def isolate(ot: OrderedTrace, seq: int, depth: int) -> SwimlaneModel:
    """Sub-model around one record: its neighborhood within `depth` hops.

    depth counts covering-pair hops in either causal direction; 0 selects
    just the record. Broken records inside the neighborhood are never
    filtered out.
    """
    if seq not in ot.position:
        raise KeyError(f"unknown record seq {seq}")
    if depth < 0:
        raise ValueError("depth must be non-negative")
    neighbors = _covering_edges(ot.records)
    start = ot.position[seq]
    selected = {start}
    frontier = {start}
    for _ in range(depth):
        frontier = {j for i in frontier for j in neighbors[i]} - selected
        if not frontier:
            break
        selected |= frontier
    keep = [r for i, r in enumerate(ot.records) if i in selected]
    sub = OrderedTrace(tuple(keep), ot.mode, {r.seq: i for i, r in enumerate(keep)})
    return build_swimlane(sub, "ordinal")


# -- failure report -------------------------------------------------------

@dataclass(frozen=True)
class FailureEntry:
    seq: int
    event_type: str
    failure_reason: str
    position: int


@dataclass(frozen=True)
class FailureReport:
    processes: dict[int, tuple[FailureEntry, ...]]
    totals: dict[str, int]
    total: int

    def to_json_dict(self) -> dict:
        return {
            "processes": [
                {"pid": pid, "failures": [
                    {"seq": e.seq, "event_type": e.event_type,
                     "failure_reason": e.failure_reason, "position": e.position}
                    for e in entries]}
                for pid, entries in sorted(self.processes.items())],
            "totals": dict(sorted(self.totals.items())),
            "total": self.total,
        }


def failure_report(ot: OrderedTrace) -> FailureReport:
    """Broken records grouped by subject process (the transmitter)."""
    groups: dict[int, list[FailureEntry]] = {}
    totals: dict[str, int] = {}
    for position, r in enumerate(ot.records):
        if not r.broken:
            continue
        entry = FailureEntry(r.seq, r.event_type, r.failure_reason, position)
        groups.setdefault(r.from_node, []).append(entry)
        totals[r.failure_reason] = totals.get(r.failure_reason, 0) + 1
    processes = {pid: tuple(sorted(v, key=lambda e: e.position))
                 for pid, v in groups.items()}
    return FailureReport(processes, totals, sum(totals.values()))
