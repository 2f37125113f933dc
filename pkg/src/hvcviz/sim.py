"""Deterministic discrete-event simulator driving the sparse clocks.

N processes with drifting physical clocks exchange messages over a chosen
topology while a monitor polls for liveness. The run emits the trace log
(shared wire format) plus a ground-truth event DAG so causal claims made
from clocks alone can be checked against what actually happened.

Everything is a pure function of the config: one seeded RNG, integer true
time, and total tiebreak order (time, pid, event-kind rank, insertion order)
make outputs byte-identical across runs. The poll monitor participates with
pid -1 so it acts before any process at the same tick.
"""

from __future__ import annotations

import heapq
import json
import random
import re
import time as _time
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional, Union

from hvcviz.clock import ClockMode, HybridVectorClock, new_clock
from hvcviz.tracelog import TraceRecord, TraceWriter, record_from_clocks

MONITOR_PID = -1

# tiebreak ranks for same-tick events of one pid: a crash lands before the
# doomed process acts, deliveries integrate before new activity
_RANK = {"crash": 0, "deliver": 1, "local": 2, "send": 3, "poll": 4}


class ConfigError(ValueError):
    """Invalid simulation configuration; message names the offending key."""


def _rational(key: str, value) -> Fraction:
    """Accept int, float, "a/b" or decimal string, or [num, den]."""
    try:
        if isinstance(value, bool):
            raise ValueError
        if isinstance(value, (int, str)):
            return Fraction(value)
        if isinstance(value, float):
            return Fraction(str(value))
        if isinstance(value, (list, tuple)) and len(value) == 2:
            return Fraction(int(value[0]), int(value[1]))
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"{key}: not a valid rational: {value!r}") from exc
    raise ConfigError(f"{key}: not a valid rational: {value!r}")


_TOPOLOGIES = ("complete", "star")
_RING = re.compile(r"^ring\((\d+)\)$")


def topology_neighbors(topology: str, n: int) -> list[tuple[int, ...]]:
    """Per-process send destinations. Star routes every spoke through pid 0."""
    if topology == "complete":
        return [tuple(q for q in range(n) if q != p) for p in range(n)]
    if topology == "star":
        return [tuple(q for q in range(n) if q != 0) if p == 0 else (0,)
                for p in range(n)]
    m = _RING.match(topology)
    if m:
        k = int(m.group(1))
        if not 1 <= k <= n - 1:
            raise ConfigError(f"topology: ring({k}) needs 1 <= k <= n-1")
        return [tuple(sorted({(p + d) % n for d in range(-k, k + 1) if d != 0}))
                for p in range(n)]
    raise ConfigError(f"topology: unknown {topology!r}, want complete, ring(k), or star")


@dataclass(frozen=True)
class SimConfig:
    n_processes: int
    seed: int = 0
    duration: int = 1000
    epoch_interval: int = 10
    epsilon: int = 5
    clock_mode: ClockMode = ClockMode.KNOWLEDGE
    drift_ppm: int = 0
    initial_skew_max: int = 0
    local_event_rate: Fraction = Fraction(1, 10)
    message_rate: Fraction = Fraction(1, 10)
    latency_min: int = 1
    latency_max: int = 10
    topology: str = "complete"
    message_failure_probability: Fraction = Fraction(0)
    crashes: tuple[tuple[int, int], ...] = ()
    poll_interval: int = 100
    missed_polls_threshold: int = 3

    def __post_init__(self) -> None:
        def need(key, ok, msg):
            if not ok:
                raise ConfigError(f"{key}: {msg}")

        need("n_processes", self.n_processes >= 1, "must be >= 1")
        need("duration", self.duration >= 1, "must be >= 1")
        need("epoch_interval", self.epoch_interval >= 1, "must be >= 1")
        need("epsilon", self.epsilon >= 1, "must be >= 1")
        need("drift_ppm", 0 <= self.drift_ppm < 1_000_000,
             "must be in [0, 1_000_000)")
        need("initial_skew_max", self.initial_skew_max >= 0, "must be >= 0")
        need("local_event_rate", self.local_event_rate >= 0, "must be >= 0")
        need("message_rate", self.message_rate >= 0, "must be >= 0")
        need("latency_min", self.latency_min >= 0, "must be >= 0")
        need("latency_max", self.latency_max >= self.latency_min,
             "must be >= latency_min")
        need("message_failure_probability",
             0 <= self.message_failure_probability <= 1, "must be in [0, 1]")
        need("poll_interval", self.poll_interval >= 1, "must be >= 1")
        need("missed_polls_threshold", self.missed_polls_threshold >= 1,
             "must be >= 1")
        topology_neighbors(self.topology, self.n_processes)
        for pid, t in self.crashes:
            need("crashes", 0 <= pid < self.n_processes, f"unknown pid {pid}")
            need("crashes", 0 <= t <= self.duration, f"time {t} outside the run")
        if self.epsilon * self.epoch_interval < self.initial_skew_max + self.latency_max:
            warnings.warn(
                "epsilon*epoch_interval is below initial_skew_max+latency_max; "
                "peers can fall out of tracking and completeness checks may fail",
                stacklevel=2)

    @classmethod
    def from_dict(cls, raw: dict) -> "SimConfig":
        """Build from flat config-file keys; rejects unknown keys by name."""
        data = dict(raw)
        kwargs = {}
        plan = data.pop("failure_plan", None)
        if plan is not None:
            if isinstance(plan, dict):
                plan = [plan]
            if not isinstance(plan, list):
                raise ConfigError("failure_plan: must be a table or list of tables")
            crashes: list[tuple[int, int]] = []
            for clause in plan:
                if not isinstance(clause, dict):
                    raise ConfigError("failure_plan: each clause must be a table")
                extra = set(clause) - {"message_failure_probability", "crash"}
                if extra:
                    raise ConfigError(f"failure_plan: unknown key {sorted(extra)[0]}")
                if "message_failure_probability" in clause:
                    kwargs["message_failure_probability"] = _rational(
                        "message_failure_probability",
                        clause["message_failure_probability"])
                for entry in clause.get("crash", []):
                    try:
                        pid, t = entry
                        crashes.append((int(pid), int(t)))
                    except (TypeError, ValueError) as exc:
                        raise ConfigError(f"failure_plan: bad crash entry {entry!r}") from exc
            kwargs["crashes"] = tuple(crashes)
        for key, value in data.items():
            if key in ("local_event_rate", "message_rate", "message_failure_probability"):
                kwargs[key] = _rational(key, value)
            elif key == "clock_mode":
                try:
                    kwargs[key] = ClockMode(value) if isinstance(value, str) else value
                except ValueError as exc:
                    raise ConfigError(f"clock_mode: unknown mode {value!r}") from exc
            elif key == "crashes":
                kwargs[key] = tuple((int(p), int(t)) for p, t in value)
            elif key in ("n_processes", "seed", "duration", "epoch_interval",
                         "epsilon", "drift_ppm", "initial_skew_max",
                         "latency_min", "latency_max", "poll_interval",
                         "missed_polls_threshold"):
                if isinstance(value, bool) or not isinstance(value, int):
                    raise ConfigError(f"{key}: must be an integer, got {value!r}")
                kwargs[key] = value
            elif key == "topology":
                kwargs[key] = value
            else:
                raise ConfigError(f"unknown config key: {key}")
        if "n_processes" not in kwargs:
            raise ConfigError("n_processes: missing")
        return cls(**kwargs)


def load_config(path: Union[str, Path]) -> SimConfig:
    """Read a TOML or JSON config file (flat keys named as in SimConfig)."""
    try:
        import tomllib
    except ImportError:  # 3.10
        import tomli as tomllib
    p = Path(path)
    raw = p.read_bytes()
    if p.suffix == ".json":
        data = json.loads(raw.decode("utf-8"))
    else:
        try:
            data = tomllib.loads(raw.decode("utf-8"))
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"config file: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file: top level must be a table")
    return SimConfig.from_dict(data)


@dataclass
class DagEvent:
    id: int
    pid: int
    true_time: int
    kind: str  # local | send | recv
    record_seq: Optional[int]
    clock: Optional[HybridVectorClock] = field(default=None, repr=False)


class EventDag:
    """Ground-truth happens-before: program-order chains plus message edges.

    Built in event-creation order, so every edge points from a lower id to a
    higher one; reachability is a transitive closure over bitsets, computed
    lazily and cached.
    """

    def __init__(self) -> None:
        self.events: list[DagEvent] = []
        self.edges: list[tuple[int, int, str]] = []
        self._succ: list[list[int]] = []
        self._closure: Optional[list[int]] = None

    def add_event(self, pid: int, true_time: int, kind: str,
                  record_seq: Optional[int] = None,
                  clock: Optional[HybridVectorClock] = None) -> DagEvent:
        ev = DagEvent(len(self.events), pid, true_time, kind, record_seq, clock)
        self.events.append(ev)
        self._succ.append([])
        self._closure = None
        return ev

    def add_edge(self, src: int, dst: int, kind: str) -> None:
        if src >= dst:
            raise ValueError(f"edge {src}->{dst} does not follow creation order")
        self.edges.append((src, dst, kind))
        self._succ[src].append(dst)
        self._closure = None

    def reachable(self, e: int, f: int) -> bool:
        """True iff a directed path e -> f exists. Irreflexive."""
        if not (0 <= e < len(self.events) and 0 <= f < len(self.events)):
            raise ValueError(f"unknown event id in ({e}, {f})")
        if self._closure is None:
            reach = [0] * len(self.events)
            for i in range(len(self.events) - 1, -1, -1):
                bits = 0
                for j in self._succ[i]:
                    bits |= (1 << j) | reach[j]
                reach[i] = bits
            self._closure = reach
        return bool(self._closure[e] >> f & 1)

    def descendants(self, e: int) -> int:
        """Bitmask of every event reachable from e."""
        self.reachable(e, e)
        return self._closure[e]

    def write_truth(self, path: Union[str, Path]) -> None:
        with open(path, "w", encoding="utf-8") as f:
            for ev in self.events:
                f.write(json.dumps({"event": {
                    "id": ev.id, "pid": ev.pid, "true_time": ev.true_time,
                    "kind": ev.kind, "record_seq": ev.record_seq,
                }}, separators=(",", ":")) + "\n")
            for src, dst, kind in self.edges:
                f.write(json.dumps({"edge": {"src": src, "dst": dst, "kind": kind}},
                                   separators=(",", ":")) + "\n")

    @classmethod
    def load_truth(cls, path: Union[str, Path]) -> "EventDag":
        dag = cls()
        with open(path, "r", encoding="utf-8") as f:
            edges = []
            for line in f:
                if not line.strip():
                    continue
                obj = json.loads(line)
                if "event" in obj:
                    e = obj["event"]
                    ev = dag.add_event(e["pid"], e["true_time"], e["kind"],
                                       e["record_seq"])
                    if ev.id != e["id"]:
                        raise ValueError(f"event ids not dense at {e['id']}")
                elif "edge" in obj:
                    edges.append(obj["edge"])
                else:
                    raise ValueError(f"unknown truth line: {line.strip()[:60]}")
        for e in edges:
            dag.add_edge(e["src"], e["dst"], e["kind"])
        return dag


def dag_reachable(dag: EventDag, e: int, f: int) -> bool:
    return dag.reachable(e, f)


@dataclass
class SimResult:
    config: SimConfig
    records: list[TraceRecord]
    dag: EventDag
    active_size_samples: list[tuple[int, int]]
    summary: dict
    trace_path: Optional[Path] = None
    truth_path: Optional[Path] = None


def run_simulation(config: SimConfig, trace_path: Union[str, Path, None] = None,
                   truth_path: Union[str, Path, None] = None) -> SimResult:
    rng = random.Random(config.seed)
    n = config.n_processes
    mode = config.clock_mode
    neighbors = topology_neighbors(config.topology, n)
    skews = [rng.randint(0, config.initial_skew_max) for _ in range(n)]
    drift = [rng.randint(-config.drift_ppm, config.drift_ppm) if config.drift_ppm
             else 0 for _ in range(n)]

    def phy(p: int, t: int) -> int:
        return skews[p] + t + (t * drift[p]) // 1_000_000

    def gap(rate: Fraction) -> Optional[int]:
        if rate <= 0:
            return None
        p = min(float(rate), 1.0)
        g = 1
        while rng.random() >= p:
            g += 1
        return g

    clocks = [new_clock(p, config.epoch_interval, config.epsilon) for p in range(n)]
    dead = [False] * n
    last_event: list[Optional[int]] = [None] * n  # DAG id of last event per pid
    dag = EventDag()
    records: list[TraceRecord] = []
    samples: list[tuple[int, int]] = []
    counts = {"sends": 0, "delivered": 0, "dropped": 0, "broken_messages": 0,
              "locals": 0, "crashes_detected": 0}
    timing = {"advance_ns": 0, "advance_calls": 0, "merge_ns": 0, "merge_calls": 0}

    heap: list[tuple] = []
    order = 0

    def push(t: int, pid: int, kind: str, payload=None) -> None:
        nonlocal order
        heapq.heappush(heap, (t, pid, _RANK[kind], order, kind, payload))
        order += 1

    for pid, t in config.crashes:
        push(t, pid, "crash")
    for t in range(config.poll_interval, config.duration + 1, config.poll_interval):
        push(t, MONITOR_PID, "poll")
    for p in range(n):
        g = gap(config.local_event_rate)
        if g is not None and g <= config.duration:
            push(g, p, "local")
    for p in range(n):
        g = gap(config.message_rate)
        if g is not None and g <= config.duration and neighbors[p]:
            push(g, p, "send")

    out = open(trace_path, "w", encoding="utf-8") if trace_path else None
    writer = TraceWriter(out) if out else None
    seq = 0

    def emit(record: TraceRecord) -> None:
        records.append(record)
        if writer:
            writer.append(record)

    def advance(p: int, t: int) -> None:
        t0 = _time.perf_counter_ns()
        clocks[p] = clocks[p].advance(phy(p, t), mode)
        timing["advance_ns"] += _time.perf_counter_ns() - t0
        timing["advance_calls"] += 1
        samples.append(clocks[p].active_size())

    missed = [0] * n
    flagged = [False] * n

    try:
        while heap:
            t, pid, _rank, _order, kind, payload = heapq.heappop(heap)
            if t > config.duration:
                break
            if kind == "crash":
                dead[pid] = True
            elif kind == "poll":
                for p in range(n):
                    if not dead[p]:
                        missed[p] = 0
                        continue
                    if flagged[p]:
                        continue
                    missed[p] += 1
                    if missed[p] >= config.missed_polls_threshold:
                        flagged[p] = True
                        counts["crashes_detected"] += 1
                        emit(record_from_clocks(
                            seq, "crash", clocks[p], clocks[p], physical_time=t,
                            broken=True,
                            failure_reason=f"missed {config.missed_polls_threshold} polls"))
                        seq += 1
            elif kind == "local":
                if dead[pid]:
                    continue
                advance(pid, t)
                counts["locals"] += 1
                emit(record_from_clocks(seq, "local", clocks[pid], clocks[pid],
                                        physical_time=t))
                ev = dag.add_event(pid, t, "local", seq, clocks[pid])
                if last_event[pid] is not None:
                    dag.add_edge(last_event[pid], ev.id, "program")
                last_event[pid] = ev.id
                seq += 1
                g = gap(config.local_event_rate)
                if g is not None:
                    push(t + g, pid, "local")
            elif kind == "send":
                if dead[pid]:
                    continue
                dst = rng.choice(neighbors[pid])
                broken = (config.message_failure_probability > 0
                          and rng.random() < float(config.message_failure_probability))
                latency = rng.randint(config.latency_min, config.latency_max)
                advance(pid, t)
                counts["sends"] += 1
                ev = dag.add_event(pid, t, "send", None, clocks[pid])
                if last_event[pid] is not None:
                    dag.add_edge(last_event[pid], ev.id, "program")
                last_event[pid] = ev.id
                push(t + latency, dst, "deliver", (ev.id, clocks[pid], broken))
                g = gap(config.message_rate)
                if g is not None:
                    push(t + g, pid, "send")
            elif kind == "deliver":
                send_id, stamp, broken = payload
                if dead[pid]:
                    counts["dropped"] += 1
                    continue
                t0 = _time.perf_counter_ns()
                clocks[pid] = clocks[pid].merge(stamp, phy(pid, t), mode)
                timing["merge_ns"] += _time.perf_counter_ns() - t0
                timing["merge_calls"] += 1
                samples.append(clocks[pid].active_size())
                counts["delivered"] += 1
                if broken:
                    counts["broken_messages"] += 1
                emit(record_from_clocks(
                    seq, "send_recv", stamp, clocks[pid], physical_time=t,
                    broken=broken,
                    failure_reason="message failure injected" if broken else None))
                dag.events[send_id].record_seq = seq
                ev = dag.add_event(pid, t, "recv", seq, clocks[pid])
                if last_event[pid] is not None:
                    dag.add_edge(last_event[pid], ev.id, "program")
                last_event[pid] = ev.id
                dag.add_edge(send_id, ev.id, "message")
                seq += 1
    finally:
        if out:
            out.close()
    if truth_path:
        dag.write_truth(truth_path)

    offs = [s[0] for s in samples] or [0]
    cnts = [s[1] for s in samples] or [0]
    summary = {
        "n_processes": n,
        "duration": config.duration,
        "events": len(dag.events),
        "records": len(records),
        "max_epoch": max((c.max_epoch for c in clocks), default=0),
        "mean_offset_entries": sum(offs) / len(offs),
        "max_offset_entries": max(offs),
        "mean_counter_entries": sum(cnts) / len(cnts),
        "max_counter_entries": max(cnts),
        "mean_advance_ns": timing["advance_ns"] // max(timing["advance_calls"], 1),
        "mean_merge_ns": timing["merge_ns"] // max(timing["merge_calls"], 1),
        **counts,
    }
    return SimResult(config, records, dag, samples, summary,
                     Path(trace_path) if trace_path else None,
                     Path(truth_path) if truth_path else None)
