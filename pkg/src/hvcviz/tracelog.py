"""Append-only trace-record log: schema, JSONL serialization, reading.

One record per line, UTF-8, "\\n" terminated. Every record carries two clock
snapshots: the transmitter's clock right after its send event (``sender_*``)
and the receiver's clock right after the merge (``output_*``). For local,
poll, and crash records there is only one process involved, so both blocks
hold the same clock.

Writers append whole lines and flush per record; readers tolerate observing
any prefix of a growing log.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional

from hvcviz.clock import HybridVectorClock

EVENT_TYPES = ("send_recv", "local", "poll", "crash")

# serialization order is part of the wire format
_FIELD_ORDER = (
    "seq", "event_type", "from_node", "to_node", "physical_time",
    "epoch_interval", "output_epsilon",
    "sender_max_epoch", "sender_offsets", "sender_counters",
    "output_max_epoch", "output_offsets", "output_counters",
    "broken", "failure_reason",
)


class TraceError(ValueError):
    """Base class for anything wrong with a record or log line."""


class TraceParseError(TraceError):
    """Line is not one well-formed JSON object."""

    def __init__(self, message: str, line_no: Optional[int] = None):
        at = f" (line {line_no})" if line_no is not None else ""
        super().__init__(message + at)
        self.line_no = line_no


class TraceValidationError(TraceError):
    """Line parsed but a field violates the record invariants."""

    def __init__(self, field_name: str, message: str, line_no: Optional[int] = None):
        at = f" (line {line_no})" if line_no is not None else ""
        super().__init__(f"{field_name}: {message}{at}")
        self.field = field_name
        self.line_no = line_no


@dataclass(frozen=True)
class TraceRecord:
    """One event on the shared log.

    Invariants are enforced at construction, so any held instance is valid
    and serializable.
    """

    seq: int
    event_type: str
    from_node: int
    to_node: int
    epoch_interval: int
    output_epsilon: int
    sender_max_epoch: int
    sender_offsets: Mapping[int, int] = field(default_factory=dict)
    sender_counters: Mapping[int, int] = field(default_factory=dict)
    output_max_epoch: int = 0
    output_offsets: Mapping[int, int] = field(default_factory=dict)
    output_counters: Mapping[int, int] = field(default_factory=dict)
    physical_time: Optional[int] = None
    broken: bool = False
    failure_reason: Optional[str] = None

    def __post_init__(self) -> None:
        _require("seq", self.seq >= 0, "must be non-negative")
        _require("event_type", self.event_type in EVENT_TYPES,
                 f"must be one of {', '.join(EVENT_TYPES)}")
        _require("from_node", self.from_node >= 0, "must be non-negative")
        _require("to_node", self.to_node >= 0, "must be non-negative")
        if self.event_type != "send_recv":
            _require("to_node", self.to_node == self.from_node,
                     "must equal from_node for non-message records")
        _require("epoch_interval", self.epoch_interval >= 1, "must be >= 1")
        _require("output_epsilon", self.output_epsilon >= 1, "must be >= 1")
        if self.physical_time is not None:
            _require("physical_time", self.physical_time >= 0, "must be non-negative")
        if self.event_type == "send_recv":
            _require("output_max_epoch",
                     self.output_max_epoch >= self.sender_max_epoch,
                     "must be >= sender_max_epoch for send_recv records")
        for name in ("sender_offsets", "output_offsets"):
            for k, v in getattr(self, name).items():
                _require(name, 0 <= v < self.output_epsilon,
                         f"value {v} for pid {k} must be in [0, output_epsilon)")
        for name in ("sender_counters", "output_counters"):
            for k, v in getattr(self, name).items():
                _require(name, v >= 0, f"value {v} for pid {k} must be non-negative")
        _require("failure_reason", self.broken == (self.failure_reason is not None),
                 "required exactly when broken is true")
        object.__setattr__(self, "sender_offsets", dict(self.sender_offsets))
        object.__setattr__(self, "sender_counters", dict(self.sender_counters))
        object.__setattr__(self, "output_offsets", dict(self.output_offsets))
        object.__setattr__(self, "output_counters", dict(self.output_counters))

    def sender_clock(self) -> HybridVectorClock:
        return HybridVectorClock(self.from_node, self.epoch_interval,
                                 self.output_epsilon, self.sender_max_epoch,
                                 self.sender_offsets, self.sender_counters)

    def output_clock(self) -> HybridVectorClock:
        return HybridVectorClock(self.to_node, self.epoch_interval,
                                 self.output_epsilon, self.output_max_epoch,
                                 self.output_offsets, self.output_counters)


def _require(field_name: str, ok: bool, message: str,
             line_no: Optional[int] = None) -> None:
    if not ok:
        raise TraceValidationError(field_name, message, line_no)


def record_from_clocks(seq: int, event_type: str, sender: HybridVectorClock,
                       output: HybridVectorClock, physical_time: Optional[int] = None,
                       broken: bool = False,
                       failure_reason: Optional[str] = None) -> TraceRecord:
    """Build a record from the two post-event clock values."""
    return TraceRecord(
        seq=seq, event_type=event_type,
        from_node=sender.pid, to_node=output.pid,
        epoch_interval=output.interval, output_epsilon=output.epsilon,
        sender_max_epoch=sender.max_epoch,
        sender_offsets=sender.offsets, sender_counters=sender.counters,
        output_max_epoch=output.max_epoch,
        output_offsets=output.offsets, output_counters=output.counters,
        physical_time=physical_time, broken=broken, failure_reason=failure_reason,
    )


def _ordered_map(m: Mapping[int, int]) -> dict:
    return {str(k): m[k] for k in sorted(m)}


def serialize_record(r: TraceRecord) -> str:
    """One JSON object on one line, fields in wire order, no trailing newline."""
    obj = {
        "seq": r.seq,
        "event_type": r.event_type,
        "from_node": r.from_node,
        "to_node": r.to_node,
        "physical_time": r.physical_time,
        "epoch_interval": r.epoch_interval,
        "output_epsilon": r.output_epsilon,
        "sender_max_epoch": r.sender_max_epoch,
        "sender_offsets": _ordered_map(r.sender_offsets),
        "sender_counters": _ordered_map(r.sender_counters),
        "output_max_epoch": r.output_max_epoch,
        "output_offsets": _ordered_map(r.output_offsets),
        "output_counters": _ordered_map(r.output_counters),
        "broken": r.broken,
        "failure_reason": r.failure_reason,
    }
    for key in ("physical_time", "failure_reason"):
        if obj[key] is None:
            del obj[key]
    return json.dumps(obj, separators=(",", ":"))


def _want_int(obj: dict, key: str, line_no: Optional[int]) -> int:
    if key not in obj:
        raise TraceValidationError(key, "missing", line_no)
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise TraceValidationError(key, f"must be an integer, got {v!r}", line_no)
    return v


def _want_map(obj: dict, key: str, line_no: Optional[int]) -> dict[int, int]:
    if key not in obj:
        raise TraceValidationError(key, "missing", line_no)
    v = obj[key]
    if not isinstance(v, dict):
        raise TraceValidationError(key, "must be an object", line_no)
    out: dict[int, int] = {}
    for k, val in v.items():
        if not k.isdigit():
            raise TraceValidationError(key, f"key {k!r} is not a process id", line_no)
        if isinstance(val, bool) or not isinstance(val, int):
            raise TraceValidationError(key, f"value {val!r} for pid {k} must be an integer", line_no)
        out[int(k)] = val
    return out


def parse_record(line: str, line_no: Optional[int] = None) -> TraceRecord:
    """Parse one log line; tolerant of field order and unknown fields."""
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise TraceParseError(f"not valid JSON: {exc.msg}", line_no) from exc
    if not isinstance(obj, dict):
        raise TraceParseError("line is not a JSON object", line_no)

    event_type = obj.get("event_type")
    if not isinstance(event_type, str):
        raise TraceValidationError("event_type", "missing or not a string", line_no)
    physical_time = None
    if "physical_time" in obj and obj["physical_time"] is not None:
        physical_time = _want_int(obj, "physical_time", line_no)
    broken = obj.get("broken", False)
    if not isinstance(broken, bool):
        raise TraceValidationError("broken", "must be a boolean", line_no)
    failure_reason = obj.get("failure_reason")
    if failure_reason is not None and not isinstance(failure_reason, str):
        raise TraceValidationError("failure_reason", "must be a string", line_no)

    try:
        return TraceRecord(
            seq=_want_int(obj, "seq", line_no),
            event_type=event_type,
            from_node=_want_int(obj, "from_node", line_no),
            to_node=_want_int(obj, "to_node", line_no),
            epoch_interval=_want_int(obj, "epoch_interval", line_no),
            output_epsilon=_want_int(obj, "output_epsilon", line_no),
            sender_max_epoch=_want_int(obj, "sender_max_epoch", line_no),
            sender_offsets=_want_map(obj, "sender_offsets", line_no),
            sender_counters=_want_map(obj, "sender_counters", line_no),
            output_max_epoch=_want_int(obj, "output_max_epoch", line_no),
            output_offsets=_want_map(obj, "output_offsets", line_no),
            output_counters=_want_map(obj, "output_counters", line_no),
            physical_time=physical_time,
            broken=broken,
            failure_reason=failure_reason,
        )
    except TraceValidationError as exc:
        if exc.line_no is None and line_no is not None:
            raise TraceValidationError(exc.field, str(exc), line_no) from exc
        raise


@dataclass(frozen=True)
class LogIssue:
    line_no: int
    message: str


def read_log(lines: Iterable[str]) -> tuple[list[TraceRecord], list[LogIssue]]:
    """Read every parseable record; collect per-line issues, never abort.

    Blank lines are skipped. Records whose seq does not strictly increase
    are reported and dropped so downstream cursors stay monotone.
    """
    records: list[TraceRecord] = []
    issues: list[LogIssue] = []
    last_seq = -1
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            r = parse_record(line, line_no)
        except TraceError as exc:
            issues.append(LogIssue(line_no, str(exc)))
            continue
        if r.seq <= last_seq:
            issues.append(LogIssue(line_no, f"seq: {r.seq} does not increase past {last_seq}"))
            continue
        records.append(r)
        last_seq = r.seq
    return records, issues


def read_log_file(path: str | Path) -> tuple[list[TraceRecord], list[LogIssue]]:
    with open(path, "r", encoding="utf-8") as f:
        return read_log(f)


class TraceWriter:
    """Single appender for one log stream.

    Enforces strictly increasing seq and one epoch_interval/output_epsilon
    per log. Flushes per record so tailing readers see whole lines promptly.
    """

    def __init__(self, stream):
        self._stream = stream
        self._last_seq = -1
        self._interval: Optional[int] = None
        self._epsilon: Optional[int] = None

    def append(self, record: TraceRecord) -> None:
        if record.seq <= self._last_seq:
            raise TraceValidationError("seq", f"{record.seq} already written or out of order")
        if self._interval is None:
            self._interval = record.epoch_interval
            self._epsilon = record.output_epsilon
        elif (record.epoch_interval, record.output_epsilon) != (self._interval, self._epsilon):
            raise TraceValidationError("epoch_interval",
                                       "all records in one log must share interval and epsilon")
        self._stream.write(serialize_record(record) + "\n")
        self._stream.flush()
        self._last_seq = record.seq


def write_log_file(path: str | Path, records: Iterable[TraceRecord]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        w = TraceWriter(f)
        for r in records:
            w.append(r)
