"""Sparse hybrid vector clocks.

A hybrid vector clock discretizes each process's physical time into epochs
(``floor(phy_clock / interval)``) and tracks, per peer, how many epochs that
peer lags behind the clock's own ``max_epoch`` (the *offset*) plus an event
*counter* within the peer's known epoch.  Peers that have drifted ``epsilon``
or more epochs behind are not tracked at all: an absent offset means "stale,
at least epsilon epochs behind", which is what keeps the footprint below one
entry per process.

Two update disciplines are provided:

* ``ClockMode.LITERAL`` follows the classic send/receive update rules
  branch-for-branch, including the counter reset on epoch change and the
  wholesale adoption of the message clock when the message leads.
* ``ClockMode.KNOWLEDGE`` generalizes every branch to an elementwise
  lexicographic maximum of per-peer knowledge ``(epoch, counter)``, which
  preserves third-party information and keeps comparisons monotone.  This is
  the default for simulation and trace analysis.

Clock values are immutable; ``advance``/``merge``/``compare`` are pure.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple


class ClockMode(enum.Enum):
    """Update discipline shared by every clock in one run."""

    LITERAL = "literal"
    KNOWLEDGE = "knowledge"


class CausalRelation(enum.Enum):
    """Outcome of comparing two clocks.

    ``EQUAL`` means identical knowledge; callers treat it like concurrency
    (two distinct events never produce equal clocks in a healthy trace).
    """

    EQUAL = "equal"
    BEFORE = "before"
    AFTER = "after"
    CONCURRENT = "concurrent"

    def inverse(self) -> "CausalRelation":
        if self is CausalRelation.BEFORE:
            return CausalRelation.AFTER
        if self is CausalRelation.AFTER:
            return CausalRelation.BEFORE
        return self


class Knowledge(NamedTuple):
    """What a clock knows about one peer: its epoch and event counter.

    Ordered lexicographically; the epoch may be negative early in a run
    (``max_epoch - epsilon`` with a small ``max_epoch``).
    """

    epoch: int
    counter: int


# Rank used when building comparison keys: an absent entry stands for "at
# least this stale", so at the same derived epoch it must dominate any stored
# counter, otherwise dropping an entry at the epsilon boundary could demote a
# clock below its own causal past.
_PRESENT = 0
_ABSENT = 1


def epoch_of(phy_clock: int, interval: int) -> int:
    """Epoch of a physical clock reading: ``floor(phy_clock / interval)``."""
    if interval < 1:
        raise ValueError("interval must be >= 1")
    return phy_clock // interval


@dataclass(frozen=True)
class HybridVectorClock:
    """One process's sparse hybrid vector clock.

    ``offsets`` maps peer pid -> epochs behind ``max_epoch`` (always in
    ``[0, epsilon)``; the own pid is never stored and is implicitly 0; absent
    means "epsilon or more behind / never heard").  ``counters`` maps
    pid -> events within that pid's known epoch (absent means 0).
    """

    pid: int
    interval: int
    epsilon: int
    max_epoch: int = 0
    offsets: Mapping[int, int] = field(default_factory=dict)
    counters: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.pid < 0:
            raise ValueError("pid must be non-negative")
        if self.interval < 1:
            raise ValueError("interval must be >= 1")
        if self.epsilon < 1:
            raise ValueError("epsilon must be >= 1")
        offsets = dict(self.offsets)
        offsets.pop(self.pid, None)
        for j, off in offsets.items():
            if not 0 <= off < self.epsilon:
                raise ValueError(f"offset for pid {j} must be in [0, epsilon), got {off}")
        counters = {}
        for j, cnt in dict(self.counters).items():
            if cnt < 0:
                raise ValueError(f"counter for pid {j} must be non-negative, got {cnt}")
            if cnt == 0:
                continue
            if j != self.pid and j not in offsets:
                # A counter is only meaningful relative to a tracked epoch.
                continue
            counters[j] = cnt
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "counters", counters)

    # -- derived views -------------------------------------------------

    def offset(self, j: int) -> int:
        """Offset of pid ``j``: 0 for self, epsilon when untracked."""
        if j == self.pid:
            return 0
        return self.offsets.get(j, self.epsilon)

    def counter(self, j: int) -> int:
        return self.counters.get(j, 0)

    def knowledge(self, j: int) -> Knowledge:
        """Known ``(epoch, counter)`` of pid ``j`` from this clock's view."""
        return Knowledge(self.max_epoch - self.offset(j), self.counter(j))

    def display_value(self, j: int) -> int:
        """Scalar display form ``max_epoch + offset + counter`` for pid ``j``.

        Display and legacy sort keys only; never used for causality, where a
        larger offset means a staler view.
        """
        return self.max_epoch + self.offset(j) + self.counter(j)

    def active_size(self) -> tuple[int, int]:
        """Count of stored (offset, counter) entries."""
        return (len(self.offsets), len(self.counters))

    def _compare_key(self, j: int) -> tuple[int, int, int]:
        # Absent entries sort above stored counters at the same epoch; see
        # the note on _ABSENT above.
        if j == self.pid:
            return (self.max_epoch, _PRESENT, self.counters.get(j, 0))
        off = self.offsets.get(j)
        if off is None:
            return (self.max_epoch - self.epsilon, _ABSENT, 0)
        return (self.max_epoch - off, _PRESENT, self.counters.get(j, 0))

    # -- transitions ---------------------------------------------------

    def advance(self, phy_clock: int, mode: ClockMode = ClockMode.KNOWLEDGE) -> "HybridVectorClock":
        """Step this clock for a send or local event at ``phy_clock``.

        A lagging physical clock is legal; the epoch never moves backwards.
        """
        new_max = max(self.max_epoch, epoch_of(phy_clock, self.interval))
        delta = new_max - self.max_epoch
        if delta == 0:
            counters = dict(self.counters)
            counters[self.pid] = counters.get(self.pid, 0) + 1
            return HybridVectorClock(self.pid, self.interval, self.epsilon,
                                     new_max, dict(self.offsets), counters)
        offsets = {j: off + delta for j, off in self.offsets.items()
                   if off + delta < self.epsilon}
        if mode is ClockMode.LITERAL:
            counters: dict[int, int] = {}
        else:
            counters = {j: c for j, c in self.counters.items() if j in offsets}
            counters[self.pid] = 1
        return HybridVectorClock(self.pid, self.interval, self.epsilon,
                                 new_max, offsets, counters)

    def merge(self, msg: "HybridVectorClock", phy_clock: int,
              mode: ClockMode = ClockMode.KNOWLEDGE) -> "HybridVectorClock":
        """Step this clock for receipt of a message stamped with ``msg``."""
        if msg.pid == self.pid:
            raise ValueError("cannot merge a clock with its own process")
        if msg.interval != self.interval or msg.epsilon != self.epsilon:
            raise ValueError("mismatched interval/epsilon between clocks")
        if mode is ClockMode.LITERAL:
            return self._merge_literal(msg, phy_clock)
        return self._merge_knowledge(msg, phy_clock)

    def _merge_literal(self, msg: "HybridVectorClock", phy_clock: int) -> "HybridVectorClock":
        new_max = max(self.max_epoch, msg.max_epoch, epoch_of(phy_clock, self.interval))
        if new_max == self.max_epoch == msg.max_epoch:
            # Same epoch on both sides: pairwise max of counters, then count
            # the receive.  Offsets stay as they were except the sender's,
            # which materializes at 0 (we just heard from it this epoch).
            counters = dict(self.counters)
            for j, c in msg.counters.items():
                counters[j] = max(counters.get(j, 0), c)
            counters[self.pid] = max(self.counter(self.pid), msg.counter(self.pid)) + 1
            offsets = dict(self.offsets)
            offsets[msg.pid] = 0
            return HybridVectorClock(self.pid, self.interval, self.epsilon,
                                     new_max, offsets, counters)
        if new_max == self.max_epoch:
            # Message lags: keep own state, record how far behind the sender is.
            counters = dict(self.counters)
            counters[self.pid] = counters.get(self.pid, 0) + 1
            offsets = dict(self.offsets)
            lag = min(self.max_epoch - msg.max_epoch, self.epsilon)
            if lag < self.epsilon:
                offsets[msg.pid] = lag
            else:
                offsets.pop(msg.pid, None)
            return HybridVectorClock(self.pid, self.interval, self.epsilon,
                                     new_max, offsets, counters)
        if new_max == msg.max_epoch:
            # Message leads: adopt its view wholesale and count the receive.
            offsets = dict(msg.offsets)
            offsets[msg.pid] = 0
            counters = dict(msg.counters)
            counters[self.pid] = counters.get(self.pid, 0) + 1
            return HybridVectorClock(self.pid, self.interval, self.epsilon,
                                     new_max, offsets, counters)
        # Physical clock ahead of both: a plain advance.
        return self.advance(phy_clock, ClockMode.LITERAL)

    def _merge_knowledge(self, msg: "HybridVectorClock", phy_clock: int) -> "HybridVectorClock":
        new_max = max(self.max_epoch, msg.max_epoch, epoch_of(phy_clock, self.interval))
        peers = (set(self.offsets) | set(self.counters)
                 | set(msg.offsets) | set(msg.counters) | {msg.pid})
        peers.discard(self.pid)
        offsets: dict[int, int] = {}
        counters: dict[int, int] = {}
        for j in peers:
            epoch, rank, cnt = max(self._compare_key(j), msg._compare_key(j))
            if rank == _ABSENT:
                continue
            off = new_max - epoch
            if off >= self.epsilon:
                continue
            offsets[j] = off
            if cnt:
                counters[j] = cnt
        own = self.counter(self.pid) if self.max_epoch == new_max else 0
        counters[self.pid] = own + 1
        return HybridVectorClock(self.pid, self.interval, self.epsilon,
                                 new_max, offsets, counters)

    # -- comparison ----------------------------------------------------

    def compare(self, other: "HybridVectorClock") -> CausalRelation:
        """Causal relation of this clock to ``other``.

        Per-peer knowledge is compared lexicographically over the union of
        tracked pids plus both own pids; componentwise dominance means
        BEFORE/AFTER, identity means EQUAL, anything mixed is CONCURRENT.
        """
        if other.interval != self.interval or other.epsilon != self.epsilon:
            raise ValueError("mismatched interval/epsilon between clocks")
        peers = (set(self.offsets) | set(self.counters)
                 | set(other.offsets) | set(other.counters)
                 | {self.pid, other.pid})
        less = greater = False
        for j in peers:
            a, b = self._compare_key(j), other._compare_key(j)
            if a < b:
                less = True
            elif a > b:
                greater = True
            if less and greater:
                return CausalRelation.CONCURRENT
        if less:
            return CausalRelation.BEFORE
        if greater:
            return CausalRelation.AFTER
        return CausalRelation.EQUAL

    def __str__(self) -> str:
        offs = ",".join(f"{j}:{v}" for j, v in sorted(self.offsets.items()))
        cnts = ",".join(f"{j}:{v}" for j, v in sorted(self.counters.items()))
        return f"hvc(p{self.pid} E{self.max_epoch} O[{offs}] C[{cnts}])"


def new_clock(pid: int, interval: int, epsilon: int) -> HybridVectorClock:
    """Fresh clock for one process: epoch 0, no offsets, no counters."""
    return HybridVectorClock(pid=pid, interval=interval, epsilon=epsilon)


def compare(a: HybridVectorClock, b: HybridVectorClock) -> CausalRelation:
    return a.compare(b)


def union_pids(clocks: Iterable[HybridVectorClock]) -> set[int]:
    """All pids any of the given clocks has an opinion about."""
    pids: set[int] = set()
    for c in clocks:
        pids.add(c.pid)
        pids.update(c.offsets)
        pids.update(c.counters)
    return pids
