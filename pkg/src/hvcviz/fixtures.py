"""Small hand-checked traces used by the tests and the demo tooling.

Each builder replays a short scripted run through the real clock operations,
so the records are guaranteed internally consistent; the interesting part is
the script. All fixtures use epoch_interval=10, epsilon=5, knowledge merges.
"""

from __future__ import annotations

from hvcviz.clock import HybridVectorClock, new_clock
from hvcviz.tracelog import TraceRecord, record_from_clocks

INTERVAL = 10
EPSILON = 5


def _fresh(n: int) -> list[HybridVectorClock]:
    return [new_clock(p, INTERVAL, EPSILON) for p in range(n)]


def inversion_records() -> list[TraceRecord]:
    """Two causally chained messages whose sender keys sort backwards.

    Process 0 has done a burst of local work, so its send carries counter 9.
    Process 1 forwards right after receipt, but its own counter is only 2.
    Sorting by sender (epoch, counter) puts the forward first, inverting the
    chain; the causal order keeps it intact.
    """
    p0, p1, p2 = _fresh(3)
    for _ in range(8):
        p0 = p0.advance(31)  # unlogged warm-up within epoch 3
    p0 = p0.advance(35)
    p1 = p1.merge(p0, 35)
    first = record_from_clocks(0, "send_recv", p0, p1, physical_time=35)
    p1 = p1.advance(36)
    p2 = p2.merge(p1, 38)
    second = record_from_clocks(1, "send_recv", p1, p2, physical_time=38)
    return [first, second]


def chain_records() -> list[TraceRecord]:
    """Six records across three processes, all within one epoch.

    Shape: two locals on process 0, a relay 0 -> 1 -> 2, a local on process 2,
    then 2 -> 0 closing the loop. The counter spread (process 0 far ahead)
    makes the sender-key sort scramble the chain while the causal order
    returns it verbatim.
    """
    p0, p1, p2 = _fresh(3)
    for _ in range(7):
        p0 = p0.advance(30)  # unlogged warm-up within epoch 3
    records = []
    p0 = p0.advance(31)
    records.append(record_from_clocks(0, "local", p0, p0, physical_time=31))
    p0 = p0.advance(32)
    records.append(record_from_clocks(1, "local", p0, p0, physical_time=32))
    p0 = p0.advance(33)
    p1 = p1.merge(p0, 34)
    records.append(record_from_clocks(2, "send_recv", p0, p1, physical_time=34))
    p1 = p1.advance(35)
    p2 = p2.merge(p1, 36)
    records.append(record_from_clocks(3, "send_recv", p1, p2, physical_time=36))
    p2 = p2.advance(37)
    records.append(record_from_clocks(4, "local", p2, p2, physical_time=37))
    p2 = p2.advance(38)
    p0 = p0.merge(p2, 39)
    records.append(record_from_clocks(5, "send_recv", p2, p0, physical_time=39))
    return records


FAILURE_REASON = "message failure injected"


def failure_records() -> list[TraceRecord]:
    """Eight messages, all touching process 2; three of its sends are broken.

    The broken sends still stamp and merge normally (the payload is what
    failed, not the clock), so they stay part of the causal structure and a
    failure report must surface exactly the three, grouped under process 2.
    """
    clocks = _fresh(3)

    def message(seq: int, src: int, dst: int, t_send: int, t_recv: int,
                broken: bool = False) -> TraceRecord:
        clocks[src] = clocks[src].advance(t_send)
        clocks[dst] = clocks[dst].merge(clocks[src], t_recv)
        return record_from_clocks(seq, "send_recv", clocks[src], clocks[dst],
                                  physical_time=t_recv, broken=broken,
                                  failure_reason=FAILURE_REASON if broken else None)

    return [
        message(0, 0, 2, 31, 32),
        message(1, 2, 1, 33, 34),
        message(2, 1, 2, 35, 36),
        message(3, 2, 0, 37, 38, broken=True),
        message(4, 0, 2, 41, 42),
        message(5, 2, 1, 43, 44, broken=True),
        message(6, 1, 2, 45, 46),
        message(7, 2, 0, 47, 48, broken=True),
    ]
