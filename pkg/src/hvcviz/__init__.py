"""Causality tracing with sparse hybrid vector clocks.

Core pieces: the clock itself (:mod:`hvcviz.clock`), a JSONL trace record
schema (:mod:`hvcviz.tracelog`), a deterministic multi-process simulator with
a ground-truth event graph (:mod:`hvcviz.sim`), trace ordering and swimlane
analysis (:mod:`hvcviz.order`), and a read-only HTTP trace service
(:mod:`hvcviz.service`).
"""

from hvcviz.clock import (
    CausalRelation,
    ClockMode,
    HybridVectorClock,
    Knowledge,
    compare,
    epoch_of,
    new_clock,
)

__all__ = [
    "CausalRelation",
    "ClockMode",
    "HybridVectorClock",
    "Knowledge",
    "compare",
    "epoch_of",
    "new_clock",
]

__version__ = "0.1.0"
