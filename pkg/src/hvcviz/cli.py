"""Command line entry point: simulate, order, check, serve, bench.

Exit codes are part of the contract: 0 success, 1 verification failures
found, 2 usage or configuration errors, 3 corrupt input.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

from hvcviz.clock import CausalRelation
from hvcviz.order import CorruptTraceError, order_traces, to_tsv
from hvcviz.service import DEFAULT_POLL_MS, DEFAULT_PORT, TraceService, make_server
from hvcviz.sim import ConfigError, EventDag, SimConfig, load_config, run_simulation
from hvcviz.tracelog import TraceError, read_log_file, serialize_record

EXIT_OK = 0
EXIT_VIOLATIONS = 1
EXIT_USAGE = 2
EXIT_CORRUPT = 3


def _fail(code: int, message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


# -- simulate ---------------------------------------------------------------

def cmd_simulate(args) -> int:
    try:
        config = load_config(args.config)
        if args.seed is not None:
            config = dataclasses.replace(config, seed=args.seed)
    except (ConfigError, OSError) as exc:
        return _fail(EXIT_USAGE, str(exc))
    result = run_simulation(config, trace_path=args.out, truth_path=args.truth)
    s = result.summary
    print(f"records={s['records']} events={s['events']} sends={s['sends']} "
          f"delivered={s['delivered']} broken={s['broken_messages']} "
          f"crashes={s['crashes_detected']}")
    print(f"trace: {args.out}")
    print(f"truth: {args.truth}")
    return EXIT_OK


# -- order ------------------------------------------------------------------

def cmd_order(args) -> int:
    try:
        records, issues = read_log_file(args.log)
    except OSError as exc:
        return _fail(EXIT_USAGE, str(exc))
    for issue in issues:
        print(f"warning: line {issue.line_no}: {issue.message}", file=sys.stderr)
    try:
        ot = order_traces(records, args.mode)
    except CorruptTraceError as exc:
        return _fail(EXIT_CORRUPT, str(exc))
    if not ot.records:
        return EXIT_OK
    if args.format == "tsv":
        sys.stdout.write(to_tsv(ot))
    else:
        for r in ot.records:
            print(serialize_record(r))
    return EXIT_OK


# -- check ------------------------------------------------------------------

def _event_clocks(dag: EventDag, records) -> list:
    """Join truth events to their records' clocks; unmapped events drop out."""
    by_seq = {r.seq: r for r in records}
    out = []
    for e in dag.events:
        if e.record_seq is None:
            continue
        r = by_seq.get(e.record_seq)
        if r is None:
            raise TraceError(f"truth event {e.id} points at missing record "
                             f"seq {e.record_seq}")
        out.append((e, r.sender_clock() if e.kind == "send" else r.output_clock()))
    return out


def cmd_check(args) -> int:
    try:
        records, issues = read_log_file(args.log)
        dag = EventDag.load_truth(args.truth)
    except OSError as exc:
        return _fail(EXIT_USAGE, str(exc))
    except (TraceError, ValueError, KeyError) as exc:
        return _fail(EXIT_CORRUPT, f"unreadable truth file: {exc}")
    if issues:
        first = issues[0]
        return _fail(EXIT_CORRUPT,
                     f"{len(issues)} bad log lines, first at line "
                     f"{first.line_no}: {first.message}")
    try:
        pairs = _event_clocks(dag, records)
    except TraceError as exc:
        return _fail(EXIT_CORRUPT, str(exc))

    violations = []
    checked = 0
    for i, (e, ce) in enumerate(pairs):
        for f, cf in pairs[i + 1:]:
            rel = ce.compare(cf)
            forward = dag.reachable(e.id, f.id)
            backward = dag.reachable(f.id, e.id)
            checked += 1
            if forward and rel is not CausalRelation.BEFORE:
                violations.append(f"event {e.id} reaches {f.id} but clocks "
                                  f"say {rel.name}")
            elif backward and rel is not CausalRelation.AFTER:
                violations.append(f"event {f.id} reaches {e.id} but clocks "
                                  f"say {rel.name}")
            elif args.exhaustive and not forward and not backward \
                    and rel is not CausalRelation.CONCURRENT:
                violations.append(f"events {e.id} and {f.id} are unrelated "
                                  f"but clocks say {rel.name}")

    print(f"checked {checked} event pairs over {len(pairs)} events: "
          f"{len(violations)} violations")
    for line in violations[:20]:
        print(f"  {line}")
    if len(violations) > 20:
        print(f"  ... and {len(violations) - 20} more")
    return EXIT_VIOLATIONS if violations else EXIT_OK


# -- serve ------------------------------------------------------------------

def cmd_serve(args) -> int:
    if args.port is None:
        raw = os.environ.get("HVCVIZ_PORT")
        try:
            args.port = int(raw) if raw is not None else DEFAULT_PORT
        except ValueError:
            return _fail(EXIT_USAGE, f"HVCVIZ_PORT is not an integer: {raw!r}")
    try:
        service = TraceService(args.log, mode=args.mode, time_mode=args.time,
                               poll_ms=args.poll_ms, assets_dir=args.assets)
    except (FileNotFoundError, ValueError) as exc:
        return _fail(EXIT_USAGE, str(exc))
    server = make_server(service, port=args.port)
    service.start_polling()
    print(f"serving {args.log} on http://127.0.0.1:{server.server_port}/",
          flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        service.stop()
        server.server_close()
    return EXIT_OK


# -- bench ------------------------------------------------------------------

def _bench_config(n: int, workload: str, seed: int, duration: int) -> SimConfig:
    # ring probes the sparse regime; complete runs with a covering epsilon so
    # it shows the saturated footprint a dense clock would pay everywhere
    sparse = workload == "ring"
    return SimConfig(
        n_processes=n, seed=seed, duration=duration,
        epoch_interval=10, epsilon=4 if sparse else duration // 10 + 2,
        local_event_rate=Fraction(1, 12), message_rate=Fraction(1, 6),
        latency_min=1, latency_max=5,
        topology="ring(1)" if sparse else "complete",
    )


def cmd_bench(args) -> int:
    try:
        ns = [int(x) for x in args.n.split(",") if x]
        if not ns or any(n < 2 for n in ns):
            raise ValueError
    except ValueError:
        return _fail(EXIT_USAGE, f"--n wants a comma list of integers >= 2, "
                                 f"got {args.n!r}")
    rows = []
    for n in ns:
        result = run_simulation(_bench_config(n, args.workload, args.seed,
                                              args.duration))
        s = result.summary
        rows.append({
            "n": n,
            "workload": args.workload,
            "mean_offset_entries": s["mean_offset_entries"],
            "max_offset_entries": s["max_offset_entries"],
            "mean_counter_entries": s["mean_counter_entries"],
            "max_counter_entries": s["max_counter_entries"],
            "dense_baseline": n,
            "mean_advance_ns": s["mean_advance_ns"],
            "mean_merge_ns": s["mean_merge_ns"],
        })
        print(f"n={n:4d} {args.workload}: mean offsets "
              f"{s['mean_offset_entries']:.2f} (dense {n}), mean merge "
              f"{s['mean_merge_ns']}ns over {s['events']} events")
    Path(args.out).write_text(json.dumps({"rows": rows}, indent=2) + "\n",
                              encoding="utf-8")
    print(f"report: {args.out}")
    return EXIT_OK


# -- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hvcviz",
        description="Trace causality with sparse hybrid vector clocks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a deterministic simulation")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("order", help="order a trace log")
    p.add_argument("--log", required=True)
    p.add_argument("--mode", choices=("causal", "alg3"), default="causal")
    p.add_argument("--format", choices=("json", "tsv"), default="tsv")
    p.set_defaults(func=cmd_order)

    p = sub.add_parser("check", help="verify clocks against the truth file")
    p.add_argument("--log", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--exhaustive", action="store_true",
                   help="also require unrelated events to compare concurrent")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("serve", help="serve a trace log over HTTP")
    p.add_argument("--log", required=True)
    p.add_argument("--port", type=int, default=None,
                   help=f"default {DEFAULT_PORT}, or HVCVIZ_PORT if set")
    p.add_argument("--mode", choices=("causal", "alg3"), default="causal")
    p.add_argument("--time", choices=("ordinal", "epoch"), default="ordinal")
    p.add_argument("--poll-ms", type=int, default=DEFAULT_POLL_MS)
    p.add_argument("--assets", default=None)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("bench", help="measure clock footprint against dense")
    p.add_argument("--n", required=True, help="comma list of process counts")
    p.add_argument("--workload", choices=("ring", "complete"), default="ring")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--duration", type=int, default=500)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
