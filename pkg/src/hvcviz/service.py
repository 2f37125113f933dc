"""Read-only HTTP service over a live trace log.

One background thread tails the log (plain re-read per poll; logs are desk
sized) and swaps an immutable snapshot. Request threads derive ordered
traces and swimlane models lazily per (mode, time_mode) and serve them from
under a single lock, so every response sees one consistent snapshot.

Clients keep their view fresh by polling /api/swimlane with the cursor from
the previous response. The reply is {"cursor", "reset", "model"}: with
reset=false the model holds only elements from records past the cursor and
the client appends them; with reset=true the model is complete and replaces
client state. A reset happens whenever appended records do not merely extend
the ordered output (a late record can sort into the middle and shift every
position after it), so replaying deltas always reconstructs the full model
exactly. Lanes are small and included in full in every response.
"""

from __future__ import annotations

import json
import logging
import mimetypes
import threading
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Optional
from urllib.parse import parse_qs, urlparse

from hvcviz.order import (
    ORDER_MODES,
    TIME_MODES,
    OrderedTrace,
    SwimlaneModel,
    build_swimlane,
    failure_report,
    isolate,
    order_traces,
)
from hvcviz.tracelog import LogIssue, TraceRecord, read_log_file

log = logging.getLogger("hvcviz.service")

DEFAULT_PORT = 8080
DEFAULT_POLL_MS = 500


@dataclass(frozen=True)
class _Snapshot:
    version: int
    cursor: int  # last ingested seq, -1 before any record
    records: tuple[TraceRecord, ...]
    issues: tuple[LogIssue, ...]


@dataclass
class _View:
    version: int
    trace: OrderedTrace
    model: SwimlaneModel
    floor: int  # smallest `since` that may still be answered with a delta


class TraceService:
    """Ingestion state plus the response builders, independent of HTTP."""

    def __init__(self, log_path, mode: str = "causal", time_mode: str = "ordinal",
                 poll_ms: int = DEFAULT_POLL_MS, assets_dir=None):
        if mode not in ORDER_MODES:
            raise ValueError(f"mode must be one of {ORDER_MODES}, got {mode!r}")
        if time_mode not in TIME_MODES:
            raise ValueError(f"time_mode must be one of {TIME_MODES}, got {time_mode!r}")
        if poll_ms < 1:
            raise ValueError("poll_ms must be positive")
        self.log_path = Path(log_path)
        self.mode = mode
        self.time_mode = time_mode
        self.poll_ms = poll_ms
        self.assets_dir = Path(assets_dir).resolve() if assets_dir else None
        self._lock = threading.Lock()
        self._stop = threading.Event()
        self._thread: Optional[threading.Thread] = None
        self._snapshot = _Snapshot(0, -1, (), ())
        self._views: dict[tuple[str, str], _View] = {}
        if not self.log_path.exists():
            raise FileNotFoundError(f"trace log not found: {self.log_path}")
        self.refresh()

    # -- ingestion ---------------------------------------------------------

    def refresh(self) -> bool:
        """Re-read the log; swap in a new snapshot when it grew."""
        try:
            records, issues = read_log_file(self.log_path)
        except OSError:
            return False  # transient read problem; keep serving the old state
        with self._lock:
            cur = self._snapshot
            cursor = records[-1].seq if records else -1
            if cursor <= cur.cursor:
                return False
            self._snapshot = _Snapshot(cur.version + 1, cursor,
                                       tuple(records), tuple(issues))
            return True

    def _poll_loop(self) -> None:
        while not self._stop.wait(self.poll_ms / 1000.0):
            self.refresh()

    def start_polling(self) -> None:
        if self._thread is None:
            self._thread = threading.Thread(target=self._poll_loop,
                                            name="hvcviz-ingest", daemon=True)
            self._thread.start()

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join()
            self._thread = None

    # -- views -------------------------------------------------------------

    def _view(self, mode: str, time_mode: str) -> tuple[_View, int]:
        """Current view for the given axes, rebuilt if the snapshot moved."""
        with self._lock:
            snap = self._snapshot
            key = (mode, time_mode)
            view = self._views.get(key)
            if view is None or view.version != snap.version:
                trace = order_traces(snap.records, mode)
                model = build_swimlane(trace, time_mode)
                if view is None:
                    floor = -1
                elif (view.model.nodes == model.nodes[:len(view.model.nodes)]
                      and view.model.arrows == model.arrows[:len(view.model.arrows)]):
                    floor = view.floor  # pure extension: old deltas still valid
                else:
                    floor = snap.cursor  # reordering: only a full model is safe
                view = _View(snap.version, trace, model, floor)
                self._views[key] = view
            return view, snap.cursor

    # -- responses ---------------------------------------------------------

    def swimlane_response(self, mode: Optional[str] = None,
                          time_mode: Optional[str] = None,
                          since: Optional[int] = None) -> dict:
        mode = mode or self.mode
        time_mode = time_mode or self.time_mode
        if mode not in ORDER_MODES:
            raise ValueError(f"mode must be one of {ORDER_MODES}, got {mode!r}")
        if time_mode not in TIME_MODES:
            raise ValueError(f"time_mode must be one of {TIME_MODES}, got {time_mode!r}")
        view, cursor = self._view(mode, time_mode)
        doc = view.model.to_json_dict()
        if since is None or since < view.floor or since > cursor:
            return {"cursor": cursor, "reset": True, "model": doc}
        seqs = {r.seq for r in view.trace.records if r.seq > since}
        doc["nodes"] = [n for n in doc["nodes"] if n["seq"] in seqs]
        doc["arrows"] = [a for a in doc["arrows"] if a["seq"] in seqs]
        return {"cursor": cursor, "reset": False, "model": doc}

    def isolate_response(self, seq: int, depth: int) -> dict:
        view, _ = self._view(self.mode, self.time_mode)
        return isolate(view.trace, seq, depth).to_json_dict()

    def failures_response(self) -> dict:
        view, _ = self._view(self.mode, self.time_mode)
        return failure_report(view.trace).to_json_dict()

    def processes_response(self) -> dict:
        view, cursor = self._view(self.mode, self.time_mode)
        doc = view.model.to_json_dict()
        return {"cursor": cursor, "processes": doc["lanes"]}


class _Handler(BaseHTTPRequestHandler):
    service: TraceService  # set by make_server on the subclass

    # -- plumbing ----------------------------------------------------------

    def log_message(self, fmt, *args):  # noqa: N802 (stdlib name)
        log.debug("%s %s", self.address_string(), fmt % args)

    def _send_json(self, status: int, doc: dict) -> None:
        body = json.dumps(doc).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _bad_request(self, message: str) -> None:
        self._send_json(400, {"error": message})

    @staticmethod
    def _one(params: dict, key: str) -> Optional[str]:
        values = params.get(key, [])
        if len(values) > 1:
            raise ValueError(f"duplicate parameter {key}")
        return values[0] if values else None

    # -- routes ------------------------------------------------------------

    def do_GET(self) -> None:  # noqa: N802 (stdlib name)
        url = urlparse(self.path)
        parts = [p for p in url.path.split("/") if p]
        try:
            params = parse_qs(url.query, strict_parsing=bool(url.query))
        except ValueError:
            self._bad_request("malformed query string")
            return
        try:
            if url.path == "/healthz":
                self._send_json(200, {"status": "ok"})
            elif url.path == "/api/swimlane":
                self._swimlane(params)
            elif (len(parts) == 4 and parts[:2] == ["api", "records"]
                  and parts[3] == "isolate"):
                self._isolate(parts[2], params)
            elif url.path == "/api/failures":
                self._send_json(200, self.service.failures_response())
            elif url.path == "/api/processes":
                self._send_json(200, self.service.processes_response())
            elif parts[:1] == ["api"]:
                self._send_json(404, {"error": f"no such endpoint: {url.path}"})
            else:
                self._static(url.path)
        except BrokenPipeError:
            pass
        except Exception as exc:  # corrupt log and kin: report, keep serving
            log.exception("request failed: %s", self.path)
            try:
                self._send_json(500, {"error": str(exc)})
            except OSError:
                pass

    def _swimlane(self, params: dict) -> None:
        try:
            raw_since = self._one(params, "since")
            since = int(raw_since) if raw_since is not None else None
            doc = self.service.swimlane_response(self._one(params, "mode"),
                                                 self._one(params, "time"),
                                                 since)
        except ValueError as exc:
            self._bad_request(str(exc))
            return
        self._send_json(200, doc)

    def _isolate(self, raw_seq: str, params: dict) -> None:
        try:
            seq = int(raw_seq)
            raw_depth = self._one(params, "depth")
            depth = int(raw_depth) if raw_depth is not None else 1
            doc = self.service.isolate_response(seq, depth)
        except KeyError:
            self._send_json(404, {"error": f"unknown record seq {raw_seq}"})
            return
        except ValueError as exc:
            self._bad_request(str(exc))
            return
        self._send_json(200, doc)

    def _static(self, path: str) -> None:
        root = self.service.assets_dir
        if root is None:
            self._send_json(404, {"error": "no asset directory configured"})
            return
        name = path.lstrip("/") or "index.html"
        target = (root / name).resolve()
        if not target.is_relative_to(root) or not target.is_file():
            self._send_json(404, {"error": f"not found: {path}"})
            return
        ctype = mimetypes.guess_type(target.name)[0] or "application/octet-stream"
        body = target.read_bytes()
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


def make_server(service: TraceService, port: int = DEFAULT_PORT,
                host: str = "127.0.0.1") -> ThreadingHTTPServer:
    """Bind the HTTP server; localhost only unless told otherwise."""
    handler = type("BoundHandler", (_Handler,), {"service": service})
    return ThreadingHTTPServer((host, port), handler)


def serve(log_path, port: int = DEFAULT_PORT, host: str = "127.0.0.1",
          mode: str = "causal", time_mode: str = "ordinal",
          poll_ms: int = DEFAULT_POLL_MS, assets_dir=None) -> None:
    """Run until interrupted. The log is only ever read."""
    service = TraceService(log_path, mode, time_mode, poll_ms, assets_dir)
    server = make_server(service, port, host)
    service.start_polling()
    log.info("serving %s on http://%s:%d/", log_path, host, server.server_port)
    try:
        server.serve_forever()
    finally:
        service.stop()
        server.server_close()
