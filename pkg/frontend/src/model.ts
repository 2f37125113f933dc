/**
 * Types for the trace service JSON plus the client side of its delta
 * protocol. Shapes mirror the server exactly; everything coming off the
 * wire goes through asResponse/asModel before the rest of the app sees it.
 */

export type OrderMode = "causal" | "alg3";
export type TimeMode = "ordinal" | "epoch";
export type Role = "send" | "recv" | "local" | "poll";

// ordinal positions are integers, epoch positions arrive as decimal strings
export type Pos = number | string;

export interface Lane {
  pid: number;
  crashed: boolean;
  crash_x: Pos | null;
  records: number;
}

export interface NodeDot {
  seq: number;
  lane: number;
  role: Role;
  x: Pos;
  epoch: number;
  counter: number;
}

export interface Arrow {
  seq: number;
  from_lane: number;
  to_lane: number;
  from_x: Pos;
  to_x: Pos;
  broken: boolean;
  failure_reason: string | null;
}

export interface SwimlaneModel {
  time_mode: TimeMode;
  lanes: Lane[];
  nodes: NodeDot[];
  arrows: Arrow[];
}

export interface SwimlaneResponse {
  cursor: number;
  reset: boolean;
  model: SwimlaneModel;
}

export class SchemaError extends Error {}

function fail(path: string, want: string, got: unknown): never {
  throw new SchemaError(`${path}: expected ${want}, got ${JSON.stringify(got)}`);
}

function num(doc: Record<string, unknown>, path: string, key: string): number {
  const v = doc[key];
  if (typeof v !== "number") fail(`${path}.${key}`, "number", v);
  return v;
}

function bool(doc: Record<string, unknown>, path: string, key: string): boolean {
  const v = doc[key];
  if (typeof v !== "boolean") fail(`${path}.${key}`, "boolean", v);
  return v;
}

function pos(doc: Record<string, unknown>, path: string, key: string): Pos {
  const v = doc[key];
  if (typeof v !== "number" && typeof v !== "string") fail(`${path}.${key}`, "position", v);
  return v;
}

function obj(v: unknown, path: string): Record<string, unknown> {
  if (typeof v !== "object" || v === null || Array.isArray(v)) fail(path, "object", v);
  return v as Record<string, unknown>;
}

function arr(doc: Record<string, unknown>, path: string, key: string): unknown[] {
  const v = doc[key];
  if (!Array.isArray(v)) fail(`${path}.${key}`, "array", v);
  return v;
}

/** Validate a swimlane model document. Throws SchemaError, never partial. */
export function asModel(v: unknown, path = "model"): SwimlaneModel {
  const doc = obj(v, path);
  const tm = doc["time_mode"];
  if (tm !== "ordinal" && tm !== "epoch") fail(`${path}.time_mode`, "ordinal|epoch", tm);
  const lanes = arr(doc, path, "lanes").map((l, i) => {
    const d = obj(l, `${path}.lanes[${i}]`);
    const p = `${path}.lanes[${i}]`;
    const crash = d["crash_x"];
    return {
      pid: num(d, p, "pid"),
      crashed: bool(d, p, "crashed"),
      crash_x: crash === null ? null : pos(d, p, "crash_x"),
      records: num(d, p, "records"),
    };
  });
  const nodes = arr(doc, path, "nodes").map((n, i) => {
    const d = obj(n, `${path}.nodes[${i}]`);
    const p = `${path}.nodes[${i}]`;
    const role = d["role"];
    if (role !== "send" && role !== "recv" && role !== "local" && role !== "poll") {
      fail(`${p}.role`, "send|recv|local|poll", role);
    }
    return {
      seq: num(d, p, "seq"),
      lane: num(d, p, "lane"),
      role: role as Role,
      x: pos(d, p, "x"),
      epoch: num(d, p, "epoch"),
      counter: num(d, p, "counter"),
    };
  });
  const arrows = arr(doc, path, "arrows").map((a, i) => {
    const d = obj(a, `${path}.arrows[${i}]`);
    const p = `${path}.arrows[${i}]`;
    const reason = d["failure_reason"];
    if (reason !== null && typeof reason !== "string") fail(`${p}.failure_reason`, "string|null", reason);
    return {
      seq: num(d, p, "seq"),
      from_lane: num(d, p, "from_lane"),
      to_lane: num(d, p, "to_lane"),
      from_x: pos(d, p, "from_x"),
      to_x: pos(d, p, "to_x"),
      broken: bool(d, p, "broken"),
      failure_reason: reason,
    };
  });
  return { time_mode: tm, lanes, nodes, arrows };
}

export function asResponse(v: unknown): SwimlaneResponse {
  const doc = obj(v, "response");
  return {
    cursor: num(doc, "response", "cursor"),
    reset: bool(doc, "response", "reset"),
    model: asModel(doc["model"], "response.model"),
  };
}

/**
 * Fold one poll response into the client's model. Resets replace wholesale;
 * deltas append nodes and arrows and take the lane list as-is (the server
 * always sends lanes in full, so crash state and record counts stay fresh).
 */
export function applyResponse(current: SwimlaneModel | null, resp: SwimlaneResponse): SwimlaneModel {
  if (resp.reset || current === null) return resp.model;
  return {
    time_mode: resp.model.time_mode,
    lanes: resp.model.lanes,
    nodes: current.nodes.concat(resp.model.nodes),
    arrows: current.arrows.concat(resp.model.arrows),
  };
}

/** Numeric value of a position (epoch positions arrive as decimal strings). */
export function xValue(p: Pos): number {
  return typeof p === "number" ? p : parseFloat(p);
}
