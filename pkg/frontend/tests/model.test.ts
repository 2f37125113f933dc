import { describe, expect, it } from "vitest";
import {
  applyResponse,
  asModel,
  asResponse,
  SchemaError,
  SwimlaneModel,
  xValue,
} from "../src/model.js";
import { fixtureResponse, fixtureText } from "./helpers.js";

describe("schema validation", () => {
  it("accepts a served swimlane document", () => {
    const resp = fixtureResponse();
    expect(resp.cursor).toBe(7);
    expect(resp.reset).toBe(true);
    expect(resp.model.time_mode).toBe("ordinal");
    expect(resp.model.lanes.map((l) => l.pid)).toEqual([0, 1, 2]);
    expect(resp.model.arrows).toHaveLength(8);
    expect(resp.model.arrows.filter((a) => a.broken)).toHaveLength(3);
  });

  it("rejects wrong field types with the offending path", () => {
    expect(() => asModel({ time_mode: "ordinal", lanes: [], nodes: [], arrows: 5 })).toThrow(SchemaError);
    expect(() => asModel({ time_mode: "sideways", lanes: [], nodes: [], arrows: [] })).toThrow(/time_mode/);

    const doc = JSON.parse(fixtureText("swimlane.json"));
    doc.model.nodes[0].seq = "zero";
    expect(() => asResponse(doc)).toThrow(/nodes\[0\]\.seq/);
  });

  it("rejects a node with an unknown role", () => {
    const doc = JSON.parse(fixtureText("swimlane.json"));
    doc.model.nodes[2].role = "teleport";
    expect(() => asResponse(doc)).toThrow(/role/);
  });

  it("rejects a non-object response", () => {
    expect(() => asResponse([1, 2, 3])).toThrow(SchemaError);
    expect(() => asResponse(null)).toThrow(SchemaError);
  });
});

const laneA = { pid: 0, crashed: false, crash_x: null, records: 2 };
const laneB = { pid: 1, crashed: false, crash_x: null, records: 1 };

function node(seq: number, lane: number, x: number): SwimlaneModel["nodes"][number] {
  return { seq, lane, role: "local", x, epoch: 1, counter: 0 };
}

describe("applyResponse", () => {
  it("replaces the model on reset", () => {
    const current: SwimlaneModel = { time_mode: "ordinal", lanes: [laneA], nodes: [node(0, 0, 0)], arrows: [] };
    const next: SwimlaneModel = { time_mode: "ordinal", lanes: [laneA, laneB], nodes: [node(5, 1, 0)], arrows: [] };
    const out = applyResponse(current, { cursor: 5, reset: true, model: next });
    expect(out).toBe(next);
  });

  it("appends nodes and arrows on a delta and takes lanes from the delta", () => {
    const current: SwimlaneModel = { time_mode: "ordinal", lanes: [laneA], nodes: [node(0, 0, 0)], arrows: [] };
    const freshLanes = [{ ...laneA, records: 3 }, laneB];
    const delta: SwimlaneModel = { time_mode: "ordinal", lanes: freshLanes, nodes: [node(1, 0, 1)], arrows: [] };
    const out = applyResponse(current, { cursor: 1, reset: false, model: delta });
    expect(out.nodes.map((n) => n.seq)).toEqual([0, 1]);
    expect(out.lanes).toBe(freshLanes); // lane list always arrives in full
  });

  it("treats the first response as a full model", () => {
    const resp = fixtureResponse();
    expect(applyResponse(null, resp)).toBe(resp.model);
  });
});

describe("xValue", () => {
  it("passes integers through and parses decimal strings", () => {
    expect(xValue(4)).toBe(4);
    expect(xValue("3.666666")).toBeCloseTo(3.666666, 6);
  });
});
