import { describe, expect, it } from "vitest";
import { SwimlaneModel } from "../src/model.js";
import { render } from "../src/render.js";
import { initialView } from "../src/view.js";
import { fixtureResponse } from "./helpers.js";

const model = fixtureResponse().model;

function seqs(root: HTMLElement, selector: string): number[] {
  return [...root.querySelectorAll(selector)].map((e) => Number(e.getAttribute("data-seq"))).sort((a, b) => a - b);
}

describe("render", () => {
  it("draws one lane per process and every message arrow", () => {
    const out = render(model, initialView());
    expect(out.querySelectorAll(".lane")).toHaveLength(3);
    expect(out.querySelectorAll(".lane-label")).toHaveLength(3);
    expect(out.querySelectorAll(".arrow")).toHaveLength(8);
    expect(out.querySelectorAll(".node")).toHaveLength(16); // send and recv ends
  });

  it("flags broken arrows with dash class and reason", () => {
    const out = render(model, initialView());
    const broken = [...out.querySelectorAll(".arrow.broken")];
    expect(broken.map((b) => Number(b.getAttribute("data-seq"))).sort()).toEqual([3, 5, 7]);
    for (const b of broken) {
      expect(b.getAttribute("data-reason")).toBe("message failure injected");
      expect(b.querySelector("title")?.textContent).toContain("message failure injected");
    }
  });

  it("is a pure function of model and view", () => {
    const a = render(model, initialView({ selected: 3 }));
    const b = render(model, initialView({ selected: 3 }));
    expect(a.outerHTML).toBe(b.outerHTML);
  });

  it("shows an empty state for an empty model", () => {
    const empty: SwimlaneModel = { time_mode: "ordinal", lanes: [], nodes: [], arrows: [] };
    const out = render(empty, initialView());
    expect(out.querySelector(".empty-state")?.textContent).toBe("no records yet");
    expect(out.querySelector("svg")).toBeNull();
  });

  it("hides arrows incident to a hidden lane and keeps the rest", () => {
    const out = render(model, initialView({ visible: new Set([0, 2]) }));
    expect(out.querySelectorAll(".lane")).toHaveLength(2);
    expect(seqs(out, ".arrow")).toEqual([0, 3, 4, 7]); // 1, 2, 5, 6 touch lane 1
    // messages touching lane 1 keep their endpoint on the still-visible lane
    expect(seqs(out, ".node")).toEqual([0, 0, 1, 2, 3, 3, 4, 4, 5, 6, 7, 7]);
  });

  it("marks the selected record", () => {
    const out = render(model, initialView({ selected: 3 }));
    const sel = out.querySelectorAll(".selected");
    expect(sel.length).toBeGreaterThan(0);
    for (const e of sel) expect(e.getAttribute("data-seq")).toBe("3");
  });

  it("terminates a crashed lane at its crash marker", () => {
    const crashed: SwimlaneModel = {
      time_mode: "ordinal",
      lanes: [
        { pid: 0, crashed: true, crash_x: 4, records: 3 },
        { pid: 1, crashed: false, crash_x: null, records: 2 },
      ],
      nodes: [
        { seq: 0, lane: 0, role: "local", x: 0, epoch: 1, counter: 1 },
        { seq: 1, lane: 1, role: "local", x: 1, epoch: 1, counter: 1 },
        { seq: 2, lane: 0, role: "local", x: 2, epoch: 2, counter: 1 },
      ],
      arrows: [],
    };
    const out = render(crashed, initialView());
    const mark = out.querySelector('.crash-mark[data-pid="0"]');
    expect(mark).not.toBeNull();
    const dead = out.querySelector('.lane[data-pid="0"]')!;
    const alive = out.querySelector('.lane[data-pid="1"]')!;
    expect(Number(dead.getAttribute("x2"))).toBeLessThan(Number(alive.getAttribute("x2")));
    expect(dead.getAttribute("class")).toContain("crashed");
  });
});
