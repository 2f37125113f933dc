/**
 * Semantic swimlane rendering. render() is a pure function of
 * (model, view): it builds a fresh subtree every call and touches nothing
 * outside it, so identical inputs give identical markup.
 *
 * Lanes run horizontally, one per visible process. Message arrows connect
 * lane positions; broken ones are dashed with the failure reason in their
 * tooltip and data-reason attribute. A crashed lane stops at its crash
 * marker instead of running the full width.
 */

import { Arrow, Lane, NodeDot, SwimlaneModel, xValue } from "./model.js";
import { ViewState } from "./view.js";

const SVG_NS = "http://www.w3.org/2000/svg";

const WIDTH = 960;
const LANE_H = 64;
const MARGIN = { top: 28, bottom: 18, left: 64, right: 36 };
const NODE_R = 5;

function svgEl<K extends keyof SVGElementTagNameMap>(tag: K): SVGElementTagNameMap[K] {
  return document.createElementNS(SVG_NS, tag);
}

function fmt(v: number): string {
  return v.toFixed(1);
}

interface Scale {
  (x: number): number;
  max: number;
}

function makeScale(xs: number[]): Scale {
  const lo = Math.min(...xs);
  const hi = Math.max(...xs);
  const span = hi > lo ? hi - lo : 1; // degenerate domain, avoid /0
  const inner = WIDTH - MARGIN.left - MARGIN.right;
  const f = (x: number) => MARGIN.left + ((x - lo) / span) * inner;
  return Object.assign(f, { max: MARGIN.left + inner });
}

function nodeTitle(n: NodeDot): string {
  return `#${n.seq} ${n.role} on p${n.lane} (epoch ${n.epoch}, counter ${n.counter})`;
}

function arrowTitle(a: Arrow): string {
  const base = `#${a.seq} p${a.from_lane} to p${a.to_lane}`;
  return a.broken ? `${base}, broken: ${a.failure_reason}` : base;
}

export function render(model: SwimlaneModel, view: ViewState): HTMLElement {
  const root = document.createElement("div");
  root.className = "swimlane";

  if (model.nodes.length === 0 && model.arrows.length === 0) {
    const empty = document.createElement("p");
    empty.className = "empty-state";
    empty.textContent = "no records yet";
    root.appendChild(empty);
    return root;
  }

  const visible = (l: Lane) => view.visible === null || view.visible.has(l.pid);
  const lanes = model.lanes.filter(visible);
  const shown = new Set(lanes.map((l) => l.pid));
  const laneY = new Map(lanes.map((l, i) => [l.pid, MARGIN.top + i * LANE_H + LANE_H / 2]));

  const nodes = model.nodes.filter((n) => shown.has(n.lane));
  const arrows = model.arrows.filter((a) => shown.has(a.from_lane) && shown.has(a.to_lane));

  const xs = nodes.map((n) => xValue(n.x));
  for (const a of arrows) xs.push(xValue(a.from_x), xValue(a.to_x));
  for (const l of lanes) if (l.crash_x !== null) xs.push(xValue(l.crash_x));
  if (xs.length === 0) xs.push(0);
  const scale = makeScale(xs);

  const svg = svgEl("svg");
  svg.setAttribute("viewBox", `0 0 ${WIDTH} ${MARGIN.top + lanes.length * LANE_H + MARGIN.bottom}`);
  svg.setAttribute("class", "swimlane-svg");

  const defs = svgEl("defs");
  for (const [id, cls] of [["arrow-head", "head"], ["arrow-head-broken", "head broken"]] as const) {
    const marker = svgEl("marker");
    marker.setAttribute("id", id);
    marker.setAttribute("viewBox", "0 0 10 10");
    marker.setAttribute("refX", "9");
    marker.setAttribute("refY", "5");
    marker.setAttribute("markerWidth", "7");
    marker.setAttribute("markerHeight", "7");
    marker.setAttribute("orient", "auto-start-reverse");
    const tip = svgEl("path");
    tip.setAttribute("d", "M 0 0 L 10 5 L 0 10 z");
    tip.setAttribute("class", cls);
    marker.appendChild(tip);
    defs.appendChild(marker);
  }
  svg.appendChild(defs);

  const laneGroup = svgEl("g");
  for (const l of lanes) {
    const y = laneY.get(l.pid)!;
    const crashX = l.crashed && l.crash_x !== null ? scale(xValue(l.crash_x)) : null;
    const line = svgEl("line");
    line.setAttribute("class", l.crashed ? "lane crashed" : "lane");
    line.setAttribute("data-pid", String(l.pid));
    line.setAttribute("x1", fmt(MARGIN.left - 24));
    line.setAttribute("y1", fmt(y));
    // a crashed lane terminates at the crash marker, not the full width
    line.setAttribute("x2", fmt(crashX ?? scale.max + 12));
    line.setAttribute("y2", fmt(y));
    laneGroup.appendChild(line);

    const label = svgEl("text");
    label.setAttribute("class", "lane-label");
    label.setAttribute("x", fmt(8));
    label.setAttribute("y", fmt(y + 4));
    label.textContent = `p${l.pid}`;
    laneGroup.appendChild(label);

    if (crashX !== null) {
      const mark = svgEl("path");
      mark.setAttribute("class", "crash-mark");
      mark.setAttribute("data-pid", String(l.pid));
      const r = 6;
      mark.setAttribute(
        "d",
        `M ${fmt(crashX - r)} ${fmt(y - r)} L ${fmt(crashX + r)} ${fmt(y + r)} ` +
          `M ${fmt(crashX - r)} ${fmt(y + r)} L ${fmt(crashX + r)} ${fmt(y - r)}`,
      );
      laneGroup.appendChild(mark);
    }
  }
  svg.appendChild(laneGroup);

  const arrowGroup = svgEl("g");
  for (const a of arrows) {
    const line = svgEl("line");
    let cls = a.broken ? "arrow broken" : "arrow";
    if (view.selected === a.seq) cls += " selected";
    line.setAttribute("class", cls);
    line.setAttribute("data-seq", String(a.seq));
    if (a.broken && a.failure_reason !== null) line.setAttribute("data-reason", a.failure_reason);
    line.setAttribute("x1", fmt(scale(xValue(a.from_x))));
    line.setAttribute("y1", fmt(laneY.get(a.from_lane)!));
    line.setAttribute("x2", fmt(scale(xValue(a.to_x))));
    line.setAttribute("y2", fmt(laneY.get(a.to_lane)! + (a.to_lane > a.from_lane ? -NODE_R : NODE_R)));
    line.setAttribute("marker-end", a.broken ? "url(#arrow-head-broken)" : "url(#arrow-head)");
    const tip = svgEl("title");
    tip.textContent = arrowTitle(a);
    line.appendChild(tip);
    arrowGroup.appendChild(line);
  }
  svg.appendChild(arrowGroup);

  const nodeGroup = svgEl("g");
  for (const n of nodes) {
    const dot = svgEl("circle");
    let cls = `node role-${n.role}`;
    if (view.selected === n.seq) cls += " selected";
    dot.setAttribute("class", cls);
    dot.setAttribute("data-seq", String(n.seq));
    dot.setAttribute("data-lane", String(n.lane));
    dot.setAttribute("cx", fmt(scale(xValue(n.x))));
    dot.setAttribute("cy", fmt(laneY.get(n.lane)!));
    dot.setAttribute("r", String(NODE_R));
    const tip = svgEl("title");
    tip.textContent = nodeTitle(n);
    dot.appendChild(tip);
    nodeGroup.appendChild(dot);
  }
  svg.appendChild(nodeGroup);

  root.appendChild(svg);
  return root;
}
