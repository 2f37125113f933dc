/**
 * Client view state and its transitions. The store owns the swimlane model,
 * the cursor, lane visibility, selection, and the isolation stack; rendering
 * reads it, never writes it.
 */

import { Client } from "./api.js";
import {
  applyResponse,
  OrderMode,
  SwimlaneModel,
  SwimlaneResponse,
  TimeMode,
} from "./model.js";

export interface ViewState {
  cursor: number; // last seq folded into the model, -1 before the first fetch
  mode: OrderMode;
  timeMode: TimeMode;
  visible: Set<number> | null; // null = every lane
  selected: number | null; // record seq
  isolationDepth: number;
  live: boolean;
  pollMs: number;
}

export function initialView(overrides: Partial<ViewState> = {}): ViewState {
  return {
    cursor: -1,
    mode: "causal",
    timeMode: "ordinal",
    visible: null,
    selected: null,
    isolationDepth: 1,
    live: false,
    pollMs: 1000,
    ...overrides,
  };
}

export class ViewStore {
  view: ViewState;
  model: SwimlaneModel | null = null;
  stale = false;
  notice: string | null = null;

  // full-trace state stashed while an isolation subset is shown
  private saved: { model: SwimlaneModel; selected: number | null } | null = null;

  constructor(overrides: Partial<ViewState> = {}) {
    this.view = initialView(overrides);
  }

  get isolated(): boolean {
    return this.saved !== null;
  }

  /** Fold a swimlane poll response in. Isolation views ignore live data. */
  apply(resp: SwimlaneResponse): void {
    if (this.saved !== null) {
      // keep the stashed full trace fresh instead
      this.saved.model = applyResponse(this.saved.model, resp);
    } else {
      this.model = applyResponse(this.model, resp);
      this.dropStaleSelection();
    }
    if (resp.cursor > this.view.cursor) this.view.cursor = resp.cursor;
  }

  has(seq: number): boolean {
    const m = this.model;
    if (m === null) return false;
    return m.nodes.some((n) => n.seq === seq) || m.arrows.some((a) => a.seq === seq);
  }

  select(seq: number | null): void {
    if (seq !== null && !this.has(seq)) return; // selection must exist in the model
    this.view.selected = seq;
  }

  private dropStaleSelection(): void {
    if (this.view.selected !== null && !this.has(this.view.selected)) {
      this.view.selected = null;
    }
  }

  /** Swap the view to the isolation subset around the selected record. */
  async isolate(client: Pick<Client, "isolate">, seq: number): Promise<void> {
    if (this.model === null || !this.has(seq)) return;
    const sub = await client.isolate(seq, this.view.isolationDepth);
    if (this.saved === null) {
      this.saved = { model: this.model, selected: this.view.selected };
    }
    this.model = sub;
    this.view.selected = seq;
  }

  /** Breadcrumb: back to the full trace, no refetch. */
  restore(): void {
    if (this.saved === null) return;
    this.model = this.saved.model;
    this.view.selected = this.saved.selected;
    this.saved = null;
    this.dropStaleSelection();
  }

  toggleLane(pid: number): void {
    const m = this.model;
    if (m === null) return;
    const all = m.lanes.map((l) => l.pid);
    const cur = this.view.visible === null ? new Set(all) : new Set(this.view.visible);
    if (cur.has(pid)) cur.delete(pid);
    else cur.add(pid);
    this.view.visible = cur.size === all.length && all.every((p) => cur.has(p)) ? null : cur;
  }
}
