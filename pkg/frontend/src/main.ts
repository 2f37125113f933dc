/**
 * App shell: wires the HTTP client, the view store, the poller, and the
 * renderer to a toolbar. All state lives in the store; this file only
 * translates DOM events into store transitions and repaints.
 */

import { ApiError, Client } from "./api.js";
import { Poller } from "./live.js";
import { OrderMode, SchemaError, TimeMode } from "./model.js";
import { render } from "./render.js";
import { ViewState, ViewStore } from "./view.js";

export class App {
  store: ViewStore;
  poller: Poller;

  private toolbar: HTMLElement;
  private laneFilter: HTMLElement;
  private banner: HTMLElement;
  private noticeEl: HTMLElement;
  private staleEl: HTMLElement;
  private crumb: HTMLButtonElement;
  private reasonPanel: HTMLElement;
  private content: HTMLElement;
  private liveBox!: HTMLInputElement; // assigned in buildToolbar

  constructor(private root: HTMLElement, private client: Client, overrides: Partial<ViewState> = {}) {
    this.store = new ViewStore(overrides);
    this.poller = new Poller(
      () => this.poll(),
      this.store.view.pollMs,
      (stale) => {
        this.store.stale = stale;
        this.paint();
      },
    );

    root.replaceChildren();
    this.banner = el("div", "banner hidden");
    this.toolbar = el("div", "toolbar");
    this.laneFilter = el("span", "lane-filter");
    this.noticeEl = el("span", "notice hidden");
    this.staleEl = el("span", "stale-indicator hidden");
    this.staleEl.textContent = "stale: server unreachable, retrying";
    this.reasonPanel = el("div", "reason-panel hidden");
    this.content = el("div", "content");

    this.crumb = document.createElement("button");
    this.crumb.className = "breadcrumb hidden";
    this.crumb.textContent = "back to full trace";
    this.crumb.addEventListener("click", () => {
      this.store.restore();
      this.store.notice = null;
      this.paint();
    });

    this.buildToolbar();
    root.append(this.banner, this.toolbar, this.reasonPanel, this.content);
    this.root.addEventListener("click", (ev) => this.onClick(ev));
  }

  private buildToolbar(): void {
    const mode = document.createElement("select");
    mode.className = "mode";
    for (const m of ["causal", "alg3"]) {
      const o = document.createElement("option");
      o.value = m;
      o.textContent = `${m} order`;
      mode.appendChild(o);
    }
    mode.value = this.store.view.mode;
    mode.addEventListener("change", () => {
      this.store.view.mode = mode.value as OrderMode;
      void this.refetch();
    });

    const time = document.createElement("select");
    time.className = "time";
    for (const t of ["ordinal", "epoch"]) {
      const o = document.createElement("option");
      o.value = t;
      o.textContent = `${t} axis`;
      time.appendChild(o);
    }
    time.value = this.store.view.timeMode;
    time.addEventListener("change", () => {
      this.store.view.timeMode = time.value as TimeMode;
      void this.refetch();
    });

    this.liveBox = document.createElement("input");
    this.liveBox.type = "checkbox";
    this.liveBox.className = "live";
    this.liveBox.checked = this.store.view.live;
    this.liveBox.addEventListener("change", () => this.setLive(this.liveBox.checked));
    const liveLabel = document.createElement("label");
    liveLabel.append(this.liveBox, document.createTextNode(" live"));

    this.toolbar.append(mode, time, liveLabel, this.laneFilter, this.crumb, this.staleEl, this.noticeEl);
  }

  /** First load: full model, then start polling if live is on. */
  async start(): Promise<void> {
    await this.refetch();
    if (this.store.view.live) this.poller.start();
  }

  setLive(on: boolean): void {
    this.store.view.live = on;
    this.liveBox.checked = on;
    if (on) this.poller.start();
    else this.poller.stop();
  }

  /** Full fetch, used on first load and when mode or axis changes. */
  private async refetch(): Promise<void> {
    try {
      const resp = await this.client.swimlane({
        mode: this.store.view.mode,
        time: this.store.view.timeMode,
      });
      this.store.restore(); // a mode switch leaves isolation
      this.store.model = null;
      this.store.apply(resp);
      this.hideBanner();
      this.paint();
    } catch (err) {
      this.showBanner(err);
    }
  }

  /** One live tick: deltas since the cursor, reset handled by the store. */
  private async poll(): Promise<void> {
    try {
      const resp = await this.client.swimlane({
        mode: this.store.view.mode,
        time: this.store.view.timeMode,
        since: this.store.view.cursor,
      });
      this.store.apply(resp);
      this.hideBanner();
      this.paint();
    } catch (err) {
      if (err instanceof SchemaError) this.showBanner(err);
      throw err; // let the poller back off and flag stale data
    }
  }

  private onClick(ev: Event): void {
    const target = ev.target as Element | null;
    const hit = target?.closest("[data-seq]");
    if (!hit || !this.content.contains(hit)) return;
    void this.pick(Number(hit.getAttribute("data-seq")));
  }

  /** Select a record and swap to its isolation neighborhood. */
  async pick(seq: number): Promise<void> {
    this.store.select(seq);
    this.paint();
    try {
      await this.store.isolate(this.client, seq);
      this.store.notice = null;
    } catch (err) {
      if (err instanceof ApiError && err.status === 404) {
        this.store.notice = `record ${seq} not on the server yet`;
      } else if (err instanceof SchemaError) {
        this.showBanner(err);
        return;
      } else {
        this.store.notice = `isolate failed: ${String(err)}`;
      }
    }
    this.paint();
  }

  private showBanner(err: unknown): void {
    this.banner.textContent =
      err instanceof SchemaError
        ? `server sent an unexpected document: ${err.message}`
        : `request failed: ${String(err)}`;
    this.banner.classList.remove("hidden");
  }

  private hideBanner(): void {
    this.banner.classList.add("hidden");
  }

  paint(): void {
    const m = this.store.model;
    this.crumb.classList.toggle("hidden", !this.store.isolated);
    this.staleEl.classList.toggle("hidden", !this.store.stale);
    this.noticeEl.classList.toggle("hidden", this.store.notice === null);
    this.noticeEl.textContent = this.store.notice ?? "";

    // reason panel for a selected broken arrow
    const sel = this.store.view.selected;
    const brokenSel = m?.arrows.find((a) => a.seq === sel && a.broken) ?? null;
    this.reasonPanel.classList.toggle("hidden", brokenSel === null);
    if (brokenSel !== null) {
      this.reasonPanel.textContent = `message #${brokenSel.seq} failed: ${brokenSel.failure_reason}`;
    }

    this.paintLaneFilter();
    if (m !== null) this.content.replaceChildren(render(m, this.store.view));
  }

  private paintLaneFilter(): void {
    const m = this.store.model;
    this.laneFilter.replaceChildren();
    if (m === null || this.store.isolated) return;
    for (const lane of m.lanes) {
      const box = document.createElement("input");
      box.type = "checkbox";
      box.className = "lane-toggle";
      box.dataset.pid = String(lane.pid);
      box.checked = this.store.view.visible === null || this.store.view.visible.has(lane.pid);
      box.addEventListener("change", () => {
        this.store.toggleLane(lane.pid);
        this.paint();
      });
      const label = document.createElement("label");
      label.append(box, document.createTextNode(` p${lane.pid}`));
      this.laneFilter.appendChild(label);
    }
  }
}

function el(tag: string, cls: string): HTMLElement {
  const e = document.createElement(tag);
  e.className = cls;
  return e;
}

const rootEl = document.getElementById("app");
if (rootEl !== null) {
  const app = new App(rootEl, new Client(""), { live: true, pollMs: 1000 });
  void app.start();
}
