/**
 * Contract suite against the real trace service: spawns `hvcviz serve` on a
 * temp copy of the 3-process failure trace and drives the app through the
 * live HTTP API, the same way the browser would.
 */

import { ChildProcess, spawn } from "node:child_process";
import { appendFileSync, copyFileSync, mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join, resolve } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { Client } from "../src/api.js";
import { App } from "../src/main.js";
import { fixturePath, until } from "./helpers.js";

const POLL_MS = 400;

let proc: ChildProcess;
let base: string;
let logPath: string;

beforeAll(async () => {
  const dir = mkdtempSync(join(tmpdir(), "hvcviz-ui-"));
  logPath = join(dir, "trace.jsonl");
  copyFileSync(fixturePath("failures.jsonl"), logPath);
  const assets = resolve("static");
  proc = spawn(
    "python3",
    ["-m", "hvcviz.cli", "serve", "--log", logPath, "--port", "0", "--poll-ms", "100", "--assets", assets],
    { stdio: ["ignore", "pipe", "inherit"] },
  );
  base = await new Promise<string>((resolve, reject) => {
    let buf = "";
    proc.stdout!.on("data", (chunk: Buffer) => {
      buf += String(chunk);
      const m = buf.match(/http:\/\/127\.0\.0\.1:(\d+)\//);
      if (m) resolve(`http://127.0.0.1:${m[1]}`);
    });
    proc.on("exit", (code) => reject(new Error(`service exited early with ${code}`)));
    setTimeout(() => reject(new Error("service did not print its address")), 15_000);
  });
});

afterAll(() => {
  proc?.kill("SIGINT");
});

function nodeShapes(root: ParentNode): string[] {
  return [...root.querySelectorAll(".node")]
    .map((n) => `${n.getAttribute("data-seq")}@${n.getAttribute("data-lane")}`)
    .sort();
}

describe("UI contract against the live service", () => {
  it("renders lanes and flagged failures, isolates on click, and picks up appended records", async () => {
    const root = document.createElement("div");
    document.body.appendChild(root);
    const client = new Client(base);
    const app = new App(root, client, { pollMs: POLL_MS });
    await app.start();

    // one lane per process
    const procs = await client.processes();
    expect(root.querySelectorAll(".lane")).toHaveLength(procs.processes.length);
    expect(root.querySelectorAll(".lane")).toHaveLength(3);

    // every broken record flagged, matching the failure report
    const report = await client.failures();
    const flagged = [...root.querySelectorAll(".arrow.broken")].map((a) => Number(a.getAttribute("data-seq")));
    const reported = report.processes.flatMap((p) => p.failures.map((f) => f.seq));
    expect(flagged.sort()).toEqual(reported.sort());
    expect(flagged).toHaveLength(3);

    // clicking a record issues /isolate and the view matches the endpoint
    const target = root.querySelector('.node[data-seq="3"]')!;
    target.dispatchEvent(new MouseEvent("click", { bubbles: true }));
    await until(() => app.store.isolated, 5000, "isolation view");
    const want = await client.isolate(3, 1);
    const wantShapes = want.nodes.map((n) => `${n.seq}@${n.lane}`).sort();
    expect(nodeShapes(root)).toEqual(wantShapes);
    expect(root.querySelectorAll(".arrow")).toHaveLength(want.arrows.length);

    // breadcrumb back to the full trace
    root.querySelector(".breadcrumb")!.dispatchEvent(new MouseEvent("click", { bubbles: true }));
    expect(root.querySelectorAll(".arrow")).toHaveLength(8);

    // live refresh: two appended records show up within two poll periods
    app.setLive(true);
    appendFileSync(logPath, readFileSync(fixturePath("append.jsonl")));
    await until(
      () => root.querySelector('.node[data-seq="8"]') !== null && root.querySelector('.node[data-seq="9"]') !== null,
      2 * POLL_MS,
      "appended records",
    );
    app.setLive(false);

    // the default reporter swallows console.log from workers
    process.stdout.write("\nCRITERION 10: PASS\n");
  });

  it("serves the UI bundle from the asset directory", async () => {
    const page = await fetch(`${base}/`);
    expect(page.status).toBe(200);
    expect(await page.text()).toContain('<div id="app">');
    const css = await fetch(`${base}/style.css`);
    expect(css.status).toBe(200);
    expect(css.headers.get("content-type")).toContain("text/css");
  });
});
