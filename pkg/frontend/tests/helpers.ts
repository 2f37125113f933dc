import { readFileSync } from "node:fs";
import { resolve } from "node:path";
import { asModel, asResponse, SwimlaneModel, SwimlaneResponse } from "../src/model.js";

// vitest runs with the package root as cwd
export function fixturePath(name: string): string {
  return resolve("tests/fixtures", name);
}

export function fixtureText(name: string): string {
  return readFileSync(fixturePath(name), "utf8");
}

/** Full /api/swimlane response captured from the service for the 3-process failure trace. */
export function fixtureResponse(): SwimlaneResponse {
  return asResponse(JSON.parse(fixtureText("swimlane.json")));
}

/** /api/records/3/isolate?depth=1 captured from the same trace. */
export function fixtureIsolate(): SwimlaneModel {
  return asModel(JSON.parse(fixtureText("isolate_3_1.json")));
}

export async function until(cond: () => boolean, ms: number, what = "condition"): Promise<void> {
  const t0 = Date.now();
  while (!cond()) {
    if (Date.now() - t0 > ms) throw new Error(`${what} not met within ${ms}ms`);
    await new Promise((r) => setTimeout(r, 20));
  }
}
