// @vitest-environment jsdom
/** Acceptance: replaying a recorded event stream against the mocked
 * service reproduces identical panel contents; alpha=0 gives
 * pixel-identical baseline/perturbed panels; the log gains exactly one
 * row per query. */

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { describe, expect, it } from "vitest";

import { ApiClient, ENDPOINTS } from "../src/api.js";
import { App } from "../src/app.js";
import type { Event } from "../src/state.js";
import { MockService } from "./mockService.js";

const HERE = dirname(fileURLToPath(import.meta.url));
const EVENTS: Event[] = JSON.parse(
  readFileSync(join(HERE, "fixtures", "events.json"), "utf8"));
const T = "2021-07-01T12:00:00+00:00";

async function settle(app: App): Promise<void> {
  let last;
  do {
    last = app.idle();
    await last;
  } while (last !== app.idle());
}

async function replay(events: Event[]): Promise<{ app: App; svc: MockService }> {
  const svc = new MockService();
  const root = document.createElement("div");
  const api = new ApiClient(svc.fetch);
  const app = new App(root, api, T, { debounce: 0, cadence: 0 });
  for (const event of events) {
    app.dispatch(event);
    await settle(app);
  }
  return { app, svc };
}

function panelHtml(app: App): string {
  // eslint-disable-next-line @typescript-eslint/no-explicit-any
  return (app as any).root.innerHTML as string;
}

describe("recorded event-stream replay", () => {
  it("reproduces identical panel contents on a second replay", async () => {
    const first = await replay(EVENTS);
    const second = await replay(EVENTS);
    expect(panelHtml(second.app)).toBe(panelHtml(first.app));
    expect(panelHtml(first.app)).toContain('id="neighbors"');
    expect(panelHtml(first.app)).toContain('id="perturb"');
  });

  it("renders 3 neighbor cards with 5-row concept tables", async () => {
    const { app } = await replay(EVENTS);
    const root = document.createElement("div");
    root.innerHTML = panelHtml(app);
    const cards = root.querySelectorAll(".neighbor-card");
    expect(cards).toHaveLength(3);
    for (const card of cards) {
      expect(card.querySelectorAll(".concepts tr")).toHaveLength(5);
    }
    expect(root.querySelectorAll(".query-card .concepts tr")).toHaveLength(5);
  });

  it("alpha=0 yields pixel-identical baseline and perturbed panels", async () => {
    const { app } = await replay(EVENTS);
    const root = document.createElement("div");
    root.innerHTML = panelHtml(app);
    const rasters = [...root.querySelectorAll("#perturb canvas[data-raster]")]
      .map((c) => c.getAttribute("data-raster"));
    expect(rasters).toHaveLength(2);
    expect(rasters[0]).not.toBeNull();
    expect(rasters[0]).toBe(rasters[1]);
  });

  it("the log gains exactly one row per query, success or error", async () => {
    const { app, svc } = await replay(EVENTS);
    expect(svc.log).toHaveLength(1); // the one successful segment query
    app.dispatch({ kind: "select-segment", id: 2 });
    await settle(app);
    expect(svc.log).toHaveLength(2);
    app.dispatch({ kind: "select-segment", id: 99 }); // service rejects
    await settle(app);
    expect(svc.log).toHaveLength(3);
    expect(svc.log[2].status).toBe("error");
    app.dispatch({ kind: "refresh-logs" });
    await settle(app);
    const root = document.createElement("div");
    root.innerHTML = panelHtml(app);
    expect(root.querySelectorAll("#log tbody tr")).toHaveLength(3);
    expect(root.querySelector("#log tbody tr")?.className).toBe("log-error");
  });

  it("animation fetches the 7 frames T-60..T", async () => {
    const { app, svc } = await replay([{ kind: "search" }]);
    svc.calls.length = 0;
    app.dispatch({ kind: "animation-start" });
    await settle(app);
    const frameCalls = svc.calls.filter((c) => c.includes("/frames"));
    expect(frameCalls.length).toBeGreaterThanOrEqual(7);
  });

  it("never calls an endpoint outside the documented /api/v1 set", async () => {
    const { svc } = await replay(EVENTS);
    const allowed = new Set<string>(ENDPOINTS);
    for (const call of svc.calls) expect(allowed.has(call)).toBe(true);
  });

  it("service errors surface as a toast without breaking state", async () => {
    const { app } = await replay([
      { kind: "search" },
      { kind: "select-segment", id: 99 },
    ]);
    const html = panelHtml(app);
    expect(html).toContain("Service error");
    expect(html).toContain("segment 99 not found");
  });
});
