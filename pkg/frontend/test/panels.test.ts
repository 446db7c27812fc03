// @vitest-environment jsdom
import { describe, expect, it } from "vitest";

import {
  CLASS_BOUNDARIES, PALETTE, classifyRain, decodeGrid, rainToClass, rasterize,
} from "../src/palette.js";
import { renderLog, renderNeighbors, renderPerturb } from "../src/panels.js";
import { initialState } from "../src/state.js";
import type { QueryResponse } from "../src/types.js";

const T = "2021-07-01T12:00:00+00:00";

function parse(html: string): HTMLElement {
  const div = document.createElement("div");
  div.innerHTML = html;
  return div;
}

describe("palette", () => {
  it("has eight classes matching the intensity boundaries", () => {
    expect(PALETTE).toHaveLength(8);
    expect(CLASS_BOUNDARIES).toHaveLength(8);
    expect(rainToClass(0)).toBe(0);
    expect(rainToClass(0.1)).toBe(1);
    expect(rainToClass(29.9)).toBe(6);
    expect(rainToClass(1000)).toBe(7);
  });

  it("round-trips a float32 grid through base64", () => {
    const grid = new Float32Array([0, 0.5, 12.25, 31]);
    const bytes = new Uint8Array(grid.buffer);
    let bin = "";
    for (const b of bytes) bin += String.fromCharCode(b);
    const decoded = decodeGrid(btoa(bin));
    expect([...decoded]).toEqual([0, 0.5, 12.25, 31]);
    expect([...classifyRain(decoded)]).toEqual([0, 1, 4, 7]);
  });

  it("rasterizes class 0 as the first palette color, opaque", () => {
    const rgba = rasterize([0]);
    expect([...rgba]).toEqual([0xf7, 0xf7, 0xf7, 255]);
  });
});

describe("neighbor panel", () => {
  const result: QueryResponse = {
    query: { timestamp: T, segment_id: 1 },
    concepts_used: [0, 1],
    query_concepts: [
      { concept_id: 0, probability: 0.4, uncertainty: 0.01 },
      { concept_id: 1, probability: 0.9, uncertainty: 0.05 },
      { concept_id: 2, probability: 0.7, uncertainty: 0.02 },
    ],
    exhausted: false,
    concept_names: { "0": "band", "1": "cluster", "2": "drift-east" },
    neighbors: [{
      row: 3, distance: 1.5, timestamp: "2021-03-02T08:30:00+00:00",
      segment_id: 2,
      top_concepts: [
        { concept_id: 2, probability: 0.2, uncertainty: 0.1 },
        { concept_id: 0, probability: 0.8, uncertainty: 0.004 },
      ],
    }],
  };

  it("sorts concept rows by probability descending", () => {
    const dom = parse(renderNeighbors({ ...initialState(T), neighborPanel: result }));
    const queryRows = [...dom.querySelectorAll(".query-card .concepts tr")]
      .map((tr) => tr.textContent ?? "");
    expect(queryRows[0]).toContain("cluster");
    expect(queryRows[1]).toContain("drift-east");
    expect(queryRows[2]).toContain("band");
  });

  it("shows probability with uncertainty in parentheses", () => {
    const dom = parse(renderNeighbors({ ...initialState(T), neighborPanel: result }));
    const cell = dom.querySelector(".neighbor-card .concepts tr td:last-child");
    expect(cell?.textContent).toContain("0.800 (0.004)");
  });

  it("renders the query segment's own table beside the neighbors", () => {
    const dom = parse(renderNeighbors({ ...initialState(T), neighborPanel: result }));
    expect(dom.querySelector(".query-card")).not.toBeNull();
    expect(dom.querySelectorAll(".neighbor-card")).toHaveLength(1);
  });

  it("shows an advisory banner when the temporal filter exhausted", () => {
    const dom = parse(renderNeighbors({
      ...initialState(T),
      neighborPanel: { ...result, exhausted: true, neighbors: [] },
    }));
    expect(dom.querySelector(".banner")?.textContent)
      .toContain("Temporal filter exhausted");
  });
});

describe("perturb panel", () => {
  it("alpha=0 renders pixel-identical baseline and perturbed rasters", () => {
    const grid = [[0, 1], [2, 3]];
    const dom = parse(renderPerturb({
      ...initialState(T), alpha: 0,
      perturb: {
        time: T, concept_id: 1, shape: [2, 2],
        baseline: grid, perturbed: { "0": grid.map((r) => [...r]) },
      },
    }));
    const rasters = [...dom.querySelectorAll("canvas[data-raster]")]
      .map((c) => c.getAttribute("data-raster"));
    expect(rasters).toHaveLength(2);
    expect(rasters[0]).toBe(rasters[1]);
  });
});

describe("log panel", () => {
  const entry = (id: number, status: "success" | "error") => ({
    id, wall_time: T, query_time: T, status,
    message: status === "error" ? "segment 9 not found" : "3 neighbors",
    latency_ms: 2.25,
  });

  it("renders error rows with error styling", () => {
    const dom = parse(renderLog({
      ...initialState(T), logs: [entry(2, "error"), entry(1, "success")],
    }));
    const rows = [...dom.querySelectorAll("tbody tr")];
    expect(rows[0].className).toBe("log-error");
    expect(rows[1].className).toBe("log-ok");
  });

  it("pages a 25-row fixture at 10 rows per page", () => {
    const logs = Array.from({ length: 25 }, (_, i) => entry(25 - i, "success"));
    const page0 = parse(renderLog({ ...initialState(T), logs }));
    expect(page0.querySelectorAll("tbody tr")).toHaveLength(10);
    const page2 = parse(renderLog({ ...initialState(T), logs, logPage: 2 }));
    expect(page2.querySelectorAll("tbody tr")).toHaveLength(5);
  });
});
