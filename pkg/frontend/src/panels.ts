/** Pure HTML renderers: (state) -> markup for the five panels.
 *
 * Rasters are embedded as base64 RGBA signatures in data-raster
 * attributes; the runtime paints them onto canvases after each render,
 * and tests compare the attributes directly.
 */

import {
  classifyRain, decodeGrid, rasterize, rasterSignature,
} from "./palette.js";
import type { ConceptScore, LogEntry } from "./types.js";
import {
  ALPHA_MAX, LOG_PAGE_SIZE, type ViewState,
} from "./state.js";
import { t } from "./i18n.js";

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderDateNav(s: ViewState): string {
  const units = ["10min", "day", "week", "month", "year"] as const;
  const buttons = units.map((u) =>
    `<button data-step="${u}" data-dir="-1">-${u}</button>` +
    `<button data-step="${u}" data-dir="1">+${u}</button>`).join("");
  return `<section id="datenav">
    <h2>${t("nav.title")}</h2>
    <span id="selected-time">${esc(s.selectedTime)}</span>
    <div>${buttons}</div>
    <label><input type="checkbox" id="auto-update"
      ${s.autoUpdate ? "checked" : ""}> ${t("nav.auto")}</label>
    <button id="search-btn">${t("nav.search")}</button>
    <button id="animate-btn" ${s.animating ? "disabled" : ""}>
      ${t("nav.animate")}</button>
  </section>`;
}

export function renderRadar(s: ViewState): string {
  if (!s.frame) {
    return `<section id="radar"><h2>${t("radar.title")}</h2>
      <p class="empty">${t("radar.empty")}</p></section>`;
  }
  const [h, w] = s.frame.shape;
  const classes = classifyRain(decodeGrid(s.frame.grid));
  const sig = rasterSignature(rasterize(classes));
  const segments = s.frame.segments.map((seg) =>
    `<button class="segment${seg.id === s.selectedSegment ? " selected" : ""}"
      data-segment="${seg.id}">#${seg.id} (${seg.pixels}px)</button>`).join("");
  return `<section id="radar">
    <h2>${t("radar.title")} ${esc(s.frame.time)}</h2>
    <canvas width="${w}" height="${h}" data-raster="${sig}"></canvas>
    <div class="segments">${segments}</div>
  </section>`;
}

function conceptTable(scores: ConceptScore[],
                      names: Record<string, string>): string {
  const rows = [...scores]
    .sort((a, b) => b.probability - a.probability)
    .slice(0, 5)
    .map((c) => {
      const name = names[String(c.concept_id)] ?? `concept ${c.concept_id}`;
      return `<tr data-concept="${c.concept_id}"><td>${esc(name)}</td>
        <td>${c.probability.toFixed(3)} (${c.uncertainty.toFixed(3)})</td></tr>`;
    }).join("");
  return `<table class="concepts"><tbody>${rows}</tbody></table>`;
}

export function renderNeighbors(s: ViewState): string {
  const head = `<h2>${t("neighbors.title")}</h2>`;
  if (!s.neighborPanel) {
    return `<section id="neighbors">${head}
      <p class="empty">${t("neighbors.empty")}</p></section>`;
  }
  const r = s.neighborPanel;
  const names = r.concept_names ?? {};
  const query = `<div class="query-card"><h3>${t("neighbors.query")}</h3>
    ${conceptTable(r.query_concepts, names)}</div>`;
  const cards = r.neighbors.map((n, i) =>
    `<div class="neighbor-card" data-neighbor="${i}">
      <h3>${esc(n.timestamp)} · #${n.segment_id}
        · d=${n.distance.toFixed(3)}</h3>
      ${conceptTable(n.top_concepts, names)}
    </div>`).join("");
  const banner = r.exhausted || r.neighbors.length === 0
    ? `<p class="banner">${t("neighbors.exhausted")}</p>` : "";
  return `<section id="neighbors">${head}${banner}${query}${cards}</section>`;
}

function classRaster(grid: number[][]): string {
  return rasterSignature(rasterize(grid.flat()));
}

export function renderPerturb(s: ViewState): string {
  const head = `<h2>${t("perturb.title")}</h2>
    <input type="range" id="alpha" min="${-ALPHA_MAX}" max="${ALPHA_MAX}"
      step="0.5" value="${s.alpha}">
    <span id="alpha-value">α=${s.alpha}</span>`;
  if (!s.perturb) {
    return `<section id="perturb">${head}
      <p class="empty">${t("perturb.empty")}</p></section>`;
  }
  const p = s.perturb;
  const [h, w] = p.shape;
  const key = Object.keys(p.perturbed)[0];
  return `<section id="perturb">${head}
    <figure><figcaption>${t("perturb.baseline")}</figcaption>
      <canvas width="${w}" height="${h}"
        data-raster="${classRaster(p.baseline)}"></canvas></figure>
    <figure><figcaption>${t("perturb.perturbed")}</figcaption>
      <canvas width="${w}" height="${h}"
        data-raster="${classRaster(p.perturbed[key])}"></canvas></figure>
  </section>`;
}

export function renderLog(s: ViewState): string {
  const start = s.logPage * LOG_PAGE_SIZE;
  const page: LogEntry[] = s.logs.slice(start, start + LOG_PAGE_SIZE);
  const rows = page.map((e) =>
    `<tr class="${e.status === "error" ? "log-error" : "log-ok"}">
      <td>${e.id}</td><td>${esc(e.query_time)}</td>
      <td>${esc(e.status)}</td><td>${esc(e.message)}</td>
      <td>${e.latency_ms.toFixed(1)} ms</td></tr>`).join("");
  return `<section id="log"><h2>${t("log.title")}</h2>
    <table><tbody>${rows}</tbody></table>
    <button id="log-prev">${t("log.prev")}</button>
    <span id="log-page">${s.logPage + 1}</span>
    <button id="log-next">${t("log.next")}</button>
  </section>`;
}

export function renderApp(s: ViewState): string {
  const toast = s.toast
    ? `<div id="toast">${t("toast.prefix")}: ${esc(s.toast)}</div>` : "";
  return toast + renderDateNav(s) + renderRadar(s) + renderNeighbors(s)
    + renderPerturb(s) + renderLog(s);
}
