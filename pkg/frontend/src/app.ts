/** Runtime: wires the pure reducer to the API client and the DOM. */

import { ApiClient, ApiError, Superseded } from "./api.js";
import { renderApp } from "./panels.js";
import {
  initialState, reduce, type Effect, type Event, type ViewState,
} from "./state.js";
import { animationTimes, type StepUnit } from "./time.js";

const PERTURB_DEBOUNCE_MS = 250;
const ANIMATION_CADENCE_MS = 400;

export class App {
  state: ViewState;
  private perturbTimer: ReturnType<typeof setTimeout> | null = null;
  private settled: Promise<void> = Promise.resolve();

  constructor(
    private root: HTMLElement,
    private api: ApiClient,
    startTime: string,
    private timers: { debounce: number; cadence: number } = {
      debounce: PERTURB_DEBOUNCE_MS, cadence: ANIMATION_CADENCE_MS,
    },
  ) {
    this.state = initialState(startTime);
    this.root.addEventListener("click", (ev) => this.onClick(ev));
    this.root.addEventListener("change", (ev) => this.onChange(ev));
    this.root.addEventListener("input", (ev) => this.onInput(ev));
    this.render();
  }

  /** Resolves when every in-flight effect chain has finished. */
  idle(): Promise<void> {
    return this.settled;
  }

  dispatch(event: Event): void {
    const [next, effects] = reduce(this.state, event);
    this.state = next;
    this.render();
    for (const effect of effects) this.track(this.run(effect));
  }

  private track(p: Promise<void>): void {
    this.settled = this.settled.then(() => p);
  }

  private async run(effect: Effect): Promise<void> {
    try {
      switch (effect.type) {
        case "fetch-frame": {
          const frame = await this.api.frames(effect.time);
          this.dispatch({ kind: "frame-loaded", frame });
          return;
        }
        case "fetch-query": {
          const result = await this.api.query({
            time: effect.time, segment_id: effect.segmentId,
          });
          this.dispatch({ kind: "query-loaded", result });
          return;
        }
        case "fetch-perturb": {
          await this.debounced();
          const result = await this.api.perturb({
            time: effect.time, segment_id: effect.segmentId,
            concept_id: effect.conceptId, alpha: effect.alpha,
          });
          this.dispatch({ kind: "perturb-loaded", result });
          return;
        }
        case "fetch-logs": {
          const res = await this.api.logs();
          this.dispatch({ kind: "logs-loaded", entries: res.entries });
          return;
        }
        case "animate": {
          for (const time of animationTimes(effect.time)) {
            this.dispatch({ kind: "animation-frame", time });
            await new Promise((r) => setTimeout(r, this.timers.cadence));
          }
          this.dispatch({ kind: "animation-end" });
          return;
        }
      }
    } catch (err) {
      if (err instanceof Superseded) return; // a newer request won
      const message = err instanceof ApiError
        ? err.message : `unreachable service (${(err as Error).message})`;
      this.dispatch({ kind: "service-error", message });
    }
  }

  private debounced(): Promise<void> {
    if (this.perturbTimer !== null) clearTimeout(this.perturbTimer);
    return new Promise((resolve) => {
      this.perturbTimer = setTimeout(resolve, this.timers.debounce);
    });
  }

  private render(): void {
    this.root.innerHTML = renderApp(this.state);
    this.paintRasters();
  }

  private static canPaint: boolean | null = null;

  private paintRasters(): void {
    if (App.canPaint === null) {
      try {
        App.canPaint =
          !!document.createElement("canvas").getContext?.("2d");
      } catch {
        App.canPaint = false; // headless DOM: signatures stay in the attribute
      }
    }
    if (!App.canPaint) return;
    for (const canvas of this.root.querySelectorAll("canvas[data-raster]")) {
      const el = canvas as HTMLCanvasElement;
      const ctx = el.getContext("2d");
      if (!ctx) continue;
      const bin = atob(el.dataset.raster ?? "");
      const rgba = new Uint8ClampedArray(bin.length);
      for (let i = 0; i < bin.length; i++) rgba[i] = bin.charCodeAt(i);
      ctx.putImageData(new ImageData(rgba, el.width, el.height), 0, 0);
    }
  }

  private onClick(ev: globalThis.Event): void {
    const el = (ev.target as HTMLElement).closest("[data-step],[data-segment],"
      + "[data-neighbor],#search-btn,#animate-btn,#log-prev,#log-next,"
      + ".concepts tr") as HTMLElement | null;
    if (!el) return;
    if (el.dataset.step) {
      this.dispatch({
        kind: "step", unit: el.dataset.step as StepUnit,
        direction: el.dataset.dir === "-1" ? -1 : 1,
      });
    } else if (el.dataset.segment !== undefined) {
      this.dispatch({ kind: "select-segment", id: Number(el.dataset.segment) });
    } else if (el.dataset.neighbor !== undefined) {
      this.dispatch({ kind: "promote-neighbor", index: Number(el.dataset.neighbor) });
    } else if (el.dataset.concept !== undefined) {
      this.dispatch({ kind: "select-concept", id: Number(el.dataset.concept) });
    } else if (el.id === "search-btn") {
      this.dispatch({ kind: "search" });
    } else if (el.id === "animate-btn") {
      this.dispatch({ kind: "animation-start" });
    } else if (el.id === "log-prev") {
      this.dispatch({ kind: "log-page", direction: -1 });
    } else if (el.id === "log-next") {
      this.dispatch({ kind: "log-page", direction: 1 });
    }
  }

  private onChange(ev: globalThis.Event): void {
    const el = ev.target as HTMLInputElement;
    if (el.id === "auto-update") {
      this.dispatch({ kind: "set-auto", value: el.checked });
    }
  }

  private onInput(ev: globalThis.Event): void {
    const el = ev.target as HTMLInputElement;
    if (el.id === "alpha") {
      this.dispatch({ kind: "set-alpha", value: Number(el.value) });
    }
  }
}

export async function boot(root: HTMLElement, base = ""): Promise<App> {
  const api = new ApiClient(fetch.bind(globalThis), base);
  const { times } = await api.times();
  const start = times[times.length - 1];
  const app = new App(root, api, start);
  app.dispatch({ kind: "search" });
  app.dispatch({ kind: "refresh-logs" });
  return app;
}
