/** View state and the pure reducer driving the explorer.
 *
 * The UI is a function of state alone: every user gesture and every
 * server response arrives as an Event, and `reduce` returns the next
 * state plus a list of Effect descriptors for the runtime to execute.
 * Replaying the same event stream therefore reproduces the same panels.
 */

import type {
  FrameResponse, LogEntry, PerturbResponse, QueryResponse,
} from "./types.js";
import { stepTime, type StepUnit } from "./time.js";

export const ALPHA_MAX = 10;
export const LOG_PAGE_SIZE = 10;

export interface ViewState {
  selectedTime: string;
  selectedSegment: number | null;
  autoUpdate: boolean;
  frame: FrameResponse | null;
  neighborPanel: QueryResponse | null;
  selectedConcept: number | null;
  alpha: number;
  perturb: PerturbResponse | null;
  logs: LogEntry[];
  logPage: number;
  toast: string | null;
  animating: boolean;
}

export function initialState(time: string): ViewState {
  return {
    selectedTime: time,
    selectedSegment: null,
    autoUpdate: true,
    frame: null,
    neighborPanel: null,
    selectedConcept: null,
    alpha: 0,
    perturb: null,
    logs: [],
    logPage: 0,
    toast: null,
    animating: false,
  };
}

export type Event =
  | { kind: "step"; unit: StepUnit; direction: 1 | -1 }
  | { kind: "set-auto"; value: boolean }
  | { kind: "search" }
  | { kind: "frame-loaded"; frame: FrameResponse }
  | { kind: "select-segment"; id: number }
  | { kind: "query-loaded"; result: QueryResponse }
  | { kind: "promote-neighbor"; index: number }
  | { kind: "select-concept"; id: number }
  | { kind: "set-alpha"; value: number }
  | { kind: "perturb-loaded"; result: PerturbResponse }
  | { kind: "refresh-logs" }
  | { kind: "logs-loaded"; entries: LogEntry[] }
  | { kind: "log-page"; direction: 1 | -1 }
  | { kind: "animation-start" }
  | { kind: "animation-frame"; time: string }
  | { kind: "animation-end" }
  | { kind: "service-error"; message: string };

export type Effect =
  | { type: "fetch-frame"; time: string }
  | { type: "fetch-query"; time: string; segmentId: number }
  | { type: "fetch-perturb"; time: string; segmentId: number;
      conceptId: number; alpha: number }
  | { type: "fetch-logs" }
  | { type: "animate"; time: string };

function clampAlpha(a: number): number {
  return Math.max(-ALPHA_MAX, Math.min(ALPHA_MAX, a));
}

function perturbEffect(s: ViewState): Effect[] {
  if (s.selectedSegment === null || s.selectedConcept === null) return [];
  return [{
    type: "fetch-perturb", time: s.selectedTime, segmentId: s.selectedSegment,
    conceptId: s.selectedConcept, alpha: s.alpha,
  }];
}

export function reduce(s: ViewState, e: Event): [ViewState, Effect[]] {
  switch (e.kind) {
    case "step": {
      const time = stepTime(s.selectedTime, e.unit, e.direction);
      const next: ViewState = {
        ...s, selectedTime: time, selectedSegment: null, frame: null,
        neighborPanel: null, perturb: null, toast: null,
      };
      return [next, s.autoUpdate ? [{ type: "fetch-frame", time }] : []];
    }
    case "set-auto":
      return [{ ...s, autoUpdate: e.value }, []];
    case "search":
      return [s, [{ type: "fetch-frame", time: s.selectedTime }]];
    case "frame-loaded":
      if (e.frame.time !== s.selectedTime && !s.animating) return [s, []];
      return [{ ...s, frame: e.frame, toast: null }, []];
    case "select-segment": {
      const next = { ...s, selectedSegment: e.id, neighborPanel: null };
      return [next, [
        { type: "fetch-query", time: s.selectedTime, segmentId: e.id },
      ]];
    }
    case "query-loaded":
      return [{ ...s, neighborPanel: e.result, toast: null },
              [{ type: "fetch-logs" }]];
    case "promote-neighbor": {
      const n = s.neighborPanel?.neighbors[e.index];
      if (!n) return [s, []];
      const next: ViewState = {
        ...s, selectedTime: n.timestamp, selectedSegment: n.segment_id,
        frame: null, neighborPanel: null, perturb: null,
      };
      return [next, [
        { type: "fetch-frame", time: n.timestamp },
        { type: "fetch-query", time: n.timestamp, segmentId: n.segment_id },
      ]];
    }
    case "select-concept":
      return [{ ...s, selectedConcept: e.id, perturb: null },
              perturbEffect({ ...s, selectedConcept: e.id })];
    case "set-alpha": {
      const next = { ...s, alpha: clampAlpha(e.value) };
      return [next, perturbEffect(next)];
    }
    case "perturb-loaded":
      return [{ ...s, perturb: e.result, toast: null }, []];
    case "refresh-logs":
      return [s, [{ type: "fetch-logs" }]];
    case "logs-loaded":
      return [{ ...s, logs: e.entries }, []];
    case "log-page": {
      const pages = Math.max(1, Math.ceil(s.logs.length / LOG_PAGE_SIZE));
      const page = Math.max(0, Math.min(pages - 1, s.logPage + e.direction));
      return [{ ...s, logPage: page }, []];
    }
    case "animation-start":
      return [{ ...s, animating: true },
              [{ type: "animate", time: s.selectedTime }]];
    case "animation-frame":
      return [s, [{ type: "fetch-frame", time: e.time }]];
    case "animation-end":
      return [{ ...s, animating: false },
              [{ type: "fetch-frame", time: s.selectedTime }]];
    case "service-error":
      return [{ ...s, toast: e.message }, []];
  }
}
