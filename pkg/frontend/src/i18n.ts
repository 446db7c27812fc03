/** UI strings keyed for translation; English bundle provided. */

export const MESSAGES: Record<string, string> = {
  "nav.title": "Target date",
  "nav.auto": "Auto update",
  "nav.search": "Search",
  "nav.animate": "Animate",
  "radar.title": "Radar",
  "radar.empty": "No frame loaded",
  "neighbors.title": "Similar cases",
  "neighbors.query": "Query segment",
  "neighbors.exhausted":
    "Temporal filter exhausted candidates; fewer results than requested",
  "neighbors.empty": "Select a segment to search for similar cases",
  "perturb.title": "Perturbation",
  "perturb.baseline": "Baseline",
  "perturb.perturbed": "Perturbed",
  "perturb.empty": "Select a segment and a concept",
  "log.title": "Search log",
  "log.prev": "Newer",
  "log.next": "Older",
  "toast.prefix": "Service error",
};

export function t(key: string): string {
  return MESSAGES[key] ?? key;
}
