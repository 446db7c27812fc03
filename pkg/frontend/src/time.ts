/** UTC time arithmetic on the 10-minute frame lattice. */

export type StepUnit = "10min" | "day" | "week" | "month" | "year";

export function parseIso(iso: string): Date {
  return new Date(iso.endsWith("Z") || iso.includes("+") ? iso : iso + "Z");
}

export function formatIso(d: Date): string {
  const p = (n: number, w = 2) => String(n).padStart(w, "0");
  return (
    `${p(d.getUTCFullYear(), 4)}-${p(d.getUTCMonth() + 1)}-${p(d.getUTCDate())}` +
    `T${p(d.getUTCHours())}:${p(d.getUTCMinutes())}:00+00:00`
  );
}

export function stepTime(iso: string, unit: StepUnit, direction: 1 | -1): string {
  const d = parseIso(iso);
  switch (unit) {
    case "10min":
      d.setUTCMinutes(d.getUTCMinutes() + 10 * direction);
      break;
    case "day":
      d.setUTCDate(d.getUTCDate() + direction);
      break;
    case "week":
      d.setUTCDate(d.getUTCDate() + 7 * direction);
      break;
    case "month":
      d.setUTCMonth(d.getUTCMonth() + direction);
      break;
    case "year":
      d.setUTCFullYear(d.getUTCFullYear() + direction);
      break;
  }
  return formatIso(d);
}

/** The 7 frame times T-60min .. T, oldest first. */
export function animationTimes(iso: string): string[] {
  const d = parseIso(iso);
  const out: string[] = [];
  for (let i = 6; i >= 0; i--) {
    const t = new Date(d.getTime() - i * 10 * 60 * 1000);
    out.push(formatIso(t));
  }
  return out;
}
