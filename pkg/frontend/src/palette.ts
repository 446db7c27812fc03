/** 8-class rain-intensity color ramp and raster helpers.
 *
 * Class k covers rain rates in [BOUNDARIES[k], BOUNDARIES[k+1]) mm/h,
 * with the last class open-ended. The hex ramp runs from near-white
 * (no rain) through blues and oranges to magenta (violent rain).
 */

export const CLASS_BOUNDARIES = [0.0, 0.1, 1.0, 5.0, 10.0, 20.0, 25.0, 30.0];

export const PALETTE = [
  "#f7f7f7", // 0: < 0.1 mm/h
  "#c6dbef", // 1: 0.1-1
  "#6baed6", // 2: 1-5
  "#2171b5", // 3: 5-10
  "#41ab5d", // 4: 10-20
  "#fdae3b", // 5: 20-25
  "#e6550d", // 6: 25-30
  "#c51b8a", // 7: >= 30
];

export function rainToClass(rate: number): number {
  let k = 0;
  for (let i = 1; i < CLASS_BOUNDARIES.length; i++) {
    if (rate >= CLASS_BOUNDARIES[i]) k = i;
  }
  return k;
}

/** Decode a base64 little-endian float32 raster. */
export function decodeGrid(b64: string): Float32Array {
  const bin = atob(b64);
  const bytes = new Uint8Array(bin.length);
  for (let i = 0; i < bin.length; i++) bytes[i] = bin.charCodeAt(i);
  return new Float32Array(bytes.buffer);
}

function hexToRgb(hex: string): [number, number, number] {
  return [
    parseInt(hex.slice(1, 3), 16),
    parseInt(hex.slice(3, 5), 16),
    parseInt(hex.slice(5, 7), 16),
  ];
}

const RGB = PALETTE.map(hexToRgb);

/** RGBA pixel buffer for a row-major class-index grid. */
export function rasterize(classes: ArrayLike<number>): Uint8ClampedArray {
  const out = new Uint8ClampedArray(classes.length * 4);
  for (let i = 0; i < classes.length; i++) {
    const [r, g, b] = RGB[Math.max(0, Math.min(7, classes[i] | 0))];
    out[4 * i] = r;
    out[4 * i + 1] = g;
    out[4 * i + 2] = b;
    out[4 * i + 3] = 255;
  }
  return out;
}

export function classifyRain(grid: Float32Array): Uint8Array {
  const out = new Uint8Array(grid.length);
  for (let i = 0; i < grid.length; i++) out[i] = rainToClass(grid[i]);
  return out;
}

/** Base64 of an RGBA buffer — a stable textual raster signature. */
export function rasterSignature(rgba: Uint8ClampedArray): string {
  let bin = "";
  const step = 0x8000;
  for (let i = 0; i < rgba.length; i += step) {
    bin += String.fromCharCode(...rgba.subarray(i, i + step));
  }
  return btoa(bin);
}
