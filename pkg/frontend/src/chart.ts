/**
 * Pure geometry for the probability time-series chart: stream time maps to
 * x with "now" at the right edge over a fixed history window, probability
 * maps to y over [0, 1]. Kept DOM-free so the mapping is unit-testable.
 */

export interface ChartGeometry {
  width: number;
  height: number;
  windowS: number; // visible history depth in stream seconds
}

export interface TimedValue {
  t: number;
  v: number;
}

export function xForTime(t: number, nowT: number, geom: ChartGeometry): number {
  const age = nowT - t;
  return geom.width * (1 - age / geom.windowS);
}

export function yForValue(v: number, geom: ChartGeometry): number {
  return geom.height * (1 - clamp01(v));
}

/** Points inside the window, oldest first, as canvas [x, y] pairs. */
export function polyline(
  points: readonly TimedValue[],
  nowT: number,
  geom: ChartGeometry,
): Array<[number, number]> {
  const out: Array<[number, number]> = [];
  for (const p of points) {
    if (nowT - p.t > geom.windowS) continue;
    out.push([xForTime(p.t, nowT, geom), yForValue(p.v, geom)]);
  }
  return out;
}

export function thresholdLineY(threshold: number, geom: ChartGeometry): number {
  return yForValue(threshold, geom);
}

function clamp01(v: number): number {
  return v < 0 ? 0 : v > 1 ? 1 : v;
}
