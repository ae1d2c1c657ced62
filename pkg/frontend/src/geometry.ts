import type { Track } from "./artifacts.js";

/** Unit vector toward the positive (w_in) side of the path at heading psi. */
export function leftNormal(psi: number): [number, number] {
  return [-Math.cos(psi), -Math.sin(psi)];
}

export interface Polyline {
  x: number[];
  y: number[];
}

/** Reconstruct the two boundary polylines from a track's corridor offsets. */
export function boundaryPolylines(track: Track): { inner: Polyline; outer: Polyline } {
  const inner: Polyline = { x: [], y: [] };
  const outer: Polyline = { x: [], y: [] };
  for (let i = 0; i < track.s.length; i++) {
    const [ux, uy] = leftNormal(track.psi[i]);
    inner.x.push(track.east[i] + track.wIn[i] * ux);
    inner.y.push(track.north[i] + track.wIn[i] * uy);
    outer.x.push(track.east[i] + track.wOut[i] * ux);
    outer.y.push(track.north[i] + track.wOut[i] * uy);
  }
  return { inner, outer };
}

function projectToSegment(
  px: number, py: number,
  ax: number, ay: number, bx: number, by: number,
): [number, number] {
  const dx = bx - ax;
  const dy = by - ay;
  const len2 = dx * dx + dy * dy;
  if (len2 === 0) return [ax, ay];
  let t = ((px - ax) * dx + (py - ay) * dy) / len2;
  t = Math.max(0, Math.min(1, t));
  return [ax + t * dx, ay + t * dy];
}

/**
 * Signed lateral deviation of another path from each station of a reference
 * track, measured along the reference's lateral direction.
 */
export function deviationFromReference(reference: Track, other: Track): number[] {
  const out: number[] = [];
  const n = other.east.length;
  for (let i = 0; i < reference.s.length; i++) {
    const cx = reference.east[i];
    const cy = reference.north[i];
    let best = 0;
    let bestDist = Infinity;
    for (let j = 0; j < n; j++) {
      const d = (other.east[j] - cx) ** 2 + (other.north[j] - cy) ** 2;
      if (d < bestDist) {
        bestDist = d;
        best = j;
      }
    }
    let qx = other.east[best];
    let qy = other.north[best];
    let qDist = bestDist;
    for (const j of [best - 1, best]) {
      if (j < 0 || j + 1 >= n) continue;
      const [sx, sy] = projectToSegment(
        cx, cy, other.east[j], other.north[j], other.east[j + 1], other.north[j + 1]);
      const d = (sx - cx) ** 2 + (sy - cy) ** 2;
      if (d < qDist) {
        qDist = d;
        qx = sx;
        qy = sy;
      }
    }
    const [ux, uy] = leftNormal(reference.psi[i]);
    out.push((qx - cx) * ux + (qy - cy) * uy);
  }
  return out;
}
