import type { RunArtifacts } from "./artifacts.js";
import { boundaryPolylines, deviationFromReference } from "./geometry.js";
import {
  Box, Panel, curve, dataBounds, dataTransform, document, frame, mergeBounds,
  points, tag,
} from "./svg.js";

export const FIGURES = ["overhead", "deviation", "profiles", "laptimes"] as const;
export type FigureName = (typeof FIGURES)[number];

const PATH_COLOR = "#c22";
const REF_COLOR = "#888";
const BOUND_COLOR = "#235";

function legend(x: number, y: number, entries: [string, string][]): string {
  const rows = entries.map(([label, color], i) =>
    tag("g", {}, [
      tag("line", {
        x1: x, y1: y + 14 * i, x2: x + 18, y2: y + 14 * i,
        stroke: color, "stroke-width": 2,
      }),
      tag("text", {
        x: x + 24, y: y + 14 * i + 3, "font-size": 10,
        "font-family": "sans-serif",
      }, [label]),
    ]));
  return rows.join("");
}

/** Overhead map: boundaries plus the centerline and the final racing line. */
export function overheadFigure(run: RunArtifacts): string {
  const first = run.tracks[0];
  const last = run.tracks[run.tracks.length - 1];
  const { inner, outer } = boundaryPolylines(first);
  let box: Box = dataBounds(inner.x, inner.y);
  box = mergeBounds(box, dataBounds(outer.x, outer.y));
  const width = 640;
  const height = 560;
  const panel: Panel = { left: 70, top: 40, width: width - 110,
                         height: height - 110, box: squareBox(box) };
  const children = [
    frame(panel, "racing line", "east (m)", "north (m)"),
    curve(panel, inner.x, inner.y, BOUND_COLOR, "boundary-inner"),
    curve(panel, outer.x, outer.y, BOUND_COLOR, "boundary-outer"),
    curve(panel, first.east, first.north, REF_COLOR, "centerline", "4 3"),
    curve(panel, last.east, last.north, PATH_COLOR, "racing-line"),
    markStart(panel, last.east[0], last.north[0]),
    legend(panel.left + 8, panel.top + 14,
           [["boundaries", BOUND_COLOR], ["centerline", REF_COLOR],
            ["racing line", PATH_COLOR]]),
  ];
  return document(width, height, children);
}

function squareBox(box: Box): Box {
  // overhead maps keep an equal aspect ratio
  const w = box.x1 - box.x0;
  const h = box.y1 - box.y0;
  const side = Math.max(w, h);
  const cx = (box.x0 + box.x1) / 2;
  const cy = (box.y0 + box.y1) / 2;
  return { x0: cx - side / 2, x1: cx + side / 2,
           y0: cy - side / 2, y1: cy + side / 2 };
}

function markStart(panel: Panel, x: number, y: number): string {
  return tag("g", { transform: dataTransform(panel) }, [
    tag("circle", {
      class: "start-marker", cx: x, cy: y, r: 3,
      fill: PATH_COLOR, "vector-effect": "non-scaling-stroke",
    }),
  ]);
}

/** Lateral deviation of the final line from the first-iteration centerline,
 * between the corridor bound curves (drawn with raw column values). */
export function deviationFigure(run: RunArtifacts): string {
  const reference = run.tracks[0];
  const final = run.tracks[run.tracks.length - 1];
  const e = deviationFromReference(reference, final);
  let box = dataBounds(reference.s, reference.wIn);
  box = mergeBounds(box, dataBounds(reference.s, reference.wOut));
  box = mergeBounds(box, dataBounds(reference.s, e));
  const width = 820;
  const height = 360;
  const panel: Panel = { left: 70, top: 40, width: width - 100,
                         height: height - 110, box };
  const children = [
    frame(panel, "deviation from centerline", "distance along centerline (m)",
          "lateral offset (m)"),
    curve(panel, reference.s, reference.wIn, BOUND_COLOR, "bound-in"),
    curve(panel, reference.s, reference.wOut, BOUND_COLOR, "bound-out"),
    curve(panel, reference.s, e, PATH_COLOR, "deviation"),
    legend(panel.left + 8, panel.top + 14,
           [["corridor bounds", BOUND_COLOR], ["racing line", PATH_COLOR]]),
  ];
  return document(width, height, children);
}

/** Curvature and speed of the final trajectory over arc length, with the
 * first iteration for comparison. */
export function profilesFigure(run: RunArtifacts): string {
  const first = run.tracks[0];
  const last = run.tracks[run.tracks.length - 1];
  const firstSpeed = run.speeds[0];
  const lastSpeed = run.speeds[run.speeds.length - 1];
  const width = 820;
  const height = 560;

  let boxK = dataBounds(first.s, first.k);
  boxK = mergeBounds(boxK, dataBounds(last.s, last.k));
  const panelK: Panel = { left: 70, top: 40, width: width - 100,
                          height: 200, box: boxK };
  let boxU = dataBounds(firstSpeed.s, firstSpeed.ux);
  boxU = mergeBounds(boxU, dataBounds(lastSpeed.s, lastSpeed.ux));
  const panelU: Panel = { left: 70, top: 330, width: width - 100,
                          height: 180, box: boxU };
  const children = [
    frame(panelK, "curvature profile", "", "curvature (1/m)"),
    curve(panelK, first.s, first.k, REF_COLOR, "curvature-first", "4 3"),
    curve(panelK, last.s, last.k, PATH_COLOR, "curvature-final"),
    frame(panelU, "speed profile", "distance along path (m)", "speed (m/s)"),
    curve(panelU, firstSpeed.s, firstSpeed.ux, REF_COLOR, "speed-first", "4 3"),
    curve(panelU, lastSpeed.s, lastSpeed.ux, PATH_COLOR, "speed-final"),
    legend(panelK.left + 8, panelK.top + 14,
           [["iteration 0", REF_COLOR], ["final", PATH_COLOR]]),
  ];
  return document(width, height, children);
}

/** One bar per iteration record (iteration 0 is the centerline lap). */
export function laptimesFigure(run: RunArtifacts): string {
  const laps = run.records.map((r) => r.lap_time_integrated);
  const width = 560;
  const height = 400;
  const panelLeft = 70;
  const panelTop = 40;
  const panelW = width - 110;
  const panelH = height - 110;
  const tMax = Math.max(...laps);
  const tMin = Math.min(...laps);
  const span = tMax - tMin || 1;
  const y0 = tMin - 0.15 * span;
  const y1 = tMax + 0.1 * span;
  const barW = panelW / laps.length;
  const children: string[] = [
    frame({ left: panelLeft, top: panelTop, width: panelW, height: panelH,
            box: { x0: -0.5, x1: laps.length - 0.5, y0, y1 } },
          "lap time per iteration", "iteration", "lap time (s)"),
  ];
  laps.forEach((t, i) => {
    const h = ((t - y0) / (y1 - y0)) * panelH;
    children.push(tag("rect", {
      class: "lap-bar",
      x: panelLeft + i * barW + 0.15 * barW,
      y: panelTop + panelH - h,
      width: 0.7 * barW,
      height: h,
      fill: i === laps.length - 1 ? PATH_COLOR : "#778",
    }));
    children.push(tag("text", {
      x: panelLeft + (i + 0.5) * barW, y: panelTop + panelH - h - 5,
      "text-anchor": "middle", "font-size": 10, "font-family": "sans-serif",
    }, [t.toFixed(2)]));
    children.push(tag("text", {
      x: panelLeft + (i + 0.5) * barW, y: panelTop + panelH + 14,
      "text-anchor": "middle", "font-size": 10, "font-family": "sans-serif",
    }, [String(i)]));
  });
  return document(width, height, children);
}

export function renderFigure(name: FigureName, run: RunArtifacts): string {
  switch (name) {
    case "overhead":
      return overheadFigure(run);
    case "deviation":
      return deviationFigure(run);
    case "profiles":
      return profilesFigure(run);
    case "laptimes":
      return laptimesFigure(run);
  }
}
