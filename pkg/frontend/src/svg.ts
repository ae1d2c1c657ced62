/** Minimal deterministic SVG assembly: data polylines live in their own
 * coordinate space under a transform, so exported point lists carry the raw
 * values unchanged. */

export interface Box {
  x0: number;
  x1: number;
  y0: number;
  y1: number;
}

export function dataBounds(xs: number[], ys: number[], pad = 0.05): Box {
  const x0 = Math.min(...xs);
  const x1 = Math.max(...xs);
  const y0 = Math.min(...ys);
  const y1 = Math.max(...ys);
  const px = (x1 - x0 || 1) * pad;
  const py = (y1 - y0 || 1) * pad;
  return { x0: x0 - px, x1: x1 + px, y0: y0 - py, y1: y1 + py };
}

export function mergeBounds(a: Box, b: Box): Box {
  return {
    x0: Math.min(a.x0, b.x0), x1: Math.max(a.x1, b.x1),
    y0: Math.min(a.y0, b.y0), y1: Math.max(a.y1, b.y1),
  };
}

export function escapeXml(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function tag(name: string, attrs: Record<string, string | number>,
                    children: string[] = []): string {
  const parts = Object.entries(attrs).map(([k, v]) => `${k}="${v}"`);
  const open = `<${name}${parts.length ? " " + parts.join(" ") : ""}`;
  if (children.length === 0) return `${open}/>`;
  return `${open}>${children.join("")}</${name}>`;
}

export function points(xs: number[], ys: number[]): string {
  const out: string[] = [];
  for (let i = 0; i < xs.length; i++) out.push(`${xs[i]},${ys[i]}`);
  return out.join(" ");
}

export interface Panel {
  /** screen-space rectangle of the plot area */
  left: number;
  top: number;
  width: number;
  height: number;
  box: Box;
}

/** Transform mapping the panel's data box onto its screen rectangle
 * (y grows upward in data space). */
export function dataTransform(p: Panel): string {
  const sx = p.width / (p.box.x1 - p.box.x0);
  const sy = p.height / (p.box.y1 - p.box.y0);
  const tx = p.left - sx * p.box.x0;
  const ty = p.top + p.height + sy * p.box.y0;
  return `translate(${tx} ${ty}) scale(${sx} ${-sy})`;
}

export function frame(p: Panel, title: string, xLabel: string,
                      yLabel: string): string {
  const ticksY = [p.box.y0, (p.box.y0 + p.box.y1) / 2, p.box.y1];
  const ticksX = [p.box.x0, (p.box.x0 + p.box.x1) / 2, p.box.x1];
  const children: string[] = [
    tag("rect", {
      x: p.left, y: p.top, width: p.width, height: p.height,
      fill: "none", stroke: "#444", "stroke-width": 1,
    }),
    tag("text", {
      x: p.left + p.width / 2, y: p.top - 8, "text-anchor": "middle",
      "font-size": 13, "font-family": "sans-serif",
    }, [escapeXml(title)]),
    tag("text", {
      x: p.left + p.width / 2, y: p.top + p.height + 30,
      "text-anchor": "middle", "font-size": 11, "font-family": "sans-serif",
    }, [escapeXml(xLabel)]),
    tag("text", {
      x: p.left - 44, y: p.top + p.height / 2, "text-anchor": "middle",
      "font-size": 11, "font-family": "sans-serif",
      transform: `rotate(-90 ${p.left - 44} ${p.top + p.height / 2})`,
    }, [escapeXml(yLabel)]),
  ];
  const sx = p.width / (p.box.x1 - p.box.x0);
  const sy = p.height / (p.box.y1 - p.box.y0);
  for (const t of ticksX) {
    const x = p.left + (t - p.box.x0) * sx;
    children.push(tag("line", {
      x1: x, y1: p.top + p.height, x2: x, y2: p.top + p.height + 4,
      stroke: "#444",
    }));
    children.push(tag("text", {
      x, y: p.top + p.height + 16, "text-anchor": "middle",
      "font-size": 10, "font-family": "sans-serif",
    }, [t.toPrecision(4)]));
  }
  for (const t of ticksY) {
    const y = p.top + p.height - (t - p.box.y0) * sy;
    children.push(tag("line", {
      x1: p.left - 4, y1: y, x2: p.left, y2: y, stroke: "#444",
    }));
    children.push(tag("text", {
      x: p.left - 6, y: y + 3, "text-anchor": "end",
      "font-size": 10, "font-family": "sans-serif",
    }, [t.toPrecision(4)]));
  }
  return children.join("");
}

export function curve(p: Panel, xs: number[], ys: number[], stroke: string,
                      cls: string, dash = ""): string {
  const attrs: Record<string, string | number> = {
    class: cls,
    points: points(xs, ys),
    fill: "none",
    stroke,
    "stroke-width": 1.4,
    "vector-effect": "non-scaling-stroke",
  };
  if (dash) attrs["stroke-dasharray"] = dash;
  return tag("g", { transform: dataTransform(p) },
             [tag("polyline", attrs)]);
}

export function document(width: number, height: number,
                         children: string[]): string {
  return [
    `<?xml version="1.0" encoding="UTF-8"?>`,
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" ` +
    `height="${height}" viewBox="0 0 ${width} ${height}">`,
    tag("rect", { x: 0, y: 0, width, height, fill: "white" }),
    ...children,
    "</svg>",
  ].join("\n");
}
