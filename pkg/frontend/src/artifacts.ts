import { readFileSync, readdirSync } from "node:fs";
import { join } from "node:path";

import { column, readCsv } from "./csv.js";

export interface Track {
  s: number[];
  k: number[];
  wIn: number[];
  wOut: number[];
  east: number[];
  north: number[];
  psi: number[];
}

export interface Speed {
  s: number[];
  ux: number[];
}

export interface IterationRecord {
  index: number;
  lap_time_integrated: number;
  lap_time_simulated: number | null;
  curvature_objective: number;
  qp_wall_time: number;
  max_bound_violation: number;
}

export interface RunArtifacts {
  dir: string;
  status: string;
  records: IterationRecord[];
  tracks: Track[];
  speeds: Speed[];
}

export function loadTrack(path: string): Track {
  const t = readCsv(path);
  return {
    s: column(t, "s_m", path),
    k: column(t, "k_1pm", path),
    wIn: column(t, "w_in_m", path),
    wOut: column(t, "w_out_m", path),
    east: column(t, "east_m", path),
    north: column(t, "north_m", path),
    psi: column(t, "psi_r_rad", path),
  };
}

export function loadSpeed(path: string): Speed {
  const t = readCsv(path);
  return { s: column(t, "s_m", path), ux: column(t, "ux_mps", path) };
}

export function loadRun(dir: string): RunArtifacts {
  let names: string[];
  try {
    names = readdirSync(dir);
  } catch {
    throw new Error(`cannot read run directory ${dir}`);
  }
  const indices = names
    .map((n) => /^path_(\d+)\.csv$/.exec(n))
    .filter((m): m is RegExpExecArray => m !== null)
    .map((m) => Number(m[1]))
    .sort((a, b) => a - b);
  if (indices.length === 0) {
    throw new Error(`${dir}: no path_<i>.csv artifacts found`);
  }

  const recordsPath = join(dir, "records.json");
  let payload: { status?: string; iterations?: IterationRecord[] };
  try {
    payload = JSON.parse(readFileSync(recordsPath, "utf8"));
  } catch {
    throw new Error(`cannot read or parse ${recordsPath}`);
  }
  if (!payload.iterations) {
    throw new Error(`${recordsPath}: missing iterations`);
  }

  const tracks = indices.map((i) => loadTrack(join(dir, `path_${i}.csv`)));
  const speeds = indices.map((i) => loadSpeed(join(dir, `speed_${i}.csv`)));
  return {
    dir,
    status: payload.status ?? "unknown",
    records: payload.iterations,
    tracks,
    speeds,
  };
}
