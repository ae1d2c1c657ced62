"""File formats: track/boundary/speed/simulation CSVs and run-record JSON.

Floats are written with ``repr`` (shortest round-trip form), which makes
repeated runs byte-identical and reload exact.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import InputError
from .pipeline import IterationRecord, PipelineResult
from .simulate import SimLog
from .speed import SpeedProfile
from .track import BoundaryCloud, TrackPath

TRACK_COLUMNS = ["s_m", "k_1pm", "w_in_m", "w_out_m", "east_m", "north_m",
                 "psi_r_rad"]
BOUNDARY_COLUMNS = ["east_m", "north_m"]
SPEED_COLUMNS = ["s_m", "ux_mps"]
SPEED_TRACE_COLUMNS = ["s_m", "ux_mps", "ux_steady_mps", "ux_forward_mps"]
SIM_COLUMNS = ["t_s", "s_m", "e_m", "dpsi_rad", "ux_mps", "delta_rad",
               "fyf_n", "fyr_n", "fx_n"]


def _write_csv(path: Path, header: list[str], columns: list[np.ndarray]) -> None:
    rows = zip(*[np.asarray(c, float) for c in columns])
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) for v in row])


def _read_csv(path: Path, required: list[str]) -> dict[str, np.ndarray]:
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None:
            raise InputError(f"{path}: empty file")
        missing = [c for c in required if c not in reader.fieldnames]
        if missing:
            raise InputError(f"{path}: missing columns {missing}")
        rows = list(reader)
    if not rows:
        raise InputError(f"{path}: no data rows")
    out = {}
    for col in reader.fieldnames:
        try:
            out[col] = np.array([float(r[col]) for r in rows])
        except (TypeError, ValueError) as exc:
            raise InputError(f"{path}: non-numeric value in {col}") from exc
    return out


def save_track(path: TrackPath, file: str | Path) -> None:
    _write_csv(Path(file), TRACK_COLUMNS,
               [path.stations, path.curvature, path.w_in, path.w_out,
                path.east, path.north, path.heading])


def load_track(file: str | Path) -> TrackPath:
    data = _read_csv(Path(file), TRACK_COLUMNS)
    s = data["s_m"]
    east, north = data["east_m"], data["north_m"]
    closed = bool(np.hypot(east[0] - east[-1], north[0] - north[-1]) < 1e-6
                  and len(s) > 3)
    return TrackPath(stations=s, curvature=data["k_1pm"], w_in=data["w_in_m"],
                     w_out=data["w_out_m"], east=east, north=north,
                     heading=data["psi_r_rad"], closed=closed)


def save_boundary(points: np.ndarray, file: str | Path) -> None:
    pts = np.asarray(points, float)
    _write_csv(Path(file), BOUNDARY_COLUMNS, [pts[:, 0], pts[:, 1]])


def load_boundary(file: str | Path) -> np.ndarray:
    data = _read_csv(Path(file), BOUNDARY_COLUMNS)
    return np.stack([data["east_m"], data["north_m"]], axis=1)


def load_cloud(inner_file: str | Path, outer_file: str | Path,
               max_gap: float = 25.0) -> BoundaryCloud:
    return BoundaryCloud(inner=load_boundary(inner_file),
                         outer=load_boundary(outer_file), max_gap=max_gap)


def save_profile(profile: SpeedProfile, file: str | Path,
                 diagnostics: bool = False) -> None:
    if diagnostics and profile.steady is not None and profile.forward is not None:
        _write_csv(Path(file), SPEED_TRACE_COLUMNS,
                   [profile.stations, profile.U_x, profile.steady, profile.forward])
    else:
        _write_csv(Path(file), SPEED_COLUMNS, [profile.stations, profile.U_x])


def load_profile(file: str | Path) -> SpeedProfile:
    from .speed import lap_time
    data = _read_csv(Path(file), SPEED_COLUMNS)
    s, u = data["s_m"], data["ux_mps"]
    return SpeedProfile(stations=s, U_x=u, lap_time=lap_time(s, u),
                        steady=data.get("ux_steady_mps"),
                        forward=data.get("ux_forward_mps"))


def save_sim_log(log: SimLog, file: str | Path) -> None:
    _write_csv(Path(file), SIM_COLUMNS,
               [log.t, log.s, log.e, log.dpsi, log.U_x, log.delta,
                log.F_yf, log.F_yr, log.F_x])


def records_to_json(records: list[IterationRecord], status: str) -> str:
    payload = {"status": status,
               "iterations": [r.to_dict() for r in records]}
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def load_records(file: str | Path) -> tuple[list[dict], str]:
    with open(file) as f:
        payload = json.load(f)
    if "iterations" not in payload:
        raise InputError(f"{file}: not a run record file")
    return payload["iterations"], payload.get("status", "unknown")


def save_run(result: PipelineResult, out_dir: str | Path,
             diagnostics: bool = False) -> list[Path]:
    """Write per-iteration path/speed CSVs plus records.json into a directory."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for i, (path, profile) in enumerate(zip(result.paths, result.profiles)):
        p_file = out / f"path_{i}.csv"
        s_file = out / f"speed_{i}.csv"
        save_track(path, p_file)
        save_profile(profile, s_file, diagnostics=diagnostics)
        written += [p_file, s_file]
    rec_file = out / "records.json"
    rec_file.write_text(records_to_json(result.records, result.status))
    written.append(rec_file)
    return written
