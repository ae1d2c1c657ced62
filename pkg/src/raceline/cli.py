"""Command-line client for the trajectory service.

Every subcommand converts local files to a service request, posts it (to an
in-process app by default, or to a remote server via ``--server``), and
writes the response back to files. Exit codes: 0 success, 2 input error,
3 solver failure, 4 off-track simulation.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import storage
from .errors import InputError

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_SOLVER = 3
EXIT_OFF_TRACK = 4


class ServiceClient:
    """Minimal HTTP wrapper: in-process app or remote base URL."""

    def __init__(self, server: str | None = None):
        if server:
            import httpx
            self._client = httpx.Client(base_url=server, timeout=600.0)
        else:
            from fastapi.testclient import TestClient
            from .service import create_app
            self._client = TestClient(create_app())

    def post(self, path: str, payload: dict) -> tuple[int, dict]:
        resp = self._client.post(path, json=payload)
        try:
            body = resp.json()
        except ValueError:
            body = {"detail": resp.text}
        return resp.status_code, body


def _fail(message: str, code: int) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _track_payload(file: str) -> dict:
    path = storage.load_track(file)
    return {"s_m": path.stations.tolist(), "k_1pm": path.curvature.tolist(),
            "w_in_m": path.w_in.tolist(), "w_out_m": path.w_out.tolist(),
            "east_m": path.east.tolist(), "north_m": path.north.tolist(),
            "psi_r_rad": path.heading.tolist(), "closed": path.closed}


def _track_from_payload(data: dict):
    from .track import TrackPath
    return TrackPath(stations=np.array(data["s_m"]),
                     curvature=np.array(data["k_1pm"]),
                     w_in=np.array(data["w_in_m"]),
                     w_out=np.array(data["w_out_m"]),
                     east=np.array(data["east_m"]),
                     north=np.array(data["north_m"]),
                     heading=np.array(data["psi_r_rad"]),
                     closed=data["closed"])


def _profile_from_payload(data: dict):
    from .speed import SpeedProfile
    return SpeedProfile(
        stations=np.array(data["s_m"]), U_x=np.array(data["ux_mps"]),
        lap_time=data["lap_time_s"],
        steady=None if data.get("ux_steady_mps") is None
        else np.array(data["ux_steady_mps"]),
        forward=None if data.get("ux_forward_mps") is None
        else np.array(data["ux_forward_mps"]))


def _load_json(file: str | None) -> dict:
    if not file:
        return {}
    with open(file) as f:
        return json.load(f)


def cmd_ingest(args, client: ServiceClient) -> int:
    inner = storage.load_boundary(args.inner)
    outer = storage.load_boundary(args.outer)
    payload = {"inner": inner.tolist(), "outer": outer.tolist(),
               "ds": args.ds, "max_gap": args.max_gap,
               "smooth_half_width": args.smooth_half_width}
    status, body = client.post("/api/ingest", payload)
    if status != 200:
        return _fail(str(body.get("detail", body)), EXIT_INPUT)
    storage.save_track(_track_from_payload(body), args.output)
    print(f"wrote {args.output} ({len(body['s_m'])} stations, "
          f"{body['s_m'][-1]:.1f} m)")
    return EXIT_OK


def cmd_optimize(args, client: ServiceClient) -> int:
    payload = {"track": _track_payload(args.track),
               "vehicle": _load_json(args.vehicle),
               "config": _load_json(args.config)}
    if args.simulate_laps:
        payload["config"]["simulate_lap_times"] = True
    status, body = client.post("/api/optimize", payload)
    if status == 400:
        return _fail(str(body.get("detail", body)), EXIT_INPUT)
    if status != 200:
        return _fail(str(body.get("detail", body)), EXIT_SOLVER)

    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    for i, (trk, spd) in enumerate(zip(body["paths"], body["speeds"])):
        storage.save_track(_track_from_payload(trk), out / f"path_{i}.csv")
        storage.save_profile(_profile_from_payload(spd), out / f"speed_{i}.csv",
                             diagnostics=args.diagnostics)
    (out / "records.json").write_text(json.dumps(
        {"status": body["status"], "iterations": body["iterations"]},
        indent=2, sort_keys=True) + "\n")
    final = body["iterations"][-1]["lap_time_integrated"]
    print(f"{body['status']}: {len(body['iterations']) - 1} iteration(s), "
          f"final lap time {final:.3f} s -> {out}")
    if body["status"] == "solver_failure":
        return EXIT_SOLVER
    return EXIT_OK


def _final_trajectory(run_dir: Path) -> tuple[Path, Path]:
    paths = sorted(run_dir.glob("path_*.csv"),
                   key=lambda p: int(p.stem.split("_")[1]))
    if not paths:
        raise InputError(f"no path_*.csv files in {run_dir}")
    last = int(paths[-1].stem.split("_")[1])
    return run_dir / f"path_{last}.csv", run_dir / f"speed_{last}.csv"


def cmd_simulate(args, client: ServiceClient) -> int:
    run_dir = Path(args.trajectory)
    track_file, speed_file = _final_trajectory(run_dir)
    profile = storage.load_profile(speed_file)
    payload = {"track": _track_payload(str(track_file)),
               "speed": {"s_m": profile.stations.tolist(),
                         "ux_mps": profile.U_x.tolist(),
                         "lap_time_s": profile.lap_time},
               "vehicle": _load_json(args.vehicle),
               "gains": _load_json(args.gains)}
    status, body = client.post("/api/simulate", payload)
    if status != 200:
        return _fail(str(body.get("detail", body)), EXIT_INPUT)
    if not body["completed"]:
        return _fail(f"vehicle left the track at s = {body['off_track_s']:.0f} m",
                     EXIT_OFF_TRACK)
    log = body["log"]
    from .simulate import SimLog
    storage.save_sim_log(SimLog(
        t=np.array(log["t_s"]), s=np.array(log["s_m"]), e=np.array(log["e_m"]),
        dpsi=np.array(log["dpsi_rad"]), U_x=np.array(log["ux_mps"]),
        delta=np.array(log["delta_rad"]), F_yf=np.array(log["fyf_n"]),
        F_yr=np.array(log["fyr_n"]), F_x=np.array(log["fx_n"])), args.output)
    print(f"simulated lap time {body['lap_time_s']:.3f} s "
          f"(integrated {profile.lap_time:.3f} s) -> {args.output}")
    return EXIT_OK


def cmd_preview(args, client: ServiceClient) -> int:
    payload = {"track": _track_payload(args.track),
               "start_s": args.start_s, "lookahead": args.lookahead,
               "vehicle": _load_json(args.vehicle),
               "config": _load_json(args.config)}
    status, body = client.post("/api/preview", payload)
    if status == 400:
        return _fail(str(body.get("detail", body)), EXIT_INPUT)
    if status != 200:
        return _fail(str(body.get("detail", body)), EXIT_SOLVER)
    qp = body["qp"]
    print(f"window: {len(body['track']['s_m'])} stations over "
          f"{body['track']['s_m'][-1]:.1f} m"
          + (" (truncated)" if body["truncated"] else ""))
    print(f"segment time {body['speed']['lap_time_s']:.3f} s; "
          f"qp {qp['status']} in {qp['iterations']} iterations, "
          f"{qp['wall_time_s']:.2f} s, kkt {qp['kkt_residual']:.1e}")
    if args.output:
        out = Path(args.output)
        out.mkdir(parents=True, exist_ok=True)
        storage.save_track(_track_from_payload(body["track"]), out / "path_0.csv")
        storage.save_profile(_profile_from_payload(body["speed"]),
                             out / "speed_0.csv")
        print(f"wrote window trajectory -> {out}")
    return EXIT_OK


def cmd_report(args, client: ServiceClient) -> int:
    records, run_status = storage.load_records(Path(args.run) / "records.json")
    status, body = client.post("/api/report",
                               {"status": run_status, "iterations": records})
    if status != 200:
        return _fail(str(body.get("detail", body)), EXIT_INPUT)
    print(body["text"], end="")
    return EXIT_OK


def cmd_serve(args, _client=None) -> int:
    import uvicorn
    from .service import create_app
    uvicorn.run(create_app(), host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="raceline",
        description="Minimum-lap-time trajectory generation client")
    parser.add_argument("--server", default=None,
                        help="Base URL of a running service "
                             "(default: run in-process)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="Estimate a centerline track from "
                                      "boundary CSVs")
    p.add_argument("--inner", required=True, help="Inner boundary CSV")
    p.add_argument("--outer", required=True, help="Outer boundary CSV")
    p.add_argument("--ds", type=float, default=2.75,
                   help="Station spacing in meters")
    p.add_argument("--max-gap", type=float, default=25.0)
    p.add_argument("--smooth-half-width", type=int, default=5)
    p.add_argument("-o", "--output", required=True, help="Output track CSV")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("optimize", help="Iterate speed profile and curvature "
                                        "minimization on a track")
    p.add_argument("--track", required=True, help="Track CSV")
    p.add_argument("--vehicle", help="Vehicle parameter JSON")
    p.add_argument("--config", help="Pipeline config JSON")
    p.add_argument("--diagnostics", action="store_true",
                   help="Write per-pass speed columns")
    p.add_argument("--simulate-laps", action="store_true",
                   help="Also estimate lap times by closed-loop simulation")
    p.add_argument("-o", "--output", required=True, help="Output directory")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("simulate", help="Closed-loop lap simulation of a "
                                        "generated trajectory")
    p.add_argument("--trajectory", required=True,
                   help="Run directory from optimize")
    p.add_argument("--vehicle", help="Vehicle parameter JSON")
    p.add_argument("--gains", help="Controller gain JSON")
    p.add_argument("-o", "--output", required=True, help="Output log CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("preview", help="Plan one window ahead of a position")
    p.add_argument("--track", required=True, help="Track CSV")
    p.add_argument("--start-s", type=float, default=0.0)
    p.add_argument("--lookahead", type=float, required=True,
                   help="Window length in meters")
    p.add_argument("--vehicle", help="Vehicle parameter JSON")
    p.add_argument("--config", help="Pipeline config JSON")
    p.add_argument("-o", "--output", help="Optional output directory")
    p.set_defaults(func=cmd_preview)

    p = sub.add_parser("report", help="Print lap-time and timing tables "
                                      "for a run")
    p.add_argument("--run", required=True, help="Run directory")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("serve", help="Run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "serve":
        return args.func(args)
    try:
        client = ServiceClient(args.server)
    except Exception as exc:
        return _fail(f"cannot reach service: {exc}", EXIT_INPUT)
    try:
        return args.func(args, client)
    except (InputError, FileNotFoundError, KeyError, ValueError) as exc:
        return _fail(str(exc), EXIT_INPUT)


if __name__ == "__main__":
    sys.exit(main())
