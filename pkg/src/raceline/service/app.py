"""HTTP surface of the trajectory toolkit.

The service is stateless: every call carries its full inputs, so concurrent
clients and repeated calls are safe. File handling lives in the CLI client;
the endpoints speak arrays.
"""

from __future__ import annotations

import logging

import numpy as np
from fastapi import FastAPI, HTTPException

from .. import __version__
from ..errors import GeometryError, InputError, OffTrackError, SolverError
from ..pipeline import generate_from_path, preview_plan
from ..simulate import simulate_lap
from ..track import BoundaryCloud, estimate_centerline
from ..pipeline import boundary_cloud_from_path
from . import schemas

log = logging.getLogger(__name__)


def _speed_model(profile) -> schemas.SpeedModel:
    return schemas.SpeedModel(
        s_m=profile.stations.tolist(), ux_mps=profile.U_x.tolist(),
        lap_time_s=profile.lap_time,
        ux_steady_mps=None if profile.steady is None else profile.steady.tolist(),
        ux_forward_mps=None if profile.forward is None else profile.forward.tolist())


def create_app() -> FastAPI:
    app = FastAPI(title="raceline", version=__version__,
                  description="Minimum-lap-time trajectory generation service")

    @app.get("/api/health")
    def health() -> dict:
        return {"status": "ok", "version": __version__}

    @app.post("/api/ingest", response_model=schemas.TrackModel)
    def ingest(req: schemas.IngestRequest) -> schemas.TrackModel:
        try:
            cloud = BoundaryCloud(inner=np.array(req.inner, dtype=float),
                                  outer=np.array(req.outer, dtype=float),
                                  max_gap=req.max_gap)
            path = estimate_centerline(cloud, ds=req.ds,
                                       smooth_half_width=req.smooth_half_width)
        except (InputError, GeometryError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return schemas.TrackModel.from_path(path)

    @app.post("/api/optimize", response_model=schemas.OptimizeResponse)
    def optimize(req: schemas.OptimizeRequest) -> schemas.OptimizeResponse:
        try:
            path = req.track.to_path()
            params = req.vehicle.to_params()
            config = req.config.to_config()
            cloud = boundary_cloud_from_path(path)
            result = generate_from_path(path, cloud, params, config)
        except (InputError, GeometryError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return schemas.OptimizeResponse(
            status=result.status,
            iterations=[schemas.IterationModel(**r.to_dict())
                        for r in result.records],
            paths=[schemas.TrackModel.from_path(p) for p in result.paths],
            speeds=[_speed_model(p) for p in result.profiles])

    @app.post("/api/simulate", response_model=schemas.SimulateResponse)
    def simulate(req: schemas.SimulateRequest) -> schemas.SimulateResponse:
        try:
            path = req.track.to_path()
            params = req.vehicle.to_params()
            gains = req.gains.to_gains()
            from ..speed import SpeedProfile, lap_time
            s = np.array(req.speed.s_m)
            u = np.array(req.speed.ux_mps)
            profile = SpeedProfile(stations=s, U_x=u, lap_time=lap_time(s, u))
        except InputError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        try:
            result = simulate_lap(path, profile, params, gains, dt=req.dt)
        except InputError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        except OffTrackError as exc:
            return schemas.SimulateResponse(completed=False,
                                            off_track_s=exc.station_s)
        lg = result.log
        return schemas.SimulateResponse(
            completed=True, lap_time_s=result.lap_time,
            log=schemas.SimLogModel(
                t_s=lg.t.tolist(), s_m=lg.s.tolist(), e_m=lg.e.tolist(),
                dpsi_rad=lg.dpsi.tolist(), ux_mps=lg.U_x.tolist(),
                delta_rad=lg.delta.tolist(), fyf_n=lg.F_yf.tolist(),
                fyr_n=lg.F_yr.tolist(), fx_n=lg.F_x.tolist()))

    @app.post("/api/preview", response_model=schemas.PreviewResponse)
    def preview(req: schemas.PreviewRequest) -> schemas.PreviewResponse:
        try:
            path = req.track.to_path()
            params = req.vehicle.to_params()
            config = req.config.to_config()
            result = preview_plan(path, params, start_s=req.start_s,
                                  lookahead=req.lookahead, config=config)
        except (InputError, GeometryError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        except SolverError as exc:
            raise HTTPException(status_code=502, detail=str(exc))
        sol = result.solution
        return schemas.PreviewResponse(
            track=schemas.TrackModel.from_path(result.path),
            speed=_speed_model(result.profile),
            qp=schemas.QpDiagnostics(
                objective=sol.objective, kkt_residual=sol.kkt_residual,
                iterations=sol.iterations, status=sol.status,
                wall_time_s=sol.wall_time,
                dynamics_residual=sol.dynamics_residual,
                max_bound_violation=sol.max_bound_violation),
            truncated=result.truncated)

    @app.post("/api/report", response_model=schemas.ReportResponse)
    def report(req: schemas.ReportRequest) -> schemas.ReportResponse:
        return schemas.ReportResponse(
            text=format_report([r.model_dump() for r in req.iterations],
                               req.status))

    return app


def format_report(iterations: list[dict], status: str) -> str:
    """Lap-time-per-iteration and solver-timing tables as plain text."""
    lines = [f"run status: {status}", "",
             "lap time per iteration",
             f"{'iter':>4} {'lap_time_s':>11} {'gain_s':>8} "
             f"{'objective':>11} {'sim_lap_s':>10}"]
    prev = None
    for r in iterations:
        gain = "" if prev is None else f"{prev - r['lap_time_integrated']:8.3f}"
        sim = r.get("lap_time_simulated")
        lines.append(
            f"{r['index']:>4} {r['lap_time_integrated']:11.3f} {gain:>8} "
            f"{r['curvature_objective']:11.5f} "
            f"{'' if sim is None else f'{sim:10.3f}':>10}")
        prev = r["lap_time_integrated"]
    lines += ["", "curvature solve timing",
              f"{'iter':>4} {'wall_s':>8} {'qp_iters':>9} {'kkt':>9} "
              f"{'bound_viol_m':>13}"]
    for r in iterations:
        if r["index"] == 0:
            continue
        lines.append(
            f"{r['index']:>4} {r['qp_wall_time']:8.2f} "
            f"{r.get('qp_iterations', 0):>9} "
            f"{r.get('qp_kkt_residual', 0.0):9.1e} "
            f"{r['max_bound_violation']:13.2e}")
    return "\n".join(lines) + "\n"
