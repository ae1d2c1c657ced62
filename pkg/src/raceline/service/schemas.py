"""Pydantic request/response models for the trajectory service."""

from __future__ import annotations

import numpy as np
from pydantic import BaseModel, Field, model_validator

from ..pipeline import PipelineConfig
from ..simulate import ControllerGains
from ..track import TrackPath
from ..vehicle import VehicleParams


class TrackModel(BaseModel):
    s_m: list[float]
    k_1pm: list[float]
    w_in_m: list[float]
    w_out_m: list[float]
    east_m: list[float]
    north_m: list[float]
    psi_r_rad: list[float]
    closed: bool

    @classmethod
    def from_path(cls, path: TrackPath) -> "TrackModel":
        return cls(s_m=path.stations.tolist(), k_1pm=path.curvature.tolist(),
                   w_in_m=path.w_in.tolist(), w_out_m=path.w_out.tolist(),
                   east_m=path.east.tolist(), north_m=path.north.tolist(),
                   psi_r_rad=path.heading.tolist(), closed=path.closed)

    def to_path(self) -> TrackPath:
        return TrackPath(stations=np.array(self.s_m),
                         curvature=np.array(self.k_1pm),
                         w_in=np.array(self.w_in_m),
                         w_out=np.array(self.w_out_m),
                         east=np.array(self.east_m),
                         north=np.array(self.north_m),
                         heading=np.array(self.psi_r_rad),
                         closed=self.closed)


class SpeedModel(BaseModel):
    s_m: list[float]
    ux_mps: list[float]
    lap_time_s: float
    ux_steady_mps: list[float] | None = None
    ux_forward_mps: list[float] | None = None


class VehicleModel(BaseModel):
    m: float = 1500.0
    I_z: float = 2250.0
    a: float = 1.04
    b: float = 1.42
    C_f: float = 160000.0
    C_r: float = 180000.0
    mu: float = 0.95
    F_engine_max: float = 3750.0
    g: float = 9.81
    U_x_max: float = 85.0

    def to_params(self) -> VehicleParams:
        return VehicleParams(**self.model_dump())


class GainsModel(BaseModel):
    k_lat: float = 0.05
    x_la: float = 15.0
    k_speed: float = 0.5
    k_yaw: float = 0.3
    speed_margin: float = 0.01
    slip_fraction: float = 0.9
    drive_fraction: float = 0.9

    def to_gains(self) -> ControllerGains:
        return ControllerGains(**self.model_dump())


class ConfigModel(BaseModel):
    epsilon: float = 0.1
    max_iterations: int = 12
    lam: float = 1.0
    ds: float = 2.75
    lookahead: float | None = None
    simulate_lap_times: bool = False
    qp_tol: float = 1e-6
    qp_max_iter: int = 20000
    ridge: float = 1e-9
    scheme: str = "euler"
    smooth_half_width: int = 5
    offset_window: float = 75.0
    step_fractions: list[float] = Field(
        default_factory=lambda: [2.0, 1.5, 1.0, 0.5, 0.25, 0.125])

    @model_validator(mode="before")
    @classmethod
    def _accept_lambda_spelling(cls, data):
        if isinstance(data, dict) and "lambda" in data:
            data = dict(data)
            data["lam"] = data.pop("lambda")
        return data

    def to_config(self) -> PipelineConfig:
        data = self.model_dump()
        data["step_fractions"] = tuple(data["step_fractions"])
        return PipelineConfig(**data)


class IngestRequest(BaseModel):
    inner: list[list[float]]
    outer: list[list[float]]
    ds: float = 2.75
    max_gap: float = 25.0
    smooth_half_width: int = 5


class OptimizeRequest(BaseModel):
    track: TrackModel
    vehicle: VehicleModel = Field(default_factory=VehicleModel)
    config: ConfigModel = Field(default_factory=ConfigModel)
    keep_pass_traces: bool = False


class IterationModel(BaseModel):
    index: int
    lap_time_integrated: float
    lap_time_simulated: float | None
    curvature_objective: float
    qp_wall_time: float
    max_bound_violation: float
    qp_iterations: int
    qp_kkt_residual: float


class OptimizeResponse(BaseModel):
    status: str
    iterations: list[IterationModel]
    paths: list[TrackModel]
    speeds: list[SpeedModel]


class SimulateRequest(BaseModel):
    track: TrackModel
    speed: SpeedModel
    vehicle: VehicleModel = Field(default_factory=VehicleModel)
    gains: GainsModel = Field(default_factory=GainsModel)
    dt: float = 0.005


class SimLogModel(BaseModel):
    t_s: list[float]
    s_m: list[float]
    e_m: list[float]
    dpsi_rad: list[float]
    ux_mps: list[float]
    delta_rad: list[float]
    fyf_n: list[float]
    fyr_n: list[float]
    fx_n: list[float]


class SimulateResponse(BaseModel):
    completed: bool
    lap_time_s: float | None = None
    off_track_s: float | None = None
    log: SimLogModel | None = None


class PreviewRequest(BaseModel):
    track: TrackModel
    start_s: float = 0.0
    lookahead: float = 900.0
    vehicle: VehicleModel = Field(default_factory=VehicleModel)
    config: ConfigModel = Field(default_factory=ConfigModel)


class QpDiagnostics(BaseModel):
    objective: float
    kkt_residual: float
    iterations: int
    status: str
    wall_time_s: float
    dynamics_residual: float
    max_bound_violation: float


class PreviewResponse(BaseModel):
    track: TrackModel
    speed: SpeedModel
    qp: QpDiagnostics
    truncated: bool


class ReportRequest(BaseModel):
    status: str = "unknown"
    iterations: list[IterationModel]


class ReportResponse(BaseModel):
    text: str
