"""Nonlinear closed-loop lap simulation.

A planar bicycle model with brush-tire forces tracks a (path, speed profile)
trajectory through a lookahead steering law plus a proportional-with-
feedforward speed controller. Global pose is integrated with fixed-step RK4;
the curvilinear states (station, lateral error, heading error) come from
nearest-point projection onto the path polyline, warm-started between steps.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError, OffTrackError
from .speed import SpeedProfile, friction_force_budget
from .track import TrackPath
from .vehicle import (VehicleParams, fiala_force, saturation_angle,
                      steady_state_steering)

log = logging.getLogger(__name__)

OFF_TRACK_LIMIT = 25.0


@dataclass(frozen=True)
class ControllerGains:
    """Tracking-law gains.

    Beyond the lookahead error feedback and steady-state feedforward, three
    safeguards keep the closed loop controllable at friction-limit stations,
    where the bare lookahead law is unstable: a yaw-rate damping term, a
    front slip-angle limiter on the steering command, and a drive-force cap
    that reserves lateral grip on corner exits. Braking is never capped below
    the friction budget (the profile needs all of it on entries).
    """

    k_lat: float = 0.05        # steering feedback on lateral error, rad/m
    x_la: float = 15.0         # lookahead distance blending heading error, m
    k_speed: float = 0.5       # proportional speed gain, 1/s
    k_yaw: float = 0.3         # damping on yaw-rate error, rad per rad/s
    speed_margin: float = 0.01   # fractional backoff from the commanded speed
    slip_fraction: float = 0.9   # front slip command cap vs saturation angle
    drive_fraction: float = 0.9  # drive force cap vs lateral-friction budget

    def __post_init__(self):
        if min(self.k_lat, self.x_la, self.k_speed) <= 0:
            raise InputError("controller gains must be positive")
        if not 0.0 <= self.speed_margin < 0.2:
            raise InputError("speed_margin must lie in [0, 0.2)")
        if not 0.0 < self.slip_fraction <= 1.0:
            raise InputError("slip_fraction must lie in (0, 1]")
        if not 0.0 < self.drive_fraction <= 1.0:
            raise InputError("drive_fraction must lie in (0, 1]")


@dataclass
class SimLog:
    t: np.ndarray
    s: np.ndarray
    e: np.ndarray
    dpsi: np.ndarray
    U_x: np.ndarray
    delta: np.ndarray
    F_yf: np.ndarray
    F_yr: np.ndarray
    F_x: np.ndarray


@dataclass
class SimResult:
    lap_time: float
    log: SimLog


class _PathTracker:
    """Warm-started nearest-point projection onto the path polyline."""

    def __init__(self, path: TrackPath):
        self.pts = path.points()
        self.s = path.stations
        self.heading = path.heading
        self.curvature = path.curvature
        self.closed = path.closed
        # closed paths duplicate the first station at the end
        self.n_seg = len(self.pts) - 1
        self.d = np.diff(self.pts, axis=0)
        self.len2 = np.maximum(np.sum(self.d ** 2, axis=1), 1e-18)
        self.hint = 0

    def project(self, x: float, y: float, hint: int | None = None) -> tuple:
        """Return (s, e, psi_r, K, seg_index) for the query point."""
        k0 = self.hint if hint is None else hint
        best = None
        for off in range(-2, 9):
            k = k0 + off
            if self.closed:
                k %= self.n_seg
            elif k < 0 or k >= self.n_seg:
                continue
            px, py = self.pts[k]
            dx, dy = self.d[k]
            t = ((x - px) * dx + (y - py) * dy) / self.len2[k]
            t = min(max(t, 0.0), 1.0)
            cx, cy = px + t * dx, py + t * dy
            dist2 = (x - cx) ** 2 + (y - cy) ** 2
            if best is None or dist2 < best[0]:
                best = (dist2, k, t)
        _, k, t = best
        self.hint = k
        s = self.s[k] + t * (self.s[k + 1] - self.s[k])
        psi_r = self.heading[k] + t * (self.heading[k + 1] - self.heading[k])
        kappa = self.curvature[k] + t * (self.curvature[k + 1] - self.curvature[k])
        # signed offset along the left normal of the local heading
        ux, uy = -math.cos(psi_r), -math.sin(psi_r)
        px, py = self.pts[k] + t * self.d[k]
        e = (x - px) * ux + (y - py) * uy
        return s, e, psi_r, kappa, k


def _wrap_angle(a: float) -> float:
    return (a + math.pi) % (2.0 * math.pi) - math.pi


@dataclass
class SimState:
    east: float
    north: float
    psi: float
    r: float
    beta: float
    U_x: float
    s: float = 0.0
    e: float = 0.0
    dpsi: float = 0.0


def _feedforward_tables(path: TrackPath, profile: SpeedProfile,
                        params: VehicleParams, speed_margin: float = 0.0):
    """Commanded speed and steady-state steering/sideslip per station.

    The commanded speed backs off the profile by ``speed_margin`` so the
    tracker keeps a sliver of lateral force authority at stations where the
    profile uses the whole friction circle.
    """
    u = np.maximum((1.0 - speed_margin) * profile.U_x, 5.0)
    delta_ff, beta_ff = steady_state_steering(u, path.curvature, params)
    du_ds = np.gradient(u, path.stations)
    return u, np.asarray(delta_ff, float), np.asarray(beta_ff, float), du_ds


def step(state: SimState, path: TrackPath, profile: SpeedProfile,
         params: VehicleParams, gains: ControllerGains, dt: float,
         tracker: _PathTracker | None = None,
         tables=None) -> tuple[SimState, dict]:
    """Advance the simulation one control period of length ``dt``."""
    if dt <= 0:
        raise InputError("dt must be positive")
    tracker = tracker or _PathTracker(path)
    tables = tables or _feedforward_tables(path, profile, params,
                                           gains.speed_margin)
    new_state, info = _advance(state, tracker, tables, params, gains, dt)
    if abs(new_state.e) > OFF_TRACK_LIMIT:
        raise OffTrackError(
            f"lateral error {new_state.e:.1f} m exceeds {OFF_TRACK_LIMIT} m",
            station_s=new_state.s)
    return new_state, info


def _advance(state: SimState, tracker: _PathTracker, tables, params, gains,
             dt: float) -> tuple[SimState, dict]:
    u_des, delta_ff, beta_ff, du_ds = tables
    s_grid = tracker.s
    m, a, b = params.m, params.a, params.b
    I_z = params.I_z

    s0, e0, psi_r0, k0, _ = tracker.project(state.east, state.north)
    dpsi0 = _wrap_angle(state.psi - psi_r0)
    ud = float(np.interp(s0, s_grid, u_des))
    dff = float(np.interp(s0, s_grid, delta_ff))
    uds = float(np.interp(s0, s_grid, du_ds))
    delta = (dff - gains.k_lat * (e0 + gains.x_la * dpsi0)
             - gains.k_yaw * (state.r - state.U_x * k0))
    # keep the commanded front slip inside the controllable tire range
    alpha_cap = gains.slip_fraction * saturation_angle(params.C_f, params.F_zf,
                                                       params.mu)
    alpha_base = state.beta + a * state.r / max(state.U_x, 1.0)
    delta = min(max(delta, alpha_base - alpha_cap), alpha_base + alpha_cap)

    fx_cmd = m * uds * state.U_x + gains.k_speed * m * (ud - state.U_x)
    budget = friction_force_budget(state.U_x, k0, params)
    fx = min(max(fx_cmd, -budget),
             min(params.F_engine_max, gains.drive_fraction * budget))

    def deriv(y):
        east, north, psi, r, beta, ux = y
        ux = max(ux, 1.0)
        s, e, psi_r, kappa, _ = tracker.project(east, north)
        alpha_f = beta + a * r / ux - delta
        alpha_r = beta - b * r / ux
        fyf = fiala_force(alpha_f, params.C_f, params.F_zf, params.mu)
        fyr = fiala_force(alpha_r, params.C_r, params.F_zr, params.mu)
        v = ux / math.cos(beta) if abs(beta) < 1.0 else ux
        course = psi + beta
        return np.array([
            -v * math.sin(course),
            v * math.cos(course),
            r,
            (a * fyf - b * fyr) / I_z,
            (fyf + fyr) / (m * ux) - r,
            fx / m,
        ]), (fyf, fyr)

    y0 = np.array([state.east, state.north, state.psi, state.r, state.beta,
                   state.U_x])
    k1, forces = deriv(y0)
    k2, _ = deriv(y0 + 0.5 * dt * k1)
    k3, _ = deriv(y0 + 0.5 * dt * k2)
    k4, _ = deriv(y0 + dt * k3)
    y1 = y0 + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)

    s1, e1, psi_r1, _, _ = tracker.project(y1[0], y1[1])
    new = SimState(east=y1[0], north=y1[1], psi=y1[2], r=y1[3], beta=y1[4],
                   U_x=max(y1[5], 1.0), s=s1, e=e1,
                   dpsi=_wrap_angle(y1[2] - psi_r1))
    return new, {"delta": delta, "fx": fx, "fyf": forces[0], "fyr": forces[1]}


def simulate_lap(path: TrackPath, profile: SpeedProfile, params: VehicleParams,
                 gains: ControllerGains | None = None,
                 dt: float = 0.005, max_laps: float = 1.25) -> SimResult:
    """Run the closed-loop simulation for one full lap of a closed circuit.

    The vehicle starts on the path at the first station in its steady
    cornering state. The lap ends when the traversed arc length passes the
    circuit length; the crossing time is interpolated within the final step.
    """
    if not path.closed:
        raise InputError("lap simulation needs a closed circuit")
    gains = gains or ControllerGains()
    tracker = _PathTracker(path)
    tables = _feedforward_tables(path, profile, params, gains.speed_margin)
    u_des, delta_ff, beta_ff, _ = tables

    total = path.total_length
    u0 = float(u_des[0])
    # equilibrium start: velocity vector (heading + sideslip) along the path
    state = SimState(east=float(path.east[0]), north=float(path.north[0]),
                     psi=float(path.heading[0]) - float(beta_ff[0]),
                     r=u0 * float(path.curvature[0]),
                     beta=float(beta_ff[0]), U_x=u0)

    rows = {k: [] for k in ("t", "s", "e", "dpsi", "U_x", "delta",
                            "fyf", "fyr", "fx")}
    t = 0.0
    s_prev = 0.0
    s_traveled = 0.0
    max_steps = int(max_laps * total / (5.0 * dt)) + 10
    lap_time = None
    for _ in range(max_steps):
        new_state, info = _advance(state, tracker, tables, params, gains, dt)
        if abs(new_state.e) > OFF_TRACK_LIMIT:
            raise OffTrackError(
                f"vehicle left the track at s = {new_state.s:.0f} m",
                station_s=new_state.s)
        ds = new_state.s - s_prev
        if path.closed and ds < -total / 2:
            ds += total
        s_prev = new_state.s
        advanced = s_traveled + ds
        rows["t"].append(t)
        rows["s"].append(new_state.s)
        rows["e"].append(new_state.e)
        rows["dpsi"].append(new_state.dpsi)
        rows["U_x"].append(new_state.U_x)
        rows["delta"].append(info["delta"])
        rows["fyf"].append(info["fyf"])
        rows["fyr"].append(info["fyr"])
        rows["fx"].append(info["fx"])
        if advanced >= total:
            frac = (total - s_traveled) / max(ds, 1e-12)
            lap_time = t + frac * dt
            break
        s_traveled = advanced
        state = new_state
        t += dt
    if lap_time is None:
        raise OffTrackError("simulation did not complete a lap", station_s=s_prev)
    log_arrays = SimLog(
        t=np.array(rows["t"]), s=np.array(rows["s"]), e=np.array(rows["e"]),
        dpsi=np.array(rows["dpsi"]), U_x=np.array(rows["U_x"]),
        delta=np.array(rows["delta"]), F_yf=np.array(rows["fyf"]),
        F_yr=np.array(rows["fyr"]), F_x=np.array(rows["fx"]))
    return SimResult(lap_time=float(lap_time), log=log_arrays)
