"""Three-pass minimum-time speed profile for a fixed path.

Pass one caps speed at the zero-longitudinal-force steady-state cornering
limit, pass two marches forward applying engine- and friction-limited
acceleration, pass three marches backward applying friction-limited braking;
each march keeps the pointwise minimum. Closed circuits sweep repeatedly with
wrap-around until the profile reaches a fixed point.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .track import TrackPath, cumtrapz0
from .vehicle import VehicleParams

log = logging.getLogger(__name__)

MAX_WRAP_SWEEPS = 60


@dataclass
class SpeedProfile:
    """Speed per station plus the integrated lap (or segment) time."""

    stations: np.ndarray
    U_x: np.ndarray
    lap_time: float
    steady: np.ndarray | None = None
    forward: np.ndarray | None = None


def friction_force_budget(U_x: float, K: float, params: VehicleParams) -> float:
    """Total longitudinal force the friction circles leave available.

    Per-axle headroom ``sqrt((mu F_z)^2 - F_y^2)`` with the steady-state
    cornering demand ``F_y = (F_z/g) U_x^2 K``, summed over both axles. With
    static axle loads both axles share the utilization ratio, so the sum
    collapses to ``mu m g sqrt(1 - q^2)``.
    """
    q = U_x ** 2 * abs(K) / (params.mu * params.g)
    if q > 1.0:
        return 0.0
    return params.mu * params.m * params.g * math.sqrt(1.0 - q * q)


def steady_state_pass(path: TrackPath, params: VehicleParams) -> np.ndarray:
    """Maximum steady-state cornering speed per station, capped at U_x_max."""
    k = np.abs(path.curvature)
    with np.errstate(divide="ignore"):
        u = np.sqrt(params.mu * params.g / np.where(k > 0, k, np.inf))
    u = np.where(k > 0, u, np.inf)
    return np.minimum(u, params.U_x_max)


def _accel_limit(U_x: float, K: float, params: VehicleParams) -> float:
    budget = friction_force_budget(U_x, K, params)
    if budget <= 0.0:
        log.debug("no acceleration headroom at U=%.2f K=%.4f", U_x, K)
    return min(params.F_engine_max, budget)


def _forward_sweep(u: np.ndarray, ds: np.ndarray, k: np.ndarray,
                   params: VehicleParams) -> bool:
    """One in-place forward march; returns True if anything changed."""
    changed = False
    two_over_m = 2.0 / params.m
    for i in range(len(ds)):
        f = _accel_limit(u[i], k[i], params)
        cand = math.sqrt(u[i] ** 2 + two_over_m * f * ds[i])
        if cand < u[i + 1]:
            u[i + 1] = cand
            changed = True
    return changed


def _braking_bound(u_next: float, ds: float, K: float,
                   params: VehicleParams) -> float:
    """Largest entry speed from which ``u_next`` is reachable under braking.

    Solves the implicit relation ``v^2 = u_next^2 + (2 ds/m) F(v)`` where the
    braking force ``F(v)`` is the friction budget at the entry station itself,
    so the friction circle holds exactly where the braking is attributed.
    """
    c = u_next ** 2
    a = 2.0 * ds * params.mu * params.g
    b = abs(K) / (params.mu * params.g)
    ab2 = (a * b) ** 2
    disc = 1.0 + ab2 - (b * c) ** 2
    if disc <= 0.0:
        # entry curvature cannot even sustain u_next laterally; no margin
        return u_next
    x = (c + a * math.sqrt(disc)) / (1.0 + ab2)
    return math.sqrt(x)


def _backward_sweep(u: np.ndarray, ds: np.ndarray, k: np.ndarray,
                    params: VehicleParams) -> bool:
    """One in-place backward march; returns True if anything changed."""
    changed = False
    for i in range(len(ds) - 1, -1, -1):
        cand = _braking_bound(u[i + 1], ds[i], k[i], params)
        if cand < u[i]:
            u[i] = cand
            changed = True
    return changed


def forward_pass(steady: np.ndarray, path: TrackPath,
                 params: VehicleParams) -> np.ndarray:
    """Acceleration-limited pass (minimum of march and steady-state values)."""
    u = np.asarray(steady, float).copy()
    ds = path.ds
    k = path.curvature
    for _ in range(MAX_WRAP_SWEEPS):
        if path.closed and u[-1] < u[0]:
            u[0] = u[-1]
        changed = _forward_sweep(u, ds, k, params)
        if not (path.closed and changed):
            break
    else:
        log.warning("forward pass did not reach a fixed point in %d sweeps",
                    MAX_WRAP_SWEEPS)
    return u


def backward_pass(forward: np.ndarray, path: TrackPath,
                  params: VehicleParams) -> np.ndarray:
    """Braking-limited pass (minimum of march and forward-pass values)."""
    u = np.asarray(forward, float).copy()
    ds = path.ds
    k = path.curvature
    for _ in range(MAX_WRAP_SWEEPS):
        if path.closed and u[0] < u[-1]:
            u[-1] = u[0]
        changed = _backward_sweep(u, ds, k, params)
        if not (path.closed and changed):
            break
    else:
        log.warning("backward pass did not reach a fixed point in %d sweeps",
                    MAX_WRAP_SWEEPS)
    if path.closed:
        tie = min(u[0], u[-1])
        u[0] = u[-1] = tie
    return u


def lap_time(stations: np.ndarray, U_x: np.ndarray) -> float:
    """Trapezoidal integral of ``1/U_x`` over arc length."""
    u = np.asarray(U_x, float)
    if np.any(u <= 0):
        raise InputError("speeds must be positive to integrate time")
    return float(cumtrapz0(1.0 / u, np.asarray(stations, float))[-1])


def solve_speed_profile(path: TrackPath, params: VehicleParams,
                        keep_traces: bool = False) -> SpeedProfile:
    """Run the three passes and integrate the lap time."""
    steady = steady_state_pass(path, params)
    fwd = forward_pass(steady, path, params)
    final = backward_pass(fwd, path, params)
    return SpeedProfile(
        stations=path.stations.copy(),
        U_x=final,
        lap_time=lap_time(path.stations, final),
        steady=steady if keep_traces else None,
        forward=fwd if keep_traces else None)


def implied_longitudinal_force(stations: np.ndarray, U_x: np.ndarray,
                               params: VehicleParams) -> np.ndarray:
    """Per-segment longitudinal force implied by the profile gradient.

    ``F_x = m U dU/ds`` discretized over each segment; length is one less than
    the station count. Segment forces are attributed to the segment's start
    station for friction accounting.
    """
    u = np.asarray(U_x, float)
    ds = np.diff(np.asarray(stations, float))
    return params.m * np.diff(u ** 2) / (2.0 * ds)
