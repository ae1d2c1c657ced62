"""Bicycle vehicle model: brush tire curve, per-station linearization, and
construction/discretization of the affine time-varying lateral dynamics.

State ordering is fixed as ``x = [e, dpsi, r, beta, psi]``: lateral deviation,
path heading error, yaw rate, sideslip, vehicle heading.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np
from scipy.linalg import expm

from .errors import InputError

log = logging.getLogger(__name__)

STATE_DIM = 5
IDX_E, IDX_DPSI, IDX_R, IDX_BETA, IDX_PSI = range(STATE_DIM)

SPEED_FLOOR = 5.0          # dynamics divide by U_x; synthetic inputs may stall
SATURATION_CLAMP = 0.999   # keep the linearized stiffness strictly positive


@dataclass(frozen=True)
class VehicleParams:
    """Vehicle and tire parameters (defaults: mid-size sports coupe)."""

    m: float = 1500.0          # mass, kg
    I_z: float = 2250.0        # yaw inertia, kg m^2
    a: float = 1.04            # CG to front axle, m
    b: float = 1.42            # CG to rear axle, m
    C_f: float = 160000.0      # front cornering stiffness, N/rad
    C_r: float = 180000.0      # rear cornering stiffness, N/rad
    mu: float = 0.95           # tire-road friction coefficient
    F_engine_max: float = 3750.0  # peak longitudinal drive force, N
    g: float = 9.81
    U_x_max: float = 85.0      # top-speed cap for the profiler, m/s

    def __post_init__(self):
        for name, value in asdict(self).items():
            if value <= 0:
                raise InputError(f"vehicle parameter {name} must be positive")

    @property
    def wheelbase(self) -> float:
        return self.a + self.b

    @property
    def F_zf(self) -> float:
        """Static front-axle normal load (no weight transfer)."""
        return self.m * self.g * self.b / self.wheelbase

    @property
    def F_zr(self) -> float:
        return self.m * self.g * self.a / self.wheelbase

    def axle(self, which: str) -> tuple[float, float]:
        """(cornering stiffness, static normal load) for axle 'f' or 'r'."""
        if which == "f":
            return self.C_f, self.F_zf
        if which == "r":
            return self.C_r, self.F_zr
        raise InputError(f"axle must be 'f' or 'r', got {which!r}")

    @classmethod
    def from_json(cls, path: str | Path) -> "VehicleParams":
        with open(path) as f:
            data = json.load(f)
        try:
            return cls(**{k: float(v) for k, v in data.items()})
        except TypeError as exc:
            raise InputError(f"unknown vehicle parameter in {path}: {exc}") from exc

    def to_json(self, path: str | Path) -> None:
        with open(path, "w") as f:
            json.dump(asdict(self), f, indent=2, sort_keys=True)
            f.write("\n")


def saturation_angle(C: float, F_z: float, mu: float) -> float:
    """Slip angle beyond which the brush tire force is fully saturated."""
    return float(np.arctan(3.0 * mu * F_z / C))


def fiala_force(alpha, C: float, F_z: float, mu: float):
    """Lateral force of the brush tire model.

    Cubic in tan(alpha) up to the saturation angle, constant -mu*F_z*sgn(alpha)
    beyond; continuous with zero slope at the breakpoint. Accepts scalars or
    arrays.
    """
    if C <= 0 or F_z <= 0 or mu <= 0:
        raise InputError("C, F_z and mu must be positive")
    alpha = np.asarray(alpha, dtype=float)
    t = np.tan(alpha)
    mufz = mu * F_z
    cubic = (-C * t
             + C ** 2 / (3.0 * mufz) * np.abs(t) * t
             - C ** 3 / (27.0 * mufz ** 2) * t ** 3)
    saturated = -mufz * np.sign(alpha)
    out = np.where(np.abs(alpha) < saturation_angle(C, F_z, mu), cubic, saturated)
    return float(out) if out.ndim == 0 else out


def fiala_stiffness(alpha, C: float, F_z: float, mu: float):
    """Local cornering stiffness -dF_y/dalpha of the brush tire model."""
    alpha = np.asarray(alpha, dtype=float)
    t = np.tan(alpha)
    mufz = mu * F_z
    sec2 = 1.0 + t ** 2
    inside = (C
              - 2.0 * C ** 2 / (3.0 * mufz) * np.abs(t)
              + C ** 3 / (9.0 * mufz ** 2) * t ** 2) * sec2
    out = np.where(np.abs(alpha) < saturation_angle(C, F_z, mu), inside, 0.0)
    return float(out) if out.ndim == 0 else out


@dataclass
class TireLinearization:
    """Operating-point data for one axle, per station (scalars or arrays)."""

    F_tilde: np.ndarray      # steady-state lateral force, N
    alpha_tilde: np.ndarray  # slip angle producing it, rad
    C_tilde: np.ndarray      # local cornering stiffness at that angle, N/rad
    F_z: float               # static normal load, N


_clamp_warnings = {"count": 0}


def clamp_warning_count() -> int:
    """Number of tire linearizations that had to clamp at saturation."""
    return _clamp_warnings["count"]


def _invert_fiala_vec(force_mag: np.ndarray, C: float, F_z: float, mu: float,
                      tol: float = 1e-10) -> np.ndarray:
    """Slip-angle magnitudes on the unsaturated branch with |F_y| = force_mag.

    Bisection; the branch is strictly monotone from 0 to mu*F_z so this is
    unconditionally safe. ~50 halvings reach the 1e-10 rad tolerance.
    """
    lo = np.zeros_like(force_mag)
    hi = np.full_like(force_mag, saturation_angle(C, F_z, mu))
    while float(np.max(hi - lo)) > tol:
        mid = 0.5 * (lo + hi)
        below = -fiala_force(mid, C, F_z, mu) < force_mag
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def linearize_axle(U_x, K, axle: str, params: VehicleParams) -> TireLinearization:
    """Steady-state cornering linearization of one axle over station arrays.

    The demanded force is ``(F_z/g) U_x^2 K``; demands at or beyond the
    friction limit are clamped just inside it so the local stiffness stays
    positive.
    """
    U_x = np.asarray(U_x, dtype=float)
    K = np.asarray(K, dtype=float)
    if np.any(U_x <= 0):
        raise InputError("U_x must be positive")
    C, F_z = params.axle(axle)
    mufz = params.mu * F_z
    demand = (F_z / params.g) * U_x ** 2 * K
    limit = SATURATION_CLAMP * mufz
    clamped = np.abs(demand) >= limit
    n_clamped = int(np.sum(clamped))
    if n_clamped:
        _clamp_warnings["count"] += n_clamped
        log.debug("%d tire demand(s) clamped at saturation (%s axle)", n_clamped, axle)
    f_tilde = np.where(clamped, np.sign(demand) * limit, demand)
    # fiala_force is odd and decreasing: positive force <-> negative angle
    mag = _invert_fiala_vec(np.abs(f_tilde), C, F_z, params.mu)
    alpha_tilde = np.where(f_tilde == 0.0, 0.0, -np.sign(f_tilde) * mag)
    c_tilde = fiala_stiffness(alpha_tilde, C, F_z, params.mu)
    return TireLinearization(F_tilde=f_tilde, alpha_tilde=alpha_tilde,
                             C_tilde=np.asarray(c_tilde, float), F_z=F_z)


def linearize_tire(U_x: float, K: float, axle: str,
                   params: VehicleParams) -> TireLinearization:
    """Scalar convenience wrapper around :func:`linearize_axle`."""
    lin = linearize_axle(np.array([U_x]), np.array([K]), axle, params)
    return TireLinearization(F_tilde=float(lin.F_tilde[0]),
                             alpha_tilde=float(lin.alpha_tilde[0]),
                             C_tilde=float(lin.C_tilde[0]), F_z=lin.F_z)


def steady_state_steering(U_x, K, params: VehicleParams,
                          front: TireLinearization | None = None,
                          rear: TireLinearization | None = None):
    """(steering angle, sideslip) of the steady-state cornering condition."""
    if front is None:
        front = linearize_axle(U_x, K, "f", params)
    if rear is None:
        rear = linearize_axle(U_x, K, "r", params)
    beta = rear.alpha_tilde + params.b * np.asarray(K, float)
    delta = rear.alpha_tilde - front.alpha_tilde + params.wheelbase * np.asarray(K, float)
    return delta, beta


def continuous_matrices(U_x: float, K: float,
                        front: TireLinearization, rear: TireLinearization,
                        params: VehicleParams
                        ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Continuous-time affine model ``xdot = A x + B delta + d`` (one station)."""
    if U_x <= 0:
        raise InputError("U_x must be positive")
    m, I_z, a, b = params.m, params.I_z, params.a, params.b
    cf = float(np.asarray(front.C_tilde).item())
    cr = float(np.asarray(rear.C_tilde).item())
    ff = float(np.asarray(front.F_tilde).item())
    fr = float(np.asarray(rear.F_tilde).item())
    af = float(np.asarray(front.alpha_tilde).item())
    ar = float(np.asarray(rear.alpha_tilde).item())

    A = np.zeros((STATE_DIM, STATE_DIM))
    A[IDX_E, IDX_DPSI] = U_x
    A[IDX_E, IDX_BETA] = U_x
    A[IDX_DPSI, IDX_R] = 1.0
    A[IDX_R, IDX_R] = -(a ** 2 * cf + b ** 2 * cr) / (U_x * I_z)
    A[IDX_R, IDX_BETA] = (b * cr - a * cf) / I_z
    A[IDX_BETA, IDX_R] = (b * cr - a * cf) / (m * U_x ** 2) - 1.0
    A[IDX_BETA, IDX_BETA] = -(cf + cr) / (m * U_x)
    A[IDX_PSI, IDX_R] = 1.0

    B = np.zeros(STATE_DIM)
    B[IDX_R] = a * cf / I_z
    B[IDX_BETA] = cf / (m * U_x)

    d = np.zeros(STATE_DIM)
    d[IDX_DPSI] = -K * U_x
    d[IDX_R] = (a * cf * af - b * cr * ar + a * ff - b * fr) / I_z
    d[IDX_BETA] = (cf * af + cr * ar + ff + fr) / (m * U_x)
    return A, B, d


def discretize(A: np.ndarray, B: np.ndarray, d: np.ndarray, dt: float,
               scheme: str = "euler",
               stability_bound: float = 2.0
               ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One-step discretization of ``xdot = A x + B delta + d``.

    ``euler`` gives ``I + A dt``; ``zoh`` uses the exact matrix exponential of
    the augmented system. A spectral radius above ``stability_bound`` logs an
    instability warning (the step is still returned).
    """
    if dt <= 0:
        raise InputError("dt must be positive")
    n = A.shape[0]
    if scheme == "euler":
        Ak = np.eye(n) + A * dt
        Bk = B * dt
        dk = d * dt
    elif scheme == "zoh":
        aug = np.zeros((n + 2, n + 2))
        aug[:n, :n] = A
        aug[:n, n] = B
        aug[:n, n + 1] = d
        phi = expm(aug * dt)
        Ak = phi[:n, :n]
        Bk = phi[:n, n]
        dk = phi[:n, n + 1]
    else:
        raise InputError(f"unknown discretization scheme {scheme!r}")
    rho = float(np.max(np.abs(np.linalg.eigvals(Ak))))
    if rho > stability_bound:
        log.warning("discrete step spectral radius %.2f exceeds %.2f (dt=%.3g)",
                    rho, stability_bound, dt)
    return Ak, np.asarray(Bk, float), np.asarray(dk, float)


@dataclass
class AffineDynamics:
    """Per-segment discrete dynamics ``x_{k+1} = A_k x_k + B_k delta_k + d_k``.

    Arrays cover segments ``k = 0 .. T-2`` of a T-station path; ``dt`` is the
    traversal time of each segment at the profile speed. Tire linearizations
    are kept for warm starts and diagnostics.
    """

    A: np.ndarray   # (T-1, 5, 5)
    B: np.ndarray   # (T-1, 5)
    d: np.ndarray   # (T-1, 5)
    dt: np.ndarray  # (T-1,)
    front: TireLinearization | None = None
    rear: TireLinearization | None = None

    @property
    def n_segments(self) -> int:
        return len(self.dt)


def build_dynamics(stations: np.ndarray, curvature: np.ndarray,
                   speeds: np.ndarray, params: VehicleParams,
                   scheme: str = "euler",
                   stability_bound: float = 2.0) -> AffineDynamics:
    """Linearize and discretize the lateral dynamics along a path.

    Speeds below the floor are clamped for matrix construction; callers that
    must reject such profiles check before calling. Vectorized over stations.
    """
    s = np.asarray(stations, float)
    k = np.asarray(curvature, float)
    u = np.maximum(np.asarray(speeds, float), SPEED_FLOOR)
    if not (len(s) == len(k) == len(u)):
        raise InputError("stations, curvature and speeds must share one length")
    if len(s) < 2:
        raise InputError("need at least two stations")
    n = len(s) - 1
    ds = np.diff(s)
    uk, kk = u[:-1], k[:-1]
    dt = ds / uk

    front = linearize_axle(uk, kk, "f", params)
    rear = linearize_axle(uk, kk, "r", params)
    m, I_z, a, b = params.m, params.I_z, params.a, params.b
    cf, cr = front.C_tilde, rear.C_tilde

    A = np.zeros((n, STATE_DIM, STATE_DIM))
    A[:, IDX_E, IDX_DPSI] = uk
    A[:, IDX_E, IDX_BETA] = uk
    A[:, IDX_DPSI, IDX_R] = 1.0
    A[:, IDX_R, IDX_R] = -(a ** 2 * cf + b ** 2 * cr) / (uk * I_z)
    A[:, IDX_R, IDX_BETA] = (b * cr - a * cf) / I_z
    A[:, IDX_BETA, IDX_R] = (b * cr - a * cf) / (m * uk ** 2) - 1.0
    A[:, IDX_BETA, IDX_BETA] = -(cf + cr) / (m * uk)
    A[:, IDX_PSI, IDX_R] = 1.0

    B = np.zeros((n, STATE_DIM))
    B[:, IDX_R] = a * cf / I_z
    B[:, IDX_BETA] = cf / (m * uk)

    d = np.zeros((n, STATE_DIM))
    d[:, IDX_DPSI] = -kk * uk
    d[:, IDX_R] = (a * cf * front.alpha_tilde - b * cr * rear.alpha_tilde
                   + a * front.F_tilde - b * rear.F_tilde) / I_z
    d[:, IDX_BETA] = (cf * front.alpha_tilde + cr * rear.alpha_tilde
                      + front.F_tilde + rear.F_tilde) / (m * uk)

    if scheme == "euler":
        Ak = np.eye(STATE_DIM)[None, :, :] + A * dt[:, None, None]
        Bk = B * dt[:, None]
        dk = d * dt[:, None]
    elif scheme == "zoh":
        Ak = np.empty_like(A)
        Bk = np.empty_like(B)
        dk = np.empty_like(d)
        for i in range(n):
            Ak[i], Bk[i], dk[i] = discretize(A[i], B[i], d[i], float(dt[i]),
                                             scheme="zoh",
                                             stability_bound=stability_bound)
    else:
        raise InputError(f"unknown discretization scheme {scheme!r}")

    rho = np.max(np.abs(np.linalg.eigvals(Ak)), axis=1)
    n_unstable = int(np.sum(rho > stability_bound))
    if n_unstable:
        log.warning("%d discrete step(s) exceed spectral radius %.2f (max %.2f)",
                    n_unstable, stability_bound, float(rho.max()))
    return AffineDynamics(A=Ak, B=Bk, d=dk, dt=dt, front=front, rear=rear)
