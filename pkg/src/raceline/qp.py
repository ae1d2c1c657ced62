"""Convex minimum-curvature path update.

The decision vector stacks, per station k, the five lateral states
``x_k = [e, dpsi, r, beta, psi]`` followed by the steering angle ``delta_k``.
The cost penalizes squared heading differences per unit reference arc length
(the driven-path curvature) plus a steering-smoothness term; constraints are
the discretized affine dynamics, per-station corridor bounds on ``e``, and
loop-closure conditions on closed circuits.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import solver
from .errors import InputError, SolverError
from .speed import SpeedProfile
from .track import TrackPath
from .vehicle import (AffineDynamics, STATE_DIM, IDX_E, IDX_PSI, SPEED_FLOOR,
                      VehicleParams, build_dynamics, steady_state_steering)

log = logging.getLogger(__name__)

VARS_PER_STATION = STATE_DIM + 1
DEFAULT_LAMBDA = 1.0
DEFAULT_RIDGE = 1e-9
DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 20000


@dataclass
class QpProblem:
    """Assembled minimum-curvature QP in ``l <= A z <= u`` form."""

    T: int
    P: sp.csc_matrix          # quadratic cost (includes the tie-break ridge)
    q: np.ndarray
    A: sp.csc_matrix
    l: np.ndarray
    u: np.ndarray
    ds: np.ndarray            # per-segment reference spacing (constants)
    lam: float
    ridge: float
    closed: bool
    n_dynamics_rows: int
    n_periodicity_rows: int
    state_dim: int = STATE_DIM

    def x_index(self, k: int, state: int) -> int:
        return VARS_PER_STATION * k + state

    def delta_index(self, k: int) -> int:
        return VARS_PER_STATION * k + STATE_DIM


@dataclass
class QpSolution:
    """Optimal steering sequence and lateral-state trajectory."""

    delta: np.ndarray         # (T,)
    x: np.ndarray             # (T, 5)
    objective: float          # curvature + steering cost (ridge excluded)
    kkt_residual: float
    iterations: int
    status: str               # "optimal" | "max_iter" | "infeasible"
    dynamics_residual: float = np.nan
    max_bound_violation: float = np.nan
    wall_time: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    @property
    def e(self) -> np.ndarray:
        return self.x[:, IDX_E]

    @property
    def psi(self) -> np.ndarray:
        return self.x[:, IDX_PSI]


def _difference_operator(T: int, col_of, weights: np.ndarray) -> sp.csc_matrix:
    """Rows ``w_j * (v_{j+1} - v_j)`` for the variable indexed by ``col_of``."""
    rows = np.repeat(np.arange(T - 1), 2)
    cols = np.empty(2 * (T - 1), dtype=int)
    cols[0::2] = [col_of(k) for k in range(T - 1)]
    cols[1::2] = [col_of(k + 1) for k in range(T - 1)]
    vals = np.empty(2 * (T - 1))
    vals[0::2] = -weights
    vals[1::2] = weights
    n = VARS_PER_STATION * T
    return sp.csc_matrix((vals, (rows, cols)), shape=(T - 1, n))


def build_qp(path: TrackPath, profile: SpeedProfile, dyn: AffineDynamics,
             lam: float = DEFAULT_LAMBDA, ridge: float = DEFAULT_RIDGE,
             initial_state: np.ndarray | None = None) -> QpProblem:
    """Assemble the minimum-curvature QP for one path/profile iterate.

    The heading-difference weights use the current reference spacing as fixed
    constants (refreshed only between outer iterations, which keeps the cost
    quadratic). Closed circuits constrain ``[e, dpsi, r, beta]`` and the
    steering angle to match at the duplicated first/last station, and pin the
    heading difference to the reference total turning; the literal
    first-equals-last condition cannot hold for the heading state, which
    advances by a full turn per lap.
    """
    T = path.n_stations
    if T < 3:
        raise InputError("need at least 3 stations")
    if dyn.n_segments != T - 1 or len(profile.U_x) != T:
        raise InputError("path, profile and dynamics dimensions do not match")
    # crossed corridor bounds flow through; the solver reports infeasible

    n = VARS_PER_STATION * T
    ds = path.ds

    g_psi = _difference_operator(T, lambda k: VARS_PER_STATION * k + IDX_PSI,
                                 1.0 / ds)
    g_delta = _difference_operator(T, lambda k: VARS_PER_STATION * k + STATE_DIM,
                                   np.ones(T - 1))
    P = 2.0 * (g_psi.T @ g_psi + lam * (g_delta.T @ g_delta)) \
        + 2.0 * ridge * sp.identity(n)
    q = np.zeros(n)

    # dynamics rows: x_{k+1} - A_k x_k - B_k delta_k = d_k
    n_dyn = STATE_DIM * (T - 1)
    seg = np.arange(T - 1)
    rows_i = []
    cols_i = []
    vals_i = []
    # +I on x_{k+1}
    r = (STATE_DIM * seg[:, None] + np.arange(STATE_DIM)[None, :]).ravel()
    c = (VARS_PER_STATION * (seg + 1)[:, None] + np.arange(STATE_DIM)[None, :]).ravel()
    rows_i.append(r)
    cols_i.append(c)
    vals_i.append(np.ones_like(r, dtype=float))
    # -A_k on x_k
    r = (STATE_DIM * seg[:, None, None] + np.arange(STATE_DIM)[None, :, None]
         + np.zeros((1, 1, STATE_DIM), dtype=int)).ravel()
    c = (VARS_PER_STATION * seg[:, None, None]
         + np.zeros((1, STATE_DIM, 1), dtype=int)
         + np.arange(STATE_DIM)[None, None, :]).ravel()
    rows_i.append(r)
    cols_i.append(c)
    vals_i.append(-dyn.A.ravel())
    # -B_k on delta_k
    r = (STATE_DIM * seg[:, None] + np.arange(STATE_DIM)[None, :]).ravel()
    c = np.repeat(VARS_PER_STATION * seg + STATE_DIM, STATE_DIM)
    rows_i.append(r)
    cols_i.append(c)
    vals_i.append(-dyn.B.ravel())

    A_dyn = sp.csc_matrix((np.concatenate(vals_i),
                           (np.concatenate(rows_i), np.concatenate(cols_i))),
                          shape=(n_dyn, n))
    b_dyn = dyn.d.ravel()

    blocks = [A_dyn]
    lows = [b_dyn]
    ups = [b_dyn]

    n_periodic = 0
    if path.closed:
        rows_p, cols_p, vals_p, rhs_p = [], [], [], []
        last = T - 1
        for j, state in enumerate((0, 1, 2, 3)):
            rows_p += [j, j]
            cols_p += [VARS_PER_STATION * last + state, state]
            vals_p += [1.0, -1.0]
            rhs_p.append(0.0)
        rows_p += [4, 4]
        cols_p += [VARS_PER_STATION * last + IDX_PSI, IDX_PSI]
        vals_p += [1.0, -1.0]
        rhs_p.append(float(path.heading[-1] - path.heading[0]))
        rows_p += [5, 5]
        cols_p += [VARS_PER_STATION * last + STATE_DIM, STATE_DIM]
        vals_p += [1.0, -1.0]
        rhs_p.append(0.0)
        n_periodic = 6
        A_per = sp.csc_matrix((vals_p, (rows_p, cols_p)), shape=(n_periodic, n))
        blocks.append(A_per)
        lows.append(np.array(rhs_p))
        ups.append(np.array(rhs_p))
    elif initial_state is not None:
        x0 = np.asarray(initial_state, float)
        if x0.shape != (STATE_DIM,):
            raise InputError("initial_state must have 5 components")
        A_init = sp.csc_matrix(
            (np.ones(STATE_DIM), (np.arange(STATE_DIM), np.arange(STATE_DIM))),
            shape=(STATE_DIM, n))
        blocks.append(A_init)
        lows.append(x0)
        ups.append(x0)
        n_periodic = STATE_DIM

    # corridor box on e at every station
    e_cols = VARS_PER_STATION * np.arange(T) + IDX_E
    A_box = sp.csc_matrix((np.ones(T), (np.arange(T), e_cols)), shape=(T, n))
    blocks.append(A_box)
    lows.append(path.w_out.astype(float))
    ups.append(path.w_in.astype(float))

    A_full = sp.vstack(blocks, format="csc")
    return QpProblem(T=T, P=sp.csc_matrix(P), q=q, A=A_full,
                     l=np.concatenate(lows), u=np.concatenate(ups),
                     ds=ds, lam=lam, ridge=ridge, closed=path.closed,
                     n_dynamics_rows=n_dyn, n_periodicity_rows=n_periodic)


def reference_trajectory(path: TrackPath, profile: SpeedProfile, dyn: AffineDynamics,
                         params: VehicleParams) -> np.ndarray:
    """Zero-deviation decision vector: steady-state cornering at each station.

    Used both as a warm start and as the feasible comparison point for the
    objective-descent property.
    """
    T = path.n_stations
    u = np.maximum(profile.U_x, SPEED_FLOOR)
    delta, beta = steady_state_steering(u, path.curvature, params)
    z = np.zeros(VARS_PER_STATION * T)
    for k in range(T):
        base = VARS_PER_STATION * k
        z[base + 1] = -beta[k]                      # dpsi: zero lateral drift
        z[base + 2] = u[k] * path.curvature[k]      # r = U K
        z[base + 3] = beta[k]
        z[base + 4] = path.heading[k]
        z[base + 5] = delta[k]
    return z


def evaluate_objective(problem: QpProblem, z: np.ndarray) -> float:
    """Curvature + steering cost of a decision vector (ridge excluded)."""
    psi = z[problem.x_index(0, IDX_PSI)::VARS_PER_STATION]
    delta = z[problem.delta_index(0)::VARS_PER_STATION]
    dpsi = np.diff(psi) / problem.ds
    ddelta = np.diff(delta)
    return float(np.sum(dpsi ** 2) + problem.lam * np.sum(ddelta ** 2))


def solve_curvature_qp(problem: QpProblem, tol: float = DEFAULT_TOL,
                       max_iter: int = DEFAULT_MAX_ITER,
                       warm_start: np.ndarray | None = None) -> QpSolution:
    """Solve an assembled problem and unpack the trajectory."""
    res = solver.solve_qp(problem.P, problem.q, problem.A, problem.l, problem.u,
                          tol=tol, max_iter=max_iter, x0=warm_start)
    T = problem.T
    z = res.x
    x = z.reshape(T, VARS_PER_STATION)[:, :STATE_DIM].copy()
    delta = z.reshape(T, VARS_PER_STATION)[:, STATE_DIM].copy()

    dyn_rows = problem.A[:problem.n_dynamics_rows]
    dyn_rhs = problem.l[:problem.n_dynamics_rows]
    dynamics_residual = float(np.max(np.abs(dyn_rows @ z - dyn_rhs))) \
        if problem.n_dynamics_rows else 0.0
    e = x[:, IDX_E]
    bound_violation = float(np.max(np.maximum(e - problem.u[-T:],
                                              problem.l[-T:] - e), initial=0.0))
    return QpSolution(
        delta=delta, x=x,
        objective=evaluate_objective(problem, z),
        kkt_residual=res.kkt_residual,
        iterations=res.iterations,
        status=res.status,
        dynamics_residual=dynamics_residual,
        max_bound_violation=max(bound_violation, 0.0),
        wall_time=res.wall_time,
        diagnostics={"r_prim": res.r_prim, "r_dual": res.r_dual,
                     "polished": res.polished})


TRUST_UTILIZATION = 0.25   # per-step cap on |e * K|, the linearization error scale


def _trust_limited_bounds(path: TrackPath,
                          trust: float) -> tuple[np.ndarray, np.ndarray]:
    """Corridor bounds tightened so one linearized step stays trustworthy.

    The affine lateral model ignores the ``1 - e K`` station-rate compression,
    whose relative error is ``|e K|``; capping the per-step deviation keeps
    each update inside the regime where the model is a good approximation.
    The outer iteration still reaches the full corridor because bounds are
    re-measured around the updated path every iteration.
    """
    cap = trust / np.maximum(np.abs(path.curvature), 1e-9)
    return np.minimum(path.w_in, cap), np.maximum(path.w_out, -cap)


def min_curvature_step(path: TrackPath, profile: SpeedProfile,
                       params: VehicleParams,
                       lam: float = DEFAULT_LAMBDA, ridge: float = DEFAULT_RIDGE,
                       tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
                       scheme: str = "euler",
                       initial_state: np.ndarray | None = None,
                       trust: float = TRUST_UTILIZATION,
                       raise_on_failure: bool = True) -> QpSolution:
    """One full path-update solve: linearize, discretize, assemble, solve."""
    if np.any(profile.U_x < SPEED_FLOOR):
        raise InputError(
            f"profile speed below the {SPEED_FLOOR} m/s floor; "
            "dynamics matrices would be ill-conditioned")
    dyn = build_dynamics(path.stations, path.curvature, profile.U_x, params,
                         scheme=scheme)
    if trust and trust > 0:
        w_in, w_out = _trust_limited_bounds(path, trust)
        path = path.with_offsets(w_in, w_out)
    problem = build_qp(path, profile, dyn, lam=lam, ridge=ridge,
                       initial_state=initial_state)
    warm = reference_trajectory(path, profile, dyn, params)
    sol = solve_curvature_qp(problem, tol=tol, max_iter=max_iter, warm_start=warm)
    if sol.status != "optimal" and raise_on_failure:
        raise SolverError(f"curvature QP did not converge: {sol.status} "
                          f"(kkt={sol.kkt_residual:.2e})")
    return sol
