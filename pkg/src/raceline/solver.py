"""Sparse convex QP solver over the structured KKT system.

Solves

    minimize    0.5 x' P x + q' x
    subject to  l <= A x <= u

where rows of A with l == u act as equalities and the rest as two-sided
ranges. Two engines share the sparse KKT assembly:

* ``interior_point`` (default): a Mehrotra predictor-corrector barrier
  method. Each Newton step refactorizes the quasi-definite KKT with the
  current barrier weights; step counts are nearly independent of horizon
  length, so wall time stays linear in problem size. This matters for the
  long path-update problems whose conditioning grows with station count.
* ``splitting``: an alternating projection / linear-solve scheme with one
  factorization reused across iterations (refactorized only when the step
  weight rescales), kept as an independent cross-check of the default.

Both finish with an active-set "polish" that re-solves the reduced
equality-constrained KKT system, pushing residuals to machine precision when
the active set is identified. Everything is deterministic: fixed iteration
order, fixed cadences, no randomness.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

SIGMA = 1e-6
ALPHA = 1.6
RHO_EQ_FACTOR = 1e3
RHO_MIN, RHO_MAX = 1e-6, 1e6
CHECK_EVERY = 25
ADAPT_EVERY = 100
RUIZ_ITERS = 10
EARLY_POLISH_EVERY = 100     # try an exact active-set solve from rough iterates
EARLY_POLISH_GATE = 3e-3     # ... once scaled residuals are below this


@dataclass
class QpResult:
    x: np.ndarray
    y: np.ndarray            # constraint duals (positive at upper bounds)
    z: np.ndarray            # A x at the solution
    objective: float
    iterations: int
    status: str              # "optimal" | "max_iter" | "infeasible"
    r_prim: float            # unscaled inf-norm primal residual
    r_dual: float            # unscaled inf-norm dual residual
    kkt_residual: float      # max of the relative primal/dual residuals
    polished: bool
    wall_time: float


def _ruiz_equilibrate(P: sp.csc_matrix, q: np.ndarray, A: sp.csc_matrix,
                      l: np.ndarray, u: np.ndarray):
    """Modified Ruiz scaling of the problem data (returns scaled copies)."""
    n, m = P.shape[0], A.shape[0]
    d = np.ones(n)
    e = np.ones(m)
    c = 1.0
    Ps, qs, As = P.copy(), q.copy(), A.copy()
    ls, us = l.copy(), u.copy()
    for _ in range(RUIZ_ITERS):
        col_norm_p = np.abs(Ps).max(axis=0).toarray().ravel() if Ps.nnz else np.zeros(n)
        col_norm_a = np.abs(As).max(axis=0).toarray().ravel() if As.nnz else np.zeros(n)
        col_norm = np.maximum(col_norm_p, col_norm_a)
        dd = 1.0 / np.sqrt(np.maximum(col_norm, 1e-10))
        if m:
            row_norm = np.abs(As).max(axis=1).toarray().ravel()
            de = 1.0 / np.sqrt(np.maximum(row_norm, 1e-10))
        else:
            de = np.ones(0)
        Dd = sp.diags(dd)
        Ps = (Dd @ Ps @ Dd).tocsc()
        qs = dd * qs
        if m:
            De = sp.diags(de)
            As = (De @ As @ Dd).tocsc()
            ls = de * ls
            us = de * us
        d *= dd
        e *= de
        # normalize cost magnitude
        col_p = np.abs(Ps).max(axis=0).toarray().ravel() if Ps.nnz else np.zeros(n)
        denom = max(np.mean(col_p) if n else 0.0, float(np.max(np.abs(qs), initial=0.0)))
        gamma = 1.0 / max(denom, 1e-10)
        Ps = (Ps * gamma).tocsc()
        qs = qs * gamma
        c *= gamma
    return Ps, qs, As, ls, us, d, e, c


def _build_kkt(Ps, As, rho_vec):
    n, m = Ps.shape[0], As.shape[0]
    top = sp.hstack([Ps + SIGMA * sp.identity(n), As.T], format="csc")
    bottom = sp.hstack([As, -sp.diags(1.0 / rho_vec)], format="csc")
    return sp.vstack([top, bottom], format="csc")


def _unscaled_residuals(P, q, A, x, z, y):
    ax = A @ x if A.shape[0] else np.zeros(0)
    px = P @ x
    aty = A.T @ y if A.shape[0] else np.zeros_like(x)
    r_prim = float(np.max(np.abs(ax - z), initial=0.0))
    r_dual = float(np.max(np.abs(px + q + aty)))
    sc_p = max(float(np.max(np.abs(ax), initial=0.0)),
               float(np.max(np.abs(z), initial=0.0)))
    sc_d = max(float(np.max(np.abs(px))), float(np.max(np.abs(aty), initial=0.0)),
               float(np.max(np.abs(q))))
    return r_prim, r_dual, sc_p, sc_d


def _solve_reduced_kkt(P, q, A_act, b_act):
    """Regularized solve of the equality-pinned KKT, with refinement."""
    n = P.shape[0]
    n_act = A_act.shape[0]
    delta = 1e-9
    kkt_reg = sp.vstack([
        sp.hstack([P + delta * sp.identity(n), A_act.T], format="csc"),
        sp.hstack([A_act, -delta * sp.identity(n_act)], format="csc"),
    ], format="csc")
    rhs = np.concatenate([-q, b_act])
    try:
        lu = splu(kkt_reg)
    except RuntimeError:
        return None
    sol = lu.solve(rhs)
    kkt_true = sp.vstack([
        sp.hstack([P, A_act.T], format="csc"),
        sp.hstack([A_act, sp.csc_matrix((n_act, n_act))], format="csc"),
    ], format="csc")
    for _ in range(3):
        sol = sol + lu.solve(rhs - kkt_true @ sol)
    if not np.all(np.isfinite(sol)):
        return None
    return sol


def _polish(P, q, A, l, u, x, y, eps_active: float = 1e-7, rounds: int = 8):
    """Active-set refinement: solve the reduced KKT with active rows pinned.

    The initial guess comes from the iterate's duals and bound proximity; the
    set grows by violated rows and sheds rows with clearly wrong-signed duals.
    Feasible rounds whose only defect is a negligible wrong-signed dual are
    kept as candidates with that dual clamped to zero (the cost of the clamp
    shows up honestly in the recomputed stationarity residual). Returns
    (x, y, ok).
    """
    m = A.shape[0]
    if m == 0:
        return x, y, False
    n = P.shape[0]
    eq = (u - l) <= 1e-12
    z = A @ x
    span = np.maximum(u - l, 1.0)
    near_low = (z - l) <= np.minimum(1e-4 * span, 1e-4)
    near_up = (u - z) <= np.minimum(1e-4 * span, 1e-4)
    low = (~eq) & ((y < -eps_active) | near_low) & np.isfinite(l)
    upp = (~eq) & ~low & ((y > eps_active) | near_up) & np.isfinite(u)

    best = None
    best_r_dual = np.inf
    for _ in range(rounds):
        active = eq | low | upp
        A_act = A[active]
        b_act = np.where(upp, u, l)[active]
        sol = _solve_reduced_kkt(P, q, A_act, b_act)
        if sol is None:
            break
        x_pol = sol[:n]
        y_pol = np.zeros(m)
        y_pol[active] = sol[n:]
        z_pol = A @ x_pol

        viol_low = (~active) & (z_pol < l - 1e-9)
        viol_up = (~active) & (z_pol > u + 1e-9)
        wrong_low = low & (y_pol > 0.0)
        wrong_up = upp & (y_pol < 0.0)
        if not (np.any(viol_low) or np.any(viol_up)):
            y_fix = y_pol.copy()
            y_fix[wrong_low | wrong_up] = 0.0
            r_dual = float(np.max(np.abs(P @ x_pol + q + A.T @ y_fix)))
            if r_dual < best_r_dual:
                best = (x_pol, y_fix)
                best_r_dual = r_dual
            if not (np.any(wrong_low) or np.any(wrong_up)):
                break
        y_scale = max(1.0, float(np.max(np.abs(y_pol))))
        rel_low = low & (y_pol > 1e-6 * y_scale)
        rel_up = upp & (y_pol < -1e-6 * y_scale)
        grow = viol_low | viol_up
        shed = rel_low | rel_up
        if not (np.any(grow) or np.any(shed)):
            break
        low = (low | viol_low) & ~rel_low
        upp = (upp | viol_up) & ~rel_up
    if best is not None:
        return best[0], best[1], True
    return x, y, False


def _solve_splitting(P, q, A, l, u, tol, max_iter, rho, polish, x0, y0):
    """Operator-splitting engine; returns (x, y, z, iterations, status, polished)."""
    n, m = P.shape[0], A.shape[0]
    Ps, qs, As, ls, us, D, E, c = _ruiz_equilibrate(P, q, A, l, u)

    eq_rows = (us - ls) <= 1e-12
    rho_bar = rho

    def rho_vector(r):
        vec = np.full(m, r)
        vec[eq_rows] = np.minimum(r * RHO_EQ_FACTOR, RHO_MAX)
        return np.clip(vec, RHO_MIN, RHO_MAX)

    rho_vec = rho_vector(rho_bar)
    lu = splu(_build_kkt(Ps, As, rho_vec))

    if x0 is not None:
        xs = np.asarray(x0, float) / D
        zs = np.clip(E * (A @ np.asarray(x0, float)), ls, us)
    else:
        xs = np.zeros(n)
        zs = np.clip(np.zeros(m), ls, us)
    ys = c * np.asarray(y0, float) / E if y0 is not None else np.zeros(m)

    status = "max_iter"
    iterations = max_iter
    best = None
    polished = False
    for it in range(1, max_iter + 1):
        rhs = np.concatenate([SIGMA * xs - qs, zs - ys / rho_vec])
        sol = lu.solve(rhs)
        x_tld = sol[:n]
        nu = sol[n:]
        z_tld = zs + (nu - ys) / rho_vec
        xs = ALPHA * x_tld + (1 - ALPHA) * xs
        v = ALPHA * z_tld + (1 - ALPHA) * zs
        zs_new = np.clip(v + ys / rho_vec, ls, us)
        ys = ys + rho_vec * (v - zs_new)
        zs = zs_new

        if it % CHECK_EVERY == 0 or it == max_iter:
            x = D * xs
            z = zs / E
            y = E * ys / c
            r_p, r_d, sc_p, sc_d = _unscaled_residuals(P, q, A, x, z, y)
            best = (x, y, z)
            rel = max(r_p / max(sc_p, 1e-10), r_d / max(sc_d, 1e-10))
            if (r_p <= tol + tol * sc_p) and (r_d <= tol + tol * sc_d):
                status = "optimal"
                iterations = it
                break
            if polish and rel <= EARLY_POLISH_GATE and it % EARLY_POLISH_EVERY == 0:
                x_pol, y_pol, ok = _polish(P, q, A, l, u, x, y)
                if ok:
                    z_pol = A @ x_pol
                    rp2, rd2, sp2, sd2 = _unscaled_residuals(
                        P, q, A, x_pol, z_pol, y_pol)
                    if rp2 <= tol + tol * sp2 and rd2 <= tol + tol * sd2:
                        best = (x_pol, y_pol, z_pol)
                        status = "optimal"
                        iterations = it
                        polished = True
                        break
            if it % ADAPT_EVERY == 0:
                num = r_p / max(sc_p, 1e-10)
                den = r_d / max(sc_d, 1e-10)
                rho_new = float(np.clip(rho_bar * np.sqrt(num / max(den, 1e-16)),
                                        RHO_MIN, RHO_MAX))
                if rho_new > 5 * rho_bar or rho_new < rho_bar / 5:
                    rho_bar = rho_new
                    rho_vec = rho_vector(rho_bar)
                    lu = splu(_build_kkt(Ps, As, rho_vec))

    x, y, z = best
    return x, y, z, iterations, status, polished


IPM_MAX_STEPS = 60
IPM_FRACTION = 0.995


def _solve_interior_point(P, q, A, l, u, tol, max_iter, x0):
    """Mehrotra predictor-corrector engine.

    Box rows carry slack variables with log barriers on both gaps; equality
    rows keep plain multipliers. Each step factorizes the quasi-definite KKT
    with the current barrier weights and reuses the factor for the corrector
    solve. Returns (x, y, z, iterations, status).
    """
    n, m = P.shape[0], A.shape[0]
    eq = (u - l) <= 1e-12
    box = ~eq
    E_mat = A[eq]
    C_mat = A[box]
    b_eq = 0.5 * (l[eq] + u[eq])
    lb = l[box]
    ub = u[box]
    m_eq = E_mat.shape[0]
    m_box = C_mat.shape[0]

    x = np.asarray(x0, float).copy() if x0 is not None else np.zeros(n)
    y_eq = np.zeros(m_eq)
    has_lb = lb > -np.inf
    has_ub = ub < np.inf
    if m_box:
        span = np.where(has_lb & has_ub, ub - lb, 2.0)
        margin = np.minimum(0.25 * span, 1.0)
        s = np.clip(C_mat @ x,
                    np.where(has_lb, lb + margin, -np.inf),
                    np.where(has_ub, ub - margin, np.inf))
        lam_l = np.where(has_lb, 1.0, 0.0)
        lam_u = np.where(has_ub, 1.0, 0.0)
    else:
        s = np.zeros(0)
        lam_l = lam_u = np.zeros(0)
    n_barriers = max(int(np.sum(has_lb) + np.sum(has_ub)), 1)

    reg = 1e-9
    steps = min(max_iter, IPM_MAX_STEPS)
    status = "max_iter"
    it_used = steps
    for it in range(1, steps + 1):
        g_l = np.where(has_lb, np.maximum(s - lb, 1e-14), 1.0)
        g_u = np.where(has_ub, np.maximum(ub - s, 1e-14), 1.0)
        w = lam_u - lam_l

        r_dual = P @ x + q + (E_mat.T @ y_eq if m_eq else 0.0) \
            + (C_mat.T @ w if m_box else 0.0)
        r_eq = (E_mat @ x - b_eq) if m_eq else np.zeros(0)
        r_box = (C_mat @ x - s) if m_box else np.zeros(0)
        mu = float(np.sum(np.where(has_lb, g_l * lam_l, 0.0))
                   + np.sum(np.where(has_ub, g_u * lam_u, 0.0))) / n_barriers

        sc_d = max(float(np.max(np.abs(P @ x))), float(np.max(np.abs(q))), 1.0)
        sc_p = max(float(np.max(np.abs(A @ x), initial=0.0)), 1.0)
        ok_d = float(np.max(np.abs(r_dual))) <= 0.5 * tol * sc_d
        ok_p = (float(np.max(np.abs(r_eq), initial=0.0)) <= 0.5 * tol * sc_p
                and float(np.max(np.abs(r_box), initial=0.0)) <= 0.5 * tol * sc_p)
        if ok_d and ok_p and mu <= tol * sc_d:
            status = "optimal"
            it_used = it - 1
            break

        if m_box:
            theta = np.maximum(lam_l / g_l + lam_u / g_u, 1e-12)
            kkt = sp.vstack([
                sp.hstack([P + reg * sp.identity(n), E_mat.T, C_mat.T], format="csc"),
                sp.hstack([E_mat, -reg * sp.identity(m_eq),
                           sp.csc_matrix((m_eq, m_box))], format="csc"),
                sp.hstack([C_mat, sp.csc_matrix((m_box, m_eq)),
                           -sp.diags(1.0 / theta)], format="csc"),
            ], format="csc")
        else:
            kkt = sp.vstack([
                sp.hstack([P + reg * sp.identity(n), E_mat.T], format="csc"),
                sp.hstack([E_mat, -reg * sp.identity(m_eq)], format="csc"),
            ], format="csc")
        try:
            lu = splu(kkt)
        except RuntimeError:
            break

        def newton(rc_l, rc_u):
            if m_box:
                r_w = rc_u / g_u - rc_l / g_l
                rhs = np.concatenate([-r_dual, -r_eq, -r_box - r_w / theta])
            else:
                rhs = np.concatenate([-r_dual, -r_eq])
            sol = lu.solve(rhs)
            dx = sol[:n]
            dy = sol[n:n + m_eq]
            if m_box:
                ds = C_mat @ dx + r_box
                dlam_l = np.where(has_lb, (rc_l - lam_l * ds) / g_l, 0.0)
                dlam_u = np.where(has_ub, (rc_u + lam_u * ds) / g_u, 0.0)
            else:
                ds = dlam_l = dlam_u = np.zeros(0)
            return dx, dy, ds, dlam_l, dlam_u

        def max_steps(ds, dlam_l, dlam_u):
            if not m_box:
                return 1.0, 1.0
            with np.errstate(divide="ignore"):
                a_p = min(
                    float(np.min(np.where(has_lb & (ds < 0),
                                          -g_l / np.minimum(ds, -1e-300), np.inf))),
                    float(np.min(np.where(has_ub & (ds > 0),
                                          g_u / np.maximum(ds, 1e-300), np.inf))))
                a_d = min(
                    float(np.min(np.where(dlam_l < 0, -lam_l / np.minimum(dlam_l, -1e-300), np.inf))),
                    float(np.min(np.where(dlam_u < 0, -lam_u / np.minimum(dlam_u, -1e-300), np.inf))))
            return min(1.0, IPM_FRACTION * a_p), min(1.0, IPM_FRACTION * a_d)

        # predictor
        dx_a, dy_a, ds_a, dl_a, du_a = newton(
            np.where(has_lb, -g_l * lam_l, 0.0),
            np.where(has_ub, -g_u * lam_u, 0.0))
        a_p, a_d = max_steps(ds_a, dl_a, du_a)
        if m_box:
            mu_aff = (np.sum(np.where(has_lb,
                                      (g_l + a_p * ds_a) * (lam_l + a_d * dl_a), 0.0))
                      + np.sum(np.where(has_ub,
                                        (g_u - a_p * ds_a) * (lam_u + a_d * du_a), 0.0))
                      ) / n_barriers
            sigma = min(1.0, max(0.0, mu_aff / max(mu, 1e-300))) ** 3
            rc_l = np.where(has_lb, sigma * mu - g_l * lam_l - ds_a * dl_a, 0.0)
            rc_u = np.where(has_ub, sigma * mu - g_u * lam_u + ds_a * du_a, 0.0)
        else:
            rc_l = rc_u = np.zeros(0)
        dx, dy, ds, dl, du = newton(rc_l, rc_u)
        a_p, a_d = max_steps(ds, dl, du)

        x = x + a_p * dx
        y_eq = y_eq + a_d * dy
        if m_box:
            s = s + a_p * ds
            lam_l = np.where(has_lb, np.maximum(lam_l + a_d * dl, 1e-300), 0.0)
            lam_u = np.where(has_ub, np.maximum(lam_u + a_d * du, 1e-300), 0.0)

    y = np.zeros(m)
    if m_eq:
        y[eq] = y_eq
    if m_box:
        y[box] = lam_u - lam_l
    # clipped image: the primal residual then reports true bound violations
    # and equality gaps rather than the trivial zero of z = A x
    return x, y, np.clip(A @ x, l, u), it_used, status


def solve_qp(P: sp.spmatrix, q: np.ndarray, A: sp.spmatrix,
             l: np.ndarray, u: np.ndarray,
             tol: float = 1e-6, max_iter: int = 20000,
             rho: float = 0.1, polish: bool = True,
             x0: np.ndarray | None = None,
             y0: np.ndarray | None = None,
             method: str = "interior_point") -> QpResult:
    """Solve the box/equality constrained QP; see module docstring."""
    t0 = time.perf_counter()
    P = sp.csc_matrix(P)
    q = np.asarray(q, float)
    A = sp.csc_matrix(A)
    l = np.asarray(l, float)
    u = np.asarray(u, float)
    n, m = P.shape[0], A.shape[0]

    if np.any(l > u + 1e-12):
        return QpResult(x=np.zeros(n), y=np.zeros(m), z=np.zeros(m),
                        objective=np.nan, iterations=0, status="infeasible",
                        r_prim=np.inf, r_dual=np.inf, kkt_residual=np.inf,
                        polished=False, wall_time=time.perf_counter() - t0)

    if m == 0:
        lu = splu(sp.csc_matrix(P + 1e-12 * sp.identity(n)))
        x = lu.solve(-q)
        obj = float(0.5 * x @ (P @ x) + q @ x)
        r_d = float(np.max(np.abs(P @ x + q)))
        sc = max(1.0, float(np.max(np.abs(P @ x))), float(np.max(np.abs(q))))
        return QpResult(x=x, y=np.zeros(0), z=np.zeros(0), objective=obj,
                        iterations=1, status="optimal", r_prim=0.0, r_dual=r_d,
                        kkt_residual=r_d / sc, polished=False,
                        wall_time=time.perf_counter() - t0)

    polished = False
    if method == "interior_point":
        x, y, z, iterations, status = _solve_interior_point(
            P, q, A, l, u, tol, max_iter, x0)
    elif method == "splitting":
        x, y, z, iterations, status, polished = _solve_splitting(
            P, q, A, l, u, tol, max_iter, rho, polish, x0, y0)
    else:
        raise ValueError(f"unknown method {method!r}")
    r_p, r_d, sc_p, sc_d = _unscaled_residuals(P, q, A, x, z, y)

    if polish and not polished:
        x_pol, y_pol, ok = _polish(P, q, A, l, u, x, y)
        if ok:
            z_pol = A @ x_pol
            rp2, rd2, sp2, sd2 = _unscaled_residuals(P, q, A, x_pol, z_pol, y_pol)
            if max(rp2 / max(1.0, sp2), rd2 / max(1.0, sd2)) <= \
                    max(r_p / max(1.0, sc_p), r_d / max(1.0, sc_d)):
                x, y, z, r_p, r_d, sc_p, sc_d = x_pol, y_pol, z_pol, rp2, rd2, sp2, sd2
                polished = True
                if status == "max_iter" and \
                        rp2 <= tol + tol * sp2 and rd2 <= tol + tol * sd2:
                    status = "optimal"

    obj = float(0.5 * x @ (P @ x) + q @ x)
    kkt_rel = max(r_p / max(1.0, sc_p), r_d / max(1.0, sc_d))
    return QpResult(x=x, y=y, z=z, objective=obj, iterations=iterations,
                    status=status, r_prim=r_p, r_dual=r_d,
                    kkt_residual=kkt_rel, polished=polished,
                    wall_time=time.perf_counter() - t0)
