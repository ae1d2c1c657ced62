"""Acceptance suite: one test per headline criterion, each printing a
pass/fail line. Run with ``pytest tests/test_acceptance.py -s`` to see the
lines as they complete.
"""

import math
import time

import numpy as np
import pytest
import scipy.sparse as sp

from conftest import axle_utilization
from raceline import fixtures, pipeline, qp, simulate, speed, storage, track
from raceline.solver import solve_qp


def report(name: str, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


def test_convergence_shape(params):
    t0 = time.perf_counter()
    result = pipeline.generate_trajectory(fixtures.eight_corner_circuit(),
                                          params)
    wall = time.perf_counter() - t0
    tt = [r.lap_time_integrated for r in result.records]
    monotone = all(b <= a + 1e-3 for a, b in zip(tt, tt[1:]))
    total = tt[0] - tt[-1]
    first_two = (tt[0] - tt[min(2, len(tt) - 1)]) / total if total > 0 else 0.0
    iters = len(tt) - 1
    converged_in_budget = result.status == "converged" and iters <= 6
    ok = monotone and first_two >= 0.60 and converged_in_budget and wall < 300
    report("convergence shape (8-corner)", ok,
           f"laps {tt[0]:.2f}->{tt[-1]:.2f} s in {iters} iterations, "
           f"first-two share {first_two:.0%}, monotone={monotone}, "
           f"wall {wall:.0f} s")


def test_friction_feasibility(params, annulus_run, hairpin_run,
                              eight_corner_run):
    worst = 0.0
    cases = [("annulus", annulus_run.final_path, annulus_run.final_profile),
             ("hairpin", hairpin_run.final_path, hairpin_run.final_profile),
             ("8-corner", eight_corner_run.final_path,
              eight_corner_run.final_profile)]
    chicane = track.estimate_centerline(fixtures.chicane(), ds=2.75)
    cases.append(("chicane", chicane,
                  speed.solve_speed_profile(chicane, params)))
    for name, path, prof in cases:
        worst = max(worst, axle_utilization(path, prof, params))
    ok = worst <= 1.0 + 1e-6
    report("friction feasibility", ok,
           f"max per-axle circle utilization {worst:.9f}")


def test_speed_profile_analytic_oracle(params, annulus_profile, hairpin_path,
                                       hairpin_profile):
    u_ref = math.sqrt(params.mu * params.g * 100.0)
    annulus_err = float(np.max(np.abs(annulus_profile.U_x - u_ref)) / u_ref)

    u = hairpin_profile.U_x
    s = hairpin_profile.stations
    k = np.abs(hairpin_path.curvature)
    idx = np.where((np.diff(u) < -1e-6) & (k[:-1] < 1e-4))[0]
    runs = np.split(idx, np.where(np.diff(idx) > 1)[0] + 1)
    ramp = max(runs, key=len)
    const = u[ramp[-1]] ** 2 + 2 * params.mu * params.g * s[ramp[-1]]
    u_pred = np.sqrt(const - 2 * params.mu * params.g * s[ramp])
    ramp_err = float(np.max(np.abs(u[ramp] - u_pred) / u_pred))
    ok = annulus_err <= 0.005 and ramp_err <= 0.005
    report("speed-profile analytic oracle", ok,
           f"annulus vs sqrt(mu g R): {annulus_err:.2%}; "
           f"braking ramp vs closed form: {ramp_err:.2%} "
           f"({len(ramp)} stations)")


def test_qp_correctness(params, annulus_run, hairpin_run, eight_corner_run):
    # (a) every pipeline solve hit its KKT tolerance
    kkts = [r.qp_kkt_residual
            for run in (annulus_run, hairpin_run, eight_corner_run)
            for r in run.records[1:]]
    kkt_max = max(kkts)

    # (b) random instances against an independent projected-gradient oracle
    worst_gap = 0.0
    for seed, n in ((2, 60), (13, 100), (29, 40)):
        rng = np.random.default_rng(seed)
        M = rng.normal(size=(n, n))
        P = M @ M.T + 0.5 * np.eye(n)
        q = 3.0 * rng.normal(size=n)
        lo = -rng.uniform(0.05, 1.0, n)
        hi = rng.uniform(0.05, 1.0, n)
        res = solve_qp(sp.csc_matrix(P), q, sp.identity(n, format="csc"),
                       lo, hi)
        L = float(np.linalg.eigvalsh(P).max())
        x = np.zeros(n)
        for _ in range(400000):
            x_new = np.clip(x - (P @ x + q) / L, lo, hi)
            if np.max(np.abs(x_new - x)) < 1e-11:
                x = x_new
                break
            x = x_new
        worst_gap = max(worst_gap, float(np.max(np.abs(res.x - x))))
        kkt_max = max(kkt_max, res.kkt_residual)

    # (c) straight corridor stays straight
    path = track.estimate_centerline(fixtures.straight_corridor(), ds=2.75)
    prof = speed.solve_speed_profile(path, params)
    sol = qp.min_curvature_step(path, prof, params)
    kkt_max = max(kkt_max, sol.kkt_residual)

    ok = kkt_max <= 1e-6 and worst_gap <= 1e-5 and \
        sol.objective <= 1e-8 and float(np.max(np.abs(sol.delta))) <= 1e-5
    report("QP correctness", ok,
           f"max kkt residual {kkt_max:.1e}, oracle gap {worst_gap:.1e}, "
           f"straight objective {sol.objective:.1e}, "
           f"max steering {float(np.max(np.abs(sol.delta))):.1e} rad")


def test_minimum_curvature_behavior(hairpin_run):
    path0 = hairpin_run.paths[0]
    final = hairpin_run.final_path
    rms0 = float(np.sqrt(np.mean(path0.curvature ** 2)))
    rms1 = float(np.sqrt(np.mean(final.curvature ** 2)))
    i_apex = int(np.argmin(final.w_in))
    apex_gap = float(final.w_in.min())
    entry_gap = float(-final.w_out[:i_apex].max())
    exit_gap = float(-final.w_out[i_apex + 1:].max())
    ok = (apex_gap <= 0.2 and entry_gap <= 0.2 and exit_gap <= 0.2
          and rms1 <= 0.80 * rms0)
    report("minimum-curvature behavior (hairpin)", ok,
           f"bound gaps: apex {apex_gap:.3f} m, entry {entry_gap:.3f} m, "
           f"exit {exit_gap:.3f} m; RMS curvature ratio {rms1 / rms0:.3f}")


@pytest.mark.xfail(
    strict=True,
    reason="unattainable as specified: on an annulus the lap time "
    "2*pi*sqrt(R/(mu g)) grows with radius, so the sweep oracle picks the "
    "innermost circle, while curvature minimization cannot prefer a smaller "
    "radius (under the affine model every constant offset of a "
    "constant-curvature loop has identical cost, and the geometric "
    "minimum-curvature line is the outermost circle)")
def test_annulus_global_optimum(params, annulus_run):
    radii = np.linspace(95.0, 105.0, 2001)
    times = 2 * np.pi * np.sqrt(radii / (params.mu * params.g))
    t_best = float(times.min())
    t_conv = annulus_run.records[-1].lap_time_integrated
    gap = abs(t_conv - t_best) / t_best
    ok = gap <= 0.005
    report("annulus global-optimum check", ok,
           f"converged {t_conv:.3f} s vs sweep optimum {t_best:.3f} s "
           f"(radius {radii[np.argmin(times)]:.1f} m), gap {gap:.2%}")


def test_runtime_scaling(params):
    path = track.estimate_centerline(fixtures.scaling_circuit(), ds=2.75)
    prof = speed.solve_speed_profile(path, params)

    t0 = time.perf_counter()
    sol = qp.min_curvature_step(path, prof, params)
    full_wall = time.perf_counter() - t0

    walls = {}
    for lookahead in (450, 900, 1800, 4500):
        res = pipeline.preview_plan(path, params, start_s=100.0,
                                    lookahead=lookahead)
        walls[lookahead] = res.solution.wall_time
    pairs = [(450, 900), (900, 1800), (1800, 4500)]
    ratios = []
    ok = sol.status == "optimal" and full_wall < 60.0
    for a, b in pairs:
        growth = walls[b] / walls[a]
        limit = 1.5 * (b / a)
        ratios.append((growth, limit))
        ok = ok and growth <= limit
    report("runtime scaling", ok,
           f"full {path.n_stations}-station solve {full_wall:.1f} s; "
           f"window walls {[f'{walls[k]:.2f}' for k in (450, 900, 1800, 4500)]} s; "
           + "; ".join(f"{a}->{b}: {g:.2f}x (limit {l:.2f}x)"
                       for (a, b), (g, l) in zip(pairs, ratios)))


def test_simulator_consistency(params, annulus_run, eight_corner_run):
    details = []
    ok = True
    for name, run in (("annulus", annulus_run), ("8-corner", eight_corner_run)):
        integrated = run.final_profile.lap_time
        result = simulate.simulate_lap(run.final_path, run.final_profile,
                                       params)
        gap = abs(result.lap_time - integrated) / integrated
        details.append(f"{name}: sim {result.lap_time:.2f} s vs "
                       f"integrated {integrated:.2f} s ({gap:.2%})")
        ok = ok and gap <= 0.03
    report("simulator consistency", ok, "; ".join(details))


def test_determinism(tmp_path, params):
    from raceline import cli
    import json
    cloud = fixtures.hairpin(straight=120, radius=25, width=14)
    storage.save_boundary(cloud.inner, tmp_path / "inner.csv")
    storage.save_boundary(cloud.outer, tmp_path / "outer.csv")
    assert cli.main(["ingest", "--inner", str(tmp_path / "inner.csv"),
                     "--outer", str(tmp_path / "outer.csv"),
                     "-o", str(tmp_path / "track.csv")]) == 0
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"max_iterations": 2}))
    blobs = []
    recs = []
    for name in ("r1", "r2"):
        out = tmp_path / name
        assert cli.main(["optimize", "--track", str(tmp_path / "track.csv"),
                         "--config", str(cfg), "-o", str(out)]) == 0
        blobs.append({p.name: p.read_bytes() for p in sorted(out.glob("*.csv"))})
        records, _ = storage.load_records(out / "records.json")
        for r in records:
            r.pop("qp_wall_time", None)
        recs.append(records)
    ok = blobs[0] == blobs[1] and recs[0] == recs[1]
    report("determinism", ok,
           f"{len(blobs[0])} CSV files byte-identical across repeated "
           "optimize runs; records identical up to wall time")
