import numpy as np
import pytest

from raceline import qp, speed, track
from raceline.errors import InputError
from raceline.vehicle import build_dynamics


def straight_setup(params, n=40, ds=2.75, half_width=5.0):
    s = np.arange(n) * ds
    path = track.reconstruct_cartesian(s, np.zeros(n))
    path = path.with_offsets(np.full(n, half_width), np.full(n, -half_width))
    profile = speed.solve_speed_profile(path, params)
    dyn = build_dynamics(path.stations, path.curvature, profile.U_x, params)
    return path, profile, dyn


class TestBuildQp:
    def test_three_station_cost_by_hand(self, params):
        path, profile, dyn = straight_setup(params, n=3, ds=2.0)
        prob = qp.build_qp(path, profile, dyn, lam=3.0, ridge=0.0)
        # cost = ((p2-p1)/2)^2 + ((p3-p2)/2)^2 + 3 (d2-d1)^2 + 3 (d3-d2)^2
        P = prob.P.toarray() / 2.0
        i_psi = [prob.x_index(k, 4) for k in range(3)]
        i_del = [prob.delta_index(k) for k in range(3)]
        w = 1.0 / 4.0
        expect_psi = w * np.array([[1, -1, 0], [-1, 2, -1], [0, -1, 1]])
        assert np.allclose(P[np.ix_(i_psi, i_psi)], expect_psi)
        expect_del = 3.0 * np.array([[1, -1, 0], [-1, 2, -1], [0, -1, 1]])
        assert np.allclose(P[np.ix_(i_del, i_del)], expect_del)
        # nothing else carries cost
        mask = np.zeros((prob.P.shape[0],), dtype=bool)
        mask[i_psi] = mask[i_del] = True
        assert np.all(P[~mask][:, ~mask] == 0.0)

    def test_heading_weight_value(self, params):
        path, profile, dyn = straight_setup(params, n=5, ds=2.75)
        prob = qp.build_qp(path, profile, dyn, lam=0.0, ridge=0.0)
        i1 = prob.x_index(0, 4)
        diag = prob.P.toarray()[i1, i1] / 2.0
        assert diag == pytest.approx(1.0 / 2.75 ** 2)
        assert diag == pytest.approx(0.1322, abs=2e-4)

    def test_zero_lambda_leaves_only_heading_cost(self, params):
        path, profile, dyn = straight_setup(params, n=6)
        prob = qp.build_qp(path, profile, dyn, lam=0.0, ridge=0.0)
        i_del = [prob.delta_index(k) for k in range(6)]
        assert np.all(prob.P.toarray()[np.ix_(i_del, i_del)] == 0.0)

    def test_row_counts(self, params, annulus_path, annulus_profile):
        dyn = build_dynamics(annulus_path.stations, annulus_path.curvature,
                             annulus_profile.U_x, params)
        prob = qp.build_qp(annulus_path, annulus_profile, dyn)
        T = annulus_path.n_stations
        assert prob.n_dynamics_rows == 5 * (T - 1)
        assert prob.n_periodicity_rows == 6
        assert prob.A.shape == (5 * (T - 1) + 6 + T, 6 * T)

    def test_dimension_mismatch_rejected(self, params):
        path, profile, dyn = straight_setup(params, n=10)
        short = speed.SpeedProfile(stations=path.stations[:5],
                                   U_x=profile.U_x[:5], lap_time=1.0)
        with pytest.raises(InputError):
            qp.build_qp(path, short, dyn)


class TestSolveBehavior:
    def test_straight_corridor_stays_straight(self, params):
        path, profile, dyn = straight_setup(params)
        prob = qp.build_qp(path, profile, dyn)
        sol = qp.solve_curvature_qp(prob)
        assert sol.status == "optimal"
        assert sol.objective <= 1e-8
        assert np.max(np.abs(sol.delta)) <= 1e-5
        assert np.max(np.abs(sol.e)) <= 1e-4

    def test_crossed_bounds_report_infeasible(self, params):
        path, profile, dyn = straight_setup(params)
        bad = path.with_offsets(path.w_in - 12.0, path.w_out)
        prob = qp.build_qp(bad, profile, dyn)
        sol = qp.solve_curvature_qp(prob)
        assert sol.status == "infeasible"

    def test_annulus_is_degenerate_in_offset(self, params, annulus_path,
                                             annulus_profile):
        # any constant offset of a constant-curvature loop costs the same
        # under the affine model, so the tie-break ridge keeps the path at
        # the reference; the corridor stays untouched
        sol = qp.min_curvature_step(annulus_path, annulus_profile, params)
        assert sol.status == "optimal"
        assert np.max(np.abs(sol.e)) < 0.05
        assert sol.max_bound_violation <= 1e-6

    def test_widening_annulus_corridor_does_not_raise_cost(
            self, params, annulus_path, annulus_profile):
        sol = qp.min_curvature_step(annulus_path, annulus_profile, params)
        wide = annulus_path.with_offsets(2 * annulus_path.w_in,
                                         2 * annulus_path.w_out)
        sol_wide = qp.min_curvature_step(wide, annulus_profile, params)
        assert sol_wide.objective <= sol.objective + 1e-9

    def test_hairpin_moves_out_in_out(self, params, hairpin_path,
                                      hairpin_profile):
        sol = qp.min_curvature_step(hairpin_path, hairpin_profile, params)
        assert sol.status == "optimal"
        apex = int(np.argmax(np.abs(hairpin_path.curvature)))
        assert sol.e[apex] > 0.5          # toward the inner bound
        assert sol.e[: apex // 2].min() < -0.5  # entry swings outward


@pytest.fixture(scope="module")
def hairpin_solution(params, hairpin_path, hairpin_profile):
    dyn = build_dynamics(hairpin_path.stations, hairpin_path.curvature,
                         hairpin_profile.U_x, params)
    prob = qp.build_qp(hairpin_path, hairpin_profile, dyn)
    warm = qp.reference_trajectory(hairpin_path, hairpin_profile, dyn, params)
    return prob, qp.solve_curvature_qp(prob, warm_start=warm)


class TestSolutionInvariants:
    def test_dynamics_residual(self, hairpin_solution):
        _, sol = hairpin_solution
        assert sol.dynamics_residual <= 1e-6

    def test_bounds_hold(self, hairpin_solution):
        _, sol = hairpin_solution
        assert sol.max_bound_violation <= 1e-6

    def test_kkt_residual(self, hairpin_solution):
        _, sol = hairpin_solution
        assert sol.kkt_residual <= 1e-6

    def test_periodicity_on_closed_circuit(self, params, annulus_path,
                                           annulus_profile):
        sol = qp.min_curvature_step(annulus_path, annulus_profile, params)
        assert np.allclose(sol.x[0, :4], sol.x[-1, :4], atol=1e-6)
        turn = annulus_path.heading[-1] - annulus_path.heading[0]
        assert sol.psi[-1] - sol.psi[0] == pytest.approx(turn, abs=1e-6)
        assert sol.delta[0] == pytest.approx(sol.delta[-1], abs=1e-6)

    def test_objective_descent_vs_reference(self):
        # exact circle below the friction limit: the steady-state reference
        # is feasible, so the optimum cannot cost more
        from raceline.vehicle import VehicleParams
        params = VehicleParams(U_x_max=25.0)
        length = 2 * np.pi * 100.0
        s = np.linspace(0.0, length, 230)
        path = track.reconstruct_cartesian(s, np.full_like(s, 0.01), closed=True)
        path = path.with_offsets(np.full_like(s, 5.0), np.full_like(s, -5.0))
        profile = speed.solve_speed_profile(path, params)
        dyn = build_dynamics(path.stations, path.curvature, profile.U_x, params)
        prob = qp.build_qp(path, profile, dyn)
        ref = qp.reference_trajectory(path, profile, dyn, params)
        residual = prob.A[:prob.n_dynamics_rows] @ ref - \
            prob.l[:prob.n_dynamics_rows]
        assert np.max(np.abs(residual)) < 1e-8  # reference truly feasible
        sol = qp.solve_curvature_qp(prob, warm_start=ref)
        assert sol.objective <= qp.evaluate_objective(prob, ref) + 1e-9

    def test_lambda_monotonicity(self, params, hairpin_path, hairpin_profile):
        steer_cost = []
        for lam in (0.1, 1.0, 10.0, 100.0):
            sol = qp.min_curvature_step(hairpin_path, hairpin_profile, params,
                                        lam=lam)
            steer_cost.append(float(np.sum(np.diff(sol.delta) ** 2)))
        assert all(b <= a + 1e-10 for a, b in zip(steer_cost, steer_cost[1:]))

    def test_speed_floor_rejected(self, params, hairpin_path, hairpin_profile):
        slow = speed.SpeedProfile(stations=hairpin_profile.stations,
                                  U_x=np.full_like(hairpin_profile.U_x, 2.0),
                                  lap_time=1.0)
        with pytest.raises(InputError):
            qp.min_curvature_step(hairpin_path, slow, params)
