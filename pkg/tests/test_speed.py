import math

import numpy as np
import pytest

from conftest import axle_utilization
from raceline import fixtures, speed, track
from raceline.errors import InputError
from raceline.vehicle import VehicleParams


def make_path(stations, curvature, closed=False):
    return track.reconstruct_cartesian(np.asarray(stations, float),
                                       np.asarray(curvature, float),
                                       closed=closed)


class TestSteadyStatePass:
    def test_constant_curvature(self, params):
        path = make_path(np.arange(0, 100, 2.75), np.full(37, 0.01))
        u = speed.steady_state_pass(path, params)
        assert np.allclose(u, math.sqrt(0.95 * 9.81 / 0.01))
        assert u[0] == pytest.approx(30.53, abs=0.01)

    def test_straight_capped(self, params):
        path = make_path([0.0, 10.0, 20.0], np.zeros(3))
        u = speed.steady_state_pass(path, params)
        assert np.all(u == params.U_x_max)

    def test_tight_corner(self, params):
        path = make_path([0.0, 5.0], [0.0475, 0.0475])
        u = speed.steady_state_pass(path, params)
        assert u[0] == pytest.approx(math.sqrt(0.95 * 9.81 / 0.0475))
        assert u[0] == pytest.approx(14.007, abs=0.001)


class TestForwardPass:
    def test_engine_limited_step(self, params):
        # 20 m/s, engine force over one 2.75 m segment on a straight
        path = make_path([0.0, 2.75], [0.0, 0.0])
        steady = np.array([20.0, 999.0])
        u = speed.forward_pass(steady, path, params)
        assert u[1] == pytest.approx(math.sqrt(400 + 2 * 2.5 * 2.75))
        assert u[1] == pytest.approx(20.34, abs=0.01)

    def test_min_rule_with_steady_state(self, params):
        path = make_path([0.0, 2.75], [0.0, 0.0])
        steady = np.array([20.0, 20.1])
        u = speed.forward_pass(steady, path, params)
        assert u[1] == 20.1

    def test_straight_saturates_at_cap(self, params):
        s = np.arange(0.0, 3000.0, 2.75)
        path = make_path(s, np.zeros_like(s))
        steady = np.full_like(s, params.U_x_max)
        steady[0] = 10.0
        u = speed.forward_pass(steady, path, params)
        assert np.all(np.diff(u) >= -1e-12)
        closed_form = np.sqrt(100.0 + 2 * params.F_engine_max / params.m * s)
        expect = np.minimum(closed_form, params.U_x_max)
        assert np.allclose(u, expect, rtol=1e-9)
        assert u[-1] == params.U_x_max


class TestBackwardPass:
    def test_full_braking_step(self, params):
        # 14 m/s corner entry, one station back on a straight
        path = make_path([0.0, 2.75], [0.0, 0.0])
        fwd = np.array([999.0, 14.0])
        u = speed.backward_pass(fwd, path, params)
        assert u[0] == pytest.approx(math.sqrt(196 + 2 * 0.95 * 9.81 * 2.75))
        assert u[0] == pytest.approx(15.72, abs=0.01)

    def test_min_rule_with_forward(self, params):
        path = make_path([0.0, 2.75], [0.0, 0.0])
        fwd = np.array([14.0, 20.0])
        u = speed.backward_pass(fwd, path, params)
        assert u[0] == 14.0

    def test_constant_circle_unchanged(self, params):
        # no accel/decel transients on an exactly constant-curvature loop
        length = 2 * math.pi * 100.0
        s = np.linspace(0.0, length, 230)
        path = make_path(s, np.full_like(s, 0.01), closed=True)
        steady = speed.steady_state_pass(path, params)
        fwd = speed.forward_pass(steady, path, params)
        back = speed.backward_pass(fwd, path, params)
        assert np.allclose(back, fwd, rtol=1e-12)
        assert np.allclose(back, steady, rtol=1e-12)


class TestLapTime:
    def test_circle(self, annulus_profile):
        u = math.sqrt(0.95 * 9.81 * 100.0)
        expected = 2 * math.pi * 100.0 / u
        assert annulus_profile.lap_time == pytest.approx(expected, rel=2e-3)
        assert annulus_profile.lap_time == pytest.approx(20.58, abs=0.02)

    def test_constant_speed(self):
        s = np.linspace(0.0, 1000.0, 101)
        assert speed.lap_time(s, np.full_like(s, 20.0)) == pytest.approx(50.0)

    def test_piecewise_speed(self):
        s = np.linspace(0.0, 200.0, 201)
        u = np.where(s < 100.0, 10.0, 20.0)
        t = speed.lap_time(s, u)
        assert t == pytest.approx(15.0, abs=0.1)

    def test_rejects_nonpositive_speed(self):
        with pytest.raises(InputError):
            speed.lap_time(np.array([0.0, 1.0]), np.array([1.0, 0.0]))


@pytest.fixture(scope="module")
def runs(params):
    out = []
    for cloud in (fixtures.annulus(), fixtures.eight_corner_circuit(),
                  fixtures.hairpin(straight=400, radius=22, width=32),
                  fixtures.chicane()):
        path = track.estimate_centerline(cloud, ds=2.75)
        out.append((path, speed.solve_speed_profile(path, params,
                                                    keep_traces=True)))
    return out


class TestProfileInvariants:
    def test_friction_circle(self, params, runs):
        for path, prof in runs:
            assert axle_utilization(path, prof, params) <= 1.0 + 1e-6

    def test_dominance(self, runs):
        for _, prof in runs:
            assert np.all(prof.U_x <= prof.steady + 1e-9)
            assert np.all(prof.U_x <= prof.forward + 1e-9)

    def test_engine_limit(self, params, runs):
        for path, prof in runs:
            fx = speed.implied_longitudinal_force(prof.stations, prof.U_x,
                                                  params)
            assert np.max(fx) <= params.F_engine_max + 1e-6

    def test_passes_are_idempotent(self, params, runs):
        for path, prof in runs:
            again = speed.backward_pass(
                speed.forward_pass(prof.U_x.copy(), path, params), path, params)
            assert np.allclose(again, prof.U_x, atol=1e-10)

    def test_monotone_in_friction(self, params, runs):
        grippier = VehicleParams(mu=1.05)
        for path, prof in runs:
            more = speed.solve_speed_profile(path, grippier)
            assert np.all(more.U_x >= prof.U_x - 1e-9)

    def test_closed_profiles_wrap(self, annulus_profile):
        assert abs(annulus_profile.U_x[0] - annulus_profile.U_x[-1]) < 1e-6

    def test_speeds_positive_and_capped(self, params, runs):
        for _, prof in runs:
            assert np.all(prof.U_x > 0.0)
            assert np.all(prof.U_x <= params.U_x_max + 1e-12)


class TestBrakingRamp:
    def test_matches_closed_form_on_straight(self, params, hairpin_path,
                                             hairpin_profile):
        # on the K ~ 0 approach, braking runs at full friction, so
        # U(s)^2 + 2 mu g s is constant along the ramp
        u = hairpin_profile.U_x
        s = hairpin_profile.stations
        k = np.abs(hairpin_path.curvature)
        braking = (np.diff(u) < -1e-6)
        straight = k[:-1] < 1e-4
        idx = np.where(braking & straight)[0]
        assert len(idx) > 10
        runs = np.split(idx, np.where(np.diff(idx) > 1)[0] + 1)
        ramp = max(runs, key=len)
        const = u[ramp] ** 2 + 2 * params.mu * params.g * s[ramp]
        u_pred = np.sqrt(const[-1] - 2 * params.mu * params.g * s[ramp])
        assert np.allclose(u[ramp], u_pred, rtol=5e-3)
