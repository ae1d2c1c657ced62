import logging

import numpy as np
import pytest

from raceline import fixtures, pipeline, speed, track
from raceline.vehicle import VehicleParams

logging.getLogger("raceline").setLevel(logging.ERROR)

# acceptance fixture geometry, shared between module tests and the
# acceptance suite so every test talks about the same tracks
HAIRPIN_KW = dict(straight=400.0, radius=22.0, width=32.0)
HAIRPIN_CONFIG = dict(epsilon=0.002, max_iterations=60,
                      step_fractions=(1.0, 0.5, 0.25, 0.125))


@pytest.fixture(scope="session")
def params():
    return VehicleParams()


@pytest.fixture(scope="session")
def annulus_path():
    return track.estimate_centerline(fixtures.annulus(), ds=2.75)


@pytest.fixture(scope="session")
def annulus_profile(annulus_path, params):
    return speed.solve_speed_profile(annulus_path, params, keep_traces=True)


@pytest.fixture(scope="session")
def hairpin_path(params):
    return track.estimate_centerline(fixtures.hairpin(**HAIRPIN_KW), ds=2.75)


@pytest.fixture(scope="session")
def hairpin_profile(hairpin_path, params):
    return speed.solve_speed_profile(hairpin_path, params, keep_traces=True)


@pytest.fixture(scope="session")
def annulus_run(params):
    return pipeline.generate_trajectory(fixtures.annulus(), params)


@pytest.fixture(scope="session")
def hairpin_run(params):
    cfg = pipeline.PipelineConfig(**HAIRPIN_CONFIG)
    return pipeline.generate_trajectory(fixtures.hairpin(**HAIRPIN_KW), params, cfg)


@pytest.fixture(scope="session")
def eight_corner_run(params):
    return pipeline.generate_trajectory(fixtures.eight_corner_circuit(), params)


def axle_utilization(path, profile, params):
    """Worst per-axle friction-circle utilization of a profile.

    Segment longitudinal forces are attributed to the segment's start station
    and split across axles in proportion to each axle's remaining headroom.
    """
    fx = speed.implied_longitudinal_force(profile.stations, profile.U_x, params)
    u = profile.U_x[:-1]
    k = path.curvature[:-1]
    out = []
    for c, fz in ((params.C_f, params.F_zf), (params.C_r, params.F_zr)):
        fy = fz / params.g * u ** 2 * k
        cap = params.mu * fz
        head = np.sqrt(np.maximum(cap ** 2 - fy ** 2, 0.0))
        out.append((fy, cap, head))
    (fyf, capf, headf), (fyr, capr, headr) = out
    total_head = np.maximum(headf + headr, 1e-12)
    util_f = (fx * headf / total_head / capf) ** 2 + (fyf / capf) ** 2
    util_r = (fx * headr / total_head / capr) ** 2 + (fyr / capr) ** 2
    return float(np.max(np.maximum(util_f, util_r)))
