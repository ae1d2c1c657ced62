"""raceline: minimum-lap-time racing trajectory generation.

The core iterates two subproblems until the lap time stops improving: a
friction-limited three-pass speed profile for a fixed path, and a convex
minimum-curvature path update subject to affine lateral vehicle dynamics and
track-boundary constraints. A FastAPI service exposes the operations and the
CLI acts as a thin client.
"""

__version__ = "0.1.0"

from .errors import (GeometryError, InputError, OffTrackError, RacelineError,
                     SolverError)
from .track import BoundaryCloud, TrackPath
from .vehicle import VehicleParams
from .speed import SpeedProfile, solve_speed_profile
from .pipeline import PipelineConfig, generate_trajectory, preview_plan

__all__ = [
    "BoundaryCloud", "GeometryError", "InputError", "OffTrackError",
    "PipelineConfig", "RacelineError", "SolverError", "SpeedProfile",
    "TrackPath", "VehicleParams", "__version__", "generate_trajectory",
    "preview_plan", "solve_speed_profile",
]
