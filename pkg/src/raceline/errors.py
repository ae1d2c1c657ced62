"""Exception types shared across the toolkit."""


class RacelineError(Exception):
    """Base class for all toolkit errors."""


class InputError(RacelineError):
    """Rejected input: malformed files, non-monotone stations, bad shapes."""


class GeometryError(RacelineError):
    """Track geometry is unusable (self-intersecting midline, gaps, ...)."""


class SolverError(RacelineError):
    """The curvature QP could not produce a usable solution."""


class OffTrackError(RacelineError):
    """Closed-loop simulation diverged off the track corridor."""

    def __init__(self, message: str, station_s: float):
        super().__init__(message)
        self.station_s = station_s
