"""Track geometry: arc-length parameterization, boundary ingestion, conversions.

A path is stored as arrays over stations ``s_k`` with curvature ``K_k``,
signed lateral corridor bounds ``w_in`` (positive side) / ``w_out`` (negative
side), the Cartesian trace ``(E_k, N_k)`` and the path heading ``psi_r``.

Conventions used throughout the package:

* heading ``psi`` is measured so the unit tangent is ``(-sin psi, cos psi)``
  in East-North axes (``psi = 0`` points due North, positive counterclockwise);
* the positive lateral direction (toward ``w_in``) is the tangent rotated by
  +90 degrees, i.e. ``(-cos psi, -sin psi)`` -- the left of the direction of
  travel, which is the inside of a turn with positive curvature;
* a closed circuit duplicates its first station at the end of every array:
  ``s[-1]`` equals the lap length ``L``, ``(E, N)[-1] == (E, N)[0]`` and
  ``heading[-1] - heading[0]`` is the total turning (+-2 pi).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

from .errors import GeometryError, InputError

log = logging.getLogger(__name__)

DEFAULT_DS = 2.75
DEFAULT_OFFSET_WINDOW = 75.0


def cumtrapz0(y: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Cumulative trapezoidal integral of ``y`` over ``x`` starting at 0."""
    out = np.empty_like(np.asarray(y, dtype=float))
    out[0] = 0.0
    out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(x))
    return out


def tangent_of_heading(psi: np.ndarray) -> np.ndarray:
    """Unit tangent vectors (E, N) for heading angles ``psi``."""
    return np.stack([-np.sin(psi), np.cos(psi)], axis=-1)


def left_normal_of_heading(psi: np.ndarray) -> np.ndarray:
    """Unit vectors along the positive (``w_in``) lateral direction."""
    return np.stack([-np.cos(psi), -np.sin(psi)], axis=-1)


def heading_of_segment(d_east: float, d_north: float) -> float:
    """Heading angle whose tangent points along ``(d_east, d_north)``."""
    return float(np.arctan2(-d_east, d_north))


@dataclass(frozen=True)
class TrackPath:
    """Arc-length parameterized path with corridor bounds and Cartesian trace."""

    stations: np.ndarray
    curvature: np.ndarray
    w_in: np.ndarray
    w_out: np.ndarray
    east: np.ndarray
    north: np.ndarray
    heading: np.ndarray
    closed: bool

    def __post_init__(self):
        arrays = (self.stations, self.curvature, self.w_in, self.w_out,
                  self.east, self.north, self.heading)
        n = len(self.stations)
        if any(len(a) != n for a in arrays):
            raise InputError("all TrackPath arrays must share one length")
        if n < 2:
            raise InputError("a path needs at least two stations")
        if np.any(np.diff(self.stations) <= 0):
            raise InputError("stations must be strictly increasing")
        if self.stations[0] != 0.0:
            raise InputError("stations must start at s = 0")

    @property
    def n_stations(self) -> int:
        return len(self.stations)

    @property
    def total_length(self) -> float:
        return float(self.stations[-1])

    @property
    def ds(self) -> np.ndarray:
        """Per-segment spacing ``s_{k+1} - s_k`` (length ``n_stations - 1``)."""
        return np.diff(self.stations)

    def points(self) -> np.ndarray:
        """Cartesian trace as an (n, 2) array."""
        return np.stack([self.east, self.north], axis=1)

    def left_normals(self) -> np.ndarray:
        return left_normal_of_heading(self.heading)

    def with_offsets(self, w_in: np.ndarray, w_out: np.ndarray) -> "TrackPath":
        return replace(self, w_in=np.asarray(w_in, float), w_out=np.asarray(w_out, float))

    def check_corridor(self) -> None:
        """Raise if any station lies outside its own corridor bounds."""
        if np.any(self.w_in < 0.0) or np.any(self.w_out > 0.0):
            raise GeometryError("path leaves the corridor (w_in < 0 or w_out > 0)")

    def heading_consistency_error(self) -> float:
        """Max deviation of stored heading from the curvature integral."""
        ref = self.heading[0] + cumtrapz0(self.curvature, self.stations)
        return float(np.max(np.abs(self.heading - ref)))


@dataclass(frozen=True)
class BoundaryCloud:
    """Ordered inner/outer boundary point lists in East-North coordinates."""

    inner: np.ndarray
    outer: np.ndarray
    max_gap: float = 25.0

    def __post_init__(self):
        for name in ("inner", "outer"):
            pts = np.asarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, pts)
            if pts.ndim != 2 or pts.shape[1] != 2:
                raise InputError(f"{name} boundary must be an (n, 2) point array")
            if len(pts) < 4:
                raise InputError(f"{name} boundary needs at least 4 points")
            gaps = np.hypot(*np.diff(pts, axis=0).T)
            if np.any(gaps > self.max_gap):
                raise InputError(
                    f"{name} boundary has a gap of {gaps.max():.1f} m "
                    f"(limit {self.max_gap} m)")


def reconstruct_cartesian(stations: np.ndarray,
                          curvature: np.ndarray,
                          closed: bool = False,
                          origin: tuple[float, float] = (0.0, 0.0),
                          heading0: float = 0.0,
                          w_in: np.ndarray | None = None,
                          w_out: np.ndarray | None = None) -> TrackPath:
    """Build the Cartesian trace of an ``(s, K)`` profile by quadrature.

    Heading is the cumulative trapezoidal integral of curvature; East/North
    follow from integrating the unit tangent the same way.
    """
    s = np.asarray(stations, dtype=float)
    k = np.asarray(curvature, dtype=float)
    if s.ndim != 1 or s.shape != k.shape:
        raise InputError("stations and curvature must be 1-d arrays of equal length")
    if np.any(np.diff(s) <= 0):
        raise InputError("stations must be strictly increasing")
    psi = heading0 + cumtrapz0(k, s)
    tang = tangent_of_heading(psi)
    east = origin[0] + cumtrapz0(tang[:, 0], s)
    north = origin[1] + cumtrapz0(tang[:, 1], s)
    zeros = np.zeros_like(s)
    return TrackPath(
        stations=s - s[0], curvature=k,
        w_in=zeros.copy() if w_in is None else np.asarray(w_in, float),
        w_out=zeros.copy() if w_out is None else np.asarray(w_out, float),
        east=east, north=north, heading=psi, closed=closed)


def curvature_of_polyline(points: np.ndarray, closed: bool = False) -> np.ndarray:
    """Signed per-point curvature from circumscribed circles of point triples.

    Positive curvature turns counterclockwise in East-North axes. Endpoints
    copy their neighbor on open polylines and wrap on closed ones. Collinear
    triples give zero. A closed polyline may repeat its first point at the
    end; the duplicate is handled explicitly.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 3:
        raise InputError("need an (n >= 3, 2) point array")

    duplicated = closed and np.allclose(pts[0], pts[-1], atol=1e-12)
    work = pts[:-1] if duplicated else pts
    if len(work) < 3:
        raise InputError("need at least 3 distinct points")
    seg = np.hypot(*np.diff(work, axis=0).T)
    if np.any(seg < 1e-12):
        raise InputError("repeated consecutive points are not allowed")
    if closed and np.hypot(*(work[0] - work[-1])) < 1e-12:
        raise InputError("repeated consecutive points are not allowed")

    if closed:
        a = np.roll(work, 1, axis=0)
        b = work
        c = np.roll(work, -1, axis=0)
    else:
        a, b, c = work[:-2], work[1:-1], work[2:]

    v1 = b - a
    v2 = c - b
    cross = v1[:, 0] * v2[:, 1] - v1[:, 1] * v2[:, 0]
    la = np.hypot(*v1.T)
    lb = np.hypot(*v2.T)
    lc = np.hypot(*(c - a).T)
    denom = la * lb * lc
    kappa = np.where(denom > 0.0, 2.0 * cross / np.where(denom > 0, denom, 1.0), 0.0)

    if closed:
        out = kappa
        if duplicated:
            out = np.append(out, out[0])
    else:
        out = np.empty(len(work))
        out[1:-1] = kappa
        out[0] = kappa[0]
        out[-1] = kappa[-1]
    return out


def moving_average(values: np.ndarray, half_width: int, closed: bool) -> np.ndarray:
    """Boxcar smoothing; circular for closed paths, edge-clamped otherwise.

    On closed input the duplicated endpoint must not be included (pass the
    distinct points); this helper operates on whatever it is given.
    """
    if half_width <= 0:
        return np.asarray(values, dtype=float).copy()
    v = np.asarray(values, dtype=float)
    w = 2 * half_width + 1
    kernel = np.ones(w) / w
    if closed:
        padded = np.concatenate([v[-half_width:], v, v[:half_width]])
    else:
        padded = np.concatenate([np.repeat(v[0], half_width), v,
                                 np.repeat(v[-1], half_width)])
    return np.convolve(padded, kernel, mode="valid")


def _polyline_arclength(pts: np.ndarray) -> np.ndarray:
    chords = np.hypot(*np.diff(pts, axis=0).T)
    return np.concatenate([[0.0], np.cumsum(chords)])


def resample_polyline(pts: np.ndarray, spacing: float | None = None,
                      n_segments: int | None = None) -> np.ndarray:
    """Resample a polyline at uniform arc length (linear interpolation).

    Exactly one of ``spacing`` / ``n_segments`` must be given; the endpoints
    are always kept.
    """
    s = _polyline_arclength(pts)
    total = s[-1]
    if total <= 0:
        raise InputError("polyline has zero length")
    if n_segments is None:
        n_segments = max(2, int(round(total / spacing)))
    grid = np.linspace(0.0, total, n_segments + 1)
    east = np.interp(grid, s, pts[:, 0])
    north = np.interp(grid, s, pts[:, 1])
    return np.stack([east, north], axis=1)


def _close_polyline(pts: np.ndarray) -> np.ndarray:
    """Append the first point if the polyline does not already end on it."""
    if np.hypot(*(pts[0] - pts[-1])) > 1e-9:
        return np.vstack([pts, pts[0]])
    return pts


def _is_closed_curve(pts: np.ndarray) -> bool:
    gaps = np.hypot(*np.diff(pts, axis=0).T)
    end_gap = np.hypot(*(pts[0] - pts[-1]))
    return bool(end_gap <= max(3.0 * np.median(gaps), 1e-9))


def _signed_area(pts: np.ndarray) -> float:
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def polyline_self_intersects(pts: np.ndarray, closed: bool) -> bool:
    """Brute-force proper-crossing test between non-adjacent segments."""
    p = _close_polyline(pts) if closed else pts
    a = p[:-1]
    d = np.diff(p, axis=0)
    n = len(a)
    for i in range(n - 2):
        j0 = i + 2
        j1 = n if not (closed and i == 0) else n - 1
        if j0 >= j1:
            continue
        w = a[j0:j1] - a[i]
        dj = d[j0:j1]
        denom = d[i, 0] * dj[:, 1] - d[i, 1] * dj[:, 0]
        ok = np.abs(denom) > 1e-14
        t = np.where(ok, (w[:, 0] * dj[:, 1] - w[:, 1] * dj[:, 0]) / np.where(ok, denom, 1.0), -1.0)
        u = np.where(ok, (w[:, 0] * d[i, 1] - w[:, 1] * d[i, 0]) / np.where(ok, denom, 1.0), -1.0)
        # endpoints included: non-adjacent segments may not even touch
        hit = ok & (t >= -1e-9) & (t <= 1 + 1e-9) & (u >= -1e-9) & (u <= 1 + 1e-9)
        if np.any(hit):
            return True
    return False


def _ray_polyline_offset(point: np.ndarray, direction: np.ndarray,
                         pts: np.ndarray, window: float) -> float | None:
    """Signed distance along ``direction`` to the nearest polyline crossing.

    Returns None when no crossing exists within ``+-window``.
    """
    a = pts[:-1]
    d = np.diff(pts, axis=0)
    w = a - point
    denom = direction[0] * d[:, 1] - direction[1] * d[:, 0]
    ok = np.abs(denom) > 1e-14
    safe = np.where(ok, denom, 1.0)
    t = (w[:, 0] * d[:, 1] - w[:, 1] * d[:, 0]) / safe
    v = (w[:, 0] * direction[1] - w[:, 1] * direction[0]) / safe
    valid = ok & (v >= -1e-12) & (v <= 1 + 1e-12) & (np.abs(t) <= window)
    if not np.any(valid):
        return None
    tt = t[valid]
    return float(tt[np.argmin(np.abs(tt))])


def _nearest_point_offset(point: np.ndarray, direction: np.ndarray,
                          pts: np.ndarray) -> float:
    """Distance to the nearest polyline vertex, signed by lateral side."""
    delta = pts - point
    dist = np.hypot(delta[:, 0], delta[:, 1])
    i = int(np.argmin(dist))
    side = np.sign(np.dot(delta[i], direction))
    if side == 0.0:
        side = 1.0
    return float(side * dist[i])


def signed_boundary_offsets(path: TrackPath, cloud: BoundaryCloud,
                            window: float = DEFAULT_OFFSET_WINDOW
                            ) -> tuple[np.ndarray, np.ndarray]:
    """Recompute ``(w_in, w_out)`` for a path against boundary polylines.

    Each station casts its lateral normal ray at both boundary polylines and
    keeps the nearest crossing within ``window`` meters; stations whose ray
    misses fall back to the nearest-vertex distance. Whichever polyline lies
    on the positive side of the path (majority vote) provides ``w_in``, the
    other ``w_out``. Stations outside the corridor are clamped to zero with a
    warning.
    """
    pts = path.points()
    normals = path.left_normals()

    def offsets_to(boundary: np.ndarray) -> np.ndarray:
        poly = _close_polyline(boundary) if _is_closed_curve(boundary) else boundary
        out = np.empty(path.n_stations)
        for i in range(path.n_stations):
            t = _ray_polyline_offset(pts[i], normals[i], poly, window)
            if t is None:
                t = _nearest_point_offset(pts[i], normals[i], poly)
            out[i] = t
        return out

    t_inner = offsets_to(cloud.inner)
    t_outer = offsets_to(cloud.outer)
    if np.median(t_inner) >= np.median(t_outer):
        pos, neg = t_inner, t_outer
    else:
        pos, neg = t_outer, t_inner

    n_bad = int(np.sum(pos < 0.0) + np.sum(neg > 0.0))
    if n_bad:
        log.warning("%d station(s) lie outside the corridor; offsets clamped to 0", n_bad)
    return np.maximum(pos, 0.0), np.minimum(neg, 0.0)


def _align_boundaries(inner: np.ndarray, outer: np.ndarray,
                      closed: bool) -> tuple[np.ndarray, np.ndarray]:
    """Give both boundaries matching orientation and, if closed, start points."""
    if closed:
        if _signed_area(inner) * _signed_area(outer) < 0:
            outer = outer[::-1]
        shift = int(np.argmin(np.hypot(*(outer - inner[0]).T)))
        outer = np.roll(outer, -shift, axis=0)
    else:
        din = inner[-1] - inner[0]
        dout = outer[-1] - outer[0]
        if np.dot(din, dout) < 0:
            outer = outer[::-1]
    return inner, outer


def estimate_centerline(cloud: BoundaryCloud, ds: float = DEFAULT_DS,
                        closed: bool | None = None,
                        smooth_half_width: int = 5,
                        midline_smooth_half_width: int = 3,
                        offset_window: float = DEFAULT_OFFSET_WINDOW) -> TrackPath:
    """Estimate the ``(s, K, w_in, w_out)`` centerline of a boundary corridor.

    Matched inner/outer samples are averaged into a midline, lightly smoothed,
    resampled at uniform ``ds``, and given a curvature profile from
    circumscribed circles followed by boxcar smoothing. Corridor widths come
    from :func:`signed_boundary_offsets` against the original boundaries.
    """
    if ds <= 0:
        raise InputError("ds must be positive")
    inner = np.asarray(cloud.inner, float)
    outer = np.asarray(cloud.outer, float)
    if closed is None:
        closed = _is_closed_curve(inner) and _is_closed_curve(outer)
    inner, outer = _align_boundaries(inner, outer, closed)

    fine = min(ds, 4.0) / 2.0
    if closed:
        inner_f = resample_polyline(_close_polyline(inner), spacing=fine)
        outer_f = resample_polyline(_close_polyline(outer), spacing=fine)
        n_seg = max(len(inner_f), len(outer_f)) - 1
        inner_m = resample_polyline(_close_polyline(inner), n_segments=n_seg)[:-1]
        outer_m = resample_polyline(_close_polyline(outer), n_segments=n_seg)[:-1]
    else:
        inner_f = resample_polyline(inner, spacing=fine)
        outer_f = resample_polyline(outer, spacing=fine)
        n_seg = max(len(inner_f), len(outer_f)) - 1
        inner_m = resample_polyline(inner, n_segments=n_seg)
        outer_m = resample_polyline(outer, n_segments=n_seg)

    mid = 0.5 * (inner_m + outer_m)
    if midline_smooth_half_width > 0:
        mid = np.stack([moving_average(mid[:, 0], midline_smooth_half_width, closed),
                        moving_average(mid[:, 1], midline_smooth_half_width, closed)], axis=1)

    if closed:
        mid_closed = _close_polyline(mid)
        pts = resample_polyline(mid_closed, spacing=ds)
    else:
        pts = resample_polyline(mid, spacing=ds)

    if polyline_self_intersects(pts, closed):
        raise GeometryError("estimated midline is self-intersecting")

    path = path_from_trace(pts, closed=closed, smooth_half_width=smooth_half_width)
    w_in, w_out = signed_boundary_offsets(
        path, BoundaryCloud(inner_f, outer_f, max_gap=cloud.max_gap), window=offset_window)
    return path.with_offsets(w_in, w_out)


def path_from_trace(pts: np.ndarray, closed: bool,
                    smooth_half_width: int = 0) -> TrackPath:
    """Build a TrackPath from a Cartesian trace (closed traces must repeat
    their first point at the end)."""
    s = _polyline_arclength(pts)
    kappa = curvature_of_polyline(pts, closed=closed)
    if smooth_half_width > 0:
        if closed:
            smoothed = moving_average(kappa[:-1], smooth_half_width, True)
            kappa = np.append(smoothed, smoothed[0])
        else:
            kappa = moving_average(kappa, smooth_half_width, False)

    if closed:
        chord = pts[1] - pts[-2]
    else:
        chord = pts[1] - pts[0]
    psi0 = heading_of_segment(chord[0], chord[1])
    if not closed:
        psi0 -= kappa[0] * (s[1] - s[0]) / 2.0
    heading = psi0 + cumtrapz0(kappa, s)
    zeros = np.zeros_like(s)
    return TrackPath(stations=s, curvature=kappa, w_in=zeros, w_out=zeros.copy(),
                     east=pts[:, 0], north=pts[:, 1], heading=heading, closed=closed)
