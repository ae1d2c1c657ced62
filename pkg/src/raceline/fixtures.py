"""Synthetic track fixtures with analytically known geometry.

Every generator returns a :class:`~raceline.track.BoundaryCloud`; the
corresponding exact centerline quantities are documented per function so
tests can check the ingestion pipeline against closed forms.
"""

from __future__ import annotations

import numpy as np

from .track import BoundaryCloud

__all__ = ["annulus", "straight_corridor", "hairpin", "chicane",
           "eight_corner_circuit", "scaling_circuit"]


def _offset_curves(pts: np.ndarray, half_width: float,
                   closed: bool) -> tuple[np.ndarray, np.ndarray]:
    """Inner (left-of-travel) and outer offset polylines of a centerline."""
    if closed:
        fwd = np.roll(pts, -1, axis=0) - np.roll(pts, 1, axis=0)
    else:
        fwd = np.gradient(pts, axis=0)
    tang = fwd / np.hypot(fwd[:, 0], fwd[:, 1])[:, None]
    left = np.stack([-tang[:, 1], tang[:, 0]], axis=1)
    return pts + half_width * left, pts - half_width * left


def annulus(radius: float = 100.0, width: float = 10.0,
            n_points: int = 720) -> BoundaryCloud:
    """Concentric-circle corridor, counterclockwise.

    Exact centerline: circle of ``radius`` with K = 1/radius,
    w_in = +width/2 (the smaller circle), w_out = -width/2.
    """
    theta = np.linspace(0.0, 2 * np.pi, n_points, endpoint=False)
    inner = (radius - width / 2) * np.stack([np.cos(theta), np.sin(theta)], axis=1)
    outer = (radius + width / 2) * np.stack([np.cos(theta), np.sin(theta)], axis=1)
    return BoundaryCloud(inner=inner, outer=outer)


def straight_corridor(length: float = 500.0, width: float = 10.0,
                      n_points: int = 200) -> BoundaryCloud:
    """Two parallel lines ``width`` apart running due North."""
    n = np.linspace(0.0, length, n_points)
    left = np.stack([np.full_like(n, -width / 2), n], axis=1)
    right = np.stack([np.full_like(n, +width / 2), n], axis=1)
    return BoundaryCloud(inner=left, outer=right)


def _centerline_from_segments(segments, step: float = 1.0) -> np.ndarray:
    """Chain straights ('s', length) and arcs ('a', radius, angle_rad)."""
    pts = [np.zeros(2)]
    heading = 0.0  # tangent (-sin, cos): starts due North
    for seg in segments:
        if seg[0] == "s":
            _, length = seg
            n = max(2, int(np.ceil(length / step)))
            for _ in range(n):
                d = length / n
                pts.append(pts[-1] + d * np.array([-np.sin(heading), np.cos(heading)]))
        else:
            _, radius, angle = seg
            arc_len = abs(radius * angle)
            n = max(2, int(np.ceil(arc_len / step)))
            k = np.sign(angle) / radius
            for _ in range(n):
                d = arc_len / n
                mid = heading + k * d / 2
                pts.append(pts[-1] + d * np.array([-np.sin(mid), np.cos(mid)]))
                heading += k * d
    return np.array(pts)


def hairpin(straight: float = 150.0, radius: float = 30.0,
            width: float = 12.0, step: float = 1.0) -> BoundaryCloud:
    """Open fixture: straight in, 180-degree left turn, straight out.

    Peak centerline |K| is 1/radius; the arc turns left so its inside is the
    w_in (positive) side.
    """
    center = _centerline_from_segments(
        [("s", straight), ("a", radius, np.pi), ("s", straight)], step)
    inner, outer = _offset_curves(center, width / 2, closed=False)
    return BoundaryCloud(inner=inner, outer=outer)


def chicane(straight: float = 100.0, radius: float = 50.0,
            angle_deg: float = 45.0, width: float = 10.0,
            step: float = 1.0) -> BoundaryCloud:
    """Open S-bend: straight, left arc, right arc, straight."""
    a = np.deg2rad(angle_deg)
    center = _centerline_from_segments(
        [("s", straight), ("a", radius, a), ("a", radius, -a), ("s", straight)], step)
    inner, outer = _offset_curves(center, width / 2, closed=False)
    return BoundaryCloud(inner=inner, outer=outer)


def _wavy_circle(base_radius: float, bumps: list[tuple[float, int, float]],
                 n_points: int) -> np.ndarray:
    theta = np.linspace(0.0, 2 * np.pi, n_points, endpoint=False)
    r = np.full_like(theta, base_radius)
    for amplitude, order, phase in bumps:
        r = r + amplitude * np.cos(order * theta + phase)
    return np.stack([r * np.cos(theta), r * np.sin(theta)], axis=1)


def eight_corner_circuit(base_radius: float = 310.0, width: float = 11.0,
                         n_points: int = 2400) -> BoundaryCloud:
    """Closed circuit whose curvature profile has eight pronounced corners.

    Built as a smoothly modulated loop (radius harmonics of order 3 and 5),
    roughly 2 km long with apex radii of a few tens of meters.
    """
    center = _wavy_circle(base_radius,
                          [(52.0, 3, 0.4), (34.0, 5, 1.9)], n_points)
    inner, outer = _offset_curves(center, width / 2, closed=True)
    return BoundaryCloud(inner=inner, outer=outer)


def scaling_circuit(target_length: float = 4822.0, width: float = 11.0,
                    n_points: int = 4200) -> BoundaryCloud:
    """Large closed circuit (~5 km, ~1843 stations at 2.75 m spacing) used for
    runtime-scaling measurements. The radius modulation lengthens the loop by
    about five percent over the base circle, which the default accounts for."""
    base = target_length / (2 * np.pi)
    center = _wavy_circle(base, [(0.075 * base, 4, 0.0), (0.05 * base, 7, 1.2)],
                          n_points)
    inner, outer = _offset_curves(center, width / 2, closed=True)
    return BoundaryCloud(inner=inner, outer=outer)
