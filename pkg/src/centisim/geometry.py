"""Low-level geometry shared by the kinematics and contact code.

Conventions used throughout the package: world +z is up, the ground is the
plane z = 0, and rotations are right-handed about the given axis. 2-D
operations act on the horizontal (x, y) projection of world points.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

Z_AXIS = np.array([0.0, 0.0, 1.0])


def rot_x(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rotation_about_axis(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rodrigues rotation matrix about a unit axis."""
    x, y, z = axis
    c, s = np.cos(angle), np.sin(angle)
    k = 1.0 - c
    return np.array(
        [
            [c + x * x * k, x * y * k - z * s, x * z * k + y * s],
            [y * x * k + z * s, c + y * y * k, y * z * k - x * s],
            [z * x * k - y * s, z * y * k + x * s, c + z * z * k],
        ]
    )


def wrap_angle(a):
    """Wrap angle(s) into [-pi, pi)."""
    return (np.asarray(a) + np.pi) % (2.0 * np.pi) - np.pi


@dataclass(eq=False)
class Pose:
    """Rigid transform mapping body-frame points into the world frame."""

    rotation: np.ndarray
    translation: np.ndarray

    def apply(self, points: np.ndarray) -> np.ndarray:
        return points @ self.rotation.T + self.translation

    def copy(self) -> "Pose":
        return Pose(self.rotation.copy(), self.translation.copy())


def translate_pose(pose: Pose, offset: np.ndarray) -> Pose:
    return Pose(pose.rotation, pose.translation + offset)


def rotate_pose_about_line(pose: Pose, point: np.ndarray, axis: np.ndarray, angle: float) -> Pose:
    """Rotate a pose about the world line through `point` along unit `axis`."""
    rot = rotation_about_axis(axis, angle)
    return Pose(rot @ pose.rotation, rot @ (pose.translation - point) + point)


# ---------------------------------------------------------------------------
# 2-D convex hulls on the ground plane
# ---------------------------------------------------------------------------


def convex_hull_2d(points: np.ndarray) -> np.ndarray:
    """Convex hull of 2-D points, counter-clockwise, no repeated endpoint.

    Degenerate inputs are handled: a single point gives a 1-vertex hull and
    collinear points give the 2 extreme vertices.
    """
    pts = np.unique(np.asarray(points, dtype=float), axis=0)
    if len(pts) <= 2:
        return pts
    # pts come lexicographically sorted from np.unique
    def half(iterable):
        chain = []
        for p in iterable:
            while len(chain) >= 2 and _cross2(chain[-1] - chain[-2], p - chain[-2]) <= 0.0:
                chain.pop()
            chain.append(p)
        return chain

    lower = half(pts)
    upper = half(pts[::-1])
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 2:
        # fully coincident after rounding; fall back to the extremes
        hull = [pts[0], pts[-1]]
    return np.array(hull)


def _cross2(u, v) -> float:
    return u[0] * v[1] - u[1] * v[0]


def _closest_on_segment_2d(a, b, p):
    d = b - a
    dd = float(d @ d)
    if dd <= 0.0:
        return a, 0.0
    t = float(np.clip((p - a) @ d / dd, 0.0, 1.0))
    return a + t * d, t


def exterior_query_2d(hull: np.ndarray, p: np.ndarray):
    """Locate a 2-D point relative to a convex hull.

    Returns (distance_outside, closest_boundary_point, axis_direction).
    distance_outside is 0 for a point inside or on the hull. For an exterior
    point the axis direction is the edge direction when the closest boundary
    feature is an edge interior, or None when it is a vertex.
    """
    p = np.asarray(p, dtype=float)
    n = len(hull)
    if n == 1:
        d = float(np.hypot(*(p - hull[0])))
        return d, hull[0].copy(), None
    if n == 2:
        q, t = _closest_on_segment_2d(hull[0], hull[1], p)
        d = float(np.hypot(*(p - q)))
        if 1e-9 < t < 1.0 - 1e-9:
            return d, q, hull[1] - hull[0]
        return d, q, None
    rolled = np.roll(hull, -1, axis=0)
    edges = rolled - hull
    rel = p - hull
    signed = edges[:, 0] * rel[:, 1] - edges[:, 1] * rel[:, 0]
    if np.all(signed >= 0.0):
        return 0.0, p, None
    best = None
    for a, b in zip(hull, rolled):
        q, t = _closest_on_segment_2d(a, b, p)
        d = float(np.hypot(*(p - q)))
        if best is None or d < best[0] - 1e-15:
            on_edge = 1e-9 < t < 1.0 - 1e-9
            best = (d, q, (b - a) if on_edge else None)
    return best


# ---------------------------------------------------------------------------
# Segment-to-segment distances
# ---------------------------------------------------------------------------


def segment_segment_distance(p1, q1, p2, q2) -> np.ndarray:
    """Minimum distances between 3-D segment pairs (p1, q1) and (p2, q2).

    All arguments broadcast over a leading batch axis. Follows the clamped
    closest-point parametrisation; degenerate (zero-length) segments are
    treated as points.
    """
    p1 = np.atleast_2d(np.asarray(p1, dtype=float))
    q1 = np.atleast_2d(np.asarray(q1, dtype=float))
    p2 = np.atleast_2d(np.asarray(p2, dtype=float))
    q2 = np.atleast_2d(np.asarray(q2, dtype=float))
    d1 = q1 - p1
    d2 = q2 - p2
    r = p1 - p2
    a = np.einsum("ij,ij->i", d1, d1)
    e = np.einsum("ij,ij->i", d2, d2)
    f = np.einsum("ij,ij->i", d2, r)
    c = np.einsum("ij,ij->i", d1, r)
    b = np.einsum("ij,ij->i", d1, d2)
    eps = 1e-12

    denom = a * e - b * b
    safe_denom = np.where(denom > eps, denom, 1.0)
    s = np.where(denom > eps, np.clip((b * f - c * e) / safe_denom, 0.0, 1.0), 0.0)
    safe_e = np.where(e > eps, e, 1.0)
    t = np.where(e > eps, (b * s + f) / safe_e, 0.0)

    # clamp t, then recompute s against the clamped t
    t_low = t < 0.0
    t_high = t > 1.0
    t = np.clip(t, 0.0, 1.0)
    safe_a = np.where(a > eps, a, 1.0)
    s = np.where(t_low, np.clip(-c / safe_a, 0.0, 1.0), s)
    s = np.where(t_high, np.clip((b - c) / safe_a, 0.0, 1.0), s)
    s = np.where(a > eps, s, 0.0)

    closest1 = p1 + s[:, None] * d1
    closest2 = p2 + t[:, None] * d2
    return np.linalg.norm(closest1 - closest2, axis=1)


# ---------------------------------------------------------------------------
# Planar rigid registration
# ---------------------------------------------------------------------------


def planar_fit_2d(src: np.ndarray, dst: np.ndarray):
    """Least-squares planar rigid motion taking src points onto dst points.

    Returns (dx, dy, dyaw) for the motion p' = R(dyaw) @ p + (dx, dy), with
    the rotation taken about the world origin. A single point pair pins the
    translation and leaves the rotation at 0.
    """
    src = np.atleast_2d(np.asarray(src, dtype=float))
    dst = np.atleast_2d(np.asarray(dst, dtype=float))
    if len(src) == 1:
        d = dst[0] - src[0]
        return float(d[0]), float(d[1]), 0.0
    sc = src.mean(axis=0)
    dc = dst.mean(axis=0)
    s_rel = src - sc
    d_rel = dst - dc
    cos_sum = float(np.einsum("ij,ij->", s_rel, d_rel))
    sin_sum = float(np.einsum("i,i->", s_rel[:, 0], d_rel[:, 1]) - np.einsum("i,i->", s_rel[:, 1], d_rel[:, 0]))
    if cos_sum == 0.0 and sin_sum == 0.0:
        yaw = 0.0
    else:
        yaw = float(np.arctan2(sin_sum, cos_sum))
    c, s = np.cos(yaw), np.sin(yaw)
    d = dc - np.array([c * sc[0] - s * sc[1], s * sc[0] + c * sc[1]])
    return float(d[0]), float(d[1]), yaw
