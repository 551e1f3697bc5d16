"""Geometry helpers against closed-form cases and scipy reimplementations."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.spatial import ConvexHull
from scipy.spatial.transform import Rotation

from centisim.geometry import (
    Pose,
    convex_hull_2d,
    exterior_query_2d,
    planar_fit_2d,
    rot_x,
    rot_y,
    rot_z,
    rotate_pose_about_line,
    rotation_about_axis,
    segment_segment_distance,
    wrap_angle,
)


def test_wrap_angle_frozen():
    assert wrap_angle(0.0) == 0.0
    assert wrap_angle(math.pi) == -math.pi
    assert wrap_angle(-math.pi) == -math.pi
    assert wrap_angle(3.5 * math.pi) == pytest.approx(-0.5 * math.pi, abs=1e-12)
    assert wrap_angle(-3.5 * math.pi) == pytest.approx(0.5 * math.pi, abs=1e-12)


@given(st.floats(min_value=-1e6, max_value=1e6))
def test_wrap_angle_range_and_equivalence(a):
    w = wrap_angle(a)
    assert -math.pi <= w < math.pi
    turns = (a - w) / (2.0 * math.pi)
    assert abs(turns - round(turns)) < 1e-6


def test_elementary_rotations():
    np.testing.assert_allclose(rot_z(math.pi / 2) @ [1, 0, 0], [0, 1, 0], atol=1e-15)
    np.testing.assert_allclose(rot_x(math.pi / 2) @ [0, 1, 0], [0, 0, 1], atol=1e-15)
    np.testing.assert_allclose(rot_y(math.pi / 2) @ [0, 0, 1], [1, 0, 0], atol=1e-15)


def test_rotation_about_axis_matches_scipy():
    rng = np.random.default_rng(7)
    for _ in range(50):
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        angle = rng.uniform(-2 * math.pi, 2 * math.pi)
        expected = Rotation.from_rotvec(axis * angle).as_matrix()
        np.testing.assert_allclose(rotation_about_axis(axis, angle), expected, atol=1e-12)


def test_convex_hull_matches_scipy():
    rng = np.random.default_rng(11)
    for _ in range(10):
        pts = rng.normal(size=(40, 2))
        mine = convex_hull_2d(pts)
        ref = ConvexHull(pts)
        ref_set = {tuple(np.round(pts[i], 12)) for i in ref.vertices}
        assert {tuple(np.round(p, 12)) for p in mine} == ref_set
        # CCW orientation and matching area via the shoelace formula
        x, y = mine[:, 0], mine[:, 1]
        area = 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))
        assert area == pytest.approx(ref.volume, rel=1e-12)


def test_convex_hull_degenerate():
    colinear = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [0.5, 0.5]])
    hull = convex_hull_2d(colinear)
    assert {tuple(p) for p in hull} == {(0.0, 0.0), (2.0, 2.0)}
    single = convex_hull_2d(np.array([[3.0, 4.0], [3.0, 4.0]]))
    assert len(single) == 1


def test_exterior_query_square():
    square = convex_hull_2d(np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float))
    d, _, _ = exterior_query_2d(square, np.array([0.5, 0.5]))
    assert d == 0.0
    d, closest, axis = exterior_query_2d(square, np.array([2.0, 0.5]))
    assert d == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(closest, [1.0, 0.5], atol=1e-12)
    assert axis is not None and abs(axis[0]) < 1e-12  # edge runs along y
    d, closest, axis = exterior_query_2d(square, np.array([2.0, 2.0]))
    assert d == pytest.approx(math.sqrt(2.0), abs=1e-12)
    np.testing.assert_allclose(closest, [1.0, 1.0], atol=1e-12)
    assert axis is None  # closest feature is the corner


def test_segment_distance_frozen():
    crossing = segment_segment_distance([-1, 0, 0], [1, 0, 0], [0, -1, 0], [0, 1, 0])
    assert crossing == pytest.approx(0.0, abs=1e-12)
    parallel = segment_segment_distance([0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0])
    assert parallel == pytest.approx(1.0, abs=1e-12)
    offset = segment_segment_distance([0, 0, 0], [1, 0, 0], [0, 0.5, 1], [1, 0.5, 1])
    assert offset == pytest.approx(1.118033988749895, abs=1e-12)
    end_to_end = segment_segment_distance([0, 0, 0], [1, 0, 0], [2, 1, 0], [3, 1, 0])
    assert end_to_end == pytest.approx(math.sqrt(2.0), abs=1e-12)


def test_segment_distance_vs_sampling():
    rng = np.random.default_rng(23)
    ts = np.linspace(0.0, 1.0, 301)
    for _ in range(25):
        p1, q1, p2, q2 = rng.normal(size=(4, 3))
        a = p1 + ts[:, None] * (q1 - p1)
        b = p2 + ts[:, None] * (q2 - p2)
        sampled = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2).min()
        exact = segment_segment_distance(p1, q1, p2, q2)
        assert exact <= sampled + 1e-12
        assert exact == pytest.approx(sampled, abs=1e-4)


def test_planar_fit_recovers_rigid_motion():
    rng = np.random.default_rng(31)
    for _ in range(20):
        src = rng.normal(size=(5, 2))
        yaw = rng.uniform(-math.pi, math.pi)
        shift = rng.normal(size=2)
        c, s = math.cos(yaw), math.sin(yaw)
        rot = np.array([[c, -s], [s, c]])
        dst = src @ rot.T + shift
        dx, dy, dyaw = planar_fit_2d(src, dst)
        c2, s2 = math.cos(dyaw), math.sin(dyaw)
        moved = src @ np.array([[c2, -s2], [s2, c2]]).T + [dx, dy]
        np.testing.assert_allclose(moved, dst, atol=1e-9)


def test_planar_fit_single_pair_translates_only():
    dx, dy, dyaw = planar_fit_2d([[1.0, 2.0]], [[3.5, 1.0]])
    assert (dx, dy, dyaw) == (2.5, -1.0, 0.0)


def test_planar_fit_is_least_squares_optimal():
    # noisy correspondences: the closed form must beat a dense grid search
    rng = np.random.default_rng(37)

    def objective(src, dst, dx, dy, yaw):
        c, s = math.cos(yaw), math.sin(yaw)
        moved = src @ np.array([[c, -s], [s, c]]).T + [dx, dy]
        return float(np.sum((moved - dst) ** 2))

    for _ in range(10):
        src = rng.normal(size=(3, 2))
        dst = src + rng.normal(scale=0.1, size=(3, 2))
        dx, dy, dyaw = planar_fit_2d(src, dst)
        best = objective(src, dst, dx, dy, dyaw)
        for yaw in np.linspace(-0.5, 0.5, 41):
            for ox in np.linspace(-0.3, 0.3, 21):
                for oy in np.linspace(-0.3, 0.3, 21):
                    assert best <= objective(src, dst, dx + ox, dy + oy, dyaw + yaw) + 1e-12


def test_rotate_pose_about_line_fixes_the_line():
    pose = Pose(rot_z(0.3), np.array([0.1, -0.2, 0.4]))
    point = np.array([0.5, 0.5, 0.0])
    axis = np.array([0.0, 1.0, 0.0])
    turned = rotate_pose_about_line(pose, point, axis, 0.7)
    # world points on the line are unchanged, others move
    body_point = pose.rotation.T @ (point - pose.translation)
    np.testing.assert_allclose(turned.apply(body_point), point, atol=1e-12)
    other = pose.rotation.T @ (point + [0.3, 0.0, 0.1] - pose.translation)
    assert np.linalg.norm(turned.apply(other) - pose.apply(other)) > 1e-3
