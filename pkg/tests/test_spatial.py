import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from marsupial.errors import InvalidParams
from marsupial.spatial import (
    Box,
    Sphere,
    clamp_norm,
    contact_query,
    distance_point_obstacle,
    ground_box,
    min_distance,
    vec3,
)

coord = st.floats(-50, 50, allow_nan=False)
point = st.tuples(coord, coord, coord).map(np.array)


def test_sphere_distance_collinear():
    assert distance_point_obstacle(vec3(0, 0, 0), Sphere(center=(1.5, 0, 0), radius=0.5)) == pytest.approx(1.0)


def test_point_on_sphere_surface():
    s = Sphere(center=(1, 2, 3), radius=2.0)
    assert distance_point_obstacle(vec3(1, 2, 5), s) == pytest.approx(0.0, abs=1e-15)


def test_box_closest_face():
    b = Box(min_corner=(1, -1, -1), max_corner=(2, 1, 1))
    assert distance_point_obstacle(vec3(0, 0, 0), b) == pytest.approx(1.0)


def test_box_inside_negative_and_corner_distance():
    b = Box(min_corner=(0, 0, 0), max_corner=(2, 2, 2))
    assert distance_point_obstacle(vec3(1, 1, 0.5), b) == pytest.approx(-0.5)
    assert distance_point_obstacle(vec3(3, 3, 3), b) == pytest.approx(np.sqrt(3))


def test_contact_absent_far_away():
    assert contact_query(vec3(10, 0, 0), 0.004, Sphere(radius=1.0)) is None


def test_contact_on_surface_full_radius():
    depth, n = contact_query(vec3(0, 0, 1.0), 0.004, Sphere(radius=1.0))
    assert depth == pytest.approx(0.004)
    np.testing.assert_allclose(n, [0, 0, 1])


def test_contact_partial_overlap():
    depth, n = contact_query(vec3(1.002, 0, 0), 0.004, Sphere(radius=1.0))
    assert depth == pytest.approx(0.002)
    np.testing.assert_allclose(n, [1, 0, 0])


def test_contact_rejects_bad_radius():
    with pytest.raises(InvalidParams):
        contact_query(vec3(0, 0, 0), 0.0, Sphere())


def test_box_normal_points_out_of_nearest_face():
    b = Box(min_corner=(0, 0, 0), max_corner=(2, 2, 2))
    depth, n = contact_query(vec3(1, 1, 1.999), 0.004, b)
    assert depth == pytest.approx(0.005)
    np.testing.assert_allclose(n, [0, 0, 1])


def test_invalid_obstacles_rejected():
    with pytest.raises(InvalidParams):
        Sphere(radius=0.0)
    with pytest.raises(InvalidParams):
        Box(min_corner=(0, 0, 0), max_corner=(1, 0, 1))
    with pytest.raises(InvalidParams):
        Sphere(radius=1.0, friction_coeff=-0.1)
    with pytest.raises(InvalidParams):
        vec3(0, np.nan, 0)


def test_min_distance_skips_ground_by_default():
    obstacles = [ground_box(0.0), Sphere(center=(0, 0, 5), radius=1.0)]
    pts = np.array([[0, 0, 0.1], [0, 0, 2.0]])
    assert min_distance(pts, obstacles) == pytest.approx(2.0)
    assert min_distance(pts, obstacles, include_ground=True) == pytest.approx(0.1)
    assert min_distance(pts, []) == np.inf


def test_clamp_norm():
    np.testing.assert_allclose(clamp_norm(np.array([3.0, 4.0, 0.0]), 1.0), [0.6, 0.8, 0.0])
    np.testing.assert_allclose(clamp_norm(np.array([0.3, 0.4, 0.0]), 1.0), [0.3, 0.4, 0.0])


@given(point, point, st.floats(0.1, 5.0))
def test_sphere_distance_exact(p, c, r):
    s = Sphere(center=tuple(c), radius=r)
    assert abs(distance_point_obstacle(p, s) - (np.linalg.norm(p - c) - r)) <= 1e-12


@given(point, point, st.floats(0, 2 * np.pi), st.floats(0.1, 3.0))
def test_sphere_distance_rigid_invariance(p, shift, angle, r):
    rot = np.array([[np.cos(angle), -np.sin(angle), 0], [np.sin(angle), np.cos(angle), 0], [0, 0, 1]])
    c = np.array([1.0, -2.0, 0.5])
    d0 = distance_point_obstacle(p, Sphere(center=tuple(c), radius=r))
    d1 = distance_point_obstacle(rot @ p + shift, Sphere(center=tuple(rot @ c + shift), radius=r))
    assert abs(d0 - d1) < 1e-9


@given(point, point)
def test_box_distance_translation_invariance(p, shift):
    lo, hi = np.array([-1.0, 0.0, 2.0]), np.array([1.0, 3.0, 2.5])
    d0 = distance_point_obstacle(p, Box(min_corner=tuple(lo), max_corner=tuple(hi)))
    d1 = distance_point_obstacle(p + shift, Box(min_corner=tuple(lo + shift), max_corner=tuple(hi + shift)))
    assert abs(d0 - d1) < 1e-9


@given(st.tuples(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2)).map(np.array))
def test_contact_normal_unit_and_depth_bounded(p):
    for o, extent in ((Sphere(radius=1.0), 1.0), (Box(min_corner=(-1, -1, -1), max_corner=(1, 1, 1)), 1.0)):
        hit = contact_query(p, 0.004, o)
        if hit is None:
            assert distance_point_obstacle(p, o) >= 0.004
            continue
        depth, n = hit
        assert abs(np.linalg.norm(n) - 1.0) < 1e-9
        assert 0.0 < depth <= 0.004 + extent + 1e-12
