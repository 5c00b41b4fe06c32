import math

import numpy as np
import pytest

from supportnav.geometry import (
    point_in_polygon,
    point_segments_distance,
    polygon_area,
    polygon_segments,
    ray_segments_hit,
    rect_segments,
    wrap_angle,
)
from supportnav.oracles import boundary_sample_distance, points_in_polygon_batch

SQUARE = np.array([[2.0, 2.0], [3.0, 2.0], [3.0, 3.0], [2.0, 3.0]])


def test_polygon_area_square():
    assert polygon_area(SQUARE) == pytest.approx(1.0)


def test_polygon_segments_closed():
    segs = polygon_segments(SQUARE)
    assert segs.shape == (4, 4)
    # last edge closes back to the first vertex
    assert np.allclose(segs[-1], [2.0, 3.0, 2.0, 2.0])


def test_point_in_polygon_basic():
    assert point_in_polygon(np.array([2.5, 2.5]), SQUARE)
    assert not point_in_polygon(np.array([1.0, 1.0]), SQUARE)
    assert not point_in_polygon(np.array([3.5, 2.5]), SQUARE)


def test_point_in_polygon_concave():
    l_shape = np.array([[0, 0], [4, 0], [4, 1], [1, 1], [1, 4], [0, 4]], dtype=float)
    assert point_in_polygon(np.array([0.5, 3.0]), l_shape)
    assert not point_in_polygon(np.array([2.0, 2.0]), l_shape)


def test_point_in_polygon_matches_batch_oracle():
    rng = np.random.default_rng(3)
    poly = np.array([[1, 1], [5, 0.5], [6, 4], [3.5, 5.5], [0.5, 3.5]])
    pts = rng.uniform(-1, 7, size=(500, 2))
    batch = points_in_polygon_batch(pts, poly)
    single = np.array([point_in_polygon(p, poly) for p in pts])
    assert np.array_equal(batch, single)


def test_point_segment_distance_vs_dense_sampling():
    rng = np.random.default_rng(11)
    for _ in range(20):
        seg = rng.uniform(-3, 3, size=4)
        p = rng.uniform(-4, 4, size=2)
        poly = np.array([seg[:2], seg[2:], seg[2:]])  # degenerate triangle = a segment
        analytic = point_segments_distance(p, seg[None, :])[0]
        sampled = boundary_sample_distance(p, np.array([seg[:2], seg[2:]]))
        assert analytic == pytest.approx(sampled, abs=1e-6)


def test_point_segment_distance_degenerate_segment():
    seg = np.array([[1.0, 1.0, 1.0, 1.0]])
    d = point_segments_distance(np.array([4.0, 5.0]), seg)
    assert d[0] == pytest.approx(math.hypot(3.0, 4.0))


def test_ray_hits_perpendicular_wall():
    segs = np.array([[3.0, -1.0, 3.0, 1.0]])
    d = ray_segments_hit(np.zeros(2), np.array([[1.0, 0.0]]), segs, 10.0)
    assert d[0] == pytest.approx(3.0)


def test_ray_miss_returns_max_range():
    segs = np.array([[3.0, 5.0, 3.0, 6.0]])
    d = ray_segments_hit(np.zeros(2), np.array([[1.0, 0.0]]), segs, 10.0)
    assert d[0] == 10.0


def test_ray_behind_segment_ignored():
    segs = np.array([[-3.0, -1.0, -3.0, 1.0]])
    d = ray_segments_hit(np.zeros(2), np.array([[1.0, 0.0]]), segs, 10.0)
    assert d[0] == 10.0


def test_ray_fan_in_rect():
    segs = rect_segments(0.0, 0.0, 8.0, 8.0)
    dirs = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
    d = ray_segments_hit(np.array([4.0, 4.0]), dirs, segs, 30.0)
    assert np.allclose(d, 4.0)


def test_ray_picks_nearest_of_multiple():
    segs = np.array([[2.0, -1.0, 2.0, 1.0], [5.0, -1.0, 5.0, 1.0]])
    d = ray_segments_hit(np.zeros(2), np.array([[1.0, 0.0]]), segs, 10.0)
    assert d[0] == pytest.approx(2.0)


@pytest.mark.parametrize(
    "theta,expected",
    [
        (0.0, 0.0),
        (math.pi, math.pi),
        (-math.pi, math.pi),
        (3 * math.pi / 2, -math.pi / 2),
        (-3 * math.pi / 2, math.pi / 2),
        (2 * math.pi, 0.0),
    ],
)
def test_wrap_angle(theta, expected):
    assert wrap_angle(theta) == pytest.approx(expected, abs=1e-12)


def test_wrap_angle_array():
    out = wrap_angle(np.array([0.0, math.pi, -math.pi]))
    assert np.allclose(out, [0.0, math.pi, math.pi])
    assert np.all(out > -math.pi) and np.all(out <= math.pi)
