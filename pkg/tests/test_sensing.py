import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from supportnav.oracles import (
    brute_min_downsample,
    exhaustive_nearest_angle,
    march_ray,
)
from supportnav.sensing import (
    CANONICAL_LABEL,
    D_MIN,
    PRESET_LABELS,
    LabelError,
    LidarConfig,
    Scan,
    canonical_config,
    format_lidar_label,
    min_downsample,
    pad_scan_for_fcnet,
    parse_lidar_label,
    raycast_scan,
    scan_batch_to_points,
    to_point_set,
)
from supportnav.world import RobotState, Scenario

SQUARE = np.array([[2.0, 2.0], [3.0, 2.0], [3.0, 3.0], [2.0, 3.0]])


def empty_room():
    return Scenario("room", [0, 0, 8, 8])


# --- configuration and labels ----------------------------------------------------

def test_parse_label_examples():
    cfg = parse_lidar_label("270|0.25|30|0")
    assert cfg.beam_count == 1080
    assert cfg.max_range == 30.0
    cfg = parse_lidar_label("360|0.33|5|0")
    assert cfg.beam_count == 1080  # preset override reconciles 0.33 deg with 1080 beams
    cfg = parse_lidar_label("180|20|10|0.15")
    assert cfg.beam_count == 9
    assert cfg.mount == (0.0, 0.15, 0.0)


def test_label_round_trip_all_presets():
    for label in PRESET_LABELS:
        assert format_lidar_label(parse_lidar_label(label)) == label


def test_malformed_label_mentions_grammar():
    with pytest.raises(LabelError, match="fov_deg"):
        parse_lidar_label("360|0.33|5")
    with pytest.raises(LabelError, match="fov_deg"):
        parse_lidar_label("a|b|c|d")


def test_beam_count_override_for_047():
    assert parse_lidar_label("240|0.47|5.6|0").beam_count == 512


def test_invalid_config_rejected():
    with pytest.raises(ValueError):
        LidarConfig(fov_deg=0, res_deg=1, max_range=5)
    with pytest.raises(ValueError):
        LidarConfig(fov_deg=400, res_deg=1, max_range=5)
    with pytest.raises(ValueError):
        LidarConfig(fov_deg=180, res_deg=-1, max_range=5)
    with pytest.raises(ValueError):
        LidarConfig(fov_deg=180, res_deg=1, max_range=0)


def test_beam_angles_grid():
    cfg = LidarConfig(fov_deg=180, res_deg=20, max_range=10)
    assert cfg.beam_count == 9
    assert np.allclose(np.degrees(cfg.beam_angles),
                       [-90, -70, -50, -30, -10, 10, 30, 50, 70])
    full = LidarConfig(fov_deg=360, res_deg=90, max_range=5)
    # a full-circle grid covers each direction once (the -180 beam wraps to +180)
    assert np.allclose(np.degrees(full.beam_angles), [180, -90, 0, 90])


# --- raycasting --------------------------------------------------------------------

def test_center_scan_axis_beams_read_wall_distance():
    cfg = LidarConfig(fov_deg=360, res_deg=90, max_range=30)
    scan = raycast_scan(empty_room(), RobotState(4.0, 4.0, 0.0), cfg)
    assert np.allclose(scan.distances, 4.0)


def test_no_hit_reads_max_range():
    cfg = LidarConfig(fov_deg=360, res_deg=90, max_range=2.5)
    scan = raycast_scan(empty_room(), RobotState(4.0, 4.0, 0.0), cfg)
    assert np.all(scan.distances == 2.5)


def test_beam_toward_obstacle():
    cfg = LidarConfig(fov_deg=360, res_deg=45, max_range=10)
    scan = raycast_scan(Scenario("r", [0, 0, 8, 8], [SQUARE]),
                        RobotState(2.5, 5.0, -math.pi / 2), cfg)
    # robot faces -y; beam at sensor angle 0 looks straight at the square top
    idx = int(np.argmin(np.abs(scan.beam_angles)))
    assert scan.distances[idx] == pytest.approx(2.0)


def test_sensor_inside_obstacle_degenerate():
    cfg = LidarConfig(fov_deg=360, res_deg=90, max_range=10)
    scan = raycast_scan(Scenario("r", [0, 0, 8, 8], [SQUARE]),
                        RobotState(2.5, 2.5, 0.0), cfg)
    assert scan.degenerate
    assert np.all(scan.distances == D_MIN)


def test_raycast_vs_marching_oracle_small():
    """Spot check of the 1 mm occupancy-probing oracle (the large sweep runs
    in the acceptance suite)."""
    scenario = Scenario("r", [0, 0, 8, 8], [SQUARE])
    cfg = LidarConfig(fov_deg=360, res_deg=30, max_range=4.0)
    rng = np.random.default_rng(2)
    for _ in range(3):
        pose = RobotState(rng.uniform(1, 7), rng.uniform(4, 7), rng.uniform(-3, 3))
        scan = raycast_scan(scenario, pose, cfg)
        for angle, dist in zip(cfg.beam_angles, scan.distances):
            marched = march_ray(scenario, pose.position, pose.theta + angle, 4.0)
            assert abs(marched - dist) <= 2e-3


def test_offset_mount_shifts_sensor_origin():
    cfg = LidarConfig(fov_deg=360, res_deg=90, max_range=30, mount=(0.0, 0.5, 0.0))
    scan = raycast_scan(empty_room(), RobotState(4.0, 4.0, 0.0), cfg)
    # robot faces +x, sensor sits 0.5 m ahead: forward wall closer, rear farther
    angles = np.degrees(scan.beam_angles)
    forward = scan.distances[np.isclose(angles, 0)][0]
    rear = scan.distances[np.isclose(angles, 180)][0]
    assert forward == pytest.approx(3.5)
    assert rear == pytest.approx(4.5)


# --- point-set representation ----------------------------------------------------

def test_point_encoding_straight_ahead():
    cfg = LidarConfig(fov_deg=360, res_deg=90, max_range=30)
    angles = cfg.beam_angles
    d = np.full(4, 30.0)
    d[np.isclose(angles, 0.0)] = 2.0
    ps = to_point_set(Scan(d, angles), cfg)
    i = int(np.nonzero(np.isclose(angles, 0.0))[0][0])
    assert ps.points[i] == pytest.approx([0.0, 0.5])


def test_point_encoding_perpendicular():
    cfg = LidarConfig(fov_deg=360, res_deg=90, max_range=30)
    angles = cfg.beam_angles
    d = np.full(4, 30.0)
    i = int(np.nonzero(np.isclose(angles, math.pi / 2))[0][0])
    d[i] = 0.5
    ps = to_point_set(Scan(d, angles), cfg)
    assert ps.points[i] == pytest.approx([2.0, 0.0], abs=1e-12)


def test_offset_mount_recomputed_about_robot_center():
    cfg = LidarConfig(fov_deg=360, res_deg=90, max_range=30, mount=(0.0, 0.15, 0.0))
    angles = cfg.beam_angles
    d = np.full(4, 30.0)
    i = int(np.nonzero(np.isclose(angles, 0.0))[0][0])
    d[i] = 1.0
    ps = to_point_set(Scan(d, angles), cfg)
    assert ps.distances[i] == pytest.approx(1.15)
    assert ps.angles[i] == pytest.approx(0.0)
    assert ps.points[i] == pytest.approx([0.0, 1.0 / 1.15])


def test_offset_mount_vs_explicit_transform():
    """Frame composition against an explicit per-beam 2D transform."""
    cfg = LidarConfig(fov_deg=270, res_deg=27, max_range=20, mount=(0.1, -0.2, 0.4))
    rng = np.random.default_rng(8)
    d = rng.uniform(0.3, 15.0, size=cfg.beam_count)
    ps = to_point_set(Scan(d, cfg.beam_angles), cfg)
    for i, (dist, gamma) in enumerate(zip(d, cfg.beam_angles)):
        delta = cfg.mount[2] + gamma
        ex = cfg.mount[0] + dist * math.sin(delta)
        ey = cfg.mount[1] + dist * math.cos(delta)
        assert ps.distances[i] == pytest.approx(math.hypot(ex, ey), abs=1e-12)
        assert ps.angles[i] == pytest.approx(math.atan2(ex, ey), abs=1e-12)


def test_centered_mount_angles_exact():
    cfg = LidarConfig(fov_deg=360, res_deg=10, max_range=5, mount=(0.0, 0.0, 0.2))
    d = np.full(cfg.beam_count, 3.0)
    ps = to_point_set(Scan(d, cfg.beam_angles), cfg)
    from supportnav.geometry import wrap_angle

    assert np.array_equal(ps.angles, wrap_angle(0.2 + cfg.beam_angles))
    assert np.array_equal(ps.distances, d)


@given(
    d=st.floats(0.05, 30.0),
    alpha=st.floats(-math.pi + 1e-9, math.pi),
)
@settings(max_examples=300, deadline=None)
def test_point_encoding_round_trip(d, alpha):
    p = np.array([math.sin(alpha) / d, math.cos(alpha) / d])
    assert 1.0 / np.hypot(*p) == pytest.approx(d, rel=1e-9)
    assert math.atan2(p[0], p[1]) == pytest.approx(alpha, abs=1e-9)


def test_point_set_is_order_covariant():
    cfg = LidarConfig(fov_deg=360, res_deg=10, max_range=5)
    rng = np.random.default_rng(4)
    d = rng.uniform(0.1, 5.0, size=cfg.beam_count)
    ps = to_point_set(Scan(d, cfg.beam_angles), cfg)
    # the set of points does not depend on beam ordering
    order = np.lexsort(ps.points.T)
    perm = rng.permutation(cfg.beam_count)
    ps2 = to_point_set(Scan(d[perm], cfg.beam_angles[perm]), cfg)
    order2 = np.lexsort(ps2.points.T)
    assert np.array_equal(ps.points[order], ps2.points[order2])


def test_encoded_magnitude_bounded():
    cfg = LidarConfig(fov_deg=360, res_deg=30, max_range=5)
    d = np.full(cfg.beam_count, 0.001)  # below the distance floor
    ps = to_point_set(Scan(np.maximum(d, D_MIN), cfg.beam_angles), cfg)
    assert np.all(np.abs(ps.points) <= 1.0 / D_MIN + 1e-12)


def test_batched_points_match_single():
    cfg = LidarConfig(fov_deg=270, res_deg=15, max_range=10, mount=(0.05, 0.1, 0.1))
    rng = np.random.default_rng(6)
    d = rng.uniform(0.06, 10.0, size=(7, cfg.beam_count))
    batch = scan_batch_to_points(d, cfg)
    for row in range(7):
        single = to_point_set(Scan(d[row], cfg.beam_angles), cfg)
        assert np.allclose(batch[row], single.points, atol=1e-15)


# --- min-downsampling ---------------------------------------------------------------

def test_min_downsample_constant():
    scan = Scan(np.full(1080, 5.0), np.zeros(1080))
    y = min_downsample(scan, 36, 30)
    assert y.shape == (36,)
    assert np.all(y == 0.2)


def test_min_downsample_window_minimum():
    d = np.full(1080, 4.0)
    d[35] = 0.5  # window 1 (beams 30..59)
    y = min_downsample(Scan(d, np.zeros(1080)), 36, 30)
    assert y[1] == pytest.approx(2.0)
    assert y[0] == pytest.approx(0.25)


def test_min_downsample_vs_bruteforce():
    rng = np.random.default_rng(12)
    d = rng.uniform(0.05, 5.0, size=1080)
    got = min_downsample(Scan(d, np.zeros(1080)), 36, 30)
    assert np.array_equal(got, brute_min_downsample(d, 36, 30))


def test_min_downsample_requires_enough_beams():
    with pytest.raises(ValueError):
        min_downsample(Scan(np.ones(100), np.zeros(100)), 36, 30)


def test_min_downsample_ignores_trailing_beams():
    d = np.full(1085, 2.0)
    d[-1] = 0.01  # beyond m*k, must not affect any window
    y = min_downsample(Scan(d, np.zeros(1085)), 36, 30)
    assert np.all(y == 0.5)


@given(st.integers(0, 1079))
@settings(max_examples=60, deadline=None)
def test_min_downsample_monotone(idx):
    rng = np.random.default_rng(idx)
    d = rng.uniform(0.5, 5.0, size=1080)
    base = brute_min_downsample(d, 36, 30)
    d2 = d.copy()
    d2[idx] *= 0.5
    bumped = brute_min_downsample(d2, 36, 30)
    assert np.all(bumped >= base - 1e-15)


# --- fixed-format padding ------------------------------------------------------------

def test_padding_identity_for_canonical():
    canon = canonical_config()
    rng = np.random.default_rng(1)
    d = rng.uniform(0.1, 5.0, size=canon.beam_count)
    padded = pad_scan_for_fcnet(Scan(d, canon.beam_angles), canon, canon)
    assert np.array_equal(padded, d)


def test_padding_rear_beams_read_free_space():
    cfg = LidarConfig(fov_deg=180, res_deg=1, max_range=10)
    canon = canonical_config()
    d = np.full(cfg.beam_count, 3.0)
    padded = pad_scan_for_fcnet(Scan(d, cfg.beam_angles), cfg, canon)
    rear = np.abs(np.degrees(canon.beam_angles)) > 91.0
    assert np.all(padded[rear] == canon.max_range)
    forward = np.abs(np.degrees(canon.beam_angles)) < 89.0
    assert np.all(padded[forward] == 3.0)


def test_padding_clamps_to_canonical_range():
    cfg = LidarConfig(fov_deg=360, res_deg=10, max_range=30)
    canon = canonical_config()
    d = np.full(cfg.beam_count, 20.0)
    padded = pad_scan_for_fcnet(Scan(d, cfg.beam_angles), cfg, canon)
    assert np.all(padded <= canon.max_range)


def test_padding_vs_nearest_angle_oracle():
    cfg = parse_lidar_label("360|10|5|0")
    assert cfg.beam_count == 36
    canon = canonical_config()
    rng = np.random.default_rng(7)
    d = rng.uniform(0.2, 5.0, size=36)
    scan = Scan(d, cfg.beam_angles)
    padded = pad_scan_for_fcnet(scan, cfg, canon)
    pts = to_point_set(scan, cfg)
    nearest = exhaustive_nearest_angle(canon.beam_angles, pts.angles)
    tol = 0.5 * (cfg.effective_res_rad + canon.effective_res_rad)
    for i, j in enumerate(nearest):
        gap = abs(math.remainder(canon.beam_angles[i] - pts.angles[j], 2 * math.pi))
        expected = min(pts.distances[j], canon.max_range) if gap <= tol else canon.max_range
        assert padded[i] == pytest.approx(expected)


def test_canonical_label_is_training_config():
    assert CANONICAL_LABEL in PRESET_LABELS
    assert canonical_config().beam_count == 1080
