"""LiDAR simulation under arbitrary sensor configurations, plus every input
representation derived from a scan: the robot-frame obstacle point set, the
reciprocal min-downsampled vector, and the padded vector for fixed-format
networks.

A sensor configuration is labeled "fov|res|range|y" (degrees, degrees,
meters, meters), e.g. "270|0.25|30|0". The mount position (x, y, yaw) lives
in the robot frame whose y-axis is the heading direction; bearings are
CCW-positive from heading, so a point at bearing a and distance d sits at
robot-frame coordinates (d*sin(a), d*cos(a)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .geometry import point_in_polygon, ray_segments_hit, wrap_angle
from .world import RobotState, Scenario, relative_goal

D_MIN = 0.05  # m, floor on reported distances; bounds the reciprocal encoding

# Training configuration of the reference setup; also the canonical target
# of the fixed-format padding path.
CANONICAL_LABEL = "360|0.33|5|0"

# The seven evaluated sensor setups. Labels whose nominal resolution does not
# divide the FOV evenly carry an explicit beam-count override.
PRESET_LABELS = [
    "180|20|10|0",
    "180|20|10|0.15",
    "180|20|10|-0.15",
    "240|0.47|5.6|0",
    "270|0.25|30|0",
    "360|0.33|5|0",
    "360|10|5|0",
]
_BEAM_COUNT_OVERRIDES = {
    "360|0.33|5|0": 1080,
    "240|0.47|5.6|0": 512,
}


class LabelError(ValueError):
    """Malformed LiDAR setup label."""


@dataclass(frozen=True)
class LidarConfig:
    fov_deg: float
    res_deg: float
    max_range: float
    mount: tuple[float, float, float] = (0.0, 0.0, 0.0)  # x (m), y (m), yaw (rad)
    beam_count_override: Optional[int] = None

    def __post_init__(self):
        if not (0.0 < self.fov_deg <= 360.0):
            raise ValueError(f"fov must be in (0, 360] degrees, got {self.fov_deg}")
        if self.res_deg <= 0.0:
            raise ValueError(f"angular resolution must be positive, got {self.res_deg}")
        if self.max_range <= 0.0:
            raise ValueError(f"max range must be positive, got {self.max_range}")
        if self.beam_count < 1:
            raise ValueError("configuration yields zero beams")

    @property
    def beam_count(self) -> int:
        if self.beam_count_override is not None:
            return int(self.beam_count_override)
        return int(round(self.fov_deg / self.res_deg))

    @property
    def effective_res_rad(self) -> float:
        """Actual beam spacing; equals the nominal resolution whenever the
        nominal resolution divides the FOV evenly."""
        return math.radians(self.fov_deg) / self.beam_count

    @property
    def beam_angles(self) -> np.ndarray:
        """Sensor-frame beam angles (rad), CCW, wrapped to (-pi, pi].

        The grid starts at -fov/2 and tiles the FOV at the effective spacing,
        so a full-circle sensor covers every direction exactly once.
        """
        half = math.radians(self.fov_deg) / 2.0
        angles = -half + np.arange(self.beam_count) * self.effective_res_rad
        return wrap_angle(angles)


def parse_lidar_label(label: str) -> LidarConfig:
    """Parse a "fov|res|range|y" setup label into a configuration."""
    parts = label.split("|")
    if len(parts) != 4:
        raise LabelError(
            f"bad LiDAR label {label!r}: expected 'fov_deg|res_deg|range_m|y_m'"
        )
    try:
        fov, res, rng, y = (float(p) for p in parts)
    except ValueError as exc:
        raise LabelError(
            f"bad LiDAR label {label!r}: expected 'fov_deg|res_deg|range_m|y_m'"
        ) from exc
    return LidarConfig(
        fov_deg=fov,
        res_deg=res,
        max_range=rng,
        mount=(0.0, y, 0.0),
        beam_count_override=_BEAM_COUNT_OVERRIDES.get(label),
    )


def format_lidar_label(cfg: LidarConfig) -> str:
    def fmt(v: float) -> str:
        return str(int(v)) if float(v) == int(v) else repr(float(v))

    return "|".join(fmt(v) for v in (cfg.fov_deg, cfg.res_deg, cfg.max_range, cfg.mount[1]))


def canonical_config() -> LidarConfig:
    return parse_lidar_label(CANONICAL_LABEL)


@dataclass
class Scan:
    distances: np.ndarray  # (n,) m, in [D_MIN, max_range]
    beam_angles: np.ndarray  # (n,) rad, sensor frame
    degenerate: bool = False  # sensor origin was inside an obstacle

    def __post_init__(self):
        if len(self.distances) != len(self.beam_angles):
            raise ValueError("distances and beam_angles must have equal length")


@dataclass
class ObstaclePointSet:
    """Robot-frame obstacle points: encodings p_i = (sin(a_i)/d_i, cos(a_i)/d_i)
    together with the raw bearings and distances they were built from."""

    points: np.ndarray  # (n, 2)
    angles: np.ndarray  # (n,) rad, bearing from heading, CCW
    distances: np.ndarray  # (n,) m, from the robot center

    def __len__(self) -> int:
        return len(self.points)


@dataclass
class GoalVelocityState:
    distance: float  # m to goal
    bearing: float  # rad, CCW from heading, in (-pi, pi]
    v: float  # m/s
    omega: float  # rad/s

    def as_array(self) -> np.ndarray:
        return np.array([self.distance, self.bearing, self.v, self.omega])


def sensor_origin_world(pose: RobotState, cfg: LidarConfig) -> np.ndarray:
    """World position of the sensor given the robot pose and mount."""
    x_l, y_l, _ = cfg.mount
    heading = np.array([math.cos(pose.theta), math.sin(pose.theta)])
    left = np.array([-math.sin(pose.theta), math.cos(pose.theta)])
    return pose.position + y_l * heading + x_l * left


def raycast_scan(scenario: Scenario, pose: RobotState, cfg: LidarConfig) -> Scan:
    """Cast one beam per configured angle and return nearest-hit distances.

    Distances are measured from the sensor origin and clamped to
    [D_MIN, max_range]; beams that hit nothing read max_range. If the sensor
    origin itself sits inside an obstacle (or out of bounds) every beam reads
    D_MIN and the scan is flagged degenerate.
    """
    origin = sensor_origin_world(pose, cfg)
    angles = cfg.beam_angles
    xmin, ymin, xmax, ymax = scenario.bounds
    inside_bounds = xmin <= origin[0] <= xmax and ymin <= origin[1] <= ymax
    if not inside_bounds or any(point_in_polygon(origin, poly) for poly in scenario.obstacles):
        n = cfg.beam_count
        return Scan(np.full(n, D_MIN), angles.copy(), degenerate=True)
    world_angles = pose.theta + cfg.mount[2] + angles
    directions = np.stack([np.cos(world_angles), np.sin(world_angles)], axis=1)
    hits = ray_segments_hit(origin, directions, scenario.segments, cfg.max_range)
    return Scan(np.clip(hits, D_MIN, cfg.max_range), angles.copy())


def _robot_frame_endpoints(
    distances: np.ndarray, cfg: LidarConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Map sensor-frame ranges to robot-frame endpoints (..., n) -> x, y."""
    x_l, y_l, yaw = cfg.mount
    bearings = yaw + cfg.beam_angles
    ex = x_l + distances * np.sin(bearings)
    ey = y_l + distances * np.cos(bearings)
    return ex, ey


def to_point_set(scan: Scan, cfg: LidarConfig) -> ObstaclePointSet:
    """Convert a scan into the robot-frame obstacle point set.

    Bearings and distances are recomputed about the robot center, so offset
    mounts shift every point accordingly. Max-range (no-hit) beams are kept.
    For a mount at the robot center the bearing equals the beam angle plus
    mount yaw exactly, with no trigonometric round trip.
    """
    x_l, y_l, yaw = cfg.mount
    d = np.asarray(scan.distances, dtype=float)
    if x_l == 0.0 and y_l == 0.0:
        angles = wrap_angle(yaw + scan.beam_angles)
        dist = np.maximum(d, D_MIN)
        points = np.stack([np.sin(angles) / dist, np.cos(angles) / dist], axis=1)
        return ObstaclePointSet(points, angles, dist)
    ex, ey = _robot_frame_endpoints(d, cfg)
    raw = np.hypot(ex, ey)
    angles = np.arctan2(ex, ey)
    dist = np.maximum(raw, D_MIN)
    scale = 1.0 / (np.maximum(raw, 1e-300) * dist)
    points = np.stack([ex * scale, ey * scale], axis=1)
    return ObstaclePointSet(points, angles, dist)


def scan_batch_to_points(distances: np.ndarray, cfg: LidarConfig) -> np.ndarray:
    """Vectorized point encodings for a (B, n) batch of scan distances.

    Matches to_point_set's encoding for every row (used by the replay and
    training paths, where bearings are not needed)."""
    d = np.asarray(distances, dtype=float)
    ex, ey = _robot_frame_endpoints(d, cfg)
    raw = np.hypot(ex, ey)
    scale = 1.0 / (np.maximum(raw, 1e-300) * np.maximum(raw, D_MIN))
    return np.stack([ex * scale, ey * scale], axis=-1)


def min_downsample(scan: Scan, m: int = 36, k: int = 30) -> np.ndarray:
    """Compress a scan to m values: reciprocal of the window minimum over
    consecutive groups of k beams. Beams beyond m*k are ignored."""
    return downsample_batch(np.asarray(scan.distances, dtype=float)[None, :], m, k)[0]


def downsample_batch(distances: np.ndarray, m: int, k: int) -> np.ndarray:
    """min_downsample over a (B, n) batch, returning (B, m)."""
    d = np.asarray(distances, dtype=float)
    n = d.shape[-1]
    if m * k > n:
        raise ValueError(f"window layout m*k = {m * k} exceeds beam count {n}")
    windows = d[..., : m * k].reshape(*d.shape[:-1], m, k)
    return 1.0 / windows.min(axis=-1)


def pad_scan_for_fcnet(
    scan: Scan, cfg: LidarConfig, canonical: Optional[LidarConfig] = None
) -> np.ndarray:
    """Re-express a scan on the canonical beam grid for fixed-format networks.

    Each canonical beam direction takes the robot-frame distance of the
    nearest actual beam (by wrapped angular difference) when one lies within
    half the summed beam spacings; directions with no nearby measurement are
    treated as free space and read the canonical max range. Measured values
    are clamped to the canonical max range.
    """
    if canonical is None:
        canonical = canonical_config()
    points = to_point_set(scan, cfg)
    target_angles = canonical.beam_angles
    diff = np.abs(wrap_angle(target_angles[:, None] - points.angles[None, :]))
    nearest = np.argmin(diff, axis=1)
    tolerance = 0.5 * (cfg.effective_res_rad + canonical.effective_res_rad)
    matched = diff[np.arange(len(target_angles)), nearest] <= tolerance
    padded = np.full(len(target_angles), canonical.max_range)
    padded[matched] = np.minimum(points.distances[nearest[matched]], canonical.max_range)
    return np.maximum(padded, D_MIN)


def goal_velocity_state(state: RobotState, goal: np.ndarray) -> GoalVelocityState:
    distance, bearing = relative_goal(state, goal)
    return GoalVelocityState(distance, bearing, state.v, state.omega)
