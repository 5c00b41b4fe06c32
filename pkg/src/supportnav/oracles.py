"""Independent reference implementations for cross-checking the fast paths:
brute-force window scans, 1 mm ray marching, naive matrix loops, central
finite differences, exhaustive nearest-angle search, and density quadrature.

These deliberately avoid the vectorized production code so that each check
compares two independent routes to the same number. `run_oracle_suite`
bundles one check per family for the command-line `oracle-check` entry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np


# --- brute-force references ---------------------------------------------------

def brute_min_downsample(distances: Sequence[float], m: int, k: int) -> np.ndarray:
    """Loop-over-windows reference for the reciprocal min-downsampling."""
    out = np.zeros(m)
    for i in range(m):
        window = [distances[i * k + j] for j in range(k)]
        lowest = window[0]
        for value in window[1:]:
            if value < lowest:
                lowest = value
        out[i] = 1.0 / lowest
    return out


def brute_maxpool(f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Double-loop column-max scan with lowest-index tie breaking."""
    n, k = f.shape
    pooled = np.empty(k)
    argmax = np.empty(k, dtype=int)
    for j in range(k):
        best, best_i = f[0, j], 0
        for i in range(1, n):
            if f[i, j] > best:
                best, best_i = f[i, j], i
        pooled[j] = best
        argmax[j] = best_i
    return pooled, argmax


def naive_dense(w: np.ndarray, b: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Per-element dot-product loop for y = x @ w + b (x is 1-D)."""
    fan_in, fan_out = w.shape
    y = np.zeros(fan_out)
    for j in range(fan_out):
        acc = 0.0
        for i in range(fan_in):
            acc += x[i] * w[i, j]
        y[j] = acc + b[j]
    return y


def exhaustive_nearest_angle(
    target_angles: np.ndarray, source_angles: np.ndarray
) -> np.ndarray:
    """For each target angle, the index of the closest source angle by
    wrapped angular distance (plain double loop)."""
    out = np.empty(len(target_angles), dtype=int)
    for i, t in enumerate(target_angles):
        best, best_j = None, -1
        for j, s in enumerate(source_angles):
            d = abs(math.remainder(t - s, 2.0 * math.pi))
            if best is None or d < best:
                best, best_j = d, j
        out[i] = best_j
    return out


def finite_difference(loss_fn: Callable[[], float], array: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central finite differences of a scalar function w.r.t. an array the
    function reads in place."""
    grad = np.zeros_like(array)
    flat = array.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + h
        upper = loss_fn()
        flat[i] = original - h
        lower = loss_fn()
        flat[i] = original
        gflat[i] = (upper - lower) / (2.0 * h)
    return grad


def boundary_sample_distance(point: np.ndarray, polygon: np.ndarray, samples_per_edge: int = 20_000) -> float:
    """Distance from a point to a polygon boundary by dense sampling of every
    edge; independent of the closed-form point-segment projection."""
    best = math.inf
    k = len(polygon)
    for i in range(k):
        a = polygon[i]
        b = polygon[(i + 1) % k]
        ts = np.linspace(0.0, 1.0, samples_per_edge)
        pts = a[None, :] + ts[:, None] * (b - a)[None, :]
        d = np.hypot(pts[:, 0] - point[0], pts[:, 1] - point[1]).min()
        best = min(best, float(d))
    return best


# --- ray marching ---------------------------------------------------------------

def points_in_polygon_batch(points: np.ndarray, vertices: np.ndarray) -> np.ndarray:
    """Even-odd crossing test for many points at once (standalone copy, not
    shared with the production geometry)."""
    x, y = points[:, 0], points[:, 1]
    inside = np.zeros(len(points), dtype=bool)
    k = len(vertices)
    for i in range(k):
        x1, y1 = vertices[i]
        x2, y2 = vertices[(i + 1) % k]
        straddles = (y1 > y) != (y2 > y)
        if y2 != y1:
            xs = x1 + (y - y1) / (y2 - y1) * (x2 - x1)
            inside ^= straddles & (xs > x)
    return inside


def march_ray(
    scenario, origin: np.ndarray, world_angle: float, max_range: float, step: float = 1e-3
) -> float:
    """Occupancy probing along a ray at fixed step: the distance of the first
    sample that is out of bounds or inside an obstacle, else max_range."""
    n = int(math.floor(max_range / step))
    ts = step * np.arange(1, n + 1)
    xs = origin[0] + ts * math.cos(world_angle)
    ys = origin[1] + ts * math.sin(world_angle)
    pts = np.stack([xs, ys], axis=1)
    xmin, ymin, xmax, ymax = scenario.bounds
    occupied = (xs < xmin) | (xs > xmax) | (ys < ymin) | (ys > ymax)
    for poly in scenario.obstacles:
        occupied |= points_in_polygon_batch(pts, poly)
    hits = np.nonzero(occupied)[0]
    if len(hits) == 0:
        return float(max_range)
    return float(ts[hits[0]])


def ray_chord_through_first_obstacle(
    scenario, origin: np.ndarray, world_angle: float, max_range: float
) -> float:
    """Length of the ray's chord through whichever obstacle region it enters
    first (walls count as an unbounded region, so their chord is infinite).
    Used to identify beams a fixed-step prober cannot resolve."""
    direction = np.array([math.cos(world_angle), math.sin(world_angle)])
    first_t = math.inf
    first_exit = math.inf
    from .geometry import polygon_segments, rect_segments, ray_segments_hit

    wall_t = ray_segments_hit(origin, direction[None, :], rect_segments(*scenario.bounds), math.inf)[0]
    if wall_t < first_t:
        first_t, first_exit = wall_t, math.inf
    for poly in scenario.obstacles:
        segs = polygon_segments(poly)
        ts = sorted(
            t for t in _all_hits(origin, direction, segs) if t >= 0.0
        )
        if ts and ts[0] < first_t:
            first_t = ts[0]
            first_exit = ts[1] if len(ts) > 1 else ts[0]
    if not math.isfinite(first_t) or first_t > max_range:
        return math.inf
    return first_exit - first_t


def _all_hits(origin, direction, segments) -> list[float]:
    out = []
    for x1, y1, x2, y2 in segments:
        ex, ey = x2 - x1, y2 - y1
        denom = direction[0] * ey - direction[1] * ex
        if abs(denom) < 1e-12:
            continue
        aox, aoy = x1 - origin[0], y1 - origin[1]
        t = (aox * ey - aoy * ex) / denom
        u = (aox * direction[1] - aoy * direction[0]) / -denom
        if t >= 0.0 and 0.0 <= u <= 1.0:
            out.append(t)
    return out


# --- density quadrature -----------------------------------------------------------

def squashed_gaussian_density_1d(
    mean: float, log_std: float, scale: float, offset: float, actions: np.ndarray
) -> np.ndarray:
    """Density of scale*tanh(u)+offset with u ~ N(mean, exp(log_std)^2),
    evaluated by direct change of variables (no shared code with the
    policy head)."""
    t = (actions - offset) / scale
    u = np.arctanh(t)
    std = math.exp(log_std)
    normal = np.exp(-0.5 * ((u - mean) / std) ** 2) / (std * math.sqrt(2 * math.pi))
    jacobian = scale * (1.0 - t * t)
    return normal / jacobian


# --- suite runner ------------------------------------------------------------------

@dataclass
class OracleResult:
    name: str
    passed: bool
    detail: str


def run_oracle_suite(quick: bool = False, seed: int = 0) -> list[OracleResult]:
    """One self-contained check per oracle family. Trial counts shrink under
    quick mode; every check is deterministic for a fixed seed."""
    from . import autodiff as ad
    from .autodiff import Tensor
    from .models import ACTION_OFFSET, ACTION_SCALE, ModelConfig, SPNActor, squash_sample
    from .sensing import (
        LidarConfig, canonical_config, min_downsample, pad_scan_for_fcnet,
        raycast_scan, to_point_set, Scan,
    )
    from .world import Scenario, RobotState, check_collision

    rng = np.random.default_rng(seed)
    results: list[OracleResult] = []

    def record(name: str, passed: bool, detail: str):
        results.append(OracleResult(name, bool(passed), detail))

    # 1. min-downsampling vs brute-force windows
    n_scans = 10 if quick else 100
    worst = 0.0
    for _ in range(n_scans):
        d = rng.uniform(0.05, 5.0, size=1080)
        scan = Scan(d, np.zeros(1080))
        got = min_downsample(scan, 36, 30)
        want = brute_min_downsample(d, 36, 30)
        worst = max(worst, float(np.max(np.abs(got - want))))
    record("min_downsample_vs_bruteforce", worst == 0.0, f"max abs diff {worst:g} over {n_scans} scans")

    # 2. raycast vs 1 mm marching, on a random boxy room
    scenario = _random_box_scenario(rng)
    cfg = LidarConfig(fov_deg=360, res_deg=30, max_range=4.0)
    n_poses = 3 if quick else 12
    worst = 0.0
    checked = 0
    for _ in range(n_poses):
        pose = _random_free_pose(scenario, rng)
        scan = raycast_scan(scenario, pose, cfg)
        for angle, dist in zip(cfg.beam_angles, scan.distances):
            world_angle = pose.theta + angle
            marched = march_ray(scenario, pose.position, world_angle, cfg.max_range)
            err = abs(marched - dist)
            if err > 2e-3 and ray_chord_through_first_obstacle(
                    scenario, pose.position, world_angle, cfg.max_range) < 2.5e-3:
                continue  # sub-resolution sliver: the prober cannot see it
            worst = max(worst, err)
            checked += 1
    record("raycast_vs_ray_marching", worst <= 2e-3, f"max err {worst * 1000:.3f} mm over {checked} beams")

    # 3. collision distance vs dense boundary sampling
    square = np.array([[2.0, 2.0], [3.0, 2.0], [3.0, 3.0], [2.0, 3.0]])
    room = Scenario("oracle-room", [0, 0, 8, 8], [square])
    worst = 0.0
    for _ in range(4 if quick else 20):
        p = rng.uniform(0.3, 7.7, size=2)
        if points_in_polygon_batch(p[None, :], square)[0]:
            continue
        sampled = boundary_sample_distance(p, square, samples_per_edge=2000 if quick else 20000)
        analytic = _point_square_distance(p, square)
        worst = max(worst, abs(sampled - analytic))
        hit = check_collision(room, p, sampled - 1e-4)
        if hit and min(p[0], p[1], 8 - p[0], 8 - p[1]) >= sampled - 1e-4:
            record("collision_vs_boundary_sampling", False, "disc below sampled distance reported colliding")
            break
    else:
        record("collision_vs_boundary_sampling", worst <= 1e-6, f"max distance err {worst:g}")

    # 4. dense layer vs naive loops
    w = rng.normal(size=(3, 4))
    b = rng.normal(size=4)
    x = rng.normal(size=3)
    got = ad.dense(Tensor(x), Tensor(w), Tensor(b)).data
    want = naive_dense(w, b, x)
    record("dense_vs_naive_loop", np.allclose(got, want, atol=1e-12), f"max diff {np.max(np.abs(got - want)):g}")

    # 5. gradient of a full actor forward vs central finite differences
    mc = ModelConfig(K=2, H=3, head_widths=(4, 4))
    actor = SPNActor(mc, rng)
    points = rng.normal(size=(5, 2))
    g = rng.normal(size=4)
    weights = rng.normal(size=(2,))

    def loss_fn() -> float:
        mean, log_std, _ = actor.forward(points, g)
        return float(mean.data @ weights + log_std.data.sum())

    for p in actor.params.values():
        p.grad = None
    mean_t, log_std_t, _ = actor.forward(points, g)
    loss = ad.add(ad.sum_(ad.mul(mean_t, Tensor(weights))), ad.sum_(log_std_t))
    ad.backward(loss)
    worst = 0.0
    for name, p in actor.params.items():
        fd = finite_difference(loss_fn, p.data)
        got_grad = p.grad if p.grad is not None else np.zeros_like(p.data)
        scale_ref = np.maximum(np.abs(fd), 1e-6)
        worst = max(worst, float(np.max(np.abs(got_grad - fd) / scale_ref)))
    record("actor_gradients_vs_finite_differences", worst <= 1e-3, f"max rel err {worst:g}")

    # 6. max-pool vs double-loop scan
    f = rng.normal(size=(50, 8))
    pooled_t, argmax = ad.maxpool_points(Tensor(f))
    want_pool, want_arg = brute_maxpool(f)
    ok = np.array_equal(pooled_t.data, want_pool) and np.array_equal(argmax, want_arg)
    record("maxpool_vs_bruteforce_scan", ok, "exact match" if ok else "mismatch")

    # 7. frame composition vs explicit 2D transform
    cfg_off = LidarConfig(fov_deg=180, res_deg=20, max_range=10.0, mount=(0.05, 0.15, 0.3))
    d = rng.uniform(0.5, 9.0, size=cfg_off.beam_count)
    ps = to_point_set(Scan(d, cfg_off.beam_angles), cfg_off)
    worst = 0.0
    for i, (dist_i, gamma) in enumerate(zip(d, cfg_off.beam_angles)):
        delta = cfg_off.mount[2] + gamma
        ex = cfg_off.mount[0] + dist_i * math.sin(delta)
        ey = cfg_off.mount[1] + dist_i * math.cos(delta)
        want_d = math.hypot(ex, ey)
        want_a = math.atan2(ex, ey)
        worst = max(worst, abs(want_d - ps.distances[i]), abs(want_a - ps.angles[i]))
    record("pointset_frame_composition", worst <= 1e-12, f"max err {worst:g}")

    # 8. padding vs exhaustive nearest-angle search
    coarse = LidarConfig(fov_deg=360, res_deg=10, max_range=5.0)
    canon = canonical_config()
    d = rng.uniform(0.2, 5.0, size=coarse.beam_count)
    scan = Scan(d, coarse.beam_angles)
    padded = pad_scan_for_fcnet(scan, coarse, canon)
    pts = to_point_set(scan, coarse)
    nearest = exhaustive_nearest_angle(canon.beam_angles, pts.angles)
    tol = 0.5 * (coarse.effective_res_rad + canon.effective_res_rad)
    worst = 0.0
    for i, j in enumerate(nearest):
        gap = abs(math.remainder(canon.beam_angles[i] - pts.angles[j], 2 * math.pi))
        want = min(pts.distances[j], canon.max_range) if gap <= tol else canon.max_range
        worst = max(worst, abs(padded[i] - want))
    record("fcnet_padding_vs_nearest_angle", worst == 0.0, f"max abs diff {worst:g}")

    # 9. squashed-Gaussian density: quadrature mass and Monte-Carlo cross-check
    mean, log_std = 0.3, -0.5
    xs = np.linspace(ACTION_OFFSET[0] - ACTION_SCALE[0] + 1e-9,
                     ACTION_OFFSET[0] + ACTION_SCALE[0] - 1e-9, 200_001)
    dens = squashed_gaussian_density_1d(mean, log_std, ACTION_SCALE[0], ACTION_OFFSET[0], xs)
    mass = float(np.trapezoid(dens, xs))
    n_mc = 20_000 if quick else 100_000
    eps = rng.standard_normal((n_mc, 2))
    mean_v = np.array([mean, mean])
    log_std_v = np.array([log_std, log_std])
    _, logp = squash_sample(Tensor(np.tile(mean_v, (n_mc, 1))),
                            Tensor(np.tile(log_std_v, (n_mc, 1))), eps)
    want_mean = float(np.trapezoid(dens * np.log(np.maximum(dens, 1e-300)), xs))
    ys = np.linspace(-ACTION_SCALE[1] + 1e-9, ACTION_SCALE[1] - 1e-9, 200_001)
    dens_y = squashed_gaussian_density_1d(mean, log_std, ACTION_SCALE[1], ACTION_OFFSET[1], ys)
    want_mean += float(np.trapezoid(dens_y * np.log(np.maximum(dens_y, 1e-300)), ys))
    got_mean = float(logp.data.mean())
    se = float(logp.data.std(ddof=1) / math.sqrt(n_mc))
    ok = abs(mass - 1.0) <= 1e-4 and abs(got_mean - want_mean) <= 3 * se
    record("squashed_gaussian_density", ok,
           f"mass {mass:.6f}, MC mean {got_mean:.4f} vs quadrature {want_mean:.4f} (3se={3*se:.4f})")

    return results


def _point_square_distance(p: np.ndarray, square: np.ndarray) -> float:
    xmin, ymin = square.min(axis=0)
    xmax, ymax = square.max(axis=0)
    dx = max(xmin - p[0], 0.0, p[0] - xmax)
    dy = max(ymin - p[1], 0.0, p[1] - ymax)
    if dx == 0.0 and dy == 0.0:
        # inside: distance to the nearest edge
        return min(p[0] - xmin, xmax - p[0], p[1] - ymin, ymax - p[1])
    return math.hypot(dx, dy)


def _random_box_scenario(rng: np.random.Generator):
    from .world import Scenario

    boxes = []
    for _ in range(3):
        cx, cy = rng.uniform(1.5, 6.5, size=2)
        w, h = rng.uniform(0.6, 1.4, size=2)
        boxes.append(np.array([
            [cx - w / 2, cy - h / 2], [cx + w / 2, cy - h / 2],
            [cx + w / 2, cy + h / 2], [cx - w / 2, cy + h / 2],
        ]))
    return Scenario("oracle-boxes", [0, 0, 8, 8], boxes)


def _random_free_pose(scenario, rng: np.random.Generator):
    from .world import RobotState, check_collision

    while True:
        p = rng.uniform(0.4, 7.6, size=2)
        if not check_collision(scenario, p, 0.25):
            return RobotState(float(p[0]), float(p[1]), float(rng.uniform(-math.pi, math.pi)))
