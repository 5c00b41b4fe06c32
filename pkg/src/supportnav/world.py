"""2D world model: scenarios, differential-drive kinematics, collision checks,
and the episode step/termination logic.

Conventions: world poses are (x, y, theta) with theta measured CCW from the
world x-axis and normalized to (-pi, pi]. Bearings of world points relative
to a robot are CCW-positive from the heading direction. A positive angular
command turns the robot toward positive bearings.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .geometry import (
    point_in_polygon,
    point_segments_distance,
    polygon_area,
    polygon_segments,
    rect_segments,
    wrap_angle,
)

logger = logging.getLogger(__name__)

V_MAX = 0.5  # m/s, forward only
OMEGA_MAX = math.pi / 2.0  # rad/s
DT = 0.1  # s per control step
T_MAX = 400  # steps per episode
ROBOT_RADIUS = 0.2  # m
GOAL_RADIUS = 0.3  # m, success threshold on distance to goal
SPAWN_CLEARANCE = 0.05  # m, extra clearance required when sampling tasks
MIN_TASK_SEPARATION = 1.0  # m, minimum start-goal distance
_ARC_OMEGA_EPS = 1e-9  # below this |omega| the exact arc degenerates to a line
_MAX_REJECTIONS = 10_000


class Status(Enum):
    SUCCESS = "success"
    CRASH = "crash"
    TIMEOUT = "timeout"


class SamplingExhausted(RuntimeError):
    """Raised when task sampling cannot find free space."""


@dataclass
class RobotState:
    x: float
    y: float
    theta: float  # rad, (-pi, pi]
    v: float = 0.0
    omega: float = 0.0
    radius: float = ROBOT_RADIUS

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])


@dataclass
class Action:
    v_cmd: float  # m/s in [0, V_MAX]
    omega_cmd: float  # rad/s in [-OMEGA_MAX, OMEGA_MAX]

    def as_array(self) -> np.ndarray:
        return np.array([self.v_cmd, self.omega_cmd])


@dataclass
class EpisodeOutcome:
    status: Status
    steps: int
    trajectory: list[RobotState] = field(default_factory=list)


@dataclass
class EvalTask:
    start: tuple[float, float, float]  # x, y, theta
    goal: tuple[float, float]


class Scenario:
    """Polygonal world: rectangular bounds plus obstacle polygons.

    The bounding rectangle's walls count as obstacles for both collision
    checking and raycasting.
    """

    def __init__(
        self,
        name: str,
        bounds: Sequence[float],
        obstacles: Sequence[np.ndarray] = (),
        spawn_region: Optional[np.ndarray] = None,
        eval_tasks: Optional[list[EvalTask]] = None,
    ):
        self.name = name
        self.bounds = tuple(float(b) for b in bounds)
        if len(self.bounds) != 4 or self.bounds[0] >= self.bounds[2] or self.bounds[1] >= self.bounds[3]:
            raise ValueError(f"bounds must be [xmin, ymin, xmax, ymax], got {bounds}")
        self.obstacles = [np.asarray(o, dtype=float) for o in obstacles]
        for poly in self.obstacles:
            if poly.ndim != 2 or poly.shape[0] < 3 or poly.shape[1] != 2:
                raise ValueError("obstacle polygons need at least 3 (x, y) vertices")
            if abs(polygon_area(poly)) <= 0.0:
                raise ValueError("obstacle polygon has zero area")
        self.spawn_region = None if spawn_region is None else np.asarray(spawn_region, dtype=float)
        self.eval_tasks = eval_tasks or []
        self._segments = self._build_segments()
        for i, task in enumerate(self.eval_tasks):
            for label, point in (("start", task.start[:2]), ("goal", task.goal)):
                if check_collision(self, np.asarray(point, dtype=float), ROBOT_RADIUS):
                    raise ValueError(
                        f"eval task {i} {label} point {point} violates robot-radius clearance"
                    )

    def _build_segments(self) -> np.ndarray:
        parts = [rect_segments(*self.bounds)]
        parts.extend(polygon_segments(poly) for poly in self.obstacles)
        return np.concatenate(parts, axis=0)

    @property
    def segments(self) -> np.ndarray:
        """All obstacle edges plus the four bounding walls, as (S, 4)."""
        return self._segments

    # --- JSON interface -------------------------------------------------
    def to_dict(self) -> dict:
        data = {
            "name": self.name,
            "bounds": list(self.bounds),
            "obstacles": [poly.tolist() for poly in self.obstacles],
            "eval_tasks": [
                {"start": list(t.start), "goal": list(t.goal)} for t in self.eval_tasks
            ],
        }
        if self.spawn_region is not None:
            data["spawn_region"] = self.spawn_region.tolist()
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        tasks = [
            EvalTask(start=tuple(t["start"]), goal=tuple(t["goal"]))
            for t in data.get("eval_tasks", [])
        ]
        spawn = data.get("spawn_region")
        return cls(
            name=data["name"],
            bounds=data["bounds"],
            obstacles=[np.asarray(o, dtype=float) for o in data.get("obstacles", [])],
            spawn_region=None if spawn is None else np.asarray(spawn, dtype=float),
            eval_tasks=tasks,
        )


def save_scenario(scenario: Scenario, path) -> None:
    Path(path).write_text(json.dumps(scenario.to_dict(), indent=2))


def load_scenario(path) -> Scenario:
    return Scenario.from_dict(json.loads(Path(path).read_text()))


def builtin_scenario(name: str) -> Scenario:
    """Load one of the scenario files shipped with the package."""
    ref = resources.files("supportnav").joinpath(f"scenarios/{name}.json")
    if not ref.is_file():
        available = sorted(
            p.name[: -len(".json")]
            for p in resources.files("supportnav").joinpath("scenarios").iterdir()
            if p.name.endswith(".json")
        )
        raise FileNotFoundError(f"no builtin scenario {name!r}; available: {available}")
    return Scenario.from_dict(json.loads(ref.read_text()))


# --- kinematics ---------------------------------------------------------

def clamp_action(action: Action) -> Action:
    v = min(max(action.v_cmd, 0.0), V_MAX)
    w = min(max(action.omega_cmd, -OMEGA_MAX), OMEGA_MAX)
    if v != action.v_cmd or w != action.omega_cmd:
        logger.warning(
            "action (%.4f, %.4f) outside bounds, clamped to (%.4f, %.4f)",
            action.v_cmd, action.omega_cmd, v, w,
        )
        return Action(v, w)
    return action


def step_kinematics(state: RobotState, action: Action, dt: float) -> RobotState:
    """Advance the unicycle model by dt using exact arc integration.

    For |omega| above a small threshold the robot follows a circular arc of
    radius v/omega; below it the straight-line formula is used (the two agree
    to within the arc's second-order Taylor remainder at the threshold).
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    action = clamp_action(action)
    v, w = action.v_cmd, action.omega_cmd
    theta = state.theta
    theta_new = wrap_angle(theta + w * dt)
    if abs(w) > _ARC_OMEGA_EPS:
        r = v / w
        x_new = state.x + r * (math.sin(theta + w * dt) - math.sin(theta))
        y_new = state.y - r * (math.cos(theta + w * dt) - math.cos(theta))
    else:
        x_new = state.x + v * math.cos(theta) * dt
        y_new = state.y + v * math.sin(theta) * dt
    return RobotState(x_new, y_new, theta_new, v=v, omega=w, radius=state.radius)


# --- collision and termination ------------------------------------------

def check_collision(scenario: Scenario, position: np.ndarray, radius: float) -> bool:
    """True iff a disc of the given radius at position touches any obstacle
    edge or the bounding walls, sits inside an obstacle, or lies out of bounds."""
    p = np.asarray(position, dtype=float)
    xmin, ymin, xmax, ymax = scenario.bounds
    if not (xmin <= p[0] <= xmax and ymin <= p[1] <= ymax):
        return True
    if point_segments_distance(p, scenario.segments).min() < radius:
        return True
    return any(point_in_polygon(p, poly) for poly in scenario.obstacles)


def relative_goal(state: RobotState, goal: np.ndarray) -> tuple[float, float]:
    """Distance and CCW bearing of a world point from the robot's heading."""
    gx, gy = float(goal[0]), float(goal[1])
    dx, dy = gx - state.x, gy - state.y
    distance = math.hypot(dx, dy)
    bearing = wrap_angle(math.atan2(dy, dx) - state.theta)
    return distance, bearing


def episode_step(
    scenario: Scenario,
    robot: RobotState,
    goal: np.ndarray,
    action: Action,
    step_index: int,
    dt: float = DT,
    goal_radius: float = GOAL_RADIUS,
    t_max: int = T_MAX,
) -> tuple[RobotState, Optional[Status]]:
    """One control step. Returns the new state and, if the episode ended,
    its status. step_index counts from 0; the step with index t_max - 1 is
    the last one allowed before timeout."""
    if step_index >= t_max:
        raise ValueError(f"step_index {step_index} beyond episode horizon {t_max}")
    new_state = step_kinematics(robot, action, dt)
    distance, _ = relative_goal(new_state, goal)
    if distance <= goal_radius:
        return new_state, Status.SUCCESS
    if check_collision(scenario, new_state.position, new_state.radius):
        return new_state, Status.CRASH
    if step_index >= t_max - 1:
        return new_state, Status.TIMEOUT
    return new_state, None


# --- task sampling --------------------------------------------------------

def _sample_free_point(
    scenario: Scenario,
    rng: np.random.Generator,
    clearance: float,
    budget: list[int],
) -> np.ndarray:
    xmin, ymin, xmax, ymax = scenario.bounds
    region = scenario.spawn_region
    while True:
        if budget[0] <= 0:
            raise SamplingExhausted(
                f"no free point found in scenario {scenario.name!r} "
                f"after {_MAX_REJECTIONS} rejections"
            )
        p = np.array([rng.uniform(xmin, xmax), rng.uniform(ymin, ymax)])
        if region is not None and not point_in_polygon(p, region):
            budget[0] -= 1
            continue
        if check_collision(scenario, p, clearance):
            budget[0] -= 1
            continue
        return p


def sample_task(
    scenario: Scenario,
    rng: np.random.Generator,
    robot_radius: float = ROBOT_RADIUS,
) -> tuple[RobotState, np.ndarray]:
    """Random obstacle-free start pose and goal point, both with clearance
    of robot_radius + SPAWN_CLEARANCE, at least MIN_TASK_SEPARATION apart."""
    clearance = robot_radius + SPAWN_CLEARANCE
    budget = [_MAX_REJECTIONS]
    start = _sample_free_point(scenario, rng, clearance, budget)
    theta = rng.uniform(-math.pi, math.pi)
    while True:
        goal = _sample_free_point(scenario, rng, clearance, budget)
        if np.hypot(*(goal - start)) >= MIN_TASK_SEPARATION:
            break
        budget[0] -= 1
    state = RobotState(float(start[0]), float(start[1]), wrap_angle(theta), radius=robot_radius)
    return state, goal
