"""Evaluation harness: the episode score, batch evaluation of a model under
an arbitrary sensor configuration, and support-point / trajectory export as
CSV plus a deterministic SVG overlay.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .models import deterministic_from_mean
from .sensing import (
    LidarConfig,
    ObstaclePointSet,
    Scan,
    canonical_config,
    downsample_batch,
    format_lidar_label,
    goal_velocity_state,
    min_downsample,
    pad_scan_for_fcnet,
    raycast_scan,
    to_point_set,
)
from .world import (
    Action,
    EpisodeOutcome,
    EvalTask,
    RobotState,
    Scenario,
    Status,
    episode_step,
    sample_task,
)

T_MAX = 400


def score(outcome: EpisodeOutcome, t_max: int = T_MAX) -> float:
    """Episode score: fast successes approach 1, slow ones fall toward 0,
    and both crashes and timeouts score -1."""
    if outcome.status is Status.SUCCESS:
        return 1.0 - 2.0 * outcome.steps / t_max
    return -1.0


@dataclass
class Decision:
    action: np.ndarray  # (2,)
    support_indices: Optional[np.ndarray] = None  # (K,) for point-set actors
    support_multiplicity: Optional[dict[int, int]] = None


class PointSetPolicy:
    """Deterministic adapter for the gated point-set actor (and the ungated
    baseline, which consumes raw coordinates instead of encodings)."""

    def __init__(self, model):
        self.model = model
        self.raw_coords = model.kind == "pointnet"

    def decide(self, scan: Scan, points: ObstaclePointSet, g: np.ndarray) -> Decision:
        if self.raw_coords:
            inputs = np.stack(
                [points.distances * np.sin(points.angles),
                 points.distances * np.cos(points.angles)], axis=1)
        else:
            inputs = points.points
        mean, _, argmax = self.model.forward(inputs, g)
        counts: dict[int, int] = {}
        for i in argmax:
            counts[int(i)] = counts.get(int(i), 0) + 1
        return Decision(
            action=deterministic_from_mean(mean.data),
            support_indices=np.asarray(argmax, dtype=int),
            support_multiplicity=dict(sorted(counts.items())),
        )


class FCNetPolicy:
    """Adapter for the fixed-format baseline: scans are padded onto the
    canonical beam grid, then reciprocal min-downsampled."""

    def __init__(self, model, cfg: LidarConfig, canonical: Optional[LidarConfig] = None):
        self.model = model
        self.cfg = cfg
        self.canonical = canonical or canonical_config()
        m = model.cfg.downsample_m
        n_c = self.canonical.beam_count
        self.k = n_c // m

    def decide(self, scan: Scan, points: ObstaclePointSet, g: np.ndarray) -> Decision:
        padded = pad_scan_for_fcnet(scan, self.cfg, self.canonical)
        y = downsample_batch(padded[None, :], self.model.cfg.downsample_m, self.k)[0]
        mean, _ = self.model.forward(y, g)
        return Decision(action=deterministic_from_mean(mean.data))


def make_policy(model, cfg: LidarConfig):
    kind = getattr(model, "kind", None)
    if kind in ("spn_actor", "pointnet"):
        return PointSetPolicy(model)
    if kind == "fcnet":
        return FCNetPolicy(model, cfg)
    if hasattr(model, "decide"):
        return model
    raise ValueError(
        f"cannot evaluate object of kind {kind!r}: expected a point-set actor, "
        "an fcnet actor, or a policy with a decide(scan, points, g) method"
    )


@dataclass
class TraceStep:
    step: int
    pose: tuple[float, float, float]
    v: float
    omega: float
    goal: tuple[float, float]
    support_points: list[tuple[float, float, int]]  # robot-frame x, y, multiplicity


@dataclass
class SupportPointTrace:
    task_index: int
    scenario: str
    steps: list[TraceStep] = field(default_factory=list)
    trajectory: list[tuple[float, float, float]] = field(default_factory=list)


@dataclass
class EvalReport:
    scenario: str
    lidar_label: str
    n_tasks: int
    successes: int
    crashes: int
    timeouts: int
    mean_score: float
    mean_steps: float

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "lidar": self.lidar_label,
            "n_tasks": self.n_tasks,
            "successes": self.successes,
            "crashes": self.crashes,
            "timeouts": self.timeouts,
            "success_rate": self.successes / self.n_tasks,
            "crash_rate": self.crashes / self.n_tasks,
            "timeout_rate": self.timeouts / self.n_tasks,
            "mean_score": self.mean_score,
            "mean_steps": self.mean_steps,
        }


def eval_task_list(
    scenario: Scenario, n_tasks: int, seed: int
) -> list[tuple[RobotState, np.ndarray]]:
    """Fixed task list: the scenario's own eval tasks when it has enough,
    otherwise freshly sampled from the given seed."""
    if scenario.eval_tasks and len(scenario.eval_tasks) >= n_tasks:
        return [
            (RobotState(*t.start), np.asarray(t.goal, dtype=float))
            for t in scenario.eval_tasks[:n_tasks]
        ]
    rng = np.random.default_rng(seed)
    return [sample_task(scenario, rng) for _ in range(n_tasks)]


def run_eval(
    model,
    scenario: Scenario,
    lidar: LidarConfig,
    n_tasks: int = 100,
    seed: int = 0,
    tasks: Optional[Sequence[tuple[RobotState, np.ndarray]]] = None,
    trace_every: int = 0,
    t_max: int = T_MAX,
    goal_radius: float = 0.3,
    dt: float = 0.1,
) -> tuple[EvalReport, list[SupportPointTrace]]:
    """Run n_tasks deterministic-policy episodes and aggregate the outcomes.

    With trace_every > 0, poses and support points are recorded every that
    many control steps (step 0 included) for models that expose them.
    """
    policy = make_policy(model, lidar)
    if tasks is None:
        tasks = eval_task_list(scenario, n_tasks, seed)
    outcomes: list[EpisodeOutcome] = []
    traces: list[SupportPointTrace] = []
    for task_index, (start, goal) in enumerate(tasks):
        robot = start
        trace = SupportPointTrace(task_index=task_index, scenario=scenario.name)
        trace.trajectory.append((robot.x, robot.y, robot.theta))
        status = None
        steps_used = t_max
        for t in range(t_max):
            scan = raycast_scan(scenario, robot, lidar)
            points = to_point_set(scan, lidar)
            g = goal_velocity_state(robot, goal)
            decision = policy.decide(scan, points, g.as_array())
            if trace_every and t % trace_every == 0 and decision.support_indices is not None:
                support = [
                    (
                        float(points.distances[i] * math.sin(points.angles[i])),
                        float(points.distances[i] * math.cos(points.angles[i])),
                        mult,
                    )
                    for i, mult in decision.support_multiplicity.items()
                ]
                trace.steps.append(TraceStep(
                    step=t, pose=(robot.x, robot.y, robot.theta),
                    v=robot.v, omega=robot.omega,
                    goal=(float(goal[0]), float(goal[1])), support_points=support,
                ))
            action = Action(float(decision.action[0]), float(decision.action[1]))
            robot, status = episode_step(
                scenario, robot, goal, action, t,
                dt=dt, goal_radius=goal_radius, t_max=t_max,
            )
            trace.trajectory.append((robot.x, robot.y, robot.theta))
            if status is not None:
                steps_used = t + 1
                break
        outcomes.append(EpisodeOutcome(status=status or Status.TIMEOUT, steps=steps_used))
        traces.append(trace)
    scores = [score(o, t_max) for o in outcomes]
    report = EvalReport(
        scenario=scenario.name,
        lidar_label=format_lidar_label(lidar),
        n_tasks=len(tasks),
        successes=sum(o.status is Status.SUCCESS for o in outcomes),
        crashes=sum(o.status is Status.CRASH for o in outcomes),
        timeouts=sum(o.status is Status.TIMEOUT for o in outcomes),
        mean_score=float(np.mean(scores)),
        mean_steps=float(np.mean([o.steps for o in outcomes])),
    )
    return report, traces


# --- trace export -------------------------------------------------------------

def _trace_csv_path(directory: Path, index: int) -> Path:
    return directory / f"trace_{index:03d}.csv"


def export_traces(traces: Sequence[SupportPointTrace], directory, scenario: Optional[Scenario] = None) -> list[Path]:
    """Write one CSV (and, when scenario geometry is given, one SVG overlay)
    per episode trace. Returns the list of files written."""
    if not traces:
        raise ValueError("no traces to export")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    max_slots = max(
        (len(s.support_points) for tr in traces for s in tr.steps), default=0
    )
    for trace in traces:
        path = _trace_csv_path(directory, trace.task_index)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            header = ["step", "x", "y", "theta", "v", "omega", "goal_x", "goal_y"]
            for j in range(max_slots):
                header += [f"sp{j}_x", f"sp{j}_y", f"sp{j}_mult"]
            writer.writerow(header)
            for s in trace.steps:
                row = [s.step, *(repr(v) for v in s.pose), repr(s.v), repr(s.omega),
                       repr(s.goal[0]), repr(s.goal[1])]
                for j in range(max_slots):
                    if j < len(s.support_points):
                        x, y, mult = s.support_points[j]
                        row += [repr(x), repr(y), mult]
                    else:
                        row += ["", "", ""]
                writer.writerow(row)
        written.append(path)
        if scenario is not None:
            svg_path = directory / f"trace_{trace.task_index:03d}.svg"
            svg_path.write_text(render_trace_svg(trace, scenario))
            written.append(svg_path)
    return written


def read_trace_csv(path) -> list[TraceStep]:
    """Inverse of the CSV export (exact float round trip via repr)."""
    steps: list[TraceStep] = []
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        n_slots = (len(header) - 8) // 3
        for row in reader:
            support = []
            for j in range(n_slots):
                sx, sy, sm = row[8 + 3 * j : 11 + 3 * j]
                if sx == "":
                    break
                support.append((float(sx), float(sy), int(sm)))
            steps.append(TraceStep(
                step=int(row[0]), pose=(float(row[1]), float(row[2]), float(row[3])),
                v=float(row[4]), omega=float(row[5]),
                goal=(float(row[6]), float(row[7])), support_points=support,
            ))
    return steps


_PALETTE = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
            "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"]


def render_trace_svg(trace: SupportPointTrace, scenario: Scenario, size: int = 640) -> str:
    """Deterministic SVG: obstacles, trajectory, start/goal markers, and
    support points drawn in world frame with marker radius scaled by
    multiplicity."""
    xmin, ymin, xmax, ymax = scenario.bounds
    span = max(xmax - xmin, ymax - ymin)
    pad = 0.05 * span
    s = size / (span + 2 * pad)

    def sx(x: float) -> float:
        return (x - xmin + pad) * s

    def sy(y: float) -> float:
        return (ymax - y + pad) * s

    def pt(x: float, y: float) -> str:
        return f"{sx(x):.2f},{sy(y):.2f}"

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
        f'<rect x="{sx(xmin):.2f}" y="{sy(ymax):.2f}" width="{(xmax - xmin) * s:.2f}" '
        f'height="{(ymax - ymin) * s:.2f}" fill="none" stroke="black" stroke-width="2"/>',
    ]
    for poly in scenario.obstacles:
        pts = " ".join(pt(x, y) for x, y in poly)
        out.append(f'<polygon points="{pts}" fill="#bbbbbb" stroke="#555555"/>')
    if trace.trajectory:
        pts = " ".join(pt(x, y) for x, y, _ in trace.trajectory)
        out.append(
            f'<polyline points="{pts}" fill="none" stroke="#1f77b4" stroke-width="1.5"/>'
        )
        x0, y0, _ = trace.trajectory[0]
        out.append(
            f'<circle cx="{sx(x0):.2f}" cy="{sy(y0):.2f}" r="5" fill="#1f77b4"/>'
        )
    for rec_index, step in enumerate(trace.steps):
        color = _PALETTE[rec_index % len(_PALETTE)]
        rx, ry, rtheta = step.pose
        out.append(
            f'<circle cx="{sx(rx):.2f}" cy="{sy(ry):.2f}" r="3" fill="{color}" '
            f'fill-opacity="0.8"/>'
        )
        # support points are stored in robot frame (x = left, y = heading)
        heading = np.array([math.cos(rtheta), math.sin(rtheta)])
        left = np.array([-math.sin(rtheta), math.cos(rtheta)])
        for px, py, mult in step.support_points:
            world = np.array([rx, ry]) + px * left + py * heading
            out.append(
                f'<circle cx="{sx(world[0]):.2f}" cy="{sy(world[1]):.2f}" '
                f'r="{2.0 * mult:.2f}" fill="none" stroke="{color}" stroke-width="1.2"/>'
            )
    if trace.steps:
        gx, gy = trace.steps[0].goal
        out.append(
            f'<circle cx="{sx(gx):.2f}" cy="{sy(gy):.2f}" r="6" fill="none" '
            f'stroke="#d62728" stroke-width="2"/>'
        )
    out.append("</svg>")
    return "\n".join(out)


def sweep(
    model, labels: Sequence[str], scenarios: Sequence[Scenario],
    n_tasks: int = 100, seed: int = 0,
) -> list[dict]:
    """Evaluate one model across a grid of sensor labels and scenarios;
    one report row per (label, scenario) pair."""
    from .sensing import parse_lidar_label

    rows = []
    for label in labels:
        cfg = parse_lidar_label(label)
        for scenario in scenarios:
            report, _ = run_eval(model, scenario, cfg, n_tasks=n_tasks, seed=seed)
            rows.append(report.to_dict())
    return rows


def write_report(rows, path) -> None:
    Path(path).write_text(json.dumps(rows, indent=2))
