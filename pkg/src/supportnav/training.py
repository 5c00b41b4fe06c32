"""Actor-critic training: reward shaping, the replay ring, the SAC update
(value network plus double Q, per the original formulation), the scenario
curriculum, the PID warm-up controller, and the training loop itself.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import NonFiniteGradient, Tensor
from .models import (
    ModelConfig,
    SPNActor,
    SPNCritics,
    SPNv2Critics,
    deterministic_from_mean,
    raw_from_scaled,
    save_model,
    squash_sample,
)
from .nncore import AdamState, adam_update, load_adam_state, save_adam_state, zero_grads
from .sensing import (
    GoalVelocityState,
    LidarConfig,
    goal_velocity_state,
    min_downsample,
    parse_lidar_label,
    raycast_scan,
    to_point_set,
)
from .world import (
    OMEGA_MAX,
    V_MAX,
    Action,
    RobotState,
    Scenario,
    Status,
    builtin_scenario,
    episode_step,
    load_scenario,
    sample_task,
)


class TrainingFault(RuntimeError):
    """Raised when a loss or gradient goes non-finite during training."""


@dataclass
class Transition:
    points: np.ndarray  # (n, 2) encoded obstacle points
    y: np.ndarray  # (m,) reciprocal min-downsampled scan
    g: np.ndarray  # (4,) [goal distance, goal bearing, v, omega]
    action_raw: np.ndarray  # (2,) pre-squash coordinates
    action: np.ndarray  # (2,) scaled action actually executed
    reward: float
    next_points: np.ndarray
    next_y: np.ndarray
    next_g: np.ndarray
    terminal: bool  # True only for success/crash; timeouts bootstrap


@dataclass
class TrainConfig:
    # SAC hyperparameters
    gamma: float = 0.99
    alpha: float = 0.2  # fixed entropy weight
    lr: float = 3e-4
    batch_size: int = 256
    replay_capacity: int = 500_000
    tau: float = 0.005
    total_steps: int = 500_000
    updates_per_step: int = 1
    min_fill: int = 1000
    # reward constants
    r_success: float = 10.0
    r_crash: float = -10.0
    c1: float = 5.0
    c2: float = -0.05
    # curriculum
    curriculum_window: int = 50
    curriculum_threshold: float = 0.9
    warmup_episodes: int = 100
    pid_gain: float = 1.5
    # sensing / model
    lidar_label: str = "360|0.33|5|0"
    downsample_m: int = 36
    downsample_k: int = 30
    K: int = 20
    H: int = 64
    head_widths: tuple[int, int] = (128, 128)
    critic_widths: tuple[int, int] = (256, 256)
    critic_kind: str = "spn"
    # episode mechanics
    dt: float = 0.1
    t_max: int = 400
    goal_radius: float = 0.3
    # evaluation cadence
    eval_every: int = 5000
    milestone_every: int = 25_000
    n_milestone_tasks: int = 100
    early_stop_success: Optional[float] = None
    checkpoint_every: int = 25_000
    # scenario names (builtin) or paths
    scenarios: tuple[str, ...] = ("env0", "env1", "env2", "env3")
    holdout_scenarios: tuple[str, ...] = ("env4", "env5", "env6")

    def model_config(self) -> ModelConfig:
        return ModelConfig(
            K=self.K,
            H=self.H,
            head_widths=tuple(self.head_widths),
            critic_widths=tuple(self.critic_widths),
            critic_kind=self.critic_kind,
            downsample_m=self.downsample_m,
        )

    def to_json(self, path) -> None:
        Path(path).write_text(json.dumps(asdict(self), indent=2))

    @classmethod
    def from_json(cls, path) -> "TrainConfig":
        data = json.loads(Path(path).read_text())
        return cls.from_dict(data)

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown training config keys: {sorted(unknown)}")
        kwargs = dict(data)
        for key in ("head_widths", "critic_widths", "scenarios", "holdout_scenarios"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        return cls(**kwargs)


def desk_train_config() -> TrainConfig:
    """CPU-scale training setup: one simple room, a 360-beam 1-degree sensor,
    K=5 features, batch 64, early stop once the fixed 100-task evaluation
    reaches 0.85 success. The paper-scale setup (1080 beams, batch 256,
    500k steps, four-room curriculum) is the TrainConfig default."""
    return TrainConfig(
        lidar_label="360|1|5|0",
        downsample_m=36,
        downsample_k=10,
        K=5,
        H=64,
        batch_size=64,
        replay_capacity=120_000,
        total_steps=150_000,
        eval_every=5000,
        milestone_every=10_000,
        n_milestone_tasks=100,
        early_stop_success=0.85,
        checkpoint_every=25_000,
        scenarios=("simple_room",),
        holdout_scenarios=("simple_room",),
    )


def compute_reward(
    d_before: float,
    d_after: float,
    status: Optional[Status],
    cfg: TrainConfig,
) -> float:
    """Terminal bonus/penalty on success/crash; otherwise dense progress
    shaping plus a small time penalty (timeouts get the dense branch)."""
    if status is Status.SUCCESS:
        return cfg.r_success
    if status is Status.CRASH:
        return cfg.r_crash
    return cfg.c1 * (d_before - d_after) + cfg.c2


class ReplayBuffer:
    """Fixed-capacity ring over transition fields; uniform sampling with
    replacement. All rows share one point-set width, so batches stack into
    rectangular arrays."""

    def __init__(self, capacity: int, n_points: int, m: int):
        if capacity <= 0:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.size = 0
        self._cursor = 0
        self.points = np.zeros((capacity, n_points, 2))
        self.next_points = np.zeros((capacity, n_points, 2))
        self.y = np.zeros((capacity, m))
        self.next_y = np.zeros((capacity, m))
        self.g = np.zeros((capacity, 4))
        self.next_g = np.zeros((capacity, 4))
        self.action = np.zeros((capacity, 2))
        self.action_raw = np.zeros((capacity, 2))
        self.reward = np.zeros(capacity)
        self.terminal = np.zeros(capacity)

    def __len__(self) -> int:
        return self.size

    def push(self, t: Transition) -> None:
        i = self._cursor
        self.points[i] = t.points
        self.next_points[i] = t.next_points
        self.y[i] = t.y
        self.next_y[i] = t.next_y
        self.g[i] = t.g
        self.next_g[i] = t.next_g
        self.action[i] = t.action
        self.action_raw[i] = t.action_raw
        self.reward[i] = t.reward
        self.terminal[i] = 1.0 if t.terminal else 0.0
        self._cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def get(self, i: int) -> Transition:
        if not 0 <= i < self.size:
            raise IndexError(i)
        return Transition(
            points=self.points[i].copy(), y=self.y[i].copy(), g=self.g[i].copy(),
            action_raw=self.action_raw[i].copy(), action=self.action[i].copy(),
            reward=float(self.reward[i]), next_points=self.next_points[i].copy(),
            next_y=self.next_y[i].copy(), next_g=self.next_g[i].copy(),
            terminal=bool(self.terminal[i]),
        )

    def sample(self, batch_size: int, rng: np.random.Generator) -> dict[str, np.ndarray]:
        if self.size == 0:
            raise ValueError("cannot sample from an empty replay buffer")
        idx = rng.integers(0, self.size, size=batch_size)
        return {
            "points": self.points[idx],
            "y": self.y[idx],
            "g": self.g[idx],
            "action": self.action[idx],
            "reward": self.reward[idx],
            "next_points": self.next_points[idx],
            "next_y": self.next_y[idx],
            "next_g": self.next_g[idx],
            "terminal": self.terminal[idx],
        }


# --- curriculum --------------------------------------------------------------

@dataclass
class CurriculumState:
    probs: list[float]
    windows: list[deque] = field(default_factory=list)
    stage: int = 0
    frozen: bool = False


def init_curriculum(n_envs: int, window: int = 50) -> CurriculumState:
    if n_envs == 1:
        return CurriculumState(probs=[1.0], windows=[deque(maxlen=window)], frozen=True)
    if n_envs == 4:
        probs = [0.7, 0.1, 0.1, 0.1]
    else:
        rest = 0.3 / (n_envs - 1)
        probs = [0.7] + [rest] * (n_envs - 1)
    return CurriculumState(
        probs=probs, windows=[deque(maxlen=window) for _ in range(n_envs)]
    )


def curriculum_update(
    state: CurriculumState,
    success: bool,
    env_index: int,
    threshold: float = 0.9,
) -> CurriculumState:
    """Record an episode result. When the current-stage scenario's success
    rate over its full rolling window reaches the threshold, its selection
    probability swaps with the next scenario's; after the last swap the
    probabilities stay fixed."""
    window = state.windows[env_index]
    window.append(1.0 if success else 0.0)
    if state.frozen or env_index != state.stage:
        return state
    if len(window) < window.maxlen:
        return state
    if sum(window) / len(window) >= threshold:
        nxt = state.stage + 1
        state.probs[state.stage], state.probs[nxt] = (
            state.probs[nxt], state.probs[state.stage],
        )
        state.stage = nxt
        if state.stage == len(state.probs) - 1:
            state.frozen = True
    return state


# --- PID warm-up --------------------------------------------------------------

def pid_warmup_action(g: GoalVelocityState, gain: float = 1.5) -> Action:
    """Pure-pursuit toward the goal: P-control on the heading error, forward
    speed faded out as the goal leaves the front half-plane."""
    omega = min(max(gain * g.bearing, -OMEGA_MAX), OMEGA_MAX)
    v = V_MAX * max(0.0, math.cos(g.bearing))
    return Action(v, omega)


# --- SAC update ----------------------------------------------------------------

def _collect_grads(params: dict[str, Tensor]) -> dict[str, np.ndarray]:
    return {k: (p.grad.copy() if p.grad is not None else np.zeros_like(p.data))
            for k, p in params.items()}


def sac_update(
    batch: dict[str, np.ndarray],
    actor,
    critics,
    target_critics,
    adam_actor: AdamState,
    adam_q: AdamState,
    adam_v: AdamState,
    cfg: TrainConfig,
    rng: np.random.Generator,
) -> dict[str, float]:
    """One gradient step of the three SAC losses from a frozen parameter
    snapshot, then the Adam steps and the Polyak move of the target value
    network. Returns the loss report."""
    B = len(batch["reward"])
    spn = critics.kind == "spn_critic"
    state = batch["y"] if spn else batch["points"]
    next_state = batch["next_y"] if spn else batch["next_points"]
    g = batch["g"]

    try:
        # Fresh reparameterized sample on the current states.
        mean, log_std, _ = actor.forward(batch["points"], g)
        eps = rng.standard_normal((B, 2))
        a_new, log_pi = squash_sample(mean, log_std, eps)

        # Q targets from the target value network only.
        v_next = target_critics.value(next_state, batch["next_g"]).data.reshape(B)
        q_target = batch["reward"] + cfg.gamma * (1.0 - batch["terminal"]) * v_next
        q_target_t = Tensor(q_target.reshape(B, 1))

        # (a) critic loss on the executed actions
        q1 = critics.q(1, state, g, batch["action"])
        q2 = critics.q(2, state, g, batch["action"])
        q_loss = ad.add(
            ad.mean(ad.square(ad.sub(q1, q_target_t))),
            ad.mean(ad.square(ad.sub(q2, q_target_t))),
        )
        zero_grads(critics.params)
        ad.backward(q_loss, check_params=list(critics.params.values()))
        q_grads = _collect_grads(critics.subset("q1") | critics.subset("q2"))

        # Frozen-weight Q on the fresh sample: gradients flow to the actor
        # through the action, never into the critic parameters.
        q1_pi = critics.q(1, state, g, a_new, frozen=True)
        q2_pi = critics.q(2, state, g, a_new, frozen=True)
        q_min = ad.minimum(q1_pi, q2_pi)

        # (b) value loss toward min-Q minus the entropy term (targets detached)
        v_target = q_min.data.reshape(B) - cfg.alpha * log_pi.data
        v_pred = critics.value(state, g)
        v_loss = ad.mean(ad.square(ad.sub(v_pred, Tensor(v_target.reshape(B, 1)))))
        zero_grads(critics.params)
        ad.backward(v_loss, check_params=list(critics.params.values()))
        v_grads = _collect_grads(critics.subset("v"))

        # (c) policy loss: entropy-regularized objective via reparameterization
        policy_loss = ad.mean(
            ad.sub(ad.scale(log_pi, cfg.alpha), ad.reshape(q_min, (B,)))
        )
        zero_grads(actor.params)
        ad.backward(policy_loss, check_params=list(actor.params.values()))
    except NonFiniteGradient as exc:
        raise TrainingFault(f"non-finite quantity in SAC update: {exc}") from exc

    # Apply every update from the frozen-snapshot gradients.
    for name, grad in q_grads.items():
        critics.params[name].grad = grad
    for name, grad in v_grads.items():
        critics.params[name].grad = grad
    adam_update(critics.subset("q1") | critics.subset("q2"), adam_q)
    adam_update(critics.subset("v"), adam_v)
    adam_update(actor.params, adam_actor)
    polyak_update(target_critics, critics, cfg.tau)

    return {
        "q_loss": float(q_loss.data),
        "v_loss": float(v_loss.data),
        "policy_loss": float(policy_loss.data),
        "entropy_proxy": float(-log_pi.data.mean()),
    }


def clone_frozen(model):
    """Structural copy of a network with gradient tracking disabled."""
    twin = model.__class__(model.cfg, np.random.default_rng(0))
    for name, p in twin.params.items():
        p.data = model.params[name].data.copy()
        p.requires_grad = False
    return twin


def polyak_update(target, source, tau: float) -> None:
    for name, p in target.params.items():
        p.data *= 1.0 - tau
        p.data += tau * source.params[name].data


# --- training loop ---------------------------------------------------------------

@dataclass
class TrainResult:
    actor: SPNActor
    critics: object
    metrics: list[dict]
    steps: int
    episodes: int


def resolve_scenarios(names: Sequence[str]) -> list[Scenario]:
    out = []
    for name in names:
        path = Path(name)
        if path.suffix == ".json" and path.exists():
            out.append(load_scenario(path))
        else:
            out.append(builtin_scenario(name))
    return out


def _observe(scenario, robot, goal, lidar, cfg):
    scan = raycast_scan(scenario, robot, lidar)
    pts = to_point_set(scan, lidar)
    y = min_downsample(scan, cfg.downsample_m, cfg.downsample_k)
    g = goal_velocity_state(robot, goal)
    return pts, y, g


def fixed_eval_tasks(
    scenario: Scenario, n_tasks: int, seed: int = 7_151_618
) -> list[tuple[RobotState, np.ndarray]]:
    """The frozen task list used for milestone evaluation: n_tasks start/goal
    pairs drawn once from a scenario-independent seed."""
    rng = np.random.default_rng(seed)
    return [sample_task(scenario, rng) for _ in range(n_tasks)]


def _eval_record(step: int, env: str, statuses: list[Status], steps_used: list[int], t_max: int) -> dict:
    n = len(statuses)
    scores = [
        1.0 - 2.0 * s / t_max if st is Status.SUCCESS else -1.0
        for st, s in zip(statuses, steps_used)
    ]
    return {
        "step": step,
        "env": env,
        "score_mean": sum(scores) / n,
        "success_rate": sum(st is Status.SUCCESS for st in statuses) / n,
        "crash_rate": sum(st is Status.CRASH for st in statuses) / n,
        "timeout_rate": sum(st is Status.TIMEOUT for st in statuses) / n,
    }


def train_loop(
    cfg: TrainConfig,
    scenarios: Optional[Sequence[Scenario]] = None,
    seed: int = 0,
    out_dir=None,
    resume_from=None,
    progress: Optional[Callable[[int, dict], None]] = None,
) -> TrainResult:
    """Full SAC training run. Deterministic for a fixed seed: one seed
    sequence feeds separate generators for initialization, environment
    sampling, policy noise, and replay draws, all consumed in a fixed order.
    Checkpoints carry networks, optimizer state, counters, curriculum, and
    generator states (the replay buffer is rebuilt after a resume)."""
    lidar = parse_lidar_label(cfg.lidar_label)
    n_beams = lidar.beam_count
    if cfg.downsample_m * cfg.downsample_k > n_beams:
        raise ValueError(
            f"downsample windows ({cfg.downsample_m}x{cfg.downsample_k}) exceed "
            f"{n_beams} beams of {cfg.lidar_label!r}"
        )
    if scenarios is None:
        scenarios = resolve_scenarios(cfg.scenarios)
    holdouts = resolve_scenarios(cfg.holdout_scenarios)

    seq = np.random.SeedSequence(seed)
    rng_init, rng_env, rng_policy, rng_replay = (
        np.random.default_rng(child) for child in seq.spawn(4)
    )
    mc = cfg.model_config()
    actor = SPNActor(mc, rng_init)
    critic_cls = SPNCritics if cfg.critic_kind == "spn" else SPNv2Critics
    critics = critic_cls(mc, rng_init)
    target = clone_frozen(critics)
    adam_actor = AdamState(lr=cfg.lr)
    adam_q = AdamState(lr=cfg.lr)
    adam_v = AdamState(lr=cfg.lr)
    buffer = ReplayBuffer(cfg.replay_capacity, n_beams, cfg.downsample_m)
    curriculum = init_curriculum(len(scenarios), window=cfg.curriculum_window)
    step = 0
    episode_index = 0
    metrics: list[dict] = []

    out_path = Path(out_dir) if out_dir is not None else None
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)

    if resume_from is not None:
        step, episode_index = _load_checkpoint(
            Path(resume_from), actor, critics, target, adam_actor, adam_q, adam_v,
            curriculum, (rng_env, rng_policy, rng_replay),
        )

    milestone_tasks = [
        (sc, fixed_eval_tasks(sc, cfg.n_milestone_tasks)) for sc in holdouts
    ]

    metrics_mode = "a" if resume_from is not None else "w"
    metrics_fh = (out_path / "metrics.jsonl").open(metrics_mode) if out_path else None

    def emit(record: dict):
        metrics.append(record)
        if metrics_fh:
            metrics_fh.write(json.dumps(record) + "\n")
            metrics_fh.flush()
        if progress:
            progress(step, record)

    stop = False
    try:
        while step < cfg.total_steps and not stop:
            env_idx = int(rng_env.choice(len(scenarios), p=np.asarray(curriculum.probs)))
            scenario = scenarios[env_idx]
            robot, goal = sample_task(scenario, rng_env)
            pts, y, g = _observe(scenario, robot, goal, lidar, cfg)
            status = None
            for t in range(cfg.t_max):
                if episode_index < cfg.warmup_episodes:
                    action = pid_warmup_action(g, cfg.pid_gain)
                    action_arr = action.as_array()
                    action_raw = raw_from_scaled(action_arr)
                else:
                    mean, log_std, _ = actor.forward(pts.points, g.as_array())
                    eps = rng_policy.standard_normal(2)
                    act_t, _ = squash_sample(mean, log_std, eps)
                    action_arr = act_t.data.copy()
                    action_raw = mean.data + np.exp(log_std.data) * eps
                    action = Action(float(action_arr[0]), float(action_arr[1]))
                robot, status = episode_step(
                    scenario, robot, goal, action, t,
                    dt=cfg.dt, goal_radius=cfg.goal_radius, t_max=cfg.t_max,
                )
                next_pts, next_y, next_g = _observe(scenario, robot, goal, lidar, cfg)
                reward = compute_reward(g.distance, next_g.distance, status, cfg)
                buffer.push(Transition(
                    points=pts.points, y=y, g=g.as_array(),
                    action_raw=action_raw, action=action_arr, reward=reward,
                    next_points=next_pts.points, next_y=next_y, next_g=next_g.as_array(),
                    terminal=status in (Status.SUCCESS, Status.CRASH),
                ))
                pts, y, g = next_pts, next_y, next_g
                step += 1

                if len(buffer) >= cfg.min_fill:
                    for _ in range(cfg.updates_per_step):
                        batch = buffer.sample(cfg.batch_size, rng_replay)
                        sac_update(batch, actor, critics, target,
                                   adam_actor, adam_q, adam_v, cfg, rng_policy)

                if step % cfg.eval_every == 0:
                    for sc in scenarios:
                        if not sc.eval_tasks:
                            continue
                        results = []
                        used = []
                        for task in sc.eval_tasks:
                            start_state = RobotState(*task.start)
                            outcome, n_used = _timed_episode(
                                actor, sc, start_state, np.asarray(task.goal), lidar, cfg)
                            results.append(outcome)
                            used.append(n_used)
                        emit(_eval_record(step, sc.name, results, used, cfg.t_max))

                if step % cfg.milestone_every == 0:
                    for sc, tasks in milestone_tasks:
                        results = []
                        used = []
                        for start_state, task_goal in tasks:
                            outcome, n_used = _timed_episode(
                                actor, sc, start_state, task_goal, lidar, cfg)
                            results.append(outcome)
                            used.append(n_used)
                        record = _eval_record(step, sc.name, results, used, cfg.t_max)
                        record["milestone"] = True
                        emit(record)
                        if (cfg.early_stop_success is not None
                                and record["success_rate"] >= cfg.early_stop_success):
                            stop = True

                if out_path and cfg.checkpoint_every and step % cfg.checkpoint_every == 0:
                    _save_checkpoint(out_path / f"checkpoint_{step}", actor, critics,
                                     target, adam_actor, adam_q, adam_v, curriculum,
                                     step, episode_index,
                                     (rng_env, rng_policy, rng_replay))

                if status is not None or stop:
                    break
                if step >= cfg.total_steps:
                    break
            if status is not None:
                curriculum_update(curriculum, status is Status.SUCCESS, env_idx,
                                  cfg.curriculum_threshold)
            episode_index += 1
    finally:
        if metrics_fh:
            metrics_fh.close()

    if out_path:
        _save_checkpoint(out_path / "final", actor, critics, target,
                         adam_actor, adam_q, adam_v, curriculum, step,
                         episode_index, (rng_env, rng_policy, rng_replay))
    return TrainResult(actor=actor, critics=critics, metrics=metrics,
                       steps=step, episodes=episode_index)


def _timed_episode(actor, scenario, start, goal, lidar, cfg) -> tuple[Status, int]:
    robot = start
    for t in range(cfg.t_max):
        pts, _, g = _observe(scenario, robot, goal, lidar, cfg)
        mean, _, _ = actor.forward(pts.points, g.as_array())
        act = deterministic_from_mean(mean.data)
        robot, status = episode_step(
            scenario, robot, goal, Action(float(act[0]), float(act[1])), t,
            dt=cfg.dt, goal_radius=cfg.goal_radius, t_max=cfg.t_max,
        )
        if status is not None:
            return status, t + 1
    return Status.TIMEOUT, cfg.t_max


# --- checkpointing -----------------------------------------------------------

def _save_checkpoint(path: Path, actor, critics, target, adam_actor, adam_q,
                     adam_v, curriculum, step, episode_index, rngs) -> None:
    path.mkdir(parents=True, exist_ok=True)
    save_model(path / "actor.spnw", actor)
    save_model(path / "critics.spnw", critics)
    save_model(path / "target.spnw", target)
    save_adam_state(path / "adam_actor.npz", adam_actor)
    save_adam_state(path / "adam_q.npz", adam_q)
    save_adam_state(path / "adam_v.npz", adam_v)
    state = {
        "step": step,
        "episode_index": episode_index,
        "curriculum": {
            "probs": curriculum.probs,
            "stage": curriculum.stage,
            "frozen": curriculum.frozen,
            "windows": [list(w) for w in curriculum.windows],
        },
        "rng_states": [r.bit_generator.state for r in rngs],
    }
    (path / "state.json").write_text(json.dumps(state))


def _load_checkpoint(path: Path, actor, critics, target, adam_actor, adam_q,
                     adam_v, curriculum, rngs) -> tuple[int, int]:
    from .models import load_model

    for model, fname in ((actor, "actor.spnw"), (critics, "critics.spnw"),
                         (target, "target.spnw")):
        loaded = load_model(path / fname)
        for name, p in model.params.items():
            p.data = loaded.params[name].data.copy()
    for adam, fname in ((adam_actor, "adam_actor.npz"), (adam_q, "adam_q.npz"),
                        (adam_v, "adam_v.npz")):
        loaded_state = load_adam_state(path / fname)
        adam.lr, adam.beta1, adam.beta2, adam.eps = (
            loaded_state.lr, loaded_state.beta1, loaded_state.beta2, loaded_state.eps)
        adam.step = loaded_state.step
        adam.m = loaded_state.m
        adam.v = loaded_state.v
    state = json.loads((path / "state.json").read_text())
    cur = state["curriculum"]
    curriculum.probs = list(cur["probs"])
    curriculum.stage = int(cur["stage"])
    curriculum.frozen = bool(cur["frozen"])
    for window, values in zip(curriculum.windows, cur["windows"]):
        window.clear()
        window.extend(values)
    for rng, rng_state in zip(rngs, state["rng_states"]):
        rng.bit_generator.state = rng_state
    return int(state["step"]), int(state["episode_index"])
