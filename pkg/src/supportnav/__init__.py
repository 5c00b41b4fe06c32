"""supportnav: goal-gated point-set policies for mapless 2D LiDAR navigation.

The package bundles a polygonal 2D simulator with configurable raycast
LiDAR, a from-scratch float64 network substrate with reverse-mode gradients,
the point-set actor and critic architectures, soft actor-critic training
with a scenario curriculum, and an evaluation harness that re-runs one
trained model under arbitrary sensor configurations.
"""

from .sensing import (
    CANONICAL_LABEL,
    PRESET_LABELS,
    GoalVelocityState,
    LidarConfig,
    ObstaclePointSet,
    Scan,
    canonical_config,
    format_lidar_label,
    goal_velocity_state,
    min_downsample,
    pad_scan_for_fcnet,
    parse_lidar_label,
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
    builtin_scenario,
    check_collision,
    episode_step,
    load_scenario,
    sample_task,
    save_scenario,
    step_kinematics,
)
from .models import (
    ActorOutput,
    FCNetActor,
    ModelConfig,
    PointNetActor,
    SPNActor,
    SPNCritics,
    SPNv2Critics,
    actor_output,
    deterministic_action,
    load_model,
    sample_action,
    save_model,
)
from .training import (
    CurriculumState,
    ReplayBuffer,
    TrainConfig,
    Transition,
    compute_reward,
    curriculum_update,
    init_curriculum,
    pid_warmup_action,
    sac_update,
    train_loop,
)
from .evaluation import EvalReport, SupportPointTrace, export_traces, run_eval, score, sweep

__version__ = "0.1.0"
