"""Network architectures: the goal-gated point-set actor, the two critic
variants, and the two baselines (fixed-format net and ungated point net),
plus the squashed-Gaussian action head shared by every actor.

All forwards run on the autodiff tape and accept batched inputs; point sets
are (B, n, 2) arrays of encoded points. The point-feature gate is a sigmoid
of the goal/velocity vector, computed once per state and broadcast over the
point axis.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .nncore import glorot_uniform, load_weights, save_weights, zeros_param
from .sensing import GoalVelocityState, ObstaclePointSet

LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0
LOG_STD_BIAS_INIT = -1.0

# Affine map from tanh range (-1, 1) to the action box [0, 0.5] x [-pi/2, pi/2].
ACTION_SCALE = np.array([0.25, math.pi / 2.0])
ACTION_OFFSET = np.array([0.25, 0.0])

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
_LOG_ACTION_SCALE_SUM = float(np.sum(np.log(ACTION_SCALE)))


@dataclass
class ModelConfig:
    K: int = 20  # global feature count = max number of support points
    H: int = 64  # gate / point feature width
    head_widths: tuple[int, int] = (128, 128)
    critic_widths: tuple[int, int] = (256, 256)
    critic_kind: str = "spn"  # "spn" (downsampled input) or "spn-v2" (shared point extraction)
    downsample_m: int = 36

    def __post_init__(self):
        if self.K < 1 or self.H < 1:
            raise ValueError("K and H must be at least 1")
        if self.critic_kind not in ("spn", "spn-v2"):
            raise ValueError(f"unknown critic kind {self.critic_kind!r}")


@dataclass
class ActorOutput:
    mean: np.ndarray  # (2,)
    log_std: np.ndarray  # (2,), clamped to [LOG_STD_MIN, LOG_STD_MAX]
    support_indices: np.ndarray  # (K,) point index per feature channel
    support_multiplicity: dict[int, int] = field(default_factory=dict)


def _as_batched(points, g) -> tuple[Tensor, Tensor, bool]:
    p = points if isinstance(points, Tensor) else Tensor(points)
    gv = g if isinstance(g, Tensor) else Tensor(g)
    single = p.data.ndim == 2
    if single:
        p = ad.reshape(p, (1,) + p.data.shape)
        gv = ad.reshape(gv, (1,) + gv.data.shape)
    if p.data.shape[-2] == 0:
        raise ValueError("empty point set")
    return p, gv, single


def _frozen_view(params: dict[str, Tensor]) -> dict[str, Tensor]:
    """Gradient-stopped views sharing the same value arrays; a forward built
    on them leaves the live parameters' gradients untouched."""
    return {k: Tensor(p.data) for k, p in params.items()}


def _mlp_params(rng, name: str, widths: list[int], params: dict[str, Tensor]) -> None:
    for i, (fan_in, fan_out) in enumerate(zip(widths[:-1], widths[1:])):
        params[f"{name}.w{i}"] = glorot_uniform(rng, fan_in, fan_out)
        params[f"{name}.b{i}"] = zeros_param(fan_out)


def _mlp_forward(params: dict[str, Tensor], name: str, x: Tensor, n_layers: int) -> Tensor:
    """Dense stack with LReLU on every layer except the last (linear)."""
    for i in range(n_layers):
        x = ad.dense(x, params[f"{name}.w{i}"], params[f"{name}.b{i}"])
        if i < n_layers - 1:
            x = ad.lrelu(x)
    return x


class _PointFeatureMixin:
    """Point feature extraction shared by the actor, the shared-extraction
    critics, and the ungated baseline."""

    def _init_extraction(self, rng, cfg: ModelConfig, gated: bool) -> None:
        self.params["w1"] = glorot_uniform(rng, 2, cfg.H)
        self.params["b1"] = zeros_param(cfg.H)
        if gated:
            self.params["w2"] = glorot_uniform(rng, 4, cfg.H)
            self.params["b2"] = zeros_param(cfg.H)
        self.params["w3"] = glorot_uniform(rng, cfg.H, cfg.K)
        self.params["b3"] = zeros_param(cfg.K)

    def _extract(
        self, points: Tensor, g: Tensor, gated: bool, params: Optional[dict] = None
    ) -> tuple[Tensor, np.ndarray]:
        """Per-point features, gate, dense to K channels, max-pool.
        Returns pooled (B, K) and the argmax point indices (B, K)."""
        p = self.params if params is None else params
        batch = points.data.shape[0]
        per_point = ad.lrelu(ad.dense(points, p["w1"], p["b1"]))
        if gated:
            gate = ad.sigmoid(ad.dense(g, p["w2"], p["b2"]))
            per_point = ad.mul(per_point, ad.reshape(gate, (batch, 1, -1)))
        channels = ad.dense(per_point, p["w3"], p["b3"])
        return ad.maxpool_points(channels)


class SPNActor(_PointFeatureMixin):
    kind = "spn_actor"

    def __init__(self, cfg: ModelConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.params: dict[str, Tensor] = {}
        self._init_extraction(rng, cfg, gated=True)
        d1, d2 = cfg.head_widths
        _mlp_params(rng, "head", [cfg.K + 4, d1, d2], self.params)
        self.params["mean.w"] = glorot_uniform(rng, d2, 2)
        self.params["mean.b"] = zeros_param(2)
        self.params["logstd.w"] = glorot_uniform(rng, d2, 2)
        self.params["logstd.b"] = zeros_param(2, fill=LOG_STD_BIAS_INIT)

    def forward(self, points, g) -> tuple[Tensor, Tensor, np.ndarray]:
        """points (B, n, 2), g (B, 4) -> mean (B, 2), log_std (B, 2), and the
        support indices (B, K)."""
        p, gv, single = _as_batched(points, g)
        pooled, argmax = self._extract(p, gv, gated=True)
        x = ad.concat([pooled, gv], axis=-1)
        x = ad.lrelu(ad.dense(x, self.params["head.w0"], self.params["head.b0"]))
        x = ad.lrelu(ad.dense(x, self.params["head.w1"], self.params["head.b1"]))
        mean = ad.dense(x, self.params["mean.w"], self.params["mean.b"])
        log_std = ad.clip(
            ad.dense(x, self.params["logstd.w"], self.params["logstd.b"]),
            LOG_STD_MIN, LOG_STD_MAX,
        )
        if single:
            mean = ad.reshape(mean, (2,))
            log_std = ad.reshape(log_std, (2,))
            argmax = argmax[0]
        return mean, log_std, argmax


class PointNetActor(_PointFeatureMixin):
    """The ungated baseline: point features depend on the raw point
    coordinates only; goal and velocity join after pooling."""

    kind = "pointnet"

    def __init__(self, cfg: ModelConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.params: dict[str, Tensor] = {}
        self._init_extraction(rng, cfg, gated=False)
        d1, d2 = cfg.head_widths
        _mlp_params(rng, "head", [cfg.K + 4, d1, d2], self.params)
        self.params["mean.w"] = glorot_uniform(rng, d2, 2)
        self.params["mean.b"] = zeros_param(2)
        self.params["logstd.w"] = glorot_uniform(rng, d2, 2)
        self.params["logstd.b"] = zeros_param(2, fill=LOG_STD_BIAS_INIT)

    def forward(self, points, g) -> tuple[Tensor, Tensor, np.ndarray]:
        p, gv, single = _as_batched(points, g)
        pooled, argmax = self._extract(p, gv, gated=False)
        x = ad.concat([pooled, gv], axis=-1)
        x = ad.lrelu(ad.dense(x, self.params["head.w0"], self.params["head.b0"]))
        x = ad.lrelu(ad.dense(x, self.params["head.w1"], self.params["head.b1"]))
        mean = ad.dense(x, self.params["mean.w"], self.params["mean.b"])
        log_std = ad.clip(
            ad.dense(x, self.params["logstd.w"], self.params["logstd.b"]),
            LOG_STD_MIN, LOG_STD_MAX,
        )
        if single:
            mean = ad.reshape(mean, (2,))
            log_std = ad.reshape(log_std, (2,))
            argmax = argmax[0]
        return mean, log_std, argmax


class FCNetActor:
    """Fixed-format baseline over the reciprocal min-downsampled scan;
    same trunk widths as the value network, with a Gaussian head."""

    kind = "fcnet"

    def __init__(self, cfg: ModelConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.params: dict[str, Tensor] = {}
        c1, c2 = cfg.critic_widths
        _mlp_params(rng, "trunk", [cfg.downsample_m + 4, c1, c2], self.params)
        self.params["mean.w"] = glorot_uniform(rng, c2, 2)
        self.params["mean.b"] = zeros_param(2)
        self.params["logstd.w"] = glorot_uniform(rng, c2, 2)
        self.params["logstd.b"] = zeros_param(2, fill=LOG_STD_BIAS_INIT)

    def forward(self, y, g) -> tuple[Tensor, Tensor]:
        """y (B, m) reciprocal downsampled scan, g (B, 4)."""
        yv = y if isinstance(y, Tensor) else Tensor(y)
        gv = g if isinstance(g, Tensor) else Tensor(g)
        single = yv.data.ndim == 1
        if single:
            yv = ad.reshape(yv, (1, -1))
            gv = ad.reshape(gv, (1, -1))
        x = ad.concat([yv, gv], axis=-1)
        x = ad.lrelu(ad.dense(x, self.params["trunk.w0"], self.params["trunk.b0"]))
        x = ad.lrelu(ad.dense(x, self.params["trunk.w1"], self.params["trunk.b1"]))
        mean = ad.dense(x, self.params["mean.w"], self.params["mean.b"])
        log_std = ad.clip(
            ad.dense(x, self.params["logstd.w"], self.params["logstd.b"]),
            LOG_STD_MIN, LOG_STD_MAX,
        )
        if single:
            mean = ad.reshape(mean, (2,))
            log_std = ad.reshape(log_std, (2,))
        return mean, log_std


class SPNCritics:
    """Value network and double Q networks over the downsampled scan:
    three-layer fully-connected nets; the Q networks also take the action."""

    kind = "spn_critic"

    def __init__(self, cfg: ModelConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.params: dict[str, Tensor] = {}
        c1, c2 = cfg.critic_widths
        m = cfg.downsample_m
        _mlp_params(rng, "v", [m + 4, c1, c2, 1], self.params)
        _mlp_params(rng, "q1", [m + 6, c1, c2, 1], self.params)
        _mlp_params(rng, "q2", [m + 6, c1, c2, 1], self.params)

    def _net(self, name: str, parts: list, frozen: bool) -> Tensor:
        x = ad.concat([p if isinstance(p, Tensor) else Tensor(p) for p in parts], axis=-1)
        params = _frozen_view(self.params) if frozen else self.params
        return _mlp_forward(params, name, x, 3)

    def value(self, y, g, frozen: bool = False) -> Tensor:
        return self._net("v", [y, g], frozen)

    def q(self, index: int, y, g, action, frozen: bool = False) -> Tensor:
        return self._net(f"q{index}", [y, g, action], frozen)

    def subset(self, prefix: str) -> dict[str, Tensor]:
        return {k: v for k, v in self.params.items() if k.startswith(prefix + ".")}


class SPNv2Critics(_PointFeatureMixin):
    """Critics that reuse the actor's input representation: one shared
    goal-gated point extraction feeds the value and both Q heads."""

    kind = "spnv2_critic"

    def __init__(self, cfg: ModelConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.params: dict[str, Tensor] = {}
        self._init_extraction(rng, cfg, gated=True)
        d1, d2 = cfg.head_widths
        _mlp_params(rng, "v", [cfg.K + 4, d1, d2, 1], self.params)
        _mlp_params(rng, "q1", [cfg.K + 6, d1, d2, 1], self.params)
        _mlp_params(rng, "q2", [cfg.K + 6, d1, d2, 1], self.params)

    def _pooled(self, points, g, params: dict) -> tuple[Tensor, Tensor]:
        p, gv, single = _as_batched(points, g)
        pooled, _ = self._extract(p, gv, gated=True, params=params)
        if single:
            pooled = ad.reshape(pooled, (-1,))
            gv = ad.reshape(gv, (-1,))
        return pooled, gv

    def value(self, points, g, frozen: bool = False) -> Tensor:
        params = _frozen_view(self.params) if frozen else self.params
        pooled, gv = self._pooled(points, g, params)
        x = ad.concat([pooled, gv], axis=-1)
        return _mlp_forward(params, "v", x, 3)

    def q(self, index: int, points, g, action, frozen: bool = False) -> Tensor:
        params = _frozen_view(self.params) if frozen else self.params
        pooled, gv = self._pooled(points, g, params)
        a = action if isinstance(action, Tensor) else Tensor(action)
        x = ad.concat([pooled, gv, a], axis=-1)
        return _mlp_forward(params, f"q{index}", x, 3)

    def subset(self, prefix: str) -> dict[str, Tensor]:
        return {k: v for k, v in self.params.items() if k.startswith(prefix + ".")}


# --- squashed Gaussian head -------------------------------------------------

def squash_sample(
    mean: Tensor, log_std: Tensor, eps: np.ndarray
) -> tuple[Tensor, Tensor]:
    """Reparameterized sample through tanh and the affine box map.

    eps is standard-normal noise of the same shape as the mean. Returns the
    scaled action and its log-density, which includes both the tanh
    change-of-variables term (in its softplus form, finite for any u) and
    the constant affine-scale term.
    """
    std = ad.exp(log_std)
    u = ad.add(mean, ad.mul(std, Tensor(eps)))
    t = ad.tanh(u)
    action = ad.add(ad.mul(t, Tensor(ACTION_SCALE)), Tensor(ACTION_OFFSET))
    # log N(u; mean, std) with u = mean + std*eps: the quadratic term is eps^2.
    log_normal = ad.sub(
        Tensor(-0.5 * eps * eps - _HALF_LOG_2PI), log_std
    )
    # log(1 - tanh(u)^2) = 2*(log 2 - u - softplus(-2u))
    tanh_corr = ad.scale(
        ad.sub(Tensor(np.full(u.data.shape, math.log(2.0))), ad.add(u, ad.softplus(ad.scale(u, -2.0)))),
        2.0,
    )
    per_dim = ad.sub(log_normal, tanh_corr)
    log_prob = ad.sum_(per_dim, axis=-1)
    log_prob = ad.add(log_prob, Tensor(np.full(log_prob.data.shape, -_LOG_ACTION_SCALE_SUM)))
    return action, log_prob


def log_prob_of_action(mean: np.ndarray, log_std: np.ndarray, action: np.ndarray) -> float:
    """Density of a given in-box action under the squashed Gaussian (no tape)."""
    t = np.clip((np.asarray(action) - ACTION_OFFSET) / ACTION_SCALE, -1 + 1e-12, 1 - 1e-12)
    u = np.arctanh(t)
    std = np.exp(log_std)
    log_normal = -0.5 * ((u - mean) / std) ** 2 - log_std - _HALF_LOG_2PI
    tanh_corr = 2.0 * (math.log(2.0) - u - np.logaddexp(0.0, -2.0 * u))
    return float(np.sum(log_normal - tanh_corr) - _LOG_ACTION_SCALE_SUM)


def sample_action(
    out: ActorOutput, rng: np.random.Generator
) -> tuple[np.ndarray, float]:
    """Draw a stochastic action for one state; returns (action, log_prob)."""
    eps = rng.standard_normal(2)
    action_t, logp_t = squash_sample(Tensor(out.mean), Tensor(out.log_std), eps)
    return action_t.data.copy(), float(logp_t.data)


def deterministic_from_mean(mean: np.ndarray) -> np.ndarray:
    return np.tanh(mean) * ACTION_SCALE + ACTION_OFFSET


def deterministic_action(out: ActorOutput) -> np.ndarray:
    """Mean action squashed into the box; used for testing/evaluation."""
    return deterministic_from_mean(out.mean)


def raw_from_scaled(action: np.ndarray) -> np.ndarray:
    """Pre-squash coordinates of an in-box action (clipped away from the
    boundary so the inverse stays finite)."""
    t = np.clip((np.asarray(action) - ACTION_OFFSET) / ACTION_SCALE, -1 + 1e-9, 1 - 1e-9)
    return np.arctanh(t)


def actor_output(actor, point_set: ObstaclePointSet, g: GoalVelocityState) -> ActorOutput:
    """Run a point-set actor on one state and package the support bookkeeping."""
    mean, log_std, argmax = actor.forward(point_set.points, g.as_array())
    multiplicity = dict(sorted(Counter(int(i) for i in argmax).items()))
    return ActorOutput(
        mean=mean.data.copy(),
        log_std=log_std.data.copy(),
        support_indices=np.asarray(argmax, dtype=int).copy(),
        support_multiplicity=multiplicity,
    )


# --- persistence -------------------------------------------------------------

_MODEL_CLASSES = {}


def _register(cls):
    _MODEL_CLASSES[cls.kind] = cls
    return cls


for _cls in (SPNActor, SPNCritics, SPNv2Critics, FCNetActor, PointNetActor):
    _register(_cls)


def save_model(path, model) -> None:
    cfg = model.cfg
    save_weights(
        path,
        model.kind,
        model.params,
        K=cfg.K,
        H=cfg.H,
        extra={
            "head_widths": list(cfg.head_widths),
            "critic_widths": list(cfg.critic_widths),
            "critic_kind": cfg.critic_kind,
            "downsample_m": cfg.downsample_m,
        },
    )


def load_model(path):
    header, arrays = load_weights(path)
    kind = header["model_kind"]
    if kind not in _MODEL_CLASSES:
        raise ValueError(f"unknown model kind {kind!r} in {path}")
    extra = header.get("extra", {})
    cfg = ModelConfig(
        K=header.get("K") or 20,
        H=header.get("H") or 64,
        head_widths=tuple(extra.get("head_widths", (128, 128))),
        critic_widths=tuple(extra.get("critic_widths", (256, 256))),
        critic_kind=extra.get("critic_kind", "spn"),
        downsample_m=extra.get("downsample_m", 36),
    )
    model = _MODEL_CLASSES[kind](cfg, np.random.default_rng(0))
    if set(arrays) != set(model.params):
        raise ValueError(f"{path}: layer names do not match a {kind} model")
    for name, arr in arrays.items():
        if model.params[name].data.shape != arr.shape:
            raise ValueError(f"{path}: layer {name} has shape {arr.shape}, "
                             f"expected {model.params[name].data.shape}")
        model.params[name].data = arr.copy()
    return model
