"""Parameter plumbing around the autodiff tensors: initialization, the Adam
optimizer, and the binary weight container.

Container layout: 4-byte magic "SPNW", uint32 little-endian header length,
a UTF-8 JSON header {format_version, model_kind, K, H, layers: [{name,
shape}, ...]}, then each layer's values as row-major little-endian float64
in header order.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .autodiff import Tensor

_MAGIC = b"SPNW"
FORMAT_VERSION = 1

MODEL_KINDS = ("spn_actor", "spn_critic", "spnv2_critic", "fcnet", "pointnet")


class WeightFormatError(ValueError):
    """Corrupt or incompatible weight container."""


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> Tensor:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return Tensor(rng.uniform(-limit, limit, size=(fan_in, fan_out)), requires_grad=True)


def zeros_param(size: int, fill: float = 0.0) -> Tensor:
    return Tensor(np.full(size, fill, dtype=np.float64), requires_grad=True)


def zero_grads(params: dict[str, Tensor]) -> None:
    for p in params.values():
        p.grad = None


@dataclass
class AdamState:
    """Per-parameter first/second moments with the usual bias correction."""

    lr: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_update(params: dict[str, Tensor], state: AdamState) -> None:
    """One bias-corrected Adam step over every parameter with a gradient.

    Parameters whose grad is None are treated as zero-gradient (their moments
    still decay)."""
    state.step += 1
    t = state.step
    correction1 = 1.0 - state.beta1 ** t
    correction2 = 1.0 - state.beta2 ** t
    for name, p in params.items():
        g = p.grad if p.grad is not None else np.zeros_like(p.data)
        if name not in state.m:
            state.m[name] = np.zeros_like(p.data)
            state.v[name] = np.zeros_like(p.data)
        m = state.m[name]
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        m_hat = m / correction1
        v_hat = v / correction2
        p.data -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)


def save_adam_state(path, state: AdamState) -> None:
    arrays = {f"m__{k}": v for k, v in state.m.items()}
    arrays.update({f"v__{k}": v for k, v in state.v.items()})
    arrays["hyper"] = np.array([state.lr, state.beta1, state.beta2, state.eps, state.step])
    np.savez(path, **arrays)


def load_adam_state(path) -> AdamState:
    with np.load(path) as data:
        hyper = data["hyper"]
        state = AdamState(
            lr=float(hyper[0]), beta1=float(hyper[1]), beta2=float(hyper[2]),
            eps=float(hyper[3]), step=int(hyper[4]),
        )
        for key in data.files:
            if key.startswith("m__"):
                state.m[key[3:]] = data[key]
            elif key.startswith("v__"):
                state.v[key[3:]] = data[key]
    return state


def save_weights(
    path,
    model_kind: str,
    params: dict[str, Tensor],
    K: Optional[int] = None,
    H: Optional[int] = None,
    extra: Optional[dict] = None,
) -> None:
    header = {
        "format_version": FORMAT_VERSION,
        "model_kind": model_kind,
        "K": K,
        "H": H,
        "layers": [{"name": name, "shape": list(p.data.shape)} for name, p in params.items()],
    }
    if extra:
        header["extra"] = extra
    blob = json.dumps(header).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for p in params.values():
            fh.write(np.ascontiguousarray(p.data, dtype="<f8").tobytes())


def load_weights(path) -> tuple[dict, dict[str, np.ndarray]]:
    raw = Path(path).read_bytes()
    if raw[:4] != _MAGIC:
        raise WeightFormatError(f"{path}: not a weight container (bad magic)")
    (header_len,) = struct.unpack("<I", raw[4:8])
    header = json.loads(raw[8 : 8 + header_len].decode("utf-8"))
    if header.get("format_version") != FORMAT_VERSION:
        raise WeightFormatError(
            f"{path}: unsupported format version {header.get('format_version')}"
        )
    offset = 8 + header_len
    arrays: dict[str, np.ndarray] = {}
    for layer in header["layers"]:
        shape = tuple(layer["shape"])
        count = int(np.prod(shape)) if shape else 1
        chunk = raw[offset : offset + 8 * count]
        if len(chunk) != 8 * count:
            raise WeightFormatError(f"{path}: truncated data for layer {layer['name']}")
        arrays[layer["name"]] = np.frombuffer(chunk, dtype="<f8").reshape(shape).astype(np.float64)
        offset += 8 * count
    return header, arrays
