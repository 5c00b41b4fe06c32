"""Reverse-mode automatic differentiation over float64 numpy arrays.

A Tensor wraps an ndarray and remembers how it was produced; backward()
walks the recorded graph once, accumulating exact gradients into every
tensor that requires them. The op set is exactly what the point-set policy
networks and the actor-critic losses need: dense layers, the activations,
element-wise arithmetic, max-pooling over a point axis, reductions, and a
few scalar transcendentals. Tensors that do not require gradients record
nothing, so target-network forwards cost no bookkeeping.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

LRELU_SLOPE = 0.01


class NonFiniteGradient(RuntimeError):
    """A loss or a parameter gradient came out NaN/Inf."""


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward_fn")

    def __init__(self, data, requires_grad: bool = False, parents=(), backward_fn=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self._parents = parents
        self._backward_fn = backward_fn

    @property
    def shape(self):
        return self.data.shape

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    # Small amount of operator sugar; scalars and ndarrays are auto-wrapped.
    def __add__(self, other):
        return add(self, _wrap(other))

    def __radd__(self, other):
        return add(_wrap(other), self)

    def __sub__(self, other):
        return sub(self, _wrap(other))

    def __rsub__(self, other):
        return sub(_wrap(other), self)

    def __mul__(self, other):
        return mul(self, _wrap(other))

    def __rmul__(self, other):
        return mul(_wrap(other), self)

    def __neg__(self):
        return scale(self, -1.0)


def _wrap(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _accumulate(t: Tensor, g: np.ndarray, fresh: bool):
    """Add a gradient contribution. fresh means g is a newly allocated array
    owned by this call, safe to adopt; otherwise it may alias another
    tensor's gradient buffer and must be copied before it can be mutated."""
    if t.grad is None:
        t.grad = g if fresh else g.copy()
    else:
        t.grad += g


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a gradient down to the shape it was broadcast from."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


def _make(data, parents, backward_fn) -> Tensor:
    needs = any(p.requires_grad for p in parents)
    if not needs:
        return Tensor(data)
    return Tensor(data, requires_grad=True, parents=parents, backward_fn=backward_fn)


# --- arithmetic -----------------------------------------------------------

def add(a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data + b.data

    def backward_fn(out):
        if a.requires_grad:
            g = _unbroadcast(out.grad, a.data.shape)
            _accumulate(a, g, fresh=g is not out.grad)
        if b.requires_grad:
            g = _unbroadcast(out.grad, b.data.shape)
            _accumulate(b, g, fresh=g is not out.grad)

    return _make(out_data, (a, b), backward_fn)


def sub(a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data - b.data

    def backward_fn(out):
        if a.requires_grad:
            g = _unbroadcast(out.grad, a.data.shape)
            _accumulate(a, g, fresh=g is not out.grad)
        if b.requires_grad:
            _accumulate(b, _unbroadcast(-out.grad, b.data.shape), fresh=True)

    return _make(out_data, (a, b), backward_fn)


def mul(a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data * b.data

    def backward_fn(out):
        if a.requires_grad:
            _accumulate(a, _unbroadcast(out.grad * b.data, a.data.shape), fresh=True)
        if b.requires_grad:
            _accumulate(b, _unbroadcast(out.grad * a.data, b.data.shape), fresh=True)

    return _make(out_data, (a, b), backward_fn)


def scale(a: Tensor, c: float) -> Tensor:
    out_data = a.data * c

    def backward_fn(out):
        _accumulate(a, out.grad * c, fresh=True)

    return _make(out_data, (a,), backward_fn)


def dense(x: Tensor, w: Tensor, b: Optional[Tensor] = None) -> Tensor:
    """y = x @ w (+ b) over the last axis; x may carry leading batch/point axes."""
    fan_in, fan_out = w.data.shape
    if x.data.shape[-1] != fan_in:
        raise ValueError(f"dense: input width {x.data.shape[-1]} != weight rows {fan_in}")
    x2 = x.data.reshape(-1, fan_in)
    y2 = x2 @ w.data
    if b is not None:
        if b.data.shape != (fan_out,):
            raise ValueError(f"dense: bias shape {b.data.shape} != ({fan_out},)")
        y2 = y2 + b.data
    out_data = y2.reshape(*x.data.shape[:-1], fan_out)
    parents = (x, w) if b is None else (x, w, b)

    def backward_fn(out):
        g2 = out.grad.reshape(-1, fan_out)
        if w.requires_grad:
            _accumulate(w, x2.T @ g2, fresh=True)
        if b is not None and b.requires_grad:
            _accumulate(b, g2.sum(axis=0), fresh=True)
        if x.requires_grad:
            _accumulate(x, (g2 @ w.data.T).reshape(x.data.shape), fresh=True)

    return _make(out_data, parents, backward_fn)


# --- activations and transcendentals ---------------------------------------

def lrelu(x: Tensor, slope: float = LRELU_SLOPE) -> Tensor:
    positive = x.data > 0
    out_data = np.where(positive, x.data, slope * x.data)

    def backward_fn(out):
        _accumulate(x, out.grad * np.where(positive, 1.0, slope), fresh=True)

    return _make(out_data, (x,), backward_fn)


def sigmoid(x: Tensor) -> Tensor:
    s = 1.0 / (1.0 + np.exp(-x.data))

    def backward_fn(out):
        _accumulate(x, out.grad * s * (1.0 - s), fresh=True)

    return _make(s, (x,), backward_fn)


def tanh(x: Tensor) -> Tensor:
    t = np.tanh(x.data)

    def backward_fn(out):
        _accumulate(x, out.grad * (1.0 - t * t), fresh=True)

    return _make(t, (x,), backward_fn)


def exp(x: Tensor) -> Tensor:
    e = np.exp(x.data)

    def backward_fn(out):
        _accumulate(x, out.grad * e, fresh=True)

    return _make(e, (x,), backward_fn)


def log(x: Tensor) -> Tensor:
    out_data = np.log(x.data)

    def backward_fn(out):
        _accumulate(x, out.grad / x.data, fresh=True)

    return _make(out_data, (x,), backward_fn)


def square(x: Tensor) -> Tensor:
    out_data = x.data * x.data

    def backward_fn(out):
        _accumulate(x, out.grad * (2.0 * x.data), fresh=True)

    return _make(out_data, (x,), backward_fn)


def softplus(x: Tensor) -> Tensor:
    """log(1 + exp(x)), computed stably."""
    out_data = np.logaddexp(0.0, x.data)

    def backward_fn(out):
        _accumulate(x, out.grad / (1.0 + np.exp(-x.data)), fresh=True)

    return _make(out_data, (x,), backward_fn)


def clip(x: Tensor, lo: float, hi: float) -> Tensor:
    """Hard clamp; the gradient passes through strictly inside the interval."""
    out_data = np.clip(x.data, lo, hi)
    inside = (x.data >= lo) & (x.data <= hi)

    def backward_fn(out):
        _accumulate(x, out.grad * inside, fresh=True)

    return _make(out_data, (x,), backward_fn)


def minimum(a: Tensor, b: Tensor) -> Tensor:
    """Element-wise min; ties route the gradient to the first argument."""
    take_a = a.data <= b.data
    out_data = np.where(take_a, a.data, b.data)

    def backward_fn(out):
        if a.requires_grad:
            _accumulate(a, _unbroadcast(out.grad * take_a, a.data.shape), fresh=True)
        if b.requires_grad:
            _accumulate(b, _unbroadcast(out.grad * ~take_a, b.data.shape), fresh=True)

    return _make(out_data, (a, b), backward_fn)


# --- structure --------------------------------------------------------------

def maxpool_points(f: Tensor) -> tuple[Tensor, np.ndarray]:
    """Max over the point axis (second to last). Input (..., n, K) pools to
    (..., K); also returns the argmax indices, lowest index on ties. The
    gradient routes only to the argmax entries."""
    data = f.data
    argmax = np.argmax(data, axis=-2)
    pooled = np.take_along_axis(data, argmax[..., None, :], axis=-2).squeeze(-2)

    def backward_fn(out):
        g = np.zeros_like(data)
        np.put_along_axis(g, argmax[..., None, :], out.grad[..., None, :], axis=-2)
        _accumulate(f, g, fresh=True)

    return _make(pooled, (f,), backward_fn), argmax


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    out_data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def backward_fn(out):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            if t.requires_grad:
                idx = [slice(None)] * out.grad.ndim
                idx[axis if axis >= 0 else out.grad.ndim + axis] = slice(lo, hi)
                _accumulate(t, out.grad[tuple(idx)], fresh=False)

    return _make(out_data, tuple(tensors), backward_fn)


def reshape(x: Tensor, shape) -> Tensor:
    out_data = x.data.reshape(shape)

    def backward_fn(out):
        _accumulate(x, out.grad.reshape(x.data.shape), fresh=False)

    return _make(out_data, (x,), backward_fn)


def sum_(x: Tensor, axis=None) -> Tensor:
    out_data = x.data.sum(axis=axis)

    def backward_fn(out):
        g = out.grad
        if axis is not None:
            g = np.expand_dims(g, axis)
        _accumulate(x, np.broadcast_to(g, x.data.shape).copy(), fresh=True)

    return _make(out_data, (x,), backward_fn)


def mean(x: Tensor, axis=None) -> Tensor:
    count = x.data.size if axis is None else x.data.shape[axis]
    out_data = x.data.mean(axis=axis)

    def backward_fn(out):
        g = out.grad / count
        if axis is not None:
            g = np.expand_dims(g, axis)
        _accumulate(x, np.broadcast_to(g, x.data.shape).copy(), fresh=True)

    return _make(out_data, (x,), backward_fn)


# --- graph traversal --------------------------------------------------------

def backward(loss: Tensor, check_params: Sequence[Tensor] = ()) -> None:
    """Run reverse-mode accumulation from a scalar loss.

    Gradients add into .grad of every reachable tensor with requires_grad.
    If the loss or any gradient in check_params comes out non-finite, a
    NonFiniteGradient is raised so training can abort with diagnostics.
    """
    if loss.data.size != 1:
        raise ValueError(f"backward needs a scalar loss, got shape {loss.data.shape}")
    if not np.isfinite(loss.data).all():
        raise NonFiniteGradient(f"loss is non-finite: {loss.data}")
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen or not node.requires_grad:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            stack.append((parent, False))
    loss.grad = np.ones_like(loss.data)
    for node in reversed(order):
        if node._backward_fn is not None:
            node._backward_fn(node)
    for p in check_params:
        if p.grad is not None and not np.isfinite(p.grad).all():
            raise NonFiniteGradient("non-finite parameter gradient encountered")
