"""Minimal reverse-mode automatic differentiation on dense float64 arrays.

Every operation is a plain function building an explicit backward record; no
broadcasting beyond bias-add and the batch dimension, so the graph stays
auditable. Includes the Adam optimizer and the symlog/symexp transform pair.
"""

from dataclasses import dataclass, field

import numpy as np

LOG_2PI = float(np.log(2.0 * np.pi))


class Node:
    __slots__ = ("parents", "vjp")

    def __init__(self, parents, vjp):
        self.parents = parents
        self.vjp = vjp


class Tensor:
    """Dense array with an optional gradient and backward record."""

    __slots__ = ("values", "grad", "node")

    def __init__(self, values, node=None):
        self.values = np.asarray(values, dtype=np.float64)
        self.grad = None
        self.node = node

    @property
    def shape(self):
        return self.values.shape

    def item(self) -> float:
        return float(self.values)

    def __repr__(self):
        return f"Tensor(shape={self.values.shape})"


def tensor(values) -> Tensor:
    return Tensor(values)


def _accumulate(t: Tensor, g: np.ndarray):
    if t.grad is None:
        t.grad = np.zeros_like(t.values)
    t.grad += g


def backward(loss: Tensor):
    """Accumulate d(loss)/d(tensor) into .grad for every tensor reachable from loss.

    The loss must be scalar. Each graph node's vjp runs exactly once, in
    reverse topological order. Calling backward again without clearing grads
    adds to them.
    """
    if loss.values.shape != ():
        raise ValueError(f"backward needs a scalar loss, got shape {loss.values.shape}")

    order = []
    seen = set()
    stack = [(loss, False)]
    while stack:
        t, expanded = stack.pop()
        if id(t) in seen:
            continue
        if expanded or t.node is None:
            seen.add(id(t))
            order.append(t)
            continue
        stack.append((t, True))
        for p in t.node.parents:
            if id(p) not in seen:
                stack.append((p, False))

    grads = {id(loss): np.ones(())}
    for t in reversed(order):
        g = grads.pop(id(t), None)
        if g is None:
            continue
        _accumulate(t, g)
        if t.node is None:
            continue
        parent_grads = t.node.vjp(g)
        for p, pg in zip(t.node.parents, parent_grads):
            if pg is None:
                continue
            if id(p) in grads:
                grads[id(p)] = grads[id(p)] + pg
            else:
                grads[id(p)] = pg


def zero_grads(tensors):
    for t in tensors:
        t.grad = None


# -- primitive operations -----------------------------------------------------


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise add; also covers bias-add of a (D,) vector onto (B, D) rows."""
    if a.shape == b.shape:
        return Tensor(a.values + b.values, Node((a, b), lambda g: (g, g)))
    if a.values.ndim == 2 and b.values.ndim == 1 and a.shape[1] == b.shape[0]:
        return Tensor(a.values + b.values,
                      Node((a, b), lambda g: (g, g.sum(axis=0))))
    raise ValueError(f"add shapes {a.shape} and {b.shape} unsupported")


def add_scalar(a: Tensor, c: float) -> Tensor:
    return Tensor(a.values + c, Node((a,), lambda g: (g,)))


def sub(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise ValueError(f"sub shapes {a.shape} != {b.shape}")
    return Tensor(a.values - b.values, Node((a, b), lambda g: (g, -g)))


def neg(a: Tensor) -> Tensor:
    return Tensor(-a.values, Node((a,), lambda g: (-g,)))


def mul(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise ValueError(f"mul shapes {a.shape} != {b.shape}")
    return Tensor(a.values * b.values,
                  Node((a, b), lambda g: (g * b.values, g * a.values)))


def mul_scalar(a: Tensor, c: float) -> Tensor:
    return Tensor(a.values * c, Node((a,), lambda g: (g * c,)))


def div(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise ValueError(f"div shapes {a.shape} != {b.shape}")
    out = a.values / b.values
    return Tensor(out, Node((a, b), lambda g: (g / b.values,
                                               -g * out / b.values)))


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.values.ndim != 2 or b.values.ndim != 2:
        raise ValueError("matmul expects 2-D operands")
    return Tensor(a.values @ b.values,
                  Node((a, b), lambda g: (g @ b.values.T, a.values.T @ g)))


def transpose(a: Tensor) -> Tensor:
    if a.values.ndim != 2:
        raise ValueError("transpose expects a 2-D operand")
    return Tensor(a.values.T.copy(), Node((a,), lambda g: (g.T,)))


def relu(a: Tensor) -> Tensor:
    mask = a.values > 0
    return Tensor(a.values * mask, Node((a,), lambda g: (g * mask,)))


def silu(a: Tensor) -> Tensor:
    s = 1.0 / (1.0 + np.exp(-a.values))
    out = a.values * s
    return Tensor(out, Node((a,), lambda g: (g * (s + out * (1.0 - s)),)))


def sigmoid(a: Tensor) -> Tensor:
    s = 1.0 / (1.0 + np.exp(-a.values))
    return Tensor(s, Node((a,), lambda g: (g * s * (1.0 - s),)))


def exp(a: Tensor) -> Tensor:
    out = np.exp(a.values)
    return Tensor(out, Node((a,), lambda g: (g * out,)))


def log(a: Tensor) -> Tensor:
    return Tensor(np.log(a.values), Node((a,), lambda g: (g / a.values,)))


def softplus(a: Tensor) -> Tensor:
    # log(1 + e^x), stable on both tails
    out = np.logaddexp(0.0, a.values)
    s = 1.0 / (1.0 + np.exp(-a.values))
    return Tensor(out, Node((a,), lambda g: (g * s,)))


def square(a: Tensor) -> Tensor:
    return Tensor(a.values ** 2, Node((a,), lambda g: (g * 2.0 * a.values,)))


def sum_all(a: Tensor) -> Tensor:
    return Tensor(a.values.sum(),
                  Node((a,), lambda g: (np.full_like(a.values, float(g)),)))


def mean_all(a: Tensor) -> Tensor:
    n = a.values.size
    return Tensor(a.values.mean(),
                  Node((a,), lambda g: (np.full_like(a.values, float(g) / n),)))


def sum_last(a: Tensor) -> Tensor:
    """Sum over the final axis."""
    return Tensor(a.values.sum(axis=-1),
                  Node((a,), lambda g: (np.repeat(np.expand_dims(g, -1),
                                                  a.shape[-1], axis=-1),)))


def logsumexp_last(a: Tensor) -> Tensor:
    """Shift-stable logsumexp over the final axis."""
    m = a.values.max(axis=-1, keepdims=True)
    e = np.exp(a.values - m)
    s = e.sum(axis=-1, keepdims=True)
    out = (m + np.log(s)).squeeze(-1)
    soft = e / s
    return Tensor(out, Node((a,), lambda g: (np.expand_dims(g, -1) * soft,)))


def concat_last(parts) -> Tensor:
    parts = list(parts)
    sizes = [p.shape[-1] for p in parts]
    splits = np.cumsum(sizes)[:-1]

    def vjp(g):
        return tuple(np.split(g, splits, axis=-1))

    return Tensor(np.concatenate([p.values for p in parts], axis=-1),
                  Node(tuple(parts), vjp))


def slice_last(a: Tensor, start: int, stop: int) -> Tensor:
    def vjp(g):
        out = np.zeros_like(a.values)
        out[..., start:stop] = g
        return (out,)

    return Tensor(a.values[..., start:stop].copy(), Node((a,), vjp))


def reshape(a: Tensor, shape) -> Tensor:
    old = a.values.shape
    return Tensor(a.values.reshape(shape),
                  Node((a,), lambda g: (g.reshape(old),)))


def expand_component(a: Tensor, n: int) -> Tensor:
    """(B, D) -> (B, n, D) by repetition; gradient sums over the new axis."""
    if a.values.ndim != 2:
        raise ValueError("expand_component expects a 2-D input")
    out = np.repeat(a.values[:, None, :], n, axis=1)
    return Tensor(out, Node((a,), lambda g: (g.sum(axis=1),)))


def expand_last(a: Tensor, n: int) -> Tensor:
    """(B,) -> (B, n) by repetition; gradient sums over the new axis."""
    if a.values.ndim != 1:
        raise ValueError("expand_last expects a 1-D input")
    out = np.repeat(a.values[:, None], n, axis=1)
    return Tensor(out, Node((a,), lambda g: (g.sum(axis=1),)))


def diag_part(a: Tensor) -> Tensor:
    """Diagonal of a square matrix."""
    n = a.shape[0]
    if a.values.ndim != 2 or a.shape[1] != n:
        raise ValueError("diag_part expects a square matrix")

    def vjp(g):
        out = np.zeros_like(a.values)
        out[np.arange(n), np.arange(n)] = g
        return (out,)

    return Tensor(a.values[np.arange(n), np.arange(n)].copy(), Node((a,), vjp))


def take_component(a: Tensor, idx: np.ndarray) -> Tensor:
    """Select one middle-axis slice per row of a (B, C, D) tensor: out[i] = a[i, idx[i]]."""
    idx = np.asarray(idx, dtype=np.int64)
    rows = np.arange(a.shape[0])

    def vjp(g):
        out = np.zeros_like(a.values)
        out[rows, idx] = g
        return (out,)

    return Tensor(a.values[rows, idx].copy(), Node((a,), vjp))


def take_per_row(a: Tensor, idx: np.ndarray) -> Tensor:
    """Select one column per row of a (B, O) matrix: out[i] = a[i, idx[i]]."""
    idx = np.asarray(idx, dtype=np.int64)
    rows = np.arange(a.shape[0])

    def vjp(g):
        out = np.zeros_like(a.values)
        out[rows, idx] = g
        return (out,)

    return Tensor(a.values[rows, idx].copy(), Node((a,), vjp))


def stop_gradient(a: Tensor) -> Tensor:
    return Tensor(a.values.copy())


# -- optimizer ------------------------------------------------------------------


@dataclass
class AdamState:
    """Per-parameter first/second moment accumulators with a shared step counter."""

    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    def initialize(self, params):
        self.m = [np.zeros_like(p.values) for p in params]
        self.v = [np.zeros_like(p.values) for p in params]
        self.step = 0


def adam_step(params, state: AdamState) -> bool:
    """One bias-corrected Adam update in place, reading each param's .grad.

    Returns False (and leaves parameters and moments untouched) if any
    gradient contains a NaN or infinity; True otherwise. Missing grads are
    treated as zero.
    """
    if not state.m:
        state.initialize(params)
    grads = [p.grad if p.grad is not None else np.zeros_like(p.values) for p in params]
    for g in grads:
        if not np.isfinite(g).all():
            return False
    state.step += 1
    c1 = 1.0 - state.beta1 ** state.step
    c2 = 1.0 - state.beta2 ** state.step
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p.values -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return True


# -- target transforms ------------------------------------------------------------


def symlog(x):
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * np.log1p(np.abs(x))


def symexp(x):
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * (np.expm1(np.abs(x)))
