"""Dense float64 tensors with reverse-mode automatic differentiation.

Just enough machinery for small fully-connected networks: 1-D/2-D arrays,
broadcasting limited to what bias vectors need, and gradients accumulated by
walking the operation graph in reverse topological order. Everything is
value-semantic and single-threaded; determinism comes from numpy's fixed
reduction order.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np

# Probabilities are kept strictly inside (0, 1) so log never sees 0 or 1.
# Shared by the sigmoid op here and the cross-entropy losses downstream.
PROB_EPS = 1e-7


class Tensor:
    """A node of the computation graph.

    ``data`` is a float64 ndarray, ``grad`` (same shape) is populated by
    :func:`backward` for nodes with ``requires_grad``. Leaf tensors are
    parameters or constants; op outputs carry a closure that routes the
    output gradient to the parents.
    """

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backprop")

    def __init__(self, data, requires_grad: bool = False):
        arr = np.asarray(data, dtype=np.float64)
        if arr.ndim > 2:
            raise ValueError(f"tensors are at most 2-D, got shape {arr.shape}")
        self.data = arr
        self.grad: np.ndarray | None = None
        self.requires_grad = bool(requires_grad)
        self._parents: tuple[Tensor, ...] = ()
        self._backprop: Callable[[], None] | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def values(self) -> np.ndarray:
        """Flat row-major view of the entries."""
        return self.data.reshape(-1)

    def item(self) -> float:
        if self.data.size != 1:
            raise ValueError(f"item() needs a scalar tensor, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def detach(self) -> "Tensor":
        """Same values, cut out of the graph."""
        return Tensor(self.data.copy())

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    # operator sugar; the actual rules live in the module-level functions
    def __add__(self, other):
        return add(self, as_tensor(other))

    def __sub__(self, other):
        return sub(self, as_tensor(other))

    def __mul__(self, other):
        return mul(self, as_tensor(other))

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, as_tensor(other))


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _op(data: np.ndarray, parents: Sequence[Tensor], backprop: Callable[[], None]) -> Tensor:
    out = Tensor(data, requires_grad=any(p.requires_grad for p in parents))
    if out.requires_grad:
        out._parents = tuple(parents)
        out._backprop = backprop
    return out


def _require_finite(t: Tensor, op: str) -> None:
    if not np.isfinite(t.data).all():
        raise ValueError(f"{op}: non-finite input values")


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum `grad` down to `shape` (inverse of numpy broadcasting)."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Graph:
    """Ordered view of every op reachable from a root tensor.

    ``nodes`` is a topological order built by post-order traversal, so each
    tensor appears after all of its parents; the backward pass walks it once
    in reverse.
    """

    def __init__(self, root: Tensor):
        nodes: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                nodes.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in visited:
                    stack.append((parent, False))
        self.nodes = nodes

    def __len__(self) -> int:
        return len(self.nodes)


def backward(loss: Tensor, graph: Graph | None = None) -> dict[Tensor, np.ndarray]:
    """Populate gradients of everything `loss` depends on.

    Grads of tensors inside the graph are reset first, so repeated calls from
    the same state are bitwise identical. Returns the gradient map for the
    requires-grad leaves (the parameters).
    """
    if loss.data.size != 1:
        raise ValueError(f"backward needs a scalar loss, got shape {loss.shape}")
    if graph is None:
        graph = Graph(loss)
    for node in graph.nodes:
        if node.requires_grad:
            node.grad = np.zeros_like(node.data)
    if not loss.requires_grad:
        return {}
    loss.grad = np.ones_like(loss.data)
    for node in reversed(graph.nodes):
        if node._backprop is not None and node.requires_grad:
            node._backprop()
    return {n: n.grad for n in graph.nodes if n.requires_grad and not n._parents}


# ---------------------------------------------------------------------------
# ops


def add(a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data + b.data

    def backprop():
        if a.requires_grad:
            a.grad += _unbroadcast(out.grad, a.data.shape)
        if b.requires_grad:
            b.grad += _unbroadcast(out.grad, b.data.shape)

    out = _op(out_data, (a, b), backprop)
    return out


def sub(a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data - b.data

    def backprop():
        if a.requires_grad:
            a.grad += _unbroadcast(out.grad, a.data.shape)
        if b.requires_grad:
            b.grad -= _unbroadcast(out.grad, b.data.shape)

    out = _op(out_data, (a, b), backprop)
    return out


def mul(a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data * b.data

    def backprop():
        if a.requires_grad:
            a.grad += _unbroadcast(out.grad * b.data, a.data.shape)
        if b.requires_grad:
            b.grad += _unbroadcast(out.grad * a.data, b.data.shape)

    out = _op(out_data, (a, b), backprop)
    return out


def neg(a: Tensor) -> Tensor:
    def backprop():
        if a.requires_grad:
            a.grad -= out.grad

    out = _op(-a.data, (a,), backprop)
    return out


def scale(a: Tensor, c: float) -> Tensor:
    c = float(c)

    def backprop():
        if a.requires_grad:
            a.grad += c * out.grad

    out = _op(c * a.data, (a,), backprop)
    return out


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2 or a.data.shape[1] != b.data.shape[0]:
        raise ValueError(f"matmul shape mismatch: {a.data.shape} x {b.data.shape}")
    _require_finite(a, "matmul")
    _require_finite(b, "matmul")
    out_data = a.data @ b.data

    def backprop():
        if a.requires_grad:
            a.grad += out.grad @ b.data.T
        if b.requires_grad:
            b.grad += a.data.T @ out.grad

    out = _op(out_data, (a, b), backprop)
    return out


def tanh(a: Tensor) -> Tensor:
    y = np.tanh(a.data)

    def backprop():
        if a.requires_grad:
            a.grad += (1.0 - y * y) * out.grad

    out = _op(y, (a,), backprop)
    return out


def relu(a: Tensor) -> Tensor:
    y = np.maximum(a.data, 0.0)

    def backprop():
        if a.requires_grad:
            a.grad += (a.data > 0.0) * out.grad

    out = _op(y, (a,), backprop)
    return out


def sigmoid(a: Tensor) -> Tensor:
    """Numerically stable logistic, clamped into [PROB_EPS, 1-PROB_EPS].

    The clamp keeps outputs strictly inside (0, 1) even for inputs like
    +-1e6 where float64 would round to exactly 0 or 1.
    """
    x = a.data
    y = np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))), np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))
    y = np.clip(y, PROB_EPS, 1.0 - PROB_EPS)

    def backprop():
        if a.requires_grad:
            a.grad += y * (1.0 - y) * out.grad

    out = _op(y, (a,), backprop)
    return out


_ACTIVATIONS = {"tanh": tanh, "relu": relu, "sigmoid": sigmoid}


def activation(t: Tensor, kind: str) -> Tensor:
    """Elementwise nonlinearity, one of tanh / relu / sigmoid."""
    try:
        fn = _ACTIVATIONS[kind]
    except KeyError:
        raise ValueError(f"unknown activation kind {kind!r}") from None
    _require_finite(t, f"activation[{kind}]")
    return fn(t)


def exp(a: Tensor) -> Tensor:
    y = np.exp(a.data)

    def backprop():
        if a.requires_grad:
            a.grad += y * out.grad

    out = _op(y, (a,), backprop)
    return out


def log(a: Tensor) -> Tensor:
    if np.any(a.data <= 0.0):
        raise ValueError("log: inputs must be strictly positive")

    def backprop():
        if a.requires_grad:
            a.grad += out.grad / a.data

    out = _op(np.log(a.data), (a,), backprop)
    return out


def square(a: Tensor) -> Tensor:
    def backprop():
        if a.requires_grad:
            a.grad += 2.0 * a.data * out.grad

    out = _op(a.data * a.data, (a,), backprop)
    return out


def clamp(a: Tensor, lo: float, hi: float) -> Tensor:
    """Clip values into [lo, hi]; gradient passes through the interior only."""
    mask = (a.data >= lo) & (a.data <= hi)

    def backprop():
        if a.requires_grad:
            a.grad += mask * out.grad

    out = _op(np.clip(a.data, lo, hi), (a,), backprop)
    return out


def tsum(a: Tensor) -> Tensor:
    def backprop():
        if a.requires_grad:
            a.grad += out.grad.reshape(())

    out = _op(np.asarray(a.data.sum()), (a,), backprop)
    return out


def tmean(a: Tensor) -> Tensor:
    n = a.data.size

    def backprop():
        if a.requires_grad:
            a.grad += out.grad.reshape(()) / n

    out = _op(np.asarray(a.data.mean()), (a,), backprop)
    return out


def concat(parts: Sequence[Tensor], axis: int = 1) -> Tensor:
    parts = list(parts)
    widths = [p.data.shape[axis] for p in parts]
    offsets = np.cumsum([0] + widths)

    def backprop():
        for p, start, stop in zip(parts, offsets[:-1], offsets[1:]):
            if p.requires_grad:
                if axis == 1:
                    p.grad += out.grad[:, start:stop]
                else:
                    p.grad += out.grad[start:stop]

    out = _op(np.concatenate([p.data for p in parts], axis=axis), parts, backprop)
    return out


def slice_cols(a: Tensor, start: int, stop: int) -> Tensor:
    if a.data.ndim != 2:
        raise ValueError(f"slice_cols needs a 2-D tensor, got shape {a.data.shape}")

    def backprop():
        if a.requires_grad:
            a.grad[:, start:stop] += out.grad

    out = _op(a.data[:, start:stop].copy(), (a,), backprop)
    return out


def softmax_cross_entropy(logits: Tensor, labels: np.ndarray) -> Tensor:
    """Mean cross entropy of row-wise softmax against integer labels."""
    labels = np.asarray(labels)
    z = logits.data
    if z.ndim != 2 or labels.shape != (z.shape[0],):
        raise ValueError(f"cross entropy shape mismatch: logits {z.shape}, labels {labels.shape}")
    m = z.max(axis=1, keepdims=True)
    lse = m + np.log(np.exp(z - m).sum(axis=1, keepdims=True))
    rows = np.arange(z.shape[0])
    loss = float((lse[:, 0] - z[rows, labels]).mean())

    def backprop():
        if logits.requires_grad:
            soft = np.exp(z - lse)
            soft[rows, labels] -= 1.0
            logits.grad += soft * (out.grad.reshape(()) / z.shape[0])

    out = _op(np.asarray(loss), (logits,), backprop)
    return out


# ---------------------------------------------------------------------------
# gradient checking


def grad_check(f: Callable[[], Tensor], params: Iterable[Tensor], eps: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients.

    `f` must be a deterministic zero-argument closure over `params` returning
    a scalar tensor. Relative error per entry is
    |analytic - numeric| / max(1e-12, |analytic| + |numeric|).
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    params = list(params)
    grads = backward(f())
    analytic = [grads[p].copy() if p in grads else np.zeros_like(p.data) for p in params]

    worst = 0.0
    for p, a in zip(params, analytic):
        flat = p.data.reshape(-1)
        a_flat = a.reshape(-1)
        for i in range(flat.size):
            saved = flat[i]
            flat[i] = saved + eps
            hi = f().item()
            flat[i] = saved - eps
            lo = f().item()
            flat[i] = saved
            numeric = (hi - lo) / (2.0 * eps)
            err = abs(a_flat[i] - numeric) / max(1e-12, abs(a_flat[i]) + abs(numeric))
            worst = max(worst, err)
    return worst
