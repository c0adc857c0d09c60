"""Dense float64 tensors with reverse-mode automatic differentiation.

The whole model is built from the handful of differentiable kernels in this
module. Each op records a backward closure on the output tensor; calling
``backward()`` on a scalar walks the graph in reverse topological order and
accumulates gradients into every tensor that requires them.
"""

from __future__ import annotations

import math
from typing import Callable, Iterable, Sequence

import numpy as np


class DimensionError(ValueError):
    """Raised when operand shapes are incompatible."""


class DegenerateAxisError(ValueError):
    """Raised when an op needs an axis of length >= 2 but got length 1."""


class LabelError(ValueError):
    """Raised for class labels outside [0, C)."""


class OptimizerError(RuntimeError):
    """Raised when the optimizer is stepped without populated gradients."""


def _as_array(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    return arr


class Tensor:
    """An n-dimensional float64 array, optionally tracked for gradients."""

    __slots__ = ("values", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, values, requires_grad: bool = False,
                 _parents: tuple = (), _backward: Callable | None = None):
        self.values = _as_array(values)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents = _parents
        self._backward = _backward

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    @property
    def size(self) -> int:
        return self.values.size

    def detach(self) -> "Tensor":
        return Tensor(self.values.copy())

    def zero_grad(self) -> None:
        self.grad = None

    def _accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.values)
        self.grad += g

    def backward(self) -> None:
        if self.values.size != 1:
            raise DimensionError(
                f"backward() needs a scalar, got shape {self.shape}")
        # iterative postorder; state 1 = expanded, 2 = emitted, so shared
        # subgraphs are emitted exactly once and always before any consumer
        topo: list[Tensor] = []
        state: dict[int, int] = {}
        stack: list[Tensor] = [self]
        while stack:
            node = stack[-1]
            st = state.get(id(node), 0)
            if st == 0:
                state[id(node)] = 1
                for p in node._parents:
                    if state.get(id(p), 0) == 0:
                        stack.append(p)
            else:
                stack.pop()
                if st == 1:
                    state[id(node)] = 2
                    topo.append(node)
        self._accumulate(np.ones_like(self.values))
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # -- convenience operators; the real work lives in the module functions --
    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __neg__(self):
        return mul(self, Tensor(-np.ones(())))

    def __matmul__(self, other):
        return matmul(self, other)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"


def _coerce(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _tracked(*tensors: Tensor) -> bool:
    return any(t.requires_grad or t._parents for t in tensors)


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a gradient over axes that were broadcast in the forward op."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


def _make(values: np.ndarray, parents: tuple, backward: Callable | None) -> Tensor:
    if any(p.requires_grad or p._parents for p in parents):
        out = Tensor(values, _parents=parents, _backward=backward)
    else:
        out = Tensor(values)
    return out


def add(a, b) -> Tensor:
    a, b = _coerce(a), _coerce(b)
    try:
        values = a.values + b.values
    except ValueError:
        raise DimensionError(f"add: shapes {a.shape} and {b.shape} "
                             "are not broadcastable") from None

    def backward(g):
        a._accumulate(_unbroadcast(g, a.shape))
        b._accumulate(_unbroadcast(g, b.shape))

    return _make(values, (a, b), backward)


def sub(a, b) -> Tensor:
    a, b = _coerce(a), _coerce(b)
    try:
        values = a.values - b.values
    except ValueError:
        raise DimensionError(f"sub: shapes {a.shape} and {b.shape} "
                             "are not broadcastable") from None

    def backward(g):
        a._accumulate(_unbroadcast(g, a.shape))
        b._accumulate(-_unbroadcast(g, b.shape))

    return _make(values, (a, b), backward)


def mul(a, b) -> Tensor:
    a, b = _coerce(a), _coerce(b)
    try:
        values = a.values * b.values
    except ValueError:
        raise DimensionError(f"mul: shapes {a.shape} and {b.shape} "
                             "are not broadcastable") from None

    def backward(g):
        a._accumulate(_unbroadcast(g * b.values, a.shape))
        b._accumulate(_unbroadcast(g * a.values, b.shape))

    return _make(values, (a, b), backward)


def matmul(a, b) -> Tensor:
    a, b = _coerce(a), _coerce(b)
    if a.values.ndim != 2 or b.values.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(
            f"matmul: incompatible shapes {a.shape} and {b.shape}")
    values = a.values @ b.values

    def backward(g):
        a._accumulate(g @ b.values.T)
        b._accumulate(a.values.T @ g)

    return _make(values, (a, b), backward)


def transpose(x: Tensor) -> Tensor:
    def backward(g):
        x._accumulate(g.T)
    return _make(x.values.T, (x,), backward)


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    old = x.shape

    def backward(g):
        x._accumulate(g.reshape(old))
    return _make(x.values.reshape(shape), (x,), backward)


def slice_cols(x: Tensor, start: int, stop: int) -> Tensor:
    """Column slice of a 2-D tensor; backward scatters into the slice."""
    if x.values.ndim != 2:
        raise DimensionError(f"slice_cols: expected 2-D, got {x.shape}")

    def backward(g):
        full = np.zeros_like(x.values)
        full[:, start:stop] = g
        x._accumulate(full)
    return _make(x.values[:, start:stop].copy(), (x,), backward)


def concat_cols(parts: Sequence[Tensor]) -> Tensor:
    parts = [_coerce(p) for p in parts]
    widths = [p.shape[1] for p in parts]
    values = np.concatenate([p.values for p in parts], axis=1)

    def backward(g):
        offset = 0
        for p, w in zip(parts, widths):
            p._accumulate(g[:, offset:offset + w])
            offset += w
    return _make(values, tuple(parts), backward)


def take_rows(table: Tensor, ids: Sequence[int]) -> Tensor:
    """Gather rows of a 2-D table; backward scatter-adds."""
    idx = np.asarray(ids, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= table.shape[0]):
        raise DimensionError(
            f"take_rows: index out of range for table with {table.shape[0]} rows")

    def backward(g):
        full = np.zeros_like(table.values)
        np.add.at(full, idx, g)
        table._accumulate(full)
    return _make(table.values[idx].copy(), (table,), backward)


def sum_all(x: Tensor) -> Tensor:
    def backward(g):
        x._accumulate(np.full_like(x.values, float(g)))
    return _make(np.asarray(x.values.sum()), (x,), backward)


def mean_all(x: Tensor) -> Tensor:
    n = x.values.size

    def backward(g):
        x._accumulate(np.full_like(x.values, float(g) / n))
    return _make(np.asarray(x.values.mean()), (x,), backward)


def gelu(x: Tensor) -> Tensor:
    """Exact GELU: 0.5 x (1 + erf(x / sqrt 2))."""
    inv_sqrt2 = 1.0 / math.sqrt(2.0)
    erf = np.vectorize(math.erf)(x.values * inv_sqrt2)
    values = 0.5 * x.values * (1.0 + erf)

    def backward(g):
        pdf = np.exp(-0.5 * x.values ** 2) / math.sqrt(2.0 * math.pi)
        x._accumulate(g * (0.5 * (1.0 + erf) + x.values * pdf))
    return _make(values, (x,), backward)


def tanh(x: Tensor) -> Tensor:
    t = np.tanh(x.values)

    def backward(g):
        x._accumulate(g * (1.0 - t * t))
    return _make(t, (x,), backward)


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    """Numerically stabilized softmax along ``axis``."""
    shifted = x.values - x.values.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        dot = (g * y).sum(axis=axis, keepdims=True)
        x._accumulate(y * (g - dot))
    return _make(y, (x,), backward)


def layernorm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5,
              axis: int = -1) -> Tensor:
    """Normalize to zero mean / unit variance along ``axis``, then scale+shift."""
    n = x.shape[axis]
    if n < 2:
        raise DegenerateAxisError(
            f"layernorm: axis length {n} cannot be normalized")
    gain, bias = _coerce(gain), _coerce(bias)
    mu = x.values.mean(axis=axis, keepdims=True)
    xc = x.values - mu
    var = (xc ** 2).mean(axis=axis, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    values = xhat * gain.values + bias.values

    def backward(g):
        gain._accumulate(_unbroadcast(g * xhat, gain.shape))
        bias._accumulate(_unbroadcast(g, bias.shape))
        gx = g * gain.values
        x._accumulate(inv * (gx
                             - gx.mean(axis=axis, keepdims=True)
                             - xhat * (gx * xhat).mean(axis=axis, keepdims=True)))
    return _make(values, (x, gain, bias), backward)


def mse_loss(pred: Tensor, target: Tensor) -> Tensor:
    """Mean over all elements of the squared difference.

    ``target`` never receives gradient, matching its role as a fixed
    reconstruction target.
    """
    target = _coerce(target)
    if pred.shape != target.shape:
        raise DimensionError(
            f"mse_loss: shapes {pred.shape} and {target.shape} differ")
    diff = pred.values - target.values
    n = diff.size

    def backward(g):
        pred._accumulate(float(g) * 2.0 * diff / n)
    return _make(np.asarray((diff ** 2).mean()), (pred,), backward)


def cross_entropy(logits: Tensor, labels: Sequence[int]) -> Tensor:
    """Mean negative log softmax probability of the true class.

    ``logits`` is [N, C]; uses a fused log-sum-exp for stability.
    """
    if logits.values.ndim != 2:
        raise DimensionError(
            f"cross_entropy: expected [N, C] logits, got {logits.shape}")
    n, c = logits.shape
    idx = np.asarray(labels, dtype=np.int64)
    if idx.shape != (n,):
        raise DimensionError(
            f"cross_entropy: {n} rows but {idx.shape} labels")
    if idx.size and (idx.min() < 0 or idx.max() >= c):
        raise LabelError(f"cross_entropy: label out of range [0, {c})")
    z = logits.values
    m = z.max(axis=1, keepdims=True)
    lse = m[:, 0] + np.log(np.exp(z - m).sum(axis=1))
    nll = lse - z[np.arange(n), idx]
    probs = np.exp(z - lse[:, None])

    def backward(g):
        grad = probs.copy()
        grad[np.arange(n), idx] -= 1.0
        logits._accumulate(float(g) * grad / n)
    return _make(np.asarray(nll.mean()), (logits,), backward)


class Adam:
    """Adam with bias correction and decoupled weight decay.

    ``step()`` consumes the accumulated gradients and zeroes them.
    """

    def __init__(self, params: Iterable[Tensor], lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8, weight_decay: float = 0.0):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.weight_decay = weight_decay
        self.t = 0
        self._m = [np.zeros_like(p.values) for p in self.params]
        self._v = [np.zeros_like(p.values) for p in self.params]

    def step(self) -> None:
        missing = [i for i, p in enumerate(self.params) if p.grad is None]
        if missing:
            raise OptimizerError(
                f"step() with unpopulated gradients (params {missing})")
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for p, m, v in zip(self.params, self._m, self._v):
            g = p.grad
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            update = (m / bc1) / (np.sqrt(v / bc2) + self.eps)
            if self.weight_decay:
                update = update + self.weight_decay * p.values
            p.values -= self.lr * update
            p.grad = None

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None


def finite_difference_check(loss_fn: Callable[[], Tensor],
                            params: Sequence[Tensor],
                            h: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients.

    ``loss_fn`` must rebuild the graph from ``params`` on every call.
    """
    loss = loss_fn()
    for p in params:
        p.grad = None
    loss.backward()
    analytic = [p.grad.copy() if p.grad is not None else np.zeros_like(p.values)
                for p in params]
    worst = 0.0
    for p, ana in zip(params, analytic):
        flat = p.values.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            hi = float(loss_fn().values)
            flat[i] = orig - h
            lo = float(loss_fn().values)
            flat[i] = orig
            num = (hi - lo) / (2.0 * h)
            a = ana.reshape(-1)[i]
            # floor the denominator so double-precision FD noise on near-zero
            # gradients does not register as relative error
            scale = max(abs(num), abs(a), 1e-5)
            worst = max(worst, abs(num - a) / scale)
    return worst
