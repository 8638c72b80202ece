"""Dense float64 tensors with reverse-mode differentiation.

Values are contiguous numpy float64 arrays in row-major order.  The compute
graph is implicit: every op links its output tensor to the parent tensors
and a closure that maps the output gradient to parent gradients.  `backward`
walks the reachable nodes in descending creation index, which is a reverse
topological order because children are always created after their parents;
this fixed order makes gradient accumulation deterministic.

Every op validates its output for NaN/Inf and raises NonFiniteError, so a
numerical blow-up surfaces at the op that produced it instead of as a silent
garbage score.  Tensors are treated as immutable once created; training code
may swap `data` in place between passes, after the previous graph is dropped.
"""

from __future__ import annotations

import itertools
import threading
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import ContractError, DimensionError, NonFiniteError

_uid_counter = itertools.count()
_state = threading.local()


def grad_enabled() -> bool:
    return getattr(_state, "grad_enabled", True)


class no_grad:
    """Context manager that disables graph construction on this thread."""

    def __enter__(self):
        self._prev = grad_enabled()
        _state.grad_enabled = False
        return self

    def __exit__(self, *exc):
        _state.grad_enabled = self._prev
        return False


class Tensor:
    __slots__ = ("data", "requires_grad", "_uid", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, _parents=(), _backward=None):
        arr = np.asarray(data, dtype=np.float64)
        if arr.size == 0:
            raise ContractError(f"tensor extents must be positive, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise NonFiniteError(f"non-finite values in tensor of shape {arr.shape}")
        self.data = arr
        self.requires_grad = requires_grad
        self._uid = next(_uid_counter)
        self._parents = _parents
        self._backward = _backward

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError(f"item() on tensor of shape {self.shape}")
        return float(self.data.reshape(()))

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    # arithmetic sugar; constants are wrapped as untracked tensors
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Tensor):
            raise ContractError("tensor/tensor division is not an op this model needs")
        return mul(self, 1.0 / float(other))

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, idx):
        return getitem(self, idx)


def _wrap(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _tracked(p: Tensor) -> bool:
    return p.requires_grad or p._backward is not None


def _make(data, parents: tuple, backward: Callable) -> Tensor:
    if grad_enabled() and any(_tracked(p) for p in parents):
        return Tensor(data, _parents=parents, _backward=backward)
    return Tensor(data)


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum `grad` down to `shape`, undoing numpy broadcasting."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


# ---------------------------------------------------------------------------
# elementwise and structural ops
# ---------------------------------------------------------------------------


def add(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    ash, bsh = a.data.shape, b.data.shape

    def bw(g):
        return _unbroadcast(g, ash), _unbroadcast(g, bsh)

    return _make(a.data + b.data, (a, b), bw)


def sub(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    ash, bsh = a.data.shape, b.data.shape

    def bw(g):
        return _unbroadcast(g, ash), _unbroadcast(-g, bsh)

    return _make(a.data - b.data, (a, b), bw)


def mul(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    ad, bd = a.data, b.data

    def bw(g):
        return _unbroadcast(g * bd, ad.shape), _unbroadcast(g * ad, bd.shape)

    return _make(ad * bd, (a, b), bw)


def neg(a) -> Tensor:
    a = _wrap(a)

    def bw(g):
        return (-g,)

    return _make(-a.data, (a,), bw)


def absolute(a) -> Tensor:
    """Elementwise |x| with subgradient 0 at exact zeros."""
    a = _wrap(a)
    s = np.sign(a.data)

    def bw(g):
        return (g * s,)

    return _make(np.abs(a.data), (a,), bw)


def matmul(a, b) -> Tensor:
    """Matrix product over the last two axes.

    Supports vec @ mat, mat @ mat, and batched stacks of matrices with numpy
    broadcasting over the leading axes.
    """
    a, b = _wrap(a), _wrap(b)
    ad, bd = a.data, b.data
    if ad.ndim == 1 and bd.ndim == 2:
        if ad.shape[0] != bd.shape[0]:
            raise DimensionError(f"matmul: inner extents differ, {ad.shape} x {bd.shape}")

        def bw(g):
            return bd @ g, np.outer(ad, g)

        with np.errstate(over="ignore"):
            return _make(ad @ bd, (a, b), bw)
    if ad.ndim >= 2 and bd.ndim >= 2:
        if ad.shape[-1] != bd.shape[-2]:
            raise DimensionError(f"matmul: inner extents differ, {ad.shape} x {bd.shape}")

        def bw(g):
            ga = g @ np.swapaxes(bd, -1, -2)
            gb = np.swapaxes(ad, -1, -2) @ g
            return _unbroadcast(ga, ad.shape), _unbroadcast(gb, bd.shape)

        with np.errstate(over="ignore"):
            return _make(ad @ bd, (a, b), bw)
    raise DimensionError(f"matmul: unsupported ranks {ad.shape} x {bd.shape}")


def transpose(a) -> Tensor:
    """Swap the last two axes."""
    a = _wrap(a)
    if a.ndim < 2:
        raise DimensionError(f"transpose needs rank >= 2, got shape {a.shape}")

    def bw(g):
        return (np.swapaxes(g, -1, -2),)

    return _make(np.swapaxes(a.data, -1, -2), (a,), bw)


def reshape(a, shape) -> Tensor:
    a = _wrap(a)
    old = a.data.shape

    def bw(g):
        return (g.reshape(old),)

    return _make(a.data.reshape(shape), (a,), bw)


def broadcast_to(a, shape) -> Tensor:
    a = _wrap(a)
    old = a.data.shape

    def bw(g):
        return (_unbroadcast(g, old),)

    return _make(np.broadcast_to(a.data, shape), (a,), bw)


def getitem(a, idx) -> Tensor:
    """Basic indexing (ints and slices only); backward scatters into zeros."""
    a = _wrap(a)
    shape = a.data.shape

    def bw(g):
        z = np.zeros(shape)
        z[idx] += g
        return (z,)

    return _make(a.data[idx], (a,), bw)


def concat(tensors: Sequence, axis: int = 0) -> Tensor:
    ts = tuple(_wrap(t) for t in tensors)
    if not ts:
        raise ContractError("concat of zero tensors")
    sizes = [t.data.shape[axis] for t in ts]
    splits = np.cumsum(sizes)[:-1]

    def bw(g):
        return tuple(np.split(g, splits, axis=axis))

    return _make(np.concatenate([t.data for t in ts], axis=axis), ts, bw)


def reduce_sum(a, axis=None, keepdims: bool = False) -> Tensor:
    a = _wrap(a)
    shape = a.data.shape

    def bw(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, shape).copy(),)

    return _make(a.data.sum(axis=axis, keepdims=keepdims), (a,), bw)


def mean(a, axis=None, keepdims: bool = False) -> Tensor:
    a = _wrap(a)
    shape = a.data.shape
    n = a.data.size if axis is None else shape[axis]

    def bw(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g / n, shape).copy(),)

    return _make(a.data.mean(axis=axis, keepdims=keepdims), (a,), bw)


def reduce_min(a) -> Tensor:
    """Minimum over all elements; ties routed to the earliest flat index."""
    a = _wrap(a)
    flat_idx = int(np.argmin(a.data))
    shape = a.data.shape

    def bw(g):
        z = np.zeros(shape)
        z.flat[flat_idx] = g
        return (z,)

    return _make(a.data.min(), (a,), bw)


# ---------------------------------------------------------------------------
# nonlinearities
# ---------------------------------------------------------------------------


def exp(a) -> Tensor:
    a = _wrap(a)
    with np.errstate(over="ignore"):
        out = np.exp(a.data)  # overflow becomes inf, rejected by the Tensor ctor

    def bw(g):
        return (g * out,)

    return _make(out, (a,), bw)


def tanh(a) -> Tensor:
    a = _wrap(a)
    out = np.tanh(a.data)

    def bw(g):
        return (g * (1.0 - out * out),)

    return _make(out, (a,), bw)


def sigmoid(a) -> Tensor:
    a = _wrap(a)
    x = a.data
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)

    def bw(g):
        return (g * out * (1.0 - out),)

    return _make(out, (a,), bw)


_GELU_C = np.sqrt(2.0 / np.pi)
_GELU_A = 0.044715


def gelu(a) -> Tensor:
    """GELU via the tanh approximation 0.5*x*(1 + tanh(c*(x + 0.044715*x^3)))."""
    a = _wrap(a)
    x = a.data
    with np.errstate(over="ignore", invalid="ignore"):
        t = np.tanh(_GELU_C * (x + _GELU_A * x**3))
        out = np.where(x > 20.0, x, np.where(x < -20.0, 0.0, 0.5 * x * (1.0 + t)))

    def bw(g):
        with np.errstate(over="ignore", invalid="ignore"):
            du = _GELU_C * (1.0 + 3.0 * _GELU_A * x * x)
            d = 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du
            d = np.where(np.abs(x) > 20.0, (x > 0).astype(float), d)
        return (g * d,)

    return _make(out, (a,), bw)


def softmax(a, axis: int = -1) -> Tensor:
    """Stable softmax along `axis`; slices are nonnegative and sum to 1."""
    a = _wrap(a)
    if not -a.ndim <= axis < a.ndim:
        raise DimensionError(f"softmax axis {axis} out of range for shape {a.shape}")
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)

    def bw(g):
        return (out * (g - (g * out).sum(axis=axis, keepdims=True)),)

    return _make(out, (a,), bw)


def layer_norm(a, gain, bias, eps: float = 1e-5) -> Tensor:
    """Normalize each row of the last axis to zero mean / unit population
    variance, then scale and shift by `gain` and `bias`."""
    a, gain, bias = _wrap(a), _wrap(gain), _wrap(bias)
    d = a.data.shape[-1]
    if gain.shape != (d,) or bias.shape != (d,):
        raise DimensionError(
            f"layer_norm: gain {gain.shape} / bias {bias.shape} do not match last extent {d}"
        )
    x = a.data
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    out = xhat * gain.data + bias.data

    def bw(g):
        lead = tuple(range(g.ndim - 1))
        dgain = (g * xhat).sum(axis=lead)
        dbias = g.sum(axis=lead)
        dxhat = g * gain.data
        dx = inv * (
            dxhat
            - dxhat.mean(axis=-1, keepdims=True)
            - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
        )
        return dx, dgain, dbias

    return _make(out, (a, gain, bias), bw)


# ---------------------------------------------------------------------------
# reverse pass and the finite-difference oracle
# ---------------------------------------------------------------------------


def backward(loss: Tensor) -> dict:
    """Accumulate gradients of a scalar `loss` for every reachable tensor
    with requires_grad, keyed by tensor identity.

    Nodes are processed in descending creation index: a reverse topological
    order (children are created after parents), so accumulation order is
    deterministic across runs.
    """
    if not isinstance(loss, Tensor):
        raise ContractError("backward expects a Tensor loss node")
    if loss.data.size != 1:
        raise ContractError(f"loss must be scalar, got shape {loss.shape}")

    nodes = []
    seen = {id(loss)}
    stack = [loss]
    while stack:
        node = stack.pop()
        nodes.append(node)
        for p in node._parents:
            if id(p) not in seen and _tracked(p):
                seen.add(id(p))
                stack.append(p)

    grads: dict[Tensor, np.ndarray] = {loss: np.ones_like(loss.data)}
    nodes.sort(key=lambda t: t._uid, reverse=True)
    for node in nodes:
        g = grads.get(node)
        if g is None or node._backward is None:
            continue
        for parent, pg in zip(node._parents, node._backward(g)):
            if pg is None or not _tracked(parent):
                continue
            acc = grads.get(parent)
            grads[parent] = pg if acc is None else acc + pg
    return {t: g for t, g in grads.items() if t.requires_grad}


def finite_diff_gradient(f: Callable[[np.ndarray], float], x, h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient (f(x+h*e_i) - f(x-h*e_i)) / 2h per
    coordinate.  Runs with graph construction disabled; `f` gets a fresh
    array each call and must return a float."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    xp = x.copy()
    with no_grad():
        for i in range(x.size):
            orig = xp.flat[i]
            xp.flat[i] = orig + h
            fp = float(f(xp))
            xp.flat[i] = orig - h
            fm = float(f(xp))
            xp.flat[i] = orig
            grad.flat[i] = (fp - fm) / (2.0 * h)
    return grad


def stack_scalars(scalars: Iterable[Tensor]) -> Tensor:
    """Concatenate scalar tensors into a rank-1 tensor."""
    return concat([reshape(s, (1,)) for s in scalars], axis=0)
