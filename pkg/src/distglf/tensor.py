"""Minimal reverse-mode autodiff on numpy arrays.

A Tensor wraps an ndarray (float32 by default, float64 for gradient
checking) and records a vector-Jacobian closure per op. backward() on a
scalar walks the graph in reverse topological order and accumulates
gradients into the leaves, so two backward calls without zeroing double
every gradient.
"""

from __future__ import annotations

import contextlib

import numpy as np

FLOAT_DTYPES = (np.float32, np.float64)

_grad_enabled = True


@contextlib.contextmanager
def no_grad():
    """Disable graph recording inside the block (inference fast path)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


def _as_float_array(data, dtype=None):
    arr = np.asarray(data)
    if dtype is not None:
        return arr.astype(dtype, copy=False)
    if arr.dtype in FLOAT_DTYPES:
        return arr
    return arr.astype(np.float32)


class Tensor:
    """n-d array node in the autodiff graph."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_vjp")

    def __init__(self, data, requires_grad=False, dtype=None):
        self.data = _as_float_array(data, dtype)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = ()
        self._vjp = None

    # ---- construction helpers -------------------------------------------

    @staticmethod
    def zeros(shape, dtype=np.float32, requires_grad=False):
        return Tensor(np.zeros(shape, dtype=dtype), requires_grad=requires_grad)

    @staticmethod
    def ones(shape, dtype=np.float32, requires_grad=False):
        return Tensor(np.ones(shape, dtype=dtype), requires_grad=requires_grad)

    # ---- basic info ------------------------------------------------------

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def item(self):
        return float(self.data)

    def detach(self):
        return Tensor(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}, requires_grad={self.requires_grad})"

    # ---- graph plumbing ----------------------------------------------------

    def zero_grad(self):
        self.grad = None

    def backward(self):
        """Accumulate d(self)/d(leaf) into every reachable leaf's .grad."""
        if self.data.size != 1:
            raise ValueError("backward() requires a scalar tensor")
        topo = _toposort(self)
        grads = {self: np.ones_like(self.data)}
        for node in reversed(topo):
            g = grads.pop(node, None)
            if g is None:
                continue
            if node._vjp is None:
                if node.requires_grad:
                    node.grad = g.copy() if node.grad is None else node.grad + g
                continue
            for parent, pg in zip(node._parents, node._vjp(g)):
                if pg is None or not parent.requires_grad:
                    continue
                acc = grads.get(parent)
                grads[parent] = pg if acc is None else acc + pg

    # ---- operator sugar ----------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(self, other)

    def __neg__(self):
        return mul(self, -1.0)

    def __sub__(self, other):
        return add(self, mul(other, -1.0) if isinstance(other, Tensor) else -np.asarray(other))

    def reshape(self, *shape):
        return reshape(self, shape[0] if len(shape) == 1 and isinstance(shape[0], (tuple, list)) else shape)

    def transpose(self, axes):
        return transpose(self, axes)

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis, keepdims)

    def mean(self, axis=None, keepdims=False):
        return tmean(self, axis, keepdims)

    def abs(self):
        return tabs(self)


def _toposort(root):
    order, visited = [], set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in visited:
                stack.append((p, False))
    return order


def make_op(out_data, parents, vjp):
    """Wrap an op result; records the vjp only when gradients can flow."""
    out = Tensor(out_data)
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._vjp = vjp
    return out


def _unbroadcast(g, shape):
    """Sum g down to `shape` (reverse of numpy broadcasting)."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


def _coerce(x, like):
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=like.dtype))


# ---- elementwise ops ---------------------------------------------------------


def add(a, b):
    a = a if isinstance(a, Tensor) else Tensor(a)
    b = _coerce(b, a)
    out = a.data + b.data

    def vjp(g):
        return _unbroadcast(g, a.data.shape), _unbroadcast(g, b.data.shape)

    return make_op(out, (a, b), vjp)


def mul(a, b):
    a = a if isinstance(a, Tensor) else Tensor(a)
    b = _coerce(b, a)
    out = a.data * b.data

    def vjp(g):
        return _unbroadcast(g * b.data, a.data.shape), _unbroadcast(g * a.data, b.data.shape)

    return make_op(out, (a, b), vjp)


def tabs(a):
    sign = np.sign(a.data)

    def vjp(g):
        return (g * sign,)

    return make_op(np.abs(a.data), (a,), vjp)


def leaky_relu(a, slope=0.1):
    """y = x for x >= 0 else slope * x; x = 0 takes the positive branch."""
    mask = a.data >= 0
    scale = np.where(mask, a.data.dtype.type(1), a.data.dtype.type(slope))

    def vjp(g):
        return (g * scale,)

    return make_op(a.data * scale, (a,), vjp)


# ---- reductions ---------------------------------------------------------------


def tsum(a, axis=None, keepdims=False):
    out = a.data.sum(axis=axis, keepdims=keepdims)

    def vjp(g):
        g_exp = g if (axis is None or keepdims) else np.expand_dims(g, axis)
        return (np.broadcast_to(g_exp, a.data.shape).astype(a.data.dtype, copy=True),)

    return make_op(out, (a,), vjp)


def tmean(a, axis=None, keepdims=False):
    if axis is None:
        n = a.data.size
    else:
        axes = axis if isinstance(axis, tuple) else (axis,)
        n = int(np.prod([a.data.shape[ax] for ax in axes]))
    s = tsum(a, axis, keepdims)
    return mul(s, 1.0 / n)


# ---- shape ops ------------------------------------------------------------------


def reshape(a, shape):
    old = a.data.shape

    def vjp(g):
        return (g.reshape(old),)

    return make_op(a.data.reshape(shape), (a,), vjp)


def transpose(a, axes):
    axes = tuple(axes)
    inv = tuple(np.argsort(axes))

    def vjp(g):
        return (g.transpose(inv),)

    return make_op(np.ascontiguousarray(a.data.transpose(axes)), (a,), vjp)


def flip(a, axes):
    axes = tuple(axes) if isinstance(axes, (tuple, list)) else (axes,)

    def vjp(g):
        return (np.flip(g, axes),)

    return make_op(np.ascontiguousarray(np.flip(a.data, axes)), (a,), vjp)


def concat(tensors, axis):
    tensors = list(tensors)
    sizes = [t.data.shape[axis] for t in tensors]
    out = np.concatenate([t.data for t in tensors], axis=axis)
    splits = np.cumsum(sizes)[:-1]

    def vjp(g):
        return tuple(np.split(g, splits, axis=axis))

    return make_op(out, tensors, vjp)


def stack(tensors, axis):
    tensors = list(tensors)
    out = np.stack([t.data for t in tensors], axis=axis)

    def vjp(g):
        return tuple(np.moveaxis(g, axis, 0))

    return make_op(out, tensors, vjp)


# ---- nonlinear / losses -----------------------------------------------------------


def softmax(a, axis):
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=axis, keepdims=True)

    def vjp(g):
        dot = (g * y).sum(axis=axis, keepdims=True)
        return (y * (g - dot),)

    return make_op(y, (a,), vjp)


def l1_loss(pred, target):
    """Mean absolute error; subgradient sign(pred - target) / N."""
    diff = add(pred, mul(target, -1.0)) if isinstance(target, Tensor) else add(pred, -np.asarray(target))
    return tmean(tabs(diff))
