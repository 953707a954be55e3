"""Layers, parameter management, and checkpoint serialization.

Modules register Parameters and sub-Modules as plain attributes; walking
the attribute tree yields dotted names ("groups.0.blocks.1.fuse.weight").
Parameters shared between two attributes (EPI weight sharing) are emitted
once, under the first path found.
"""

from __future__ import annotations

import math

import numpy as np

from .conv import conv2d, conv3d
from .tensor import Tensor, leaky_relu, make_op

_rng = np.random.default_rng(0)


def seed(value):
    """Reset the global init RNG (drives all weight initialization)."""
    global _rng
    _rng = np.random.default_rng(value)


def kaiming_uniform(shape, fan_in, slope=0.1, dtype=np.float32):
    """Kaiming-uniform fan-in init with LeakyReLU gain."""
    gain = math.sqrt(2.0 / (1.0 + slope * slope))
    bound = gain * math.sqrt(3.0 / fan_in)
    return _rng.uniform(-bound, bound, size=shape).astype(dtype)


class Parameter(Tensor):
    def __init__(self, data):
        super().__init__(data, requires_grad=True)


class Module:
    """Base class: attribute-walk based parameter registry."""

    def __init__(self):
        self.training = True

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)

    # -- registry walks ---------------------------------------------------

    def _children(self):
        for name, value in vars(self).items():
            if isinstance(value, (Parameter, Module, Buffer)):
                yield name, value

    def named_parameters(self, prefix="", _seen=None):
        if _seen is None:
            _seen = set()
        for name, value in self._children():
            full = f"{prefix}{name}"
            if isinstance(value, Parameter):
                if id(value) not in _seen:
                    _seen.add(id(value))
                    yield full, value
            elif isinstance(value, Module):
                yield from value.named_parameters(f"{full}.", _seen)

    def parameters(self):
        return [p for _, p in self.named_parameters()]

    def named_arrays(self):
        """Parameters then buffers, both as (name, object) in walk order."""
        yield from self.named_parameters()
        yield from self._named_buffers()

    def _named_buffers(self, prefix="", _seen=None):
        if _seen is None:
            _seen = set()
        for name, value in self._children():
            full = f"{prefix}{name}"
            if isinstance(value, Buffer):
                if id(value) not in _seen:
                    _seen.add(id(value))
                    yield full, value
            elif isinstance(value, Module):
                yield from value._named_buffers(f"{full}.", _seen)

    def modules(self):
        yield self
        for _, value in self._children():
            if isinstance(value, Module):
                yield from value.modules()

    # -- mode / dtype ------------------------------------------------------

    def train(self, mode=True):
        for m in self.modules():
            m.training = mode
        return self

    def eval(self):
        return self.train(False)

    def zero_grad(self):
        for p in self.parameters():
            p.zero_grad()

    def to_dtype(self, dtype):
        for _, p in self.named_parameters():
            p.data = p.data.astype(dtype)
        for _, b in self._named_buffers():
            b.data = b.data.astype(dtype)
        return self

    @property
    def dtype(self):
        for p in self.parameters():
            return p.data.dtype
        return np.dtype(np.float32)

    def n_parameters(self):
        return sum(p.data.size for p in self.parameters())


class Buffer:
    """Non-trainable named array (BatchNorm running statistics)."""

    __slots__ = ("data",)

    def __init__(self, data):
        self.data = np.asarray(data)


class ModuleList(Module):
    def __init__(self, items=()):
        super().__init__()
        self._items = list(items)
        for i, m in enumerate(self._items):
            setattr(self, str(i), m)

    def append(self, m):
        setattr(self, str(len(self._items)), m)
        self._items.append(m)

    def __iter__(self):
        return iter(self._items)

    def __len__(self):
        return len(self._items)

    def __getitem__(self, i):
        return self._items[i]


# ---- layers -------------------------------------------------------------


class Conv2d(Module):
    def __init__(self, in_channels, out_channels, kernel, stride=1, dilation=1, padding=0, bias=True):
        super().__init__()
        kh, kw = (kernel, kernel) if isinstance(kernel, int) else kernel
        fan_in = in_channels * kh * kw
        self.weight = Parameter(kaiming_uniform((out_channels, in_channels, kh, kw), fan_in))
        self.bias = Parameter(np.zeros(out_channels, dtype=np.float32)) if bias else None
        self.stride, self.dilation, self.padding = stride, dilation, padding

    def forward(self, x):
        return conv2d(x, self.weight, self.bias, self.stride, self.dilation, self.padding)


class Conv3d(Module):
    def __init__(self, in_channels, out_channels, kernel, stride=1, dilation=1, padding=0, bias=True):
        super().__init__()
        k = (kernel,) * 3 if isinstance(kernel, int) else tuple(kernel)
        fan_in = in_channels * int(np.prod(k))
        self.weight = Parameter(kaiming_uniform((out_channels, in_channels) + k, fan_in))
        self.bias = Parameter(np.zeros(out_channels, dtype=np.float32)) if bias else None
        self.stride, self.dilation, self.padding = stride, dilation, padding

    def forward(self, x):
        return conv3d(x, self.weight, self.bias, self.stride, self.dilation, self.padding)


def batch_norm(x, gamma, beta, running_mean, running_var, training, momentum=0.1, eps=1e-5):
    """Per-channel normalization over (N, H, W) of an NCHW tensor.

    Train mode normalizes by batch statistics and updates the running
    buffers in place (unbiased variance, torch convention); eval mode
    normalizes by the running statistics.
    """
    axes = (0,) + tuple(range(2, x.ndim))
    bshape = (1, -1) + (1,) * (x.ndim - 2)
    gam = gamma.data.reshape(bshape)
    if training:
        mean = x.data.mean(axis=axes)
        var = x.data.var(axis=axes)
        m = x.data.size // x.data.shape[1]
        running_mean.data = (1 - momentum) * running_mean.data + momentum * mean
        unbiased = var * (m / (m - 1)) if m > 1 else var
        running_var.data = (1 - momentum) * running_var.data + momentum * unbiased
        invstd = 1.0 / np.sqrt(var + eps)
        xhat = (x.data - mean.reshape(bshape)) * invstd.reshape(bshape)
        out = gam * xhat + beta.data.reshape(bshape)

        def vjp(g):
            dbeta = g.sum(axis=axes)
            dgamma = (g * xhat).sum(axis=axes)
            gm = g.mean(axis=axes).reshape(bshape)
            gxm = (g * xhat).mean(axis=axes).reshape(bshape)
            dx = (gam * invstd.reshape(bshape)) * (g - gm - xhat * gxm)
            return dx.astype(x.data.dtype), dgamma, dbeta

        return make_op(out.astype(x.data.dtype), (x, gamma, beta), vjp)

    invstd = (1.0 / np.sqrt(running_var.data + eps)).reshape(bshape)
    xhat = (x.data - running_mean.data.reshape(bshape)) * invstd
    out = gam * xhat + beta.data.reshape(bshape)

    def vjp(g):
        dbeta = g.sum(axis=axes)
        dgamma = (g * xhat).sum(axis=axes)
        dx = (g * gam * invstd).astype(x.data.dtype)
        return dx, dgamma, dbeta

    return make_op(out.astype(x.data.dtype), (x, gamma, beta), vjp)


class BatchNorm2d(Module):
    def __init__(self, channels, momentum=0.1, eps=1e-5):
        super().__init__()
        self.gamma = Parameter(np.ones(channels, dtype=np.float32))
        self.beta = Parameter(np.zeros(channels, dtype=np.float32))
        self.running_mean = Buffer(np.zeros(channels, dtype=np.float32))
        self.running_var = Buffer(np.ones(channels, dtype=np.float32))
        self.momentum, self.eps = momentum, eps

    def forward(self, x):
        return batch_norm(
            x, self.gamma, self.beta, self.running_mean, self.running_var,
            self.training, self.momentum, self.eps,
        )


class LeakyReLU(Module):
    def __init__(self, slope=0.1):
        super().__init__()
        self.slope = slope

    def forward(self, x):
        return leaky_relu(x, self.slope)


# ---- checkpoints ----------------------------------------------------------

_MAGIC = "lfweights 1"


def save_checkpoint(model, path):
    """Text manifest of name/shape lines, then flat little-endian float32 data."""
    entries = list(model.named_arrays())
    with open(path, "wb") as f:
        lines = [_MAGIC] + [f"{name} {'x'.join(str(s) for s in arr.data.shape)}" for name, arr in entries]
        f.write(("\n".join(lines) + "\n---\n").encode("ascii"))
        for _, arr in entries:
            f.write(np.ascontiguousarray(arr.data, dtype="<f4").tobytes())


def read_manifest(path):
    """Parameter/buffer names and shapes recorded in a checkpoint."""
    header, _ = _split_checkpoint(path)
    out = []
    for line in header:
        name, shape = line.rsplit(" ", 1)
        dims = tuple(int(s) for s in shape.split("x")) if shape else ()
        out.append((name, dims))
    return out


def _split_checkpoint(path):
    with open(path, "rb") as f:
        blob = f.read()
    sep = b"\n---\n"
    pos = blob.find(sep)
    if pos < 0:
        raise ValueError(f"{path}: not a checkpoint file (missing manifest separator)")
    header = blob[:pos].decode("ascii").splitlines()
    if not header or header[0] != _MAGIC:
        raise ValueError(f"{path}: bad checkpoint magic")
    return header[1:], blob[pos + len(sep):]


def load_checkpoint(model, path):
    """Load a checkpoint saved by save_checkpoint into a structurally equal model."""
    header, payload = _split_checkpoint(path)
    floats = np.frombuffer(payload, dtype="<f4")
    entries = dict(model.named_arrays())
    offset = 0
    for line in header:
        name, shape = line.rsplit(" ", 1)
        dims = tuple(int(s) for s in shape.split("x")) if shape else ()
        n = int(np.prod(dims)) if dims else 1
        if name not in entries:
            raise ValueError(f"{path}: checkpoint entry {name!r} not present in model")
        target = entries[name]
        if tuple(target.data.shape) != dims:
            raise ValueError(
                f"{path}: shape mismatch for {name!r}: checkpoint {dims}, model {tuple(target.data.shape)}"
            )
        target.data = floats[offset:offset + n].reshape(dims).astype(target.data.dtype)
        offset += n
    if offset != floats.size:
        raise ValueError(f"{path}: {floats.size - offset} unread values in checkpoint payload")
    return model
