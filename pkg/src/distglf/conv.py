"""Strided/dilated cross-correlation in 2D and 3D.

Forward gathers the kernel taps into a GEMM-ready column buffer with one
strided slice copy per tap, then contracts against the kernel in a single
batched matmul; backward runs the transposed GEMMs and scatters through
the same tap slices. Convolution here means cross-correlation (no kernel
flip), the deep-learning convention.

Under no_grad() the column buffer comes from a thread-local workspace, so
repeated inference does not re-fault large allocations; when a graph is
recorded the buffer is fresh and kept for the backward pass.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np

from .tensor import Tensor, make_op

_tls = threading.local()


def _workspace(name, shape, dtype):
    buffers = getattr(_tls, "buffers", None)
    if buffers is None:
        buffers = _tls.buffers = {}
    need = int(np.prod(shape))
    buf = buffers.get(name)
    if buf is None or buf.size < need or buf.dtype != dtype:
        buf = buffers[name] = np.empty(need, dtype=dtype)
    return buf[:need].reshape(shape)


def _per_axis(value, n, name):
    """Normalize an int or length-n sequence to an n-tuple of ints >= 1."""
    if isinstance(value, (int, np.integer)):
        out = (int(value),) * n
    else:
        out = tuple(int(v) for v in value)
        if len(out) != n:
            raise ValueError(f"{name} must have {n} entries, got {len(out)}")
    if any(v < 1 for v in out):
        raise ValueError(f"{name} entries must be >= 1, got {out}")
    return out


def _pad_pairs(padding, n):
    """Normalize padding to ((lo, hi), ...) per axis; plain ints pad both sides."""
    if isinstance(padding, (int, np.integer)):
        return ((int(padding),) * 2,) * n
    padding = tuple(padding)
    if len(padding) != n:
        raise ValueError(f"padding must have {n} entries, got {len(padding)}")
    pairs = []
    for p in padding:
        if isinstance(p, (int, np.integer)):
            pairs.append((int(p), int(p)))
        else:
            lo, hi = p
            pairs.append((int(lo), int(hi)))
    if any(lo < 0 or hi < 0 for lo, hi in pairs):
        raise ValueError(f"padding must be non-negative, got {pairs}")
    return tuple(pairs)


@dataclass(frozen=True)
class ConvSpec:
    """Geometry of one convolution: kernel/stride/dilation/padding (+channels)."""

    kernel: tuple
    stride: tuple
    dilation: tuple
    padding: tuple  # ((lo, hi), ...) per spatial axis
    in_channels: int | None = None
    out_channels: int | None = None

    def __post_init__(self):
        n = len(self.kernel)
        object.__setattr__(self, "kernel", _per_axis(self.kernel, n, "kernel"))
        object.__setattr__(self, "stride", _per_axis(self.stride, n, "stride"))
        object.__setattr__(self, "dilation", _per_axis(self.dilation, n, "dilation"))
        object.__setattr__(self, "padding", _pad_pairs(self.padding, n))

    @property
    def ndim(self):
        return len(self.kernel)

    def out_shape(self, in_shape):
        """Spatial output extents: floor((in + lo + hi - dil*(k-1) - 1)/stride) + 1."""
        if len(in_shape) != self.ndim:
            raise ValueError(f"expected {self.ndim} spatial extents, got {len(in_shape)}")
        out = []
        for x, k, s, d, (lo, hi) in zip(in_shape, self.kernel, self.stride, self.dilation, self.padding):
            span = x + lo + hi - d * (k - 1) - 1
            if span < 0:
                raise ValueError(f"non-positive output extent for input {in_shape} with {self}")
            out.append(span // s + 1)
        return tuple(out)


def make_conv_spec(kernel, stride=1, dilation=1, padding=0, in_channels=None, out_channels=None):
    n = len(kernel) if isinstance(kernel, (tuple, list)) else 2
    return ConvSpec(
        kernel=_per_axis(kernel, n, "kernel"),
        stride=_per_axis(stride, n, "stride"),
        dilation=_per_axis(dilation, n, "dilation"),
        padding=_pad_pairs(padding, n),
        in_channels=in_channels,
        out_channels=out_channels,
    )


# ---- raw numpy kernels (shared by the autograd ops and the benchmark) ----


def _tap_ranges(spec, in_sizes, out_sizes):
    """Per tap: (kernel index, dst output ranges, src input slices, fully-inside flag).

    Zero padding is never materialized; each tap slice is intersected with
    the real input and the out-of-bounds remainder is zero-filled in the
    column buffer instead.
    """
    taps = []
    for k_idx in np.ndindex(*spec.kernel):
        dst, src, full = [], [], True
        for ax in range(spec.ndim):
            start = k_idx[ax] * spec.dilation[ax] - spec.padding[ax][0]
            st = spec.stride[ax]
            lo = 0 if start >= 0 else (-start + st - 1) // st
            hi = min(out_sizes[ax], max(lo, (in_sizes[ax] - start + st - 1) // st))
            if lo > 0 or hi < out_sizes[ax]:
                full = False
            dst.append(slice(lo, hi))
            src.append(slice(start + lo * st, start + hi * st, st))
        taps.append((k_idx, tuple(dst), tuple(src), full))
    return taps


def _gather_cols(x, spec, out_sizes, scratch):
    """Column buffer (N, C, *kernel, *out), one strided copy per tap."""
    n, c = x.shape[:2]
    shape = (n, c) + spec.kernel + out_sizes
    cols = _workspace("conv_cols", shape, x.dtype) if scratch else np.empty(shape, dtype=x.dtype)
    lead = (slice(None), slice(None))
    for k_idx, dst, src, full in _tap_ranges(spec, x.shape[2:], out_sizes):
        tap = cols[lead + k_idx]
        if not full:
            tap[...] = 0
        if all(s.stop > s.start for s in dst):
            np.copyto(tap[lead + dst], x[lead + src])
    return cols


def conv_forward(x, w, b, spec, keep_ctx=False):
    """x: (N, C, *spatial); w: (O, C, *kernel); returns (out, ctx for backward)."""
    n_sp = spec.ndim
    if x.ndim != 2 + n_sp:
        raise ValueError(f"expected {2 + n_sp}-d input, got shape {x.shape}")
    if w.shape[1] != x.shape[1]:
        raise ValueError(f"channel mismatch: input {x.shape[1]}, kernel {w.shape[1]}")
    if tuple(w.shape[2:]) != spec.kernel:
        raise ValueError(f"kernel shape {w.shape[2:]} does not match spec {spec.kernel}")
    out_sizes = spec.out_shape(x.shape[2:])
    cols = _gather_cols(x, spec, out_sizes, scratch=not keep_ctx)
    n = x.shape[0]
    o = w.shape[0]
    ckk = w.size // o
    hw = int(np.prod(out_sizes))
    m = cols.reshape(n, ckk, hw)
    w_mat = np.ascontiguousarray(w.reshape(o, ckk))
    out = np.matmul(w_mat, m).reshape((n, o) + out_sizes)
    if b is not None:
        out += b.reshape((1, -1) + (1,) * n_sp)
    return out, ((x.shape, cols, out_sizes) if keep_ctx else None)


def conv_backward(g, ctx, w, spec, need_dx=True, need_dw=True):
    """Gradients for conv_forward given upstream g: (N, O, *out)."""
    x_shape, cols, out_sizes = ctx
    n_sp = spec.ndim
    n, o = g.shape[:2]
    ckk = w.size // o
    hw = int(np.prod(out_sizes))
    g2 = np.ascontiguousarray(g.reshape(n, o, hw))
    dw = dx = None
    if need_dw:
        m = cols.reshape(n, ckk, hw)
        dw = np.matmul(g2, m.transpose(0, 2, 1)).sum(axis=0).reshape(w.shape)
    if need_dx:
        w_mat = np.ascontiguousarray(w.reshape(o, ckk))
        t = np.matmul(w_mat.T, g2).reshape((n, x_shape[1]) + spec.kernel + out_sizes)
        dx = np.zeros(x_shape, dtype=g.dtype)
        lead = (slice(None), slice(None))
        for k_idx, dst, src, _ in _tap_ranges(spec, x_shape[2:], out_sizes):
            if all(s.stop > s.start for s in dst):
                dx[lead + src] += t[lead + k_idx + dst]
    db = g.sum(axis=(0,) + tuple(range(2, 2 + n_sp)))
    return dx, dw, db


# ---- autograd-facing ops ----


def _conv(x, w, b, spec):
    from . import tensor as _t

    track = (x.requires_grad or w.requires_grad or (b is not None and b.requires_grad))
    keep = track and _t._grad_enabled
    out, ctx = conv_forward(x.data, w.data, None if b is None else b.data, spec, keep_ctx=keep)
    if not keep:
        return Tensor(out)
    parents = (x, w) if b is None else (x, w, b)

    def vjp(g):
        dx, dw, db = conv_backward(
            g, ctx, w.data, spec, need_dx=x.requires_grad, need_dw=w.requires_grad
        )
        if b is None:
            return dx, dw
        return dx, dw, db

    return make_op(out, parents, vjp)


def conv2d(x, w, b=None, stride=1, dilation=1, padding=0):
    """2D cross-correlation; x (N,C,H,W), w (O,C,kh,kw), optional bias (O,)."""
    spec = make_conv_spec(tuple(w.shape[2:]), stride, dilation, padding)
    return _conv(x, w, b, spec)


def conv3d(x, w, b=None, stride=1, dilation=1, padding=0):
    """3D cross-correlation; x (N,C,D,H,W), w (O,C,kd,kh,kw)."""
    spec = make_conv_spec(tuple(w.shape[2:]), stride, dilation, padding)
    return _conv(x, w, b, spec)


def conv_with_spec(x, w, b, spec):
    """Convolution driven by an explicit ConvSpec (extractor application path)."""
    if spec.in_channels is not None and x.shape[1] != spec.in_channels:
        raise ValueError(f"expected {spec.in_channels} input channels, got {x.shape[1]}")
    if spec.out_channels is not None and w.shape[0] != spec.out_channels:
        raise ValueError(f"expected {spec.out_channels} output channels, got {w.shape[0]}")
    if isinstance(x, Tensor):
        return _conv(x, w, b, spec)
    out, _ = conv_forward(x, w, b, spec)
    return out
