"""Sub-pixel shuffling and MacPI/SAI layout moves on NCHW feature tensors.

All functions are compositions of reshape/transpose, so they are exact
bijections (bit-wise invertible) and differentiable. Channel ordering for
the 2D shuffle is c*r*r + dy*r + dx (row-major within each r x r block);
the 1D shuffles use c*r + j along their single axis. With these
conventions a shuffle along w followed by one along h equals the 2D
shuffle with the identity channel permutation.
"""

from __future__ import annotations

from .tensor import Tensor, reshape, transpose


def _dims(x):
    if x.ndim != 4:
        raise ValueError(f"expected NCHW tensor, got shape {tuple(x.shape)}")
    return x.shape


def pixel_shuffle_2d(x, r):
    """(N, C*r*r, H, W) -> (N, C, r*H, r*W); out[.., r*h+dy, r*w+dx] = in[c*r*r + dy*r + dx, h, w]."""
    n, c, h, w = _dims(x)
    if c % (r * r) != 0:
        raise ValueError(f"channels {c} not divisible by r*r = {r * r}")
    if r == 1:
        return x
    co = c // (r * r)
    x = reshape(x, (n, co, r, r, h, w))
    x = transpose(x, (0, 1, 4, 2, 5, 3))  # (N, C, H, dy, W, dx)
    return reshape(x, (n, co, r * h, r * w))


def pixel_unshuffle_2d(x, r):
    """Exact inverse of pixel_shuffle_2d."""
    n, c, h, w = _dims(x)
    if h % r != 0 or w % r != 0:
        raise ValueError(f"spatial size {(h, w)} not divisible by r = {r}")
    if r == 1:
        return x
    x = reshape(x, (n, c, h // r, r, w // r, r))
    x = transpose(x, (0, 1, 3, 5, 2, 4))
    return reshape(x, (n, c * r * r, h // r, w // r))


def pixel_shuffle_1d(x, r, axis):
    """Interleave channel groups along one spatial axis ('h' or 'w')."""
    n, c, h, w = _dims(x)
    if c % r != 0:
        raise ValueError(f"channels {c} not divisible by r = {r}")
    if r == 1:
        return x
    co = c // r
    x = reshape(x, (n, co, r, h, w))
    if axis == "w":
        x = transpose(x, (0, 1, 3, 4, 2))  # (N, C, H, W, j)
        return reshape(x, (n, co, h, r * w))
    if axis == "h":
        x = transpose(x, (0, 1, 3, 2, 4))  # (N, C, H, j, W)
        return reshape(x, (n, co, r * h, w))
    raise ValueError(f"axis must be 'h' or 'w', got {axis!r}")


def pixel_unshuffle_1d(x, r, axis):
    """Exact inverse of pixel_shuffle_1d."""
    n, c, h, w = _dims(x)
    if r == 1:
        return x
    if axis == "w":
        if w % r != 0:
            raise ValueError(f"width {w} not divisible by r = {r}")
        x = reshape(x, (n, c, h, w // r, r))
        x = transpose(x, (0, 1, 4, 2, 3))
        return reshape(x, (n, c * r, h, w // r))
    if axis == "h":
        if h % r != 0:
            raise ValueError(f"height {h} not divisible by r = {r}")
        x = reshape(x, (n, c, h // r, r, w))
        x = transpose(x, (0, 1, 3, 2, 4))
        return reshape(x, (n, c * r, h // r, w))
    raise ValueError(f"axis must be 'h' or 'w', got {axis!r}")


def macpi_to_views(x, ang_res):
    """MacPI feature (N, C, A*H, A*W) -> tiled SAI feature, view (u, v) at tile (u*H, v*W)."""
    n, c, hh, ww = _dims(x)
    a = ang_res
    if hh % a != 0 or ww % a != 0:
        raise ValueError(f"MacPI size {(hh, ww)} not divisible by ang_res {a}")
    h, w = hh // a, ww // a
    x = reshape(x, (n, c, h, a, w, a))      # (h, u, w, v)
    x = transpose(x, (0, 1, 3, 2, 5, 4))    # (u, h, v, w)
    return reshape(x, (n, c, a * h, a * w))


def views_to_macpi(x, ang_res):
    """Tiled SAI feature -> MacPI feature; inverse of macpi_to_views."""
    n, c, hh, ww = _dims(x)
    a = ang_res
    if hh % a != 0 or ww % a != 0:
        raise ValueError(f"tiled size {(hh, ww)} not divisible by ang_res {a}")
    h, w = hh // a, ww // a
    x = reshape(x, (n, c, a, h, a, w))      # (u, h, v, w)
    x = transpose(x, (0, 1, 3, 2, 5, 4))    # (h, u, w, v)
    return reshape(x, (n, c, a * h, a * w))
