"""Brute-force reference semantics for the structure-aware kernels.

Each oracle realizes what a kernel claims to compute, by explicit
per-subspace evaluation on the view stack (offset-slice accumulation and
einsum contractions, no im2col), so agreement with apply_extractor is a
genuine two-route check. All oracles take and return plain numpy arrays.
"""

from __future__ import annotations

import numpy as np

from .extractors import compute_view_offset
from .lightfield import macpi_array_to_views, views_array_to_macpi


def sample_shift(img, dy, dx):
    """out[..., y, x] = img[..., y+dy, x+dx], zero fill outside the frame."""
    if dy == 0 and dx == 0:
        return img
    h, w = img.shape[-2:]
    out = np.zeros_like(img)
    y0, y1 = max(0, -dy), min(h, h - dy)
    x0, x1 = max(0, -dx), min(w, w - dx)
    if y0 < y1 and x0 < x1:
        out[..., y0:y1, x0:x1] = img[..., y0 + dy:y1 + dy, x0 + dx:x1 + dx]
    return out


def oracle_per_view(macpi, ang_res, weights, bias=None):
    """SFE reference: 3x3 pad-1 convolution on every view, re-tiled to MacPI."""
    a = ang_res
    views = macpi_array_to_views(macpi, a)  # (N, C, A, A, H, W)
    n, _, _, _, h, w = views.shape
    vp = np.pad(views, [(0, 0)] * 4 + [(1, 1), (1, 1)])
    out = np.zeros((n, weights.shape[0], a, a, h, w), dtype=macpi.dtype)
    for i in range(3):
        for j in range(3):
            out += np.einsum(
                "oc,ncabyx->noabyx", weights[:, :, i, j], vp[..., i:i + h, j:j + w]
            )
    if bias is not None:
        out += bias.reshape(1, -1, 1, 1, 1, 1)
    return views_array_to_macpi(out)


def oracle_macro_pixel(macpi, ang_res, weights, bias=None):
    """AFE reference: each macro-pixel contracted independently against the AxA kernel."""
    views = macpi_array_to_views(macpi, ang_res)
    out = np.einsum("ocuv,ncuvhw->nohw", weights, views, optimize=True)
    if bias is not None:
        out += bias.reshape(1, -1, 1, 1)
    return np.ascontiguousarray(out)


def _epi_kernel(weights, ang_res):
    """Rearrange a flat 1xA^2 (or A^2x1) kernel to [spatial offset q, angular index]."""
    o, c = weights.shape[:2]
    return weights.reshape(o, c, ang_res, ang_res)


def oracle_epi_h(macpi, ang_res, weights, bias=None):
    """EFE-H reference: AxA stride-1 conv (same-padded along W) on every horizontal EPI."""
    a = ang_res
    c_half = (a - 1) // 2
    views = macpi_array_to_views(macpi, a)  # (N, C, U, V, H, W)
    n, _, _, _, h, w = views.shape
    k2 = _epi_kernel(weights[:, :, 0, :], a)  # (O, C, q, v)
    vp = np.pad(views, [(0, 0)] * 5 + [(c_half, c_half)])
    out = np.zeros((n, weights.shape[0], a, h, w), dtype=macpi.dtype)  # (N, O, U, H, W)
    for q in range(a):
        out += np.einsum(
            "ocv,ncuvyx->nouyx", k2[:, :, q, :], vp[..., q:q + w], optimize=True
        )
    if bias is not None:
        out += bias.reshape(1, -1, 1, 1, 1)
    # interleave rows back to the MacPI row order y = A*h + u
    out = out.transpose(0, 1, 3, 2, 4).reshape(n, -1, a * h, w)
    return np.ascontiguousarray(out)


def oracle_epi_v(macpi, ang_res, weights, bias=None):
    """EFE-V reference: AxA stride-1 conv (same-padded along H) on every vertical EPI."""
    a = ang_res
    c_half = (a - 1) // 2
    views = macpi_array_to_views(macpi, a)
    n, _, _, _, h, w = views.shape
    k2 = _epi_kernel(weights[:, :, :, 0], a)  # (O, C, q, u)
    vp = np.pad(views, [(0, 0)] * 4 + [(c_half, c_half), (0, 0)])
    out = np.zeros((n, weights.shape[0], a, h, w), dtype=macpi.dtype)  # (N, O, V, H, W)
    for q in range(a):
        out += np.einsum(
            "ocu,ncuvyx->novyx", k2[:, :, q, :], vp[..., q:q + h, :], optimize=True
        )
    if bias is not None:
        out += bias.reshape(1, -1, 1, 1, 1)
    # interleave columns back to the MacPI column order x = A*w + v
    out = out.transpose(0, 1, 3, 4, 2).reshape(n, -1, h, a * w)
    return np.ascontiguousarray(out)


def oracle_shift_and_concat(macpi, ang_res, weights, bias, levels):
    """Cost volume by explicit per-view shifting, the semantics DS-AFE reproduces.

    For each disparity level every view is shifted to the center view's
    frame by its offset (integer shift, zero fill), the shifted views are
    re-tiled into a MacPI, and an AxA stride-A convolution is applied.
    Returns ((N, len(levels), O, H, W) volume, number of nonzero shifts).
    """
    a = ang_res
    views = macpi_array_to_views(macpi, a)
    n, c, _, _, h, w = views.shape
    uc = vc = (a - 1) // 2
    out = np.empty((n, len(levels), weights.shape[0], h, w), dtype=macpi.dtype)
    n_shifts = 0
    for li, d in enumerate(levels):
        aligned = np.empty_like(views)
        for u in range(a):
            for v in range(a):
                dy, dx = compute_view_offset(u, v, uc, vc, d)
                if dy == 0 and dx == 0:
                    aligned[:, :, u, v] = views[:, :, u, v]
                else:
                    aligned[:, :, u, v] = sample_shift(views[:, :, u, v], dy, dx)
                    n_shifts += 1
        mac = views_array_to_macpi(aligned)
        blocks = mac.reshape(n, c, h, a, w, a)
        level = np.einsum("ocuv,nchuwv->nohw", weights, blocks, optimize=True)
        if bias is not None:
            level += bias.reshape(1, -1, 1, 1)
        out[:, li] = level
    return out, n_shifts


def interior_margin(levels, ang_res):
    """Border width where zero-fill and zero-padding conventions may differ."""
    dmax = max(abs(int(d)) for d in levels)
    return dmax * (ang_res - 1) // 2 + 1
