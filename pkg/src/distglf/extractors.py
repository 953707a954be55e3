"""Structure-aware convolution specs on macro-pixel images.

Four kernel families, each confined to one light-field subspace when
applied to a MacPI of angular resolution A:

  SFE    3x3, stride 1, dilation A, pad A      -> per-view spatial conv, output A*H x A*W
  AFE    AxA, stride A                         -> per-macro-pixel conv, output H x W
  EFE-H  1xA^2, stride (1, A), h-pad A(A-1)/2  -> per-horizontal-EPI conv, output A*H x W
  EFE-V  transposed EFE-H                      -> per-vertical-EPI conv, output H x A*W
  DS-AFE AxA, stride A, dilation/padding below -> per-macro-pixel conv across views at
                                                  one preset integer disparity, output H x W

DS-AFE geometry for disparity d:
  dila = d*A - 1           (d > 0)      pad = d*A*(A-1)/2 - A + 1   (d > 0)
         -d*A + 1          (d <= 0)           -d*A*(A-1)/2          (d <= 0)
At d = 0 this degenerates to a plain AFE.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conv import ConvSpec, conv_with_spec, make_conv_spec
from .lightfield import LayoutError
from .tensor import Tensor, flip

SFE = "sfe"
AFE = "afe"
EFE_H = "efe_h"
EFE_V = "efe_v"
DS_AFE = "ds_afe"


@dataclass(frozen=True)
class ExtractorSpec:
    kind: str
    ang_res: int
    conv: ConvSpec
    disparity: int | None = None


@dataclass(frozen=True)
class DisparityLevelSet:
    """Ordered integer disparity levels, default -4..4."""

    levels: tuple = tuple(range(-4, 5))

    def __post_init__(self):
        lv = tuple(int(d) for d in self.levels)
        if len(lv) < 1:
            raise ValueError("disparity level set must not be empty")
        if any(b <= a for a, b in zip(lv, lv[1:])):
            raise ValueError(f"disparity levels must be strictly increasing, got {lv}")
        object.__setattr__(self, "levels", lv)

    def __len__(self):
        return len(self.levels)

    def __iter__(self):
        return iter(self.levels)


def _check_ang_res(ang_res):
    if ang_res < 1:
        raise LayoutError(f"ang_res must be >= 1, got {ang_res}")


def make_sfe(ang_res: int) -> ExtractorSpec:
    """Spatial feature extractor; same MacPI size in and out."""
    _check_ang_res(ang_res)
    conv = make_conv_spec((3, 3), stride=1, dilation=ang_res, padding=ang_res)
    return ExtractorSpec(SFE, ang_res, conv)


def make_afe(ang_res: int) -> ExtractorSpec:
    """Angular feature extractor; A*H x A*W MacPI in, H x W out."""
    _check_ang_res(ang_res)
    conv = make_conv_spec((ang_res, ang_res), stride=ang_res)
    return ExtractorSpec(AFE, ang_res, conv)


def make_efe(ang_res: int, orientation: str, strict: bool = True) -> ExtractorSpec:
    """EPI feature extractor, horizontal ('h') or vertical ('v').

    Zero padding of A(A-1)/2 along the strided axis keeps the output at
    A*H x W (H-variant); the padding is a multiple of A only for odd A,
    so even A breaks view alignment and is rejected unless strict=False.
    """
    _check_ang_res(ang_res)
    if orientation not in ("h", "v"):
        raise ValueError(f"orientation must be 'h' or 'v', got {orientation!r}")
    if strict and ang_res % 2 == 0:
        raise LayoutError(
            f"EPI extractor requires odd ang_res in strict mode, got {ang_res}"
        )
    a = ang_res
    pad = a * (a - 1) // 2
    if orientation == "h":
        conv = make_conv_spec((1, a * a), stride=(1, a), padding=((0, 0), (pad, pad)))
        return ExtractorSpec(EFE_H, a, conv)
    conv = make_conv_spec((a * a, 1), stride=(a, 1), padding=((pad, pad), (0, 0)))
    return ExtractorSpec(EFE_V, a, conv)


def ds_afe_geometry(ang_res: int, disparity: int):
    """Dilation and padding selecting correspondences at one integer disparity."""
    a, d = ang_res, int(disparity)
    if d > 0:
        return d * a - 1, d * a * (a - 1) // 2 - a + 1
    return -d * a + 1, -d * a * (a - 1) // 2


def make_ds_afe(ang_res: int, disparity: int) -> ExtractorSpec:
    """Disparity-selective AFE; output H x W for any preset integer disparity."""
    _check_ang_res(ang_res)
    if ang_res < 2:
        raise LayoutError(f"DS-AFE needs ang_res >= 2, got {ang_res}")
    dila, pad = ds_afe_geometry(ang_res, disparity)
    conv = make_conv_spec((ang_res, ang_res), stride=ang_res, dilation=dila, padding=pad)
    return ExtractorSpec(DS_AFE, ang_res, conv, disparity=int(disparity))


def compute_view_offset(u, v, u_c, v_c, d):
    """Spatial offset of the pixel in view (u, v) matching the center view's at disparity d."""
    return d * (u_c - u), d * (v_c - v)


def apply_extractor(spec: ExtractorSpec, x, weights, bias=None):
    """Run an extractor on a MacPI-layout (N, C, A*H, A*W) tensor or array.

    Output layout per kind: SFE keeps the MacPI grid (A*H x A*W); AFE and
    DS-AFE produce the spatial grid (H x W); EFE-H produces A*H x W and
    EFE-V produces H x A*W.

    Weights index views canonically: element (u, v) of an angular kernel
    weights view (u, v). The DS-AFE sampling pattern visits views in
    reverse order when d > 0, so the kernel is flipped on both angular
    axes before the convolution to keep that association uniform in d.
    """
    a = spec.ang_res
    if x.shape[-2] % a or x.shape[-1] % a:
        raise LayoutError(
            f"input spatial size {x.shape[-2:]} not divisible by ang_res {a}"
        )
    if tuple(weights.shape[2:]) != spec.conv.kernel:
        raise ValueError(
            f"weights kernel {tuple(weights.shape[2:])} does not match spec {spec.conv.kernel}"
        )
    if spec.kind == DS_AFE and spec.disparity > 0:
        weights = flip(weights, (2, 3)) if isinstance(weights, Tensor) else weights[:, :, ::-1, ::-1]
    return conv_with_spec(x, weights, bias, spec.conv)
