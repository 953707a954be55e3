"""Light-field containers and layout algebra.

A light field is stored as a 4D grayscale array indexed [u, v, h, w]
(two angular, two spatial dimensions), values normalized to [0, 1].
The macro-pixel image (MacPI) regroups the same samples by spatial
coordinate: MacPI[A*h + u, A*w + v] = L[u, v, h, w], size A*H x A*W.
Both conversions are pure element permutations and therefore lossless.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np


class LayoutError(ValueError):
    """Raised when an array does not satisfy a layout precondition."""


@dataclass(frozen=True)
class LightField:
    """4D grayscale light field, data indexed [u, v, h, w]."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 4:
            raise LayoutError(f"light field data must be 4D [u, v, h, w], got shape {arr.shape}")
        if any(s < 1 for s in arr.shape):
            raise LayoutError(f"all extents must be >= 1, got {arr.shape}")
        object.__setattr__(self, "data", arr)

    @property
    def ang_res_u(self):
        return self.data.shape[0]

    @property
    def ang_res_v(self):
        return self.data.shape[1]

    @property
    def spa_res(self):
        return self.data.shape[2:4]

    @property
    def is_square(self):
        return self.ang_res_u == self.ang_res_v

    @property
    def ang_res(self):
        if not self.is_square:
            raise LayoutError(
                f"angular resolution {self.ang_res_u}x{self.ang_res_v} is not square"
            )
        return self.ang_res_u

    def view(self, u, v):
        return self.data[u, v]

    def center_view(self):
        return self.data[self.ang_res_u // 2, self.ang_res_v // 2]


@dataclass(frozen=True)
class MacPIImage:
    """2D macro-pixel layout of a square light field."""

    data: np.ndarray
    ang_res: int

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 2:
            raise LayoutError(f"MacPI data must be 2D, got shape {arr.shape}")
        if self.ang_res < 1:
            raise LayoutError(f"ang_res must be >= 1, got {self.ang_res}")
        if arr.shape[0] % self.ang_res or arr.shape[1] % self.ang_res:
            raise LayoutError(
                f"MacPI size {arr.shape} not divisible by ang_res {self.ang_res}"
            )
        object.__setattr__(self, "data", arr)

    @property
    def spa_res(self):
        return self.data.shape[0] // self.ang_res, self.data.shape[1] // self.ang_res


@dataclass(frozen=True)
class EPISlice:
    """2D spatial-angular slice: V x W (horizontal) or U x H (vertical)."""

    data: np.ndarray
    orientation: str
    fixed_coords: tuple

    def __post_init__(self):
        if self.orientation not in ("horizontal", "vertical"):
            raise LayoutError(f"bad EPI orientation {self.orientation!r}")
        if np.asarray(self.data).ndim != 2:
            raise LayoutError("EPI data must be 2D")


class AugmentOp(enum.Enum):
    FLIP_HORIZONTAL = "flip_horizontal"
    FLIP_VERTICAL = "flip_vertical"
    ROTATE90 = "rotate90"


# ---- layout conversions ------------------------------------------------------


def sai_to_macpi(lf: LightField) -> MacPIImage:
    """Regroup views into macro-pixels: MacPI[A*h+u, A*w+v] = L[u, v, h, w]."""
    if not lf.is_square:
        raise LayoutError(
            f"SAI-to-MacPI needs a square angular resolution, got {lf.ang_res_u}x{lf.ang_res_v}"
        )
    a = lf.ang_res
    h, w = lf.spa_res
    tiled = lf.data.transpose(2, 0, 3, 1).reshape(a * h, a * w)
    return MacPIImage(np.ascontiguousarray(tiled), a)


def macpi_to_sai(macpi: MacPIImage) -> LightField:
    """Exact inverse of sai_to_macpi."""
    a = macpi.ang_res
    h, w = macpi.spa_res
    lf = macpi.data.reshape(h, a, w, a).transpose(1, 3, 0, 2)
    return LightField(np.ascontiguousarray(lf))


def macpi_array_to_views(macpi: np.ndarray, ang_res: int) -> np.ndarray:
    """(..., A*H, A*W) MacPI array -> (..., A, A, H, W) view stack."""
    a = ang_res
    if macpi.shape[-2] % a or macpi.shape[-1] % a:
        raise LayoutError(f"MacPI size {macpi.shape[-2:]} not divisible by ang_res {a}")
    h, w = macpi.shape[-2] // a, macpi.shape[-1] // a
    lead = macpi.shape[:-2]
    nd = len(lead)
    x = macpi.reshape(lead + (h, a, w, a))
    x = np.moveaxis(x, (nd + 1, nd + 3), (nd, nd + 1))
    return np.ascontiguousarray(x)


def views_array_to_macpi(views: np.ndarray) -> np.ndarray:
    """(..., A, A, H, W) view stack -> (..., A*H, A*W) MacPI array."""
    *lead, a1, a2, h, w = views.shape
    if a1 != a2:
        raise LayoutError(f"angular extents must match, got {a1}x{a2}")
    nd = len(lead)
    x = np.moveaxis(views, (nd, nd + 1), (nd + 1, nd + 3))
    return np.ascontiguousarray(x.reshape(tuple(lead) + (a1 * h, a1 * w)))


def lf_to_view_tiles(lf: LightField) -> np.ndarray:
    """Tile views row-major by (u, v): image of size U*H x V*W (on-disk layout)."""
    u, v, h, w = lf.data.shape
    return np.ascontiguousarray(lf.data.transpose(0, 2, 1, 3).reshape(u * h, v * w))


def view_tiles_to_lf(img: np.ndarray, ang_res_u: int, ang_res_v: int = None) -> LightField:
    """Inverse of lf_to_view_tiles."""
    av = ang_res_u if ang_res_v is None else ang_res_v
    au = ang_res_u
    if img.shape[0] % au or img.shape[1] % av:
        raise LayoutError(f"tiled image {img.shape} not divisible by {au}x{av} views")
    h, w = img.shape[0] // au, img.shape[1] // av
    lf = img.reshape(au, h, av, w).transpose(0, 2, 1, 3)
    return LightField(np.ascontiguousarray(lf))


# ---- slicing / augmentation ---------------------------------------------------


def extract_epi(lf: LightField, orientation: str, fixed_a: int, fixed_s: int) -> EPISlice:
    """Horizontal: V x W slice at fixed (u, h). Vertical: U x H slice at fixed (v, w)."""
    u_res, v_res, h_res, w_res = lf.data.shape
    if orientation == "horizontal":
        if not (0 <= fixed_a < u_res and 0 <= fixed_s < h_res):
            raise IndexError(f"EPI indices (u={fixed_a}, h={fixed_s}) out of range")
        return EPISlice(lf.data[fixed_a, :, fixed_s, :].copy(), orientation, (fixed_a, fixed_s))
    if orientation == "vertical":
        if not (0 <= fixed_a < v_res and 0 <= fixed_s < w_res):
            raise IndexError(f"EPI indices (v={fixed_a}, w={fixed_s}) out of range")
        return EPISlice(lf.data[:, fixed_a, :, fixed_s].copy(), orientation, (fixed_a, fixed_s))
    raise LayoutError(f"bad EPI orientation {orientation!r}")


def augment(lf: LightField, op: AugmentOp) -> LightField:
    """Structure-preserving augmentation: spatial and angular axes move together.

    Joint transformation keeps EPI line slopes (hence disparities) intact;
    flipping only the spatial axes would negate them.
    """
    if not lf.is_square:
        raise LayoutError("augmentation requires a square light field")
    d = lf.data
    if op is AugmentOp.FLIP_HORIZONTAL:
        out = d[:, ::-1, :, ::-1]
    elif op is AugmentOp.FLIP_VERTICAL:
        out = d[::-1, :, ::-1, :]
    elif op is AugmentOp.ROTATE90:
        out = np.rot90(np.rot90(d, axes=(2, 3)), axes=(0, 1))
    else:
        raise LayoutError(f"unknown augment op {op!r}")
    return LightField(np.ascontiguousarray(out))


# ---- resampling / patches ------------------------------------------------------


def _cubic_kernel(t, a=-0.5):
    """Keys cubic convolution kernel (a = -0.5 is Catmull-Rom)."""
    t = np.abs(t)
    t2, t3 = t * t, t * t * t
    return np.where(
        t <= 1.0,
        (a + 2.0) * t3 - (a + 3.0) * t2 + 1.0,
        np.where(t < 2.0, a * t3 - 5.0 * a * t2 + 8.0 * a * t - 4.0 * a, 0.0),
    )


def _resize_axis(img, out_n, scale, axis):
    in_n = img.shape[axis]
    # center-aligned sampling; source taps clamped at the borders
    src = (np.arange(out_n) + 0.5) / scale - 0.5
    base = np.floor(src).astype(int)
    frac = src - base
    acc = np.zeros(img.shape[:axis] + (out_n,) + img.shape[axis + 1:], dtype=np.float64)
    for k in range(-1, 3):
        idx = np.clip(base + k, 0, in_n - 1)
        wt = _cubic_kernel(frac - k)
        taken = np.take(img, idx, axis=axis)
        shape = [1] * img.ndim
        shape[axis] = out_n
        acc += taken * wt.reshape(shape)
    return acc


def bicubic_resize(img: np.ndarray, scale: float) -> np.ndarray:
    """Separable bicubic resampling (Catmull-Rom, a = -0.5, clamped edges)."""
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    img = np.asarray(img)
    if img.ndim != 2:
        raise LayoutError(f"bicubic_resize expects a 2D image, got shape {img.shape}")
    out_h = max(1, int(round(img.shape[0] * scale)))
    out_w = max(1, int(round(img.shape[1] * scale)))
    out = _resize_axis(img.astype(np.float64), out_h, scale, axis=0)
    out = _resize_axis(out, out_w, scale, axis=1)
    return out.astype(img.dtype) if img.dtype in (np.float32, np.float64) else out


def lf_bicubic_resize(lf: LightField, scale: float) -> LightField:
    """Per-view bicubic resampling; angular dimensions untouched."""
    views = [[bicubic_resize(lf.data[u, v], scale) for v in range(lf.ang_res_v)]
             for u in range(lf.ang_res_u)]
    return LightField(np.asarray(views, dtype=lf.data.dtype))


def crop_patches(lf: LightField, size: int, stride: int) -> list:
    """Spatial sliding window applied identically to every view."""
    h, w = lf.spa_res
    if size > min(h, w):
        raise LayoutError(f"patch size {size} exceeds spatial extent {(h, w)}")
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    patches = []
    for y in range(0, h - size + 1, stride):
        for x in range(0, w - size + 1, stride):
            patches.append(LightField(lf.data[:, :, y:y + size, x:x + size].copy()))
    return patches
