"""The three network assemblies built from the structure-aware kernels.

DistgSSR (spatial super-resolution), DistgASR (angular super-resolution)
and DistgDisp (disparity estimation) all run on MacPI-layout features.
Configs default to the published widths/depths where stated; tests use
much smaller instantiations of the same wiring.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import nn
from .extractors import (
    DS_AFE,
    DisparityLevelSet,
    apply_extractor,
    make_afe,
    make_ds_afe,
    make_efe,
    make_sfe,
)
from .lightfield import (
    LayoutError,
    LightField,
    MacPIImage,
    macpi_to_sai,
    sai_to_macpi,
    view_tiles_to_lf,
)
from .nn import Conv2d, Conv3d, Module, ModuleList, Parameter
from .optim import Adam
from .shuffle import macpi_to_views, pixel_shuffle_1d, pixel_shuffle_2d
from .tensor import Tensor, add, concat, l1_loss, leaky_relu, no_grad, reshape, softmax, stack, tsum, transpose

LEAK = 0.1


# ---- configs -----------------------------------------------------------------


@dataclass(frozen=True)
class DistgSSRConfig:
    ang_res: int = 5
    channels: int = 64
    n_groups: int = 4
    n_blocks: int = 4
    upscale: int = 2
    spatial: bool = True
    angular: bool = True
    epi: bool = True
    epi_weight_sharing: bool = True

    def __post_init__(self):
        if self.channels % 4:
            raise ValueError(f"channels must be divisible by 4, got {self.channels}")
        if self.upscale < 1:
            raise ValueError(f"upscale must be >= 1, got {self.upscale}")
        if not (self.spatial or self.angular or self.epi):
            raise ValueError("at least one branch must be enabled")
        if self.epi and self.ang_res % 2 == 0:
            raise LayoutError(
                f"EPI branches need odd ang_res, got {self.ang_res}; disable epi for even grids"
            )


@dataclass(frozen=True)
class DistgASRConfig:
    ang_res_in: int = 2
    ang_res_out: int = 7
    channels: int = 64
    n_groups: int = 4
    n_blocks: int = 4
    angular: bool = True
    epi: bool | None = None  # None: enabled iff ang_res_in is odd

    def __post_init__(self):
        if self.ang_res_out <= self.ang_res_in:
            raise ValueError(
                f"ang_res_out ({self.ang_res_out}) must exceed ang_res_in ({self.ang_res_in})"
            )
        if self.epi is None:
            object.__setattr__(self, "epi", self.ang_res_in % 2 == 1)
        if self.epi and self.ang_res_in % 2 == 0:
            raise LayoutError(
                f"EPI branches need odd ang_res, got {self.ang_res_in}; use the angular+spatial path"
            )

    @property
    def beta(self):
        return self.ang_res_out / self.ang_res_in


@dataclass(frozen=True)
class DistgDispConfig:
    ang_res: int = 9
    channels: int = 16
    n_spatial_blocks: int = 8
    n_agg_convs: int = 8
    levels: DisparityLevelSet = field(default_factory=DisparityLevelSet)
    shared_level_weights: bool = True

    def __post_init__(self):
        if self.ang_res % 2 == 0:
            raise LayoutError(f"disparity network needs an odd ang_res, got {self.ang_res}")
        if isinstance(self.levels, (tuple, list)):
            object.__setattr__(self, "levels", DisparityLevelSet(tuple(self.levels)))
        if len(self.levels) < 2:
            raise ValueError("need at least 2 disparity levels")


# ---- extractor layers -----------------------------------------------------------


class SpatialConv(Module):
    """SFE layer: per-view 3x3 reach on the MacPI grid."""

    def __init__(self, in_channels, out_channels, ang_res):
        super().__init__()
        self.spec = make_sfe(ang_res)
        self.weight = Parameter(nn.kaiming_uniform((out_channels, in_channels, 3, 3), in_channels * 9))
        self.bias = Parameter(np.zeros(out_channels, dtype=np.float32))

    def forward(self, x):
        return apply_extractor(self.spec, x, self.weight, self.bias)


class AngularConv(Module):
    """AFE layer: one response per macro-pixel."""

    def __init__(self, in_channels, out_channels, ang_res):
        super().__init__()
        self.spec = make_afe(ang_res)
        a = ang_res
        self.weight = Parameter(nn.kaiming_uniform((out_channels, in_channels, a, a), in_channels * a * a))
        self.bias = Parameter(np.zeros(out_channels, dtype=np.float32))

    def forward(self, x):
        return apply_extractor(self.spec, x, self.weight, self.bias)


class EpiConv(Module):
    """EFE layer; H and V orientations can share one flat kernel tensor."""

    def __init__(self, in_channels, out_channels, ang_res, orientation, share_from=None):
        super().__init__()
        self.spec = make_efe(ang_res, orientation)
        self.orientation = orientation
        if share_from is None:
            fan = in_channels * ang_res * ang_res
            self.weight = Parameter(
                nn.kaiming_uniform((out_channels, in_channels, ang_res * ang_res), fan)
            )
            self.bias = Parameter(np.zeros(out_channels, dtype=np.float32))
        else:
            self.weight = share_from.weight
            self.bias = share_from.bias

    def forward(self, x):
        o, c, k = self.weight.shape
        shape = (o, c, 1, k) if self.orientation == "h" else (o, c, k, 1)
        return apply_extractor(self.spec, x, reshape(self.weight, shape), self.bias)


# ---- branches and blocks --------------------------------------------------------


class AngularBranch(Module):
    """AFE down to the spatial grid, then 1x1 conv + 2D shuffle back up by A."""

    def __init__(self, channels, out_channels, ang_res):
        super().__init__()
        self.ang_res = ang_res
        self.afe = AngularConv(channels, out_channels, ang_res)
        self.up = Conv2d(out_channels, out_channels * ang_res * ang_res, 1)

    def forward(self, x):
        y = leaky_relu(self.afe(x), LEAK)
        y = leaky_relu(self.up(y), LEAK)
        return pixel_shuffle_2d(y, self.ang_res)


class EpiBranch(Module):
    """EFE down along one axis, then 1x1 conv + 1D shuffle back up by A."""

    def __init__(self, channels, out_channels, ang_res, orientation, share_from=None):
        super().__init__()
        self.ang_res = ang_res
        self.shuffle_axis = "w" if orientation == "h" else "h"
        self.efe = EpiConv(
            channels, out_channels, ang_res, orientation,
            share_from=None if share_from is None else share_from.efe,
        )
        self.up = Conv2d(out_channels, out_channels * ang_res, 1) if share_from is None else share_from.up

    def forward(self, x):
        y = leaky_relu(self.efe(x), LEAK)
        y = leaky_relu(self.up(y), LEAK)
        return pixel_shuffle_1d(y, self.ang_res, self.shuffle_axis)


class DistgBlockSSR(Module):
    """Parallel spatial / angular / EPI branches, fused and added to the input."""

    def __init__(self, cfg: DistgSSRConfig):
        super().__init__()
        c, a = cfg.channels, cfg.ang_res
        width = 0
        if cfg.spatial:
            self.spatial1 = SpatialConv(c, c, a)
            self.spatial2 = SpatialConv(c, c, a)
            width += c
        if cfg.angular:
            self.angular = AngularBranch(c, c // 4, a)
            width += c // 4
        if cfg.epi:
            self.epi_h = EpiBranch(c, c // 2, a, "h")
            self.epi_v = EpiBranch(
                c, c // 2, a, "v", share_from=self.epi_h if cfg.epi_weight_sharing else None
            )
            width += c
        self.fuse = Conv2d(width, c, 1)
        self.fuse_sfe = SpatialConv(c, c, a)
        self._branches = (cfg.spatial, cfg.angular, cfg.epi)

    def forward(self, x):
        spatial, angular, epi = self._branches
        feats = []
        if spatial:
            feats.append(leaky_relu(self.spatial2(leaky_relu(self.spatial1(x), LEAK)), LEAK))
        if angular:
            feats.append(self.angular(x))
        if epi:
            feats.append(self.epi_h(x))
            feats.append(self.epi_v(x))
        y = concat(feats, 1) if len(feats) > 1 else feats[0]
        y = leaky_relu(self.fuse(y), LEAK)
        y = self.fuse_sfe(y)
        return add(y, x)


class DistgGroupSSR(Module):
    def __init__(self, cfg):
        super().__init__()
        self.blocks = ModuleList(DistgBlockSSR(cfg) for _ in range(cfg.n_blocks))

    def forward(self, x):
        y = x
        for blk in self.blocks:
            y = blk(y)
        return add(y, x)


class DistgSSR(Module):
    """Spatial super-resolution by an integer factor, all views jointly."""

    def __init__(self, cfg: DistgSSRConfig):
        super().__init__()
        self.cfg = cfg
        c, a, s = cfg.channels, cfg.ang_res, cfg.upscale
        self.init_sfe = SpatialConv(1, c, a)
        self.groups = ModuleList(DistgGroupSSR(cfg) for _ in range(cfg.n_groups))
        self.pre_up = Conv2d(c, s * s * c, 1)
        self.out_conv = Conv2d(c, 1, 1)

    def forward(self, x):
        """MacPI (N, 1, A*H, A*W) -> view-tiled SAI array (N, 1, s*A*H, s*A*W)."""
        f0 = leaky_relu(self.init_sfe(x), LEAK)
        f = f0
        for g in self.groups:
            f = g(f)
        f = add(f, f0)
        tiles = macpi_to_views(f, self.cfg.ang_res)
        tiles = self.pre_up(tiles)
        tiles = pixel_shuffle_2d(tiles, self.cfg.upscale)
        return self.out_conv(tiles)

    def super_resolve(self, lf: LightField) -> LightField:
        if lf.ang_res != self.cfg.ang_res:
            raise LayoutError(f"model expects ang_res {self.cfg.ang_res}, got {lf.ang_res}")
        mac = sai_to_macpi(lf).data.astype(self.dtype)
        with no_grad():
            out = self.forward(Tensor(mac[None, None]))
        return view_tiles_to_lf(out.data[0, 0], self.cfg.ang_res)


class DistgBlockASR(Module):
    """Angular/EPI branches concatenated with the input, fused, then a spatial res-block."""

    def __init__(self, cfg: DistgASRConfig):
        super().__init__()
        c, a = cfg.channels, cfg.ang_res_in
        width = c  # the input feature joins the concat
        if cfg.angular:
            self.angular = AngularBranch(c, c, a)
            width += c
        if cfg.epi:
            self.epi_h = EpiBranch(c, c, a, "h")
            self.epi_v = EpiBranch(c, c, a, "v", share_from=self.epi_h)
            width += 2 * c
        self.fuse = Conv2d(width, c, 1)
        self.res1 = SpatialConv(c, c, a)
        self.res2 = SpatialConv(c, c, a)
        self._branches = (cfg.angular, cfg.epi)

    def forward(self, x):
        angular, epi = self._branches
        feats = [x]
        if angular:
            feats.append(self.angular(x))
        if epi:
            feats.append(self.epi_h(x))
            feats.append(self.epi_v(x))
        y = leaky_relu(self.fuse(concat(feats, 1)), LEAK)
        r = self.res2(leaky_relu(self.res1(y), LEAK))
        return add(y, r)


class DistgGroupASR(Module):
    """Block cascade with multi-stage fusion of every block output."""

    def __init__(self, cfg):
        super().__init__()
        self.blocks = ModuleList(DistgBlockASR(cfg) for _ in range(cfg.n_blocks))
        self.fuse = Conv2d(cfg.n_blocks * cfg.channels, cfg.channels, 1)

    def forward(self, x):
        outs = []
        y = x
        for blk in self.blocks:
            y = blk(y)
            outs.append(y)
        return leaky_relu(self.fuse(concat(outs, 1)), LEAK)


class AngularUpsampler(Module):
    """Downsample-upsample angular resketching: A*H grid -> (beta*A)*H grid.

    AFE collapses the input angular grid, a 1x1 conv expands channels to
    (beta*A)^2 * C, a 2D shuffle rebuilds a MacPI at the target angular
    resolution, and an SFE (dilation beta*A) reduces to one channel.
    """

    def __init__(self, channels, ang_res_in, ang_res_out):
        super().__init__()
        self.ang_res_out = ang_res_out
        self.afe = AngularConv(channels, channels, ang_res_in)
        self.pre_up = Conv2d(channels, ang_res_out * ang_res_out * channels, 1)
        self.out_sfe = SpatialConv(channels, 1, ang_res_out)

    def forward(self, x):
        y = leaky_relu(self.afe(x), LEAK)
        y = self.pre_up(y)
        y = pixel_shuffle_2d(y, self.ang_res_out)
        return self.out_sfe(y)


class DistgASR(Module):
    """Angular super-resolution: A x A input views -> beta*A x beta*A views."""

    def __init__(self, cfg: DistgASRConfig):
        super().__init__()
        self.cfg = cfg
        c, a = cfg.channels, cfg.ang_res_in
        self.init_sfe = SpatialConv(1, c, a)
        self.groups = ModuleList(DistgGroupASR(cfg) for _ in range(cfg.n_groups))
        self.fuse_groups = Conv2d(cfg.n_groups * c, c, 1)
        self.upsampler = AngularUpsampler(c, a, cfg.ang_res_out)

    def forward(self, x):
        """MacPI (N, 1, A*H, A*W) -> MacPI (N, 1, betaA*H, betaA*W)."""
        g = leaky_relu(self.init_sfe(x), LEAK)
        outs = []
        for grp in self.groups:
            g = grp(g)
            outs.append(g)
        fused = leaky_relu(self.fuse_groups(concat(outs, 1)), LEAK)
        return self.upsampler(fused)

    def reconstruct(self, lf: LightField) -> LightField:
        if lf.ang_res != self.cfg.ang_res_in:
            raise LayoutError(f"model expects ang_res {self.cfg.ang_res_in}, got {lf.ang_res}")
        mac = sai_to_macpi(lf).data.astype(self.dtype)
        with no_grad():
            out = self.forward(Tensor(mac[None, None]))
        return macpi_to_sai(MacPIImage(out.data[0, 0], self.cfg.ang_res_out))


class SpatialResBlock(Module):
    """SFE-BN-LeakyReLU-SFE-BN with an input skip."""

    def __init__(self, channels, ang_res):
        super().__init__()
        self.sfe1 = SpatialConv(channels, channels, ang_res)
        self.bn1 = nn.BatchNorm2d(channels)
        self.sfe2 = SpatialConv(channels, channels, ang_res)
        self.bn2 = nn.BatchNorm2d(channels)

    def forward(self, x):
        y = leaky_relu(self.bn1(self.sfe1(x)), LEAK)
        y = self.bn2(self.sfe2(y))
        return add(y, x)


class CostVolumeBuilder(Module):
    """One DS-AFE per disparity level, outputs stacked in level order.

    Weights are shared across levels by default: the selectivity comes
    from each level's dilation/padding, not from the kernel values.
    """

    def __init__(self, in_channels, out_channels, ang_res, levels, shared=True):
        super().__init__()
        self.levels = tuple(levels)
        self.specs = [make_ds_afe(ang_res, d) for d in self.levels]
        a = ang_res
        fan = in_channels * a * a

        def make_pair():
            w = Parameter(nn.kaiming_uniform((out_channels, in_channels, a, a), fan))
            b = Parameter(np.zeros(out_channels, dtype=np.float32))
            return w, b

        if shared:
            self.weight, self.bias = make_pair()
            self._pairs = [(self.weight, self.bias)] * len(self.levels)
        else:
            self.weights = ModuleList()
            self._pairs = []
            for d in self.levels:
                holder = Module()
                holder.weight, holder.bias = make_pair()
                self.weights.append(holder)
                self._pairs.append((holder.weight, holder.bias))

    def forward(self, x):
        """MacPI feature (N, C, A*H, A*W) -> cost volume (N, |D|, C', H, W)."""
        slices = [
            apply_extractor(spec, x, w, b)
            for spec, (w, b) in zip(self.specs, self._pairs)
        ]
        return stack(slices, 1)


def regress_disparity(logits, levels):
    """Softmax over the level axis (-3), then the expectation of the levels.

    Output lies in [min(levels), max(levels)] and is invariant to adding a
    per-pixel constant to all logits.
    """
    t = logits if isinstance(logits, Tensor) else Tensor(np.asarray(logits))
    lv = tuple(levels.levels if isinstance(levels, DisparityLevelSet) else levels)
    if t.shape[-3] != len(lv):
        raise ValueError(f"level axis {t.shape[-3]} does not match {len(lv)} levels")
    probs = softmax(t, -3)
    weights = Tensor(np.asarray(lv, dtype=t.dtype).reshape(-1, 1, 1))
    return tsum(probs * weights, -3)


class DistgDisp(Module):
    """Disparity regression network over a square light field."""

    def __init__(self, cfg: DistgDispConfig):
        super().__init__()
        self.cfg = cfg
        c, a = cfg.channels, cfg.ang_res
        self.init_sfe = SpatialConv(1, c, a)
        self.blocks = ModuleList(SpatialResBlock(c, a) for _ in range(cfg.n_spatial_blocks))
        self.cost = CostVolumeBuilder(c, c, a, cfg.levels, shared=cfg.shared_level_weights)
        convs = [Conv3d(c, c, 3, padding=1) for _ in range(cfg.n_agg_convs - 1)]
        convs.append(Conv3d(c, 1, 3, padding=1))
        self.agg = ModuleList(convs)

    def extract_features(self, x):
        f = leaky_relu(self.init_sfe(x), LEAK)
        for blk in self.blocks:
            f = blk(f)
        return f

    def build_cost_volume(self, features):
        return self.cost(features)

    def aggregate(self, volume):
        """(N, |D|, C, H, W) -> logits (N, |D|, H, W) via cascaded 3D convolutions."""
        t = transpose(volume, (0, 2, 1, 3, 4))  # channels first for conv3d
        last = len(self.agg) - 1
        for i, layer in enumerate(self.agg):
            t = layer(t)
            if i != last:
                t = leaky_relu(t, LEAK)
        n, _, d, h, w = t.shape
        return reshape(t, (n, d, h, w))

    def forward(self, x):
        """MacPI (N, 1, A*H, A*W) -> disparity map (N, H, W)."""
        f = self.extract_features(x)
        vol = self.build_cost_volume(f)
        logits = self.aggregate(vol)
        return regress_disparity(logits, self.cfg.levels)

    def estimate(self, lf: LightField) -> np.ndarray:
        if lf.ang_res != self.cfg.ang_res:
            raise LayoutError(f"model expects ang_res {self.cfg.ang_res}, got {lf.ang_res}")
        mac = sai_to_macpi(lf).data.astype(self.dtype)
        with no_grad():
            out = self.forward(Tensor(mac[None, None]))
        return out.data[0]


# ---- synthetic scenes and toy training ----------------------------------------------


def smooth_texture(height, width, rng, passes=2):
    """Random texture with spatial correlation (box-blurred noise, rescaled to [0, 1])."""
    t = rng.random((height, width))
    k = 5
    for _ in range(passes):
        padded = np.pad(t, k // 2, mode="edge")
        acc = np.zeros_like(t)
        for dy in range(k):
            for dx in range(k):
                acc += padded[dy:dy + height, dx:dx + width]
        t = acc / (k * k)
    t -= t.min()
    peak = t.max()
    return (t / peak if peak > 0 else t).astype(np.float32)


def uniform_disparity_lf(ang_res, height, width, disparity, rng, margin=None):
    """Textured plane sheared to one integer disparity; all views fully valid.

    View (u, v) is a window into a larger texture offset by the view's
    disparity shift, so the parallax relation holds with no border gaps:
    view[h + d*(uc-u), w + d*(vc-v)] equals the center view at (h, w).
    """
    a, d = ang_res, int(disparity)
    uc = vc = (a - 1) // 2
    if margin is None:
        margin = abs(d) * max(uc, a - 1 - uc) + 1
    tex = smooth_texture(height + 2 * margin, width + 2 * margin, rng)
    views = np.empty((a, a, height, width), dtype=np.float32)
    for u in range(a):
        for v in range(a):
            dy, dx = d * (uc - u), d * (vc - v)
            views[u, v] = tex[margin - dy:margin - dy + height, margin - dx:margin - dx + width]
    return LightField(views)


def train_overfit(model, inputs, targets, steps, lr, beta1=0.9, beta2=0.999):
    """Forward / L1 / backward / Adam on one fixed batch; returns per-step losses."""
    x = inputs if isinstance(inputs, Tensor) else Tensor(np.asarray(inputs, dtype=model.dtype))
    t = targets if isinstance(targets, Tensor) else Tensor(np.asarray(targets, dtype=model.dtype))
    opt = Adam(model.parameters(), lr=lr, beta1=beta1, beta2=beta2)
    losses = []
    for _ in range(steps):
        opt.zero_grad()
        loss = l1_loss(model(x), t)
        loss.backward()
        opt.step()
        losses.append(loss.item())
    return losses
