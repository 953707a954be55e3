"""Light-field disentangling toolkit.

Layout algebra for 4D light fields (SAI / MacPI / EPI), structure-aware
convolution kernels confined to single light-field subspaces, and three
network assemblies for spatial super-resolution, angular super-resolution
and disparity estimation, all running on a small numpy autodiff engine.
"""

from .bench import BenchEqualityError, BenchResult, bench_cost_volume, bench_csv
from .conv import ConvSpec, conv2d, conv3d, make_conv_spec
from .extractors import (
    DisparityLevelSet,
    ExtractorSpec,
    apply_extractor,
    compute_view_offset,
    ds_afe_geometry,
    make_afe,
    make_ds_afe,
    make_efe,
    make_sfe,
)
from .lightfield import (
    AugmentOp,
    EPISlice,
    LayoutError,
    LightField,
    MacPIImage,
    augment,
    bicubic_resize,
    crop_patches,
    extract_epi,
    lf_bicubic_resize,
    lf_to_view_tiles,
    macpi_to_sai,
    sai_to_macpi,
    view_tiles_to_lf,
)
from .metrics import badpix, lf_psnr_ssim, mse100, psnr, ssim
from .networks import (
    DistgASR,
    DistgASRConfig,
    DistgDisp,
    DistgDispConfig,
    DistgSSR,
    DistgSSRConfig,
    regress_disparity,
    train_overfit,
    uniform_disparity_lf,
)
from .optim import Adam
from .refocus import refocus
from .shuffle import (
    pixel_shuffle_1d,
    pixel_shuffle_2d,
    pixel_unshuffle_1d,
    pixel_unshuffle_2d,
)
from .tensor import Tensor, l1_loss, no_grad

__version__ = "0.1.0"

__all__ = [
    "Adam",
    "AugmentOp",
    "BenchEqualityError",
    "BenchResult",
    "ConvSpec",
    "DisparityLevelSet",
    "DistgASR",
    "DistgASRConfig",
    "DistgDisp",
    "DistgDispConfig",
    "DistgSSR",
    "DistgSSRConfig",
    "EPISlice",
    "ExtractorSpec",
    "LayoutError",
    "LightField",
    "MacPIImage",
    "Tensor",
    "apply_extractor",
    "augment",
    "badpix",
    "bench_cost_volume",
    "bench_csv",
    "bicubic_resize",
    "compute_view_offset",
    "conv2d",
    "conv3d",
    "crop_patches",
    "ds_afe_geometry",
    "extract_epi",
    "l1_loss",
    "lf_bicubic_resize",
    "lf_psnr_ssim",
    "lf_to_view_tiles",
    "macpi_to_sai",
    "make_afe",
    "make_conv_spec",
    "make_ds_afe",
    "make_efe",
    "make_sfe",
    "mse100",
    "no_grad",
    "pixel_shuffle_1d",
    "pixel_shuffle_2d",
    "pixel_unshuffle_1d",
    "pixel_unshuffle_2d",
    "psnr",
    "refocus",
    "regress_disparity",
    "sai_to_macpi",
    "ssim",
    "train_overfit",
    "uniform_disparity_lf",
    "view_tiles_to_lf",
]
