"""Hyper-path channel pruning for learned image codecs."""

from ._core import (
    Network,
    conv2d,
    deconv2d,
    gaussian_rate_bits,
    merge_conv,
    merge_deconv,
    merge_pixelshuffle,
    pixel_shuffle,
    psnr_from_mse,
    resolve_config,
    verify_merges,
)

__all__ = [
    "Network",
    "conv2d",
    "deconv2d",
    "gaussian_rate_bits",
    "merge_conv",
    "merge_deconv",
    "merge_pixelshuffle",
    "pixel_shuffle",
    "psnr_from_mse",
    "resolve_config",
    "verify_merges",
]
