"""Dataset unification: resolution, channels, windows, sampling, noise."""

from .pipeline import (
    MASK_CHANNEL,
    PAD_PREFIX,
    UnifiedSample,
    channel_validity_from_names,
    clamp_std,
    destandardize,
    inject_noise,
    make_window,
    pad_channels_and_mask,
    standardize,
    window_count,
    window_start,
)
from .resolution import (
    fourier_resample,
    nearest_resample_mask,
    resample_trajectory,
    unify_resolution,
)
from .sampler import BalancedSampler, SamplerSpec

__all__ = [
    "BalancedSampler",
    "MASK_CHANNEL",
    "PAD_PREFIX",
    "SamplerSpec",
    "UnifiedSample",
    "channel_validity_from_names",
    "clamp_std",
    "destandardize",
    "fourier_resample",
    "inject_noise",
    "make_window",
    "nearest_resample_mask",
    "resample_trajectory",
    "pad_channels_and_mask",
    "standardize",
    "unify_resolution",
    "window_count",
    "window_start",
]
