"""Neural operator model: configuration, network, and weight transfer."""

from .config import ModelConfig, micro_config, nano_config, tiny_config
from .network import (
    GROUP_NORM_EPS,
    DpotModel,
    channel_ffn,
    depatchify,
    fourier_attention_layer,
    fourier_mixer,
    frame_coordinates,
    group_norm,
    patch_embed,
    patchify,
    positional_encode,
    temporal_aggregate,
)
from .transfer import copied_scalar_count, transfer_weights, transferable_fields

__all__ = [
    "DpotModel",
    "GROUP_NORM_EPS",
    "ModelConfig",
    "channel_ffn",
    "copied_scalar_count",
    "depatchify",
    "fourier_attention_layer",
    "fourier_mixer",
    "frame_coordinates",
    "group_norm",
    "micro_config",
    "nano_config",
    "patch_embed",
    "patchify",
    "positional_encode",
    "temporal_aggregate",
    "tiny_config",
    "transfer_weights",
    "transferable_fields",
]
