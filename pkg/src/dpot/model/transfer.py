"""Weight transfer between model instances: the Fourier attention stack is
resolution- and dataset-independent, so those tensors always move; embedding
and decoder tensors move only when their shapes already agree."""

from __future__ import annotations

from typing import Dict, List, Tuple

import numpy as np

from .config import ModelConfig
from .network import DpotModel

LAYER_PREFIX = "layer"


def transferable_fields(config: ModelConfig) -> List[str]:
    """Names of the always-copied tensors: every Fourier attention layer."""
    names = []
    for l in range(config.L):
        for suffix in ("mixer_w1", "mixer_b1", "mixer_w2", "mixer_b2",
                       "gn_scale", "gn_bias", "ffn_w1", "ffn_b1",
                       "ffn_w2", "ffn_b2"):
            names.append(f"{LAYER_PREFIX}{l}.{suffix}")
    return names


def transfer_weights(
    source_state: Dict[str, np.ndarray],
    source_config: ModelConfig,
    target_config: ModelConfig,
    seed: int = 0,
) -> Tuple[DpotModel, List[str], List[str]]:
    """Build a target model initialized from a source parameter state.

    The Fourier attention layers require identical (d_z, h, L, d_ffn,
    groups); all their tensors are copied. Embedding, temporal, and decoder
    tensors are copied when shapes match and freshly initialized otherwise.
    Returns (model, copied_names, reinitialized_names).
    """
    mismatched = [
        name
        for name in ("d_z", "h", "L", "d_ffn", "groups")
        if getattr(source_config, name) != getattr(target_config, name)
    ]
    if mismatched:
        raise ValueError(
            f"attention stack incompatible in {mismatched}: "
            f"source {source_config} vs target {target_config}"
        )
    model = DpotModel(target_config, seed=seed)
    copied, reinitialized = [], []
    always = set(transferable_fields(target_config))
    for name, param in model.params.items():
        src = source_state.get(name)
        if name in always:
            if src is None or src.shape != param.data.shape:
                raise ValueError(f"source state lacks layer tensor {name!r}")
            param.data = np.asarray(src, dtype=np.float64).copy()
            copied.append(name)
        elif src is not None and src.shape == param.data.shape:
            param.data = np.asarray(src, dtype=np.float64).copy()
            copied.append(name)
        else:
            reinitialized.append(name)
    return model, copied, reinitialized


def copied_scalar_count(names: List[str], model: DpotModel) -> int:
    return sum(model.params[n].size for n in names)
