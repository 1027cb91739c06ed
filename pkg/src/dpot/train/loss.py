"""Training loss (noisy-context next-frame regression) and the relative
L2 evaluation metric."""

from __future__ import annotations

import warnings
from typing import Callable, List, Optional, Sequence

import numpy as np

from ..data.pipeline import UnifiedSample, inject_noise
from ..tensor import Tensor, mul, sub, tensor_mean, tensor_sum

LOSS_DENOM_FLOOR = 1e-12


def ar_denoising_loss(
    model: Callable[[np.ndarray], Tensor],
    batch: List[UnifiedSample],
    eps: float,
    rng: Optional[np.random.Generator],
    relative: bool = True,
) -> Tensor:
    """Mean over the batch of the mask-weighted squared error between the
    model's prediction from a noise-corrupted context and the clean target.

    Contexts are ground truth (teacher forcing); only the inputs are
    corrupted. The relative form divides each sample's error by its weighted
    target energy, so datasets of different scales contribute comparably;
    ``relative=False`` divides by the number of weighted entries instead.
    Only physical channels enter, selected by each sample's validity and
    spatial mask.
    """
    if not batch:
        raise ValueError("batch must be non-empty")
    if rng is None and eps > 0:
        raise ValueError("eps > 0 requires an rng")
    contexts = np.stack([
        inject_noise(s.context, eps, rng, s.channel_validity) for s in batch
    ])
    targets = np.stack([s.target for s in batch]).astype(np.float64)
    C_out = targets.shape[-1] - 1
    weights = np.empty(targets.shape[:-1] + (C_out,), dtype=np.float64)
    for i, s in enumerate(batch):
        spatial = (s.target[..., -1] > 0.5).astype(np.float64)
        validity = s.channel_validity[:C_out].astype(np.float64)
        weights[i] = spatial[..., None] * validity[None, None, :]

    pred = model(contexts)
    diff = sub(pred, Tensor(targets[..., :C_out]))
    weighted_sq = mul(mul(diff, diff), Tensor(weights))
    per_sample = tensor_sum(weighted_sq, axis=(1, 2, 3))
    if relative:
        denom = (weights * targets[..., :C_out] ** 2).sum(axis=(1, 2, 3))
    else:
        denom = weights.sum(axis=(1, 2, 3))
    denom = np.maximum(denom, LOSS_DENOM_FLOOR)
    return tensor_mean(mul(per_sample, Tensor(1.0 / denom)))


def l2re(pred: np.ndarray, truth: np.ndarray, mask: np.ndarray) -> float:
    """Mean over samples of ||mask * (pred - truth)||_2 / ||mask * truth||_2.

    Leading axis indexes samples. ``mask`` broadcasts against the fields
    (e.g. [N, H, W, 1] against [N, H, W, C]). Samples whose masked truth has
    zero norm are excluded with a warning; all-zero truth is an error.
    """
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape:
        raise ValueError(f"shape mismatch: pred {pred.shape} vs truth {truth.shape}")
    mask = np.broadcast_to(np.asarray(mask, dtype=np.float64), truth.shape)
    axes = tuple(range(1, truth.ndim))
    err = np.sqrt((mask * (pred - truth) ** 2).sum(axis=axes))
    ref = np.sqrt((mask * truth**2).sum(axis=axes))
    keep = ref > 0
    if not keep.all():
        warnings.warn(
            f"{int((~keep).sum())} sample(s) with zero-norm truth excluded from l2re",
            RuntimeWarning,
            stacklevel=2,
        )
    if not keep.any():
        raise ValueError("every sample has zero-norm truth; l2re undefined")
    return float((err[keep] / ref[keep]).mean())


def destandardized_l2re(
    pred_std: np.ndarray,
    truth_std: np.ndarray,
    mask: np.ndarray,
    mean: Sequence[float],
    std: Sequence[float],
) -> float:
    """L2RE in physical units for standardized-space arrays."""
    from ..data.pipeline import destandardize

    return l2re(
        destandardize(pred_std, mean, std),
        destandardize(truth_std, mean, std),
        mask,
    )
