"""Sample assembly: channel padding plus mask channel, context windowing
with left-pad replication, standardization, and training-time noise."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..solvers.trajectory import Trajectory

MASK_CHANNEL = "mask"
PAD_PREFIX = "pad"


@dataclass
class UnifiedSample:
    """One training example: ``context`` [T_ctx, H, W, C_max+1] with the mask
    as last channel, ``target`` [H, W, C_max+1], and per-channel validity
    marking which channels carry physics (pad and mask channels do not)."""

    context: np.ndarray
    target: np.ndarray
    dataset_id: int
    channel_validity: np.ndarray

    def __post_init__(self) -> None:
        self.context = np.asarray(self.context)
        self.target = np.asarray(self.target)
        self.channel_validity = np.asarray(self.channel_validity, dtype=bool)
        if self.context.ndim != 4 or self.target.ndim != 3:
            raise ValueError(
                f"context must be [T,H,W,C] and target [H,W,C], got "
                f"{self.context.shape} and {self.target.shape}"
            )
        if self.context.shape[1:] != self.target.shape:
            raise ValueError(
                f"context frame shape {self.context.shape[1:]} != target shape "
                f"{self.target.shape}"
            )
        C = self.context.shape[-1]
        if self.channel_validity.shape != (C,):
            raise ValueError(f"channel_validity must have {C} entries")
        mask_vals = np.unique(self.context[..., -1])
        if not np.isin(mask_vals, (0.0, 1.0)).all():
            raise ValueError("mask channel entries must be 0 or 1")


def channel_validity_from_names(names: Sequence[str]) -> np.ndarray:
    """Physical channels are those that are neither pad fills nor the mask."""
    return np.array(
        [not (n == MASK_CHANNEL or n.startswith(PAD_PREFIX)) for n in names],
        dtype=bool,
    )


def pad_channels_and_mask(
    traj: Trajectory, C_max: int, pad_value: float = 1.0
) -> Trajectory:
    """Pad to the shared channel budget and append the mask as a channel.

    Output channels: the originals, then ``C_max - C`` constant fills at
    ``pad_value``, then the spatial mask replicated over time, named "mask".
    """
    T, H, W, C = traj.values.shape
    if C > C_max:
        raise ValueError(f"trajectory has {C} channels, more than C_max={C_max}")
    values = np.empty((T, H, W, C_max + 1), dtype=np.float32)
    values[..., :C] = traj.values
    values[..., C:C_max] = pad_value
    values[..., C_max] = traj.mask[None, :, :].astype(np.float32)
    names = list(traj.channel_names)
    names += [f"{PAD_PREFIX}{i}" for i in range(C_max - C)]
    names.append(MASK_CHANNEL)
    return Trajectory(
        values=values,
        mask=traj.mask,
        dt_save=traj.dt_save,
        pde=traj.pde,
        channel_names=names,
    )


def make_window(
    traj: Trajectory,
    t_start: int,
    T_ctx: int,
    dataset_id: int = 0,
    channel_validity: Optional[np.ndarray] = None,
) -> UnifiedSample:
    """Cut one context/target pair from a padded trajectory.

    The context covers frames [t_start, t_start + T_ctx) and the target is
    frame t_start + T_ctx. Negative ``t_start`` replicates the first frame
    into the missing slots, so every frame except the first can be a target.
    """
    T = traj.n_frames
    target_idx = t_start + T_ctx
    if not (1 <= target_idx <= T - 1):
        raise IndexError(
            f"target frame {target_idx} out of range [1, {T - 1}] "
            f"(t_start={t_start}, T_ctx={T_ctx})"
        )
    indices = np.clip(np.arange(t_start, t_start + T_ctx), 0, T - 1)
    context = traj.values[indices]
    target = traj.values[target_idx]
    if channel_validity is None:
        channel_validity = channel_validity_from_names(traj.channel_names)
    return UnifiedSample(
        context=context,
        target=target,
        dataset_id=dataset_id,
        channel_validity=channel_validity,
    )


def window_count(n_frames: int) -> int:
    """Valid windows per trajectory: every frame except the first is a
    target exactly once (left-pad replication covers the early ones)."""
    return n_frames - 1


def window_start(window_index: int, T_ctx: int) -> int:
    """t_start for window ``j``: targets frame j + 1."""
    return window_index + 1 - T_ctx


def inject_noise(
    context: np.ndarray,
    eps: float,
    rng: np.random.Generator,
    channel_validity: np.ndarray,
) -> np.ndarray:
    """Add i.i.d. Gaussian noise with standard deviation eps * RMS(context)
    to the physical channels inside the mask; pad and mask channels and the
    exterior are untouched. eps=0 returns the input bit-identically without
    consuming random numbers.
    """
    if eps < 0:
        raise ValueError(f"eps must be >= 0, got {eps}")
    if eps == 0.0:
        return context
    validity = np.asarray(channel_validity, dtype=bool)
    interior = context[..., -1] > 0.5
    select = interior[..., None] & validity[None, None, None, :]
    values = context[select]
    rms = float(np.sqrt(np.mean(values.astype(np.float64) ** 2)))
    noise = rng.standard_normal(context.shape)
    noisy = context + (eps * rms) * np.where(select, noise, 0.0)
    return noisy.astype(context.dtype)


def clamp_std(std: Sequence[float]) -> np.ndarray:
    """Replace non-positive standard deviations with 1, warning once."""
    std = np.asarray(std, dtype=np.float64).copy()
    bad = std <= 0
    if bad.any():
        warnings.warn(
            f"{int(bad.sum())} constant channel(s); std clamped to 1",
            RuntimeWarning,
            stacklevel=3,
        )
        std[bad] = 1.0
    return std


def standardize(x: np.ndarray, mean: Sequence[float], std: Sequence[float]) -> np.ndarray:
    """Per-channel z-scoring of the trailing channel axis."""
    mean = np.asarray(mean, dtype=np.float64)
    std = clamp_std(std)
    if not (np.isfinite(mean).all() and np.isfinite(std).all()):
        raise ValueError("standardization statistics must be finite")
    return ((x - mean) / std).astype(x.dtype)


def destandardize(x: np.ndarray, mean: Sequence[float], std: Sequence[float]) -> np.ndarray:
    """Inverse of ``standardize``."""
    mean = np.asarray(mean, dtype=np.float64)
    std = clamp_std(std)
    if not (np.isfinite(mean).all() and np.isfinite(std).all()):
        raise ValueError("standardization statistics must be finite")
    return (x * std + mean).astype(x.dtype)
