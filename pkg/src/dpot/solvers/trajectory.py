"""Trajectory containers shared by the solvers, the data pipeline, and the
on-disk dataset format."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Sequence

import numpy as np


@dataclass
class Trajectory:
    """One solved trajectory: frames [T, H, W, C] (float32), a spatial mask
    [H, W] with 1 = interior, and generation metadata."""

    values: np.ndarray
    mask: np.ndarray
    dt_save: float
    pde: str
    channel_names: Sequence[str]

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float32)
        self.mask = np.asarray(self.mask, dtype=np.uint8)
        if self.values.ndim != 4:
            raise ValueError(f"trajectory values must be [T,H,W,C], got {self.values.shape}")
        T, H, W, C = self.values.shape
        if self.mask.shape != (H, W):
            raise ValueError(f"mask shape {self.mask.shape} does not match grid ({H},{W})")
        if not np.isin(self.mask, (0, 1)).all():
            raise ValueError("mask entries must be 0 or 1")
        if not np.isfinite(self.values).all():
            raise ValueError("trajectory contains non-finite values")
        if C != len(self.channel_names):
            raise ValueError(
                f"{C} channels but {len(self.channel_names)} channel names"
            )
        self.channel_names = tuple(self.channel_names)

    @property
    def n_frames(self) -> int:
        return self.values.shape[0]

    @property
    def grid(self) -> tuple:
        return self.values.shape[1:3]

    @property
    def n_channels(self) -> int:
        return self.values.shape[3]


@dataclass
class TrajectoryDataset:
    """A stack of same-shape trajectories plus dataset-level metadata.

    ``values``: [N, T, H, W, C] float32; ``masks``: [N, H, W] uint8.
    ``metadata`` carries at least: pde, coefficients, dt_save, channel_names,
    channel_mean, channel_std, seed.
    """

    values: np.ndarray
    masks: np.ndarray
    metadata: Dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float32)
        self.masks = np.asarray(self.masks, dtype=np.uint8)
        if self.values.ndim != 5:
            raise ValueError(f"dataset values must be [N,T,H,W,C], got {self.values.shape}")
        N, T, H, W, C = self.values.shape
        if self.masks.shape != (N, H, W):
            raise ValueError(f"masks shape {self.masks.shape} inconsistent with values")
        if not np.isfinite(self.values).all():
            raise ValueError("dataset contains non-finite values")

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def n_frames(self) -> int:
        return self.values.shape[1]

    @property
    def grid(self) -> tuple:
        return self.values.shape[2:4]

    @property
    def n_channels(self) -> int:
        return self.values.shape[4]

    def trajectory(self, i: int) -> Trajectory:
        return Trajectory(
            values=self.values[i],
            mask=self.masks[i],
            dt_save=float(self.metadata.get("dt_save", 1.0)),
            pde=str(self.metadata.get("pde", "unknown")),
            channel_names=tuple(self.metadata.get("channel_names", [f"c{j}" for j in range(self.n_channels)])),
        )

    @classmethod
    def from_trajectories(cls, trajectories: List[Trajectory], metadata: Dict) -> "TrajectoryDataset":
        if not trajectories:
            raise ValueError("cannot build a dataset from zero trajectories")
        shapes = {t.values.shape for t in trajectories}
        if len(shapes) != 1:
            raise ValueError(f"trajectories disagree in shape: {sorted(shapes)}")
        values = np.stack([t.values for t in trajectories])
        masks = np.stack([t.mask for t in trajectories])
        meta = dict(metadata)
        meta.setdefault("pde", trajectories[0].pde)
        meta.setdefault("dt_save", trajectories[0].dt_save)
        meta.setdefault("channel_names", list(trajectories[0].channel_names))
        return cls(values=values, masks=masks, metadata=meta)


def channel_statistics(values: np.ndarray, masks: np.ndarray) -> tuple:
    """Per-channel mean/std over mask-interior entries of all frames."""
    N, T, H, W, C = values.shape
    mask = masks.astype(bool)[:, None, :, :].repeat(T, axis=1)
    means, stds = [], []
    for c in range(C):
        vals = values[..., c][mask]
        means.append(float(vals.mean()))
        stds.append(float(vals.std()))
    return means, stds
