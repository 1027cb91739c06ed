"""Spectral resampling between grid resolutions.

``fourier_resample`` is the general value-preserving primitive (upscaling by
zero-padded Fourier interpolation, downscaling by truncation with Nyquist
folding) and works for any sizes >= 1. ``unify_resolution`` is the dataset
unification step, restricted to power-of-two targets like the solver grids.
"""

from __future__ import annotations

import numpy as np

from ..solvers.trajectory import Trajectory


def _resample_axis(spectrum: np.ndarray, n_new: int, axis: int) -> np.ndarray:
    """Resize one axis of a normalized FFT spectrum, preserving function
    values: upsizing zero-pads and splits the Nyquist coefficient in half,
    downsizing truncates and folds the two Nyquist partners together."""
    n_old = spectrum.shape[axis]
    if n_new == n_old:
        return spectrum
    spectrum = np.moveaxis(spectrum, axis, 0)
    out_shape = (n_new,) + spectrum.shape[1:]
    out = np.zeros(out_shape, dtype=spectrum.dtype)
    if n_new > n_old:
        if n_old % 2 == 0:
            half = n_old // 2
            out[:half] = spectrum[:half]
            if half > 1:
                out[-(half - 1):] = spectrum[-(half - 1):]
            out[half] = 0.5 * spectrum[half]
            out[n_new - half] += 0.5 * spectrum[half]
        else:
            m = (n_old - 1) // 2
            out[: m + 1] = spectrum[: m + 1]
            out[-m:] = spectrum[-m:]
    else:
        if n_new % 2 == 0:
            half = n_new // 2
            out[:half] = spectrum[:half]
            if half > 1:
                out[-(half - 1):] = spectrum[-(half - 1):]
            out[half] = spectrum[half] + spectrum[n_old - half]
        else:
            m = (n_new - 1) // 2
            out[: m + 1] = spectrum[: m + 1]
            out[-m:] = spectrum[-m:]
    return np.moveaxis(out, 0, axis)


def fourier_resample(field: np.ndarray, shape: tuple) -> np.ndarray:
    """Resample a real field on the last two axes to ``shape`` (H', W'),
    preserving function values of the band-limited interpolant."""
    h_new, w_new = int(shape[0]), int(shape[1])
    if h_new < 1 or w_new < 1:
        raise ValueError(f"target shape {shape} must be >= 1 per axis")
    field = np.asarray(field, dtype=np.float64)
    h_old, w_old = field.shape[-2], field.shape[-1]
    coef = np.fft.fft2(field, axes=(-2, -1)) / (h_old * w_old)
    coef = _resample_axis(coef, h_new, field.ndim - 2)
    coef = _resample_axis(coef, w_new, field.ndim - 1)
    return np.fft.ifft2(coef * (h_new * w_new), axes=(-2, -1)).real


def nearest_resample_mask(mask: np.ndarray, shape: tuple) -> np.ndarray:
    """Nearest-neighbor mask resampling, re-binarized to {0, 1}."""
    h_new, w_new = int(shape[0]), int(shape[1])
    h_old, w_old = mask.shape
    rows = (np.arange(h_new) * h_old) // h_new
    cols = (np.arange(w_new) * w_old) // w_new
    out = np.asarray(mask)[np.ix_(rows, cols)]
    return (out > 0.5).astype(np.uint8)


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def unify_resolution(traj: Trajectory, H_target: int) -> Trajectory:
    """Bring a trajectory to the shared training resolution.

    Field channels are resampled spectrally; any channel named "mask" and
    the trajectory mask are resampled nearest-neighbor to stay binary.
    """
    if not _is_power_of_two(H_target) or H_target < 4:
        raise ValueError(f"target resolution must be a power of two >= 4, got {H_target}")
    return resample_trajectory(traj, H_target)


def resample_trajectory(traj: Trajectory, H_target: int) -> Trajectory:
    """Resample a trajectory to any square grid >= 4 (evaluation may probe
    resolutions that are not powers of two)."""
    if H_target < 4:
        raise ValueError(f"target resolution must be >= 4, got {H_target}")
    H, W = traj.grid
    if H < 4 or W < 4:
        raise ValueError(f"source grid {traj.grid} must be >= 4 per axis")
    if (H, W) == (H_target, H_target):
        return traj
    T, C = traj.n_frames, traj.n_channels
    values = np.empty((T, H_target, H_target, C), dtype=np.float32)
    for c, name in enumerate(traj.channel_names):
        if name == "mask":
            for t in range(T):
                values[t, :, :, c] = nearest_resample_mask(
                    traj.values[t, :, :, c], (H_target, H_target)
                )
        else:
            values[:, :, :, c] = fourier_resample(
                traj.values[:, :, :, c].astype(np.float64), (H_target, H_target)
            )
    return Trajectory(
        values=values,
        mask=nearest_resample_mask(traj.mask, (H_target, H_target)),
        dt_save=traj.dt_save,
        pde=traj.pde,
        channel_names=traj.channel_names,
    )
