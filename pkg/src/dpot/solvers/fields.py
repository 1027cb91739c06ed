"""Spectral grids and Gaussian random field sampling on the periodic square.

Fields are stored as [H, W] arrays with ``field[i, j] = f(x_i, y_j)``,
``x_i = 2 pi i / H``, ``y_j = 2 pi j / W`` (meshgrid indexing "ij"), so the
first axis is x and the second is y.
"""

from __future__ import annotations

import numpy as np


def grid_2pi(H: int, W: int | None = None) -> tuple:
    """Coordinate arrays x[i, j], y[i, j] on [0, 2pi)^2."""
    W = H if W is None else W
    x = 2.0 * np.pi * np.arange(H) / H
    y = 2.0 * np.pi * np.arange(W) / W
    return np.meshgrid(x, y, indexing="ij")

def wavenumbers(H: int, W: int | None = None) -> tuple:
    """Integer wavenumber grids kx[i, j], ky[i, j] matching np.fft layout."""
    W = H if W is None else W
    kx = np.fft.fftfreq(H, d=1.0 / H)
    ky = np.fft.fftfreq(W, d=1.0 / W)
    return np.meshgrid(kx, ky, indexing="ij")


def laplacian_symbol(H: int, W: int | None = None) -> np.ndarray:
    """|k|^2 grid: the negated Fourier symbol of the Laplacian on [0,2pi)^2."""
    kx, ky = wavenumbers(H, W)
    return kx * kx + ky * ky


def gaussian_random_field(
    H: int,
    rng: np.random.Generator,
    alpha: float = 2.5,
    tau: float = 7.0,
) -> np.ndarray:
    """Sample a mean-zero periodic Gaussian field with power spectrum
    proportional to (|k|^2 + tau^2)^(-alpha), normalized so each grid value
    has unit variance in expectation.

    White noise is shaped in Fourier space: with xi ~ N(0, I) and unscaled
    transforms, Var(field) = mean_k S_k, so dividing by sqrt(mean_k S_k)
    gives exactly unit variance. The k = 0 mode is removed, making every
    sample exactly mean-zero.
    """
    ksq = laplacian_symbol(H)
    spectrum = (ksq + tau * tau) ** (-alpha)
    spectrum[0, 0] = 0.0
    xi = rng.standard_normal((H, H))
    shaped = np.fft.ifft2(np.fft.fft2(xi) * np.sqrt(spectrum)).real
    return shaped / np.sqrt(spectrum.mean())
