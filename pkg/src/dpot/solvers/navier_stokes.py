"""Incompressible Navier-Stokes in vorticity form on the periodic square,

    w_t + u . grad(w) = nu * Lap(w) + f,   u = (dpsi/dy, -dpsi/dx),

with the streamfunction recovered spectrally from Lap(psi) = -w. The
nonlinear term is dealiased with the two-thirds rule and stepped explicitly
with Heun's method; diffusion is stepped implicitly with Crank-Nicolson."""

from __future__ import annotations

from typing import Optional

import numpy as np

from .fields import grid_2pi, laplacian_symbol, wavenumbers
from .spec import SolverSpec
from .trajectory import Trajectory

CFL_LIMIT = 0.5


class CflError(RuntimeError):
    """Raised when max(|u|, |v|) * dt / dx exceeds the stability limit."""

    def __init__(self, cfl: float, step: int):
        self.cfl = cfl
        self.step = step
        super().__init__(
            f"CFL number {cfl:.3f} exceeds limit {CFL_LIMIT} at step {step}; "
            f"reduce dt or the velocity scale"
        )


def make_forcing(descriptor: Optional[dict], H: int) -> np.ndarray:
    """Build the static forcing field from a descriptor dict.

    ``None`` or ``{"kind": "none"}`` yields zero forcing;
    ``{"kind": "sincos", "amplitude": A}`` yields A*(sin(x+y)+cos(x+y)).
    """
    if descriptor is None or descriptor.get("kind", "none") == "none":
        return np.zeros((H, H), dtype=np.float64)
    kind = descriptor["kind"]
    if kind == "sincos":
        amplitude = float(descriptor.get("amplitude", 0.1))
        x, y = grid_2pi(H)
        return amplitude * (np.sin(x + y) + np.cos(x + y))
    raise ValueError(f"unknown forcing kind {kind!r}")


def dealias_mask(H: int, W: int | None = None) -> np.ndarray:
    """Two-thirds rule: keep modes with |k_x|, |k_y| <= floor(H/3)."""
    kx, ky = wavenumbers(H, W)
    cut_x = H // 3
    cut_y = (H if W is None else W) // 3
    return (np.abs(kx) <= cut_x) & (np.abs(ky) <= cut_y)


def velocity_from_vorticity(w_hat: np.ndarray) -> tuple:
    """Physical-space velocity (u, v) from the vorticity spectrum."""
    H, W = w_hat.shape
    kx, ky = wavenumbers(H, W)
    ksq = kx * kx + ky * ky
    inv_ksq = np.zeros_like(ksq)
    nonzero = ksq > 0
    inv_ksq[nonzero] = 1.0 / ksq[nonzero]
    psi_hat = w_hat * inv_ksq
    u = np.fft.ifft2(1j * ky * psi_hat).real
    v = np.fft.ifft2(-1j * kx * psi_hat).real
    return u, v


def kinetic_energy(w: np.ndarray) -> float:
    """0.5 * mean(u^2 + v^2) of the velocity recovered from vorticity."""
    u, v = velocity_from_vorticity(np.fft.fft2(np.asarray(w, dtype=np.float64)))
    return float(0.5 * np.mean(u * u + v * v))


def enstrophy(w: np.ndarray) -> float:
    """0.5 * mean(w^2)."""
    w = np.asarray(w, dtype=np.float64)
    return float(0.5 * np.mean(w * w))


def ns_frames(
    init_w: np.ndarray,
    nu: float,
    spec: SolverSpec,
    forcing: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Saved vorticity frames [T, H, W] in float64, the working precision.

    Each step treats diffusion with Crank-Nicolson and advection plus forcing
    with Heun's predictor/corrector:

        w*    = (A w^n + dt N(w^n)) / B
        w^n+1 = (A w^n + dt/2 (N(w^n) + N(w*))) / B

    with A = 1 - nu dt |k|^2 / 2 and B = 1 + nu dt |k|^2 / 2 per mode. The
    k = 0 mode is pinned to zero so the mean vorticity stays exactly zero.
    """
    init_w = np.asarray(init_w, dtype=np.float64)
    H = spec.H
    if init_w.shape != (H, H):
        raise ValueError(f"init shape {init_w.shape} does not match spec grid ({H},{H})")
    if nu < 0:
        raise ValueError(f"nu must be >= 0, got {nu}")
    if not np.isfinite(init_w).all():
        raise ValueError("init contains non-finite values")
    mean_w = abs(float(init_w.mean()))
    scale = max(1.0, float(np.sqrt(np.mean(init_w * init_w))))
    if mean_w > 1e-8 * scale:
        raise ValueError(
            f"init vorticity must have zero mean (velocity is only recoverable "
            f"then); got mean {init_w.mean():.3e}"
        )

    kx, ky = wavenumbers(H)
    ksq = kx * kx + ky * ky
    inv_ksq = np.zeros_like(ksq)
    nonzero = ksq > 0
    inv_ksq[nonzero] = 1.0 / ksq[nonzero]
    mask = dealias_mask(H)

    if forcing is None:
        forcing = make_forcing(spec.forcing, H)
    forcing = np.asarray(forcing, dtype=np.float64)
    if forcing.shape != (H, H):
        raise ValueError(f"forcing shape {forcing.shape} does not match grid ({H},{H})")
    f_hat = np.fft.fft2(forcing) * mask
    f_hat[0, 0] = 0.0

    dt = spec.dt
    dx = 2.0 * np.pi / H
    half = 0.5 * dt * nu * ksq
    a_coef = 1.0 - half
    b_inv = 1.0 / (1.0 + half)

    def nonlinear(w_hat: np.ndarray, step: int) -> np.ndarray:
        w_hat_d = w_hat * mask
        psi_hat = w_hat_d * inv_ksq
        u = np.fft.ifft2(1j * ky * psi_hat).real
        v = np.fft.ifft2(-1j * kx * psi_hat).real
        speed = max(np.abs(u).max(), np.abs(v).max())
        cfl = speed * dt / dx
        if cfl > CFL_LIMIT:
            raise CflError(cfl, step)
        wx = np.fft.ifft2(1j * kx * w_hat_d).real
        wy = np.fft.ifft2(1j * ky * w_hat_d).real
        advection = u * wx + v * wy
        return -np.fft.fft2(advection) * mask + f_hat

    w_hat = np.fft.fft2(init_w)
    w_hat[0, 0] = 0.0
    frames = np.empty((spec.n_frames, H, H), dtype=np.float64)
    frames[0] = np.fft.ifft2(w_hat).real

    for step in range(1, spec.n_steps + 1):
        n1 = nonlinear(w_hat, step)
        w_star = (a_coef * w_hat + dt * n1) * b_inv
        n2 = nonlinear(w_star, step)
        w_hat = (a_coef * w_hat + 0.5 * dt * (n1 + n2)) * b_inv
        w_hat[0, 0] = 0.0
        if step % spec.save_every == 0:
            frames[step // spec.save_every] = np.fft.ifft2(w_hat).real
    return frames


def solve_ns_vorticity(
    init_w: np.ndarray,
    nu: float,
    spec: SolverSpec,
    forcing: Optional[np.ndarray] = None,
) -> Trajectory:
    """Advance the vorticity field and return a Trajectory [T, H, W, 1]."""
    frames = ns_frames(init_w, nu, spec, forcing)
    return Trajectory(
        values=frames[..., None].astype(np.float32),
        mask=np.ones((spec.H, spec.H), dtype=np.uint8),
        dt_save=spec.dt_save,
        pde="ns_vorticity",
        channel_names=("w",),
    )
