"""The neural operator: patch embedding with positional encoding, temporal
aggregation with Fourier features, stacked Fourier attention layers (spectral
token mixing, group normalization, channel FFN), and a linear de-patchify
decoder. All computation runs on the reverse-mode Tensor type in float64.

Spectral convention of the mixer: token fields enter Fourier space scaled so
that a coefficient is the amplitude of its mode (coef = DFT/N). Amplitudes
are then resolution-independent for band-limited fields, which is what makes
the frequency MLPs transferable across grid sizes. Real biases are applied
to the real and imaginary parts alike (b * (1 + 1j)), so a shifted identity
MLP passes complex coefficients through exactly.
"""

from __future__ import annotations

import math
from typing import Dict, Optional, Tuple

import numpy as np

from ..data.resolution import fourier_resample
from ..tensor import (
    Tensor,
    add,
    cos,
    fft2,
    gelu,
    ifft2,
    matmul,
    mul,
    power,
    real,
    reshape,
    scale,
    sub,
    tensor_mean,
    tensor_sum,
    transpose,
)
from .config import ModelConfig

GROUP_NORM_EPS = 1e-5


def frame_coordinates(T: int, H: int, W: int) -> np.ndarray:
    """Normalized (x, y, t) per pixel and frame: cell centers in [0, 1] for
    space, (index + 1) / T for time."""
    x = (np.arange(H) + 0.5) / H
    y = (np.arange(W) + 0.5) / W
    t = (np.arange(T) + 1.0) / T
    coords = np.empty((T, H, W, 3), dtype=np.float64)
    coords[..., 0] = x[None, :, None]
    coords[..., 1] = y[None, None, :]
    coords[..., 2] = t[:, None, None]
    return coords


def positional_encode(coords: np.ndarray, w_pos: Tensor) -> Tensor:
    """Linear positional features: coords [..., 3] @ w_pos [3, C_in]."""
    return matmul(Tensor(coords), w_pos)


def patchify(x: Tensor, P: int) -> Tensor:
    """[..., H, W, C] -> [..., H/P, W/P, P*P*C] non-overlapping patches."""
    *lead, H, W, C = x.shape
    ht, wt = H // P, W // P
    x = reshape(x, (*lead, ht, P, wt, P, C))
    n = len(lead)
    x = transpose(x, tuple(range(n)) + (n, n + 2, n + 1, n + 3, n + 4))
    return reshape(x, (*lead, ht, wt, P * P * C))


def depatchify(x: Tensor, P: int, C: int) -> Tensor:
    """[..., H/P, W/P, P*P*C] -> [..., H, W, C], inverse of ``patchify``."""
    *lead, ht, wt, _ = x.shape
    x = reshape(x, (*lead, ht, wt, P, P, C))
    n = len(lead)
    x = transpose(x, tuple(range(n)) + (n, n + 2, n + 1, n + 3, n + 4))
    return reshape(x, (*lead, ht * P, wt * P, C))


def patch_embed(frames: Tensor, kernel: Tensor, bias: Tensor, P: int) -> Tensor:
    """Shared linear map of each P x P patch to a d_z token."""
    return add(matmul(patchify(frames, P), kernel), bias)


def temporal_aggregate(tokens: Tensor, w_t: Tensor, gamma: Tensor) -> Tensor:
    """Collapse [B, T, Ht, Wt, d_z] to [B, Ht, Wt, d_z]:

        z_agg = sum_t cos(gamma * t~) * (z_t @ W_t),   t~ = (t + 1) / T,

    the real part of the Fourier-feature-modulated sum over context frames.
    """
    B, T, ht, wt, d = tokens.shape
    if w_t.shape[0] != T:
        raise ValueError(
            f"context has {T} frames but {w_t.shape[0]} per-frame transforms"
        )
    z = transpose(tokens, (0, 2, 3, 1, 4))
    z = reshape(z, (B, ht, wt, T, 1, d))
    z = matmul(z, w_t)
    t_norm = ((np.arange(T) + 1.0) / T)[:, None]
    factor = reshape(cos(mul(gamma, Tensor(t_norm))), (T, 1, d))
    z = tensor_sum(mul(z, factor), axis=3)
    return reshape(z, (B, ht, wt, d))


def fourier_mixer(
    z: Tensor,
    w1: Tensor,
    b1: Tensor,
    w2: Tensor,
    b2: Tensor,
    mode_mask: Optional[np.ndarray] = None,
) -> Tensor:
    """Spectral token mixing: per-mode, per-head two-layer MLP on the Fourier
    coefficients of the token field, shared across all modes.

    ``mode_mask`` is a diagnostic hook multiplied onto the coefficients
    (e.g. a zero-frequency selector); the default keeps every mode.
    Returns the update to be added residually by the caller.
    """
    B, ht, wt, d = z.shape
    h, d_h = w1.shape[0], w1.shape[1]
    n_modes = ht * wt
    coef = scale(fft2(z, axes=(1, 2)), 1.0 / math.sqrt(n_modes))
    if mode_mask is not None:
        coef = mul(coef, Tensor(np.asarray(mode_mask)))
    c = reshape(coef, (B, ht, wt, h, 1, d_h))
    c = gelu(add(matmul(c, w1), scale(reshape(b1, (h, 1, d_h)), 1.0 + 1.0j)))
    c = add(matmul(c, w2), scale(reshape(b2, (h, 1, d_h)), 1.0 + 1.0j))
    coef_out = reshape(c, (B, ht, wt, d))
    return real(ifft2(scale(coef_out, math.sqrt(n_modes)), axes=(1, 2)))


def group_norm(z: Tensor, gn_scale: Tensor, gn_bias: Tensor, groups: int) -> Tensor:
    """Normalize per (sample, group) over spatial positions and the group's
    channels, then apply the per-channel affine map."""
    B, ht, wt, d = z.shape
    d_g = d // groups
    zg = reshape(z, (B, ht, wt, groups, d_g))
    m = tensor_mean(zg, axis=(1, 2, 4), keepdims=True)
    centered = sub(zg, m)
    var = tensor_mean(mul(centered, centered), axis=(1, 2, 4), keepdims=True)
    inv_std = power(add(var, Tensor(np.asarray(GROUP_NORM_EPS))), -0.5)
    normed = reshape(mul(centered, inv_std), (B, ht, wt, d))
    return add(mul(normed, gn_scale), gn_bias)


def channel_ffn(z: Tensor, f1: Tensor, b1: Tensor, f2: Tensor, b2: Tensor) -> Tensor:
    """Two-layer pointwise network over channels."""
    return add(matmul(gelu(add(matmul(z, f1), b1)), f2), b2)


def fourier_attention_layer(
    z: Tensor,
    layer_params: Dict[str, Tensor],
    groups: int,
    mode_mask: Optional[np.ndarray] = None,
) -> Tensor:
    """Mixer with residual, group norm, FFN with residual."""
    p = layer_params
    z = add(z, fourier_mixer(z, p["mixer_w1"], p["mixer_b1"],
                             p["mixer_w2"], p["mixer_b2"], mode_mask))
    z = group_norm(z, p["gn_scale"], p["gn_bias"], groups)
    return add(z, channel_ffn(z, p["ffn_w1"], p["ffn_b1"],
                              p["ffn_w2"], p["ffn_b2"]))


def _uniform(rng: np.random.Generator, shape: Tuple[int, ...], fan_in: int) -> np.ndarray:
    bound = 1.0 / math.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


class DpotModel:
    """Parameter container plus the forward map context -> next frame.

    Forward is pure: it never mutates parameters, and identical parameters
    and inputs give bit-identical outputs. Inputs may be [T, H, W, C_in] or
    batched [B, T, H, W, C_in]; H may differ from the training resolution
    (see ``_resampled_eval``).
    """

    def __init__(self, config: ModelConfig, seed: int = 0):
        self.config = config
        rng = np.random.default_rng(seed)
        c = config
        d_h = c.d_head
        self.params: Dict[str, Tensor] = {}

        def param(name: str, data: np.ndarray) -> None:
            self.params[name] = Tensor(np.asarray(data, dtype=np.float64),
                                       requires_grad=True)

        param("w_pos", _uniform(rng, (3, c.C_in), 3))
        param("patch_w", _uniform(rng, (c.P * c.P * c.C_in, c.d_z), c.P * c.P * c.C_in))
        param("patch_b", np.zeros(c.d_z))
        param("w_t", _uniform(rng, (c.T_ctx, c.d_z, c.d_z), c.d_z))
        param("gamma", rng.standard_normal(c.d_z))
        for l in range(c.L):
            param(f"layer{l}.mixer_w1", _uniform(rng, (c.h, d_h, d_h), d_h))
            param(f"layer{l}.mixer_b1", np.zeros((c.h, d_h)))
            param(f"layer{l}.mixer_w2", _uniform(rng, (c.h, d_h, d_h), d_h))
            param(f"layer{l}.mixer_b2", np.zeros((c.h, d_h)))
            param(f"layer{l}.gn_scale", np.ones(c.d_z))
            param(f"layer{l}.gn_bias", np.zeros(c.d_z))
            param(f"layer{l}.ffn_w1", _uniform(rng, (c.d_z, c.d_ffn), c.d_z))
            param(f"layer{l}.ffn_b1", np.zeros(c.d_ffn))
            param(f"layer{l}.ffn_w2", _uniform(rng, (c.d_ffn, c.d_z), c.d_ffn))
            param(f"layer{l}.ffn_b2", np.zeros(c.d_z))
        param("dec_w", _uniform(rng, (c.d_z, c.P * c.P * c.C_out), c.d_z))
        param("dec_b", np.zeros(c.P * c.P * c.C_out))

        actual = sum(p.size for p in self.params.values())
        expected = config.param_count()
        if actual != expected:
            raise AssertionError(
                f"parameter count {actual} does not match closed form {expected}"
            )

    def param_count(self) -> int:
        return sum(p.size for p in self.params.values())

    def layer_params(self, l: int) -> Dict[str, Tensor]:
        prefix = f"layer{l}."
        return {k[len(prefix):]: v for k, v in self.params.items()
                if k.startswith(prefix)}

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.zero_grad()

    def state_arrays(self) -> Dict[str, np.ndarray]:
        """Parameter data by name, in stable construction order."""
        return {k: p.data for k, p in self.params.items()}

    def load_state(self, state: Dict[str, np.ndarray]) -> None:
        for k, p in self.params.items():
            if k not in state:
                raise KeyError(f"missing parameter {k!r} in state")
            arr = np.asarray(state[k], dtype=np.float64)
            if arr.shape != p.data.shape:
                raise ValueError(
                    f"parameter {k!r} shape {arr.shape} != expected {p.data.shape}"
                )
            p.data = arr.copy()

    def _resampled_eval(self, context: np.ndarray, H_new: int,
                        mode_mask: Optional[np.ndarray]) -> Tensor:
        """Forward pass at a resolution other than the training grid.

        The patch and decoder kernels are adapted by band-limited spectral
        interpolation of the zero-padded kernel over the whole domain, the
        interpolation that treats the learned taps as samples of one
        continuous filter. By Parseval, that adapted patchify applied to a
        field rendered at H_new produces exactly the native patchify of the
        field's band-limited rendering on the training grid, and the
        adapted decoder renders the predicted field's interpolant at H_new,
        so the whole map is computed as resample in, native forward,
        resample out. Field content above the training band is removed by
        the adapted kernels rather than aliased. Evaluation-only: gradients
        do not flow through the outer resamplings.
        """
        c = self.config
        spatial_last = np.moveaxis(context, (2, 3), (3, 4))
        coarse = fourier_resample(spatial_last, (c.H, c.H))
        native = self.forward(np.moveaxis(coarse, (3, 4), (2, 3)), mode_mask)
        pred = np.moveaxis(native.data, (1, 2), (2, 3))
        up = fourier_resample(pred, (H_new, H_new))
        return Tensor(np.moveaxis(up, (2, 3), (1, 2)))

    def forward(self, context: np.ndarray, mode_mask: Optional[np.ndarray] = None) -> Tensor:
        """Predict the next frame's field channels from a context window."""
        c = self.config
        context = np.asarray(context, dtype=np.float64)
        batched = context.ndim == 5
        if not batched:
            if context.ndim != 4:
                raise ValueError(
                    f"context must be [T,H,W,C] or [B,T,H,W,C], got shape "
                    f"{context.shape}"
                )
            context = context[None]
        B, T, H, W, C = context.shape
        if T != c.T_ctx or C != c.C_in or H != W:
            raise ValueError(
                f"context shape {context.shape[1:]} does not match expected "
                f"({c.T_ctx}, H, H, {c.C_in})"
            )

        if H == c.H:
            coords = frame_coordinates(T, H, W)
            pos = positional_encode(coords, self.params["w_pos"])
            x = add(Tensor(context), pos)
            tokens = patch_embed(x, self.params["patch_w"], self.params["patch_b"], c.P)
            z = temporal_aggregate(tokens, self.params["w_t"], self.params["gamma"])
            for l in range(c.L):
                z = fourier_attention_layer(z, self.layer_params(l), c.groups, mode_mask)
            out = depatchify(add(matmul(z, self.params["dec_w"]),
                                 self.params["dec_b"]), c.P, c.C_out)
        else:
            out = self._resampled_eval(context, H, mode_mask)
        if not batched:
            out = reshape(out, out.shape[1:])
        return out

    __call__ = forward
