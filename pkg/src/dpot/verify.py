"""Built-in correctness checks runnable from the command line.

Each check is a small, self-contained experiment with an independent
reference: closed-form solutions, brute-force loops, conservation laws, or
byte-level round trips. The runner prints one PASS/FAIL line per check and
reports how many failed. ``quick=True`` skips the few checks that integrate
a solver for many steps.
"""

from __future__ import annotations

import math
import os
import tempfile
import time
from dataclasses import replace
from typing import Callable, List, Tuple

import numpy as np

CheckFn = Callable[[], None]
_CHECKS: List[Tuple[str, CheckFn, bool]] = []


def check(name: str, quick: bool = True):
    def register(fn: CheckFn) -> CheckFn:
        _CHECKS.append((name, fn, quick))
        return fn

    return register


def _identity_mixer_params(h: int, d_h: int):
    """Per-head MLP that acts as the identity on every Fourier coefficient:
    unit weights with bias +30 then -30, far inside GELU's linear regime."""
    from .tensor import Tensor

    eye = np.stack([np.eye(d_h) for _ in range(h)])
    w1 = Tensor(eye.copy())
    w2 = Tensor(eye.copy())
    b1 = Tensor(np.full((h, d_h), 30.0))
    b2 = Tensor(np.full((h, d_h), -30.0))
    return w1, b1, w2, b2


@check("fft-round-trip")
def _fft_round_trip() -> None:
    from .tensor import Tensor, fft2, ifft2, real

    rng = np.random.default_rng(0)
    for n in (8, 32):
        x = rng.standard_normal((n, n))
        back = real(ifft2(fft2(Tensor(x)))).data
        err = np.abs(back - x).max()
        assert err <= 1e-10, f"round-trip error {err:.3e} at {n}x{n}"


@check("fft-parseval")
def _fft_parseval() -> None:
    from .tensor import Tensor, fft2

    rng = np.random.default_rng(1)
    x = rng.standard_normal((16, 16))
    coef = fft2(Tensor(x)).data
    a = float((np.abs(coef) ** 2).sum())
    b = float((x**2).sum())
    assert abs(a - b) <= 1e-12 * b, f"energy mismatch {a} vs {b}"


@check("fft-quadratic-oracle")
def _fft_quadratic_oracle() -> None:
    from .tensor import Tensor, fft2

    rng = np.random.default_rng(7)
    for n in (8, 32):
        x = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        # direct evaluation of the normalized DFT definition
        w = np.exp(-2j * np.pi * np.outer(np.arange(n), np.arange(n)) / n) / np.sqrt(n)
        direct = np.einsum("kj,jl,ml->km", w, x, w)
        coef = fft2(Tensor(x)).data
        err = np.abs(coef - direct).max()
        assert err <= 1e-10, f"quadratic oracle mismatch {err:.3e} at {n}x{n}"

        y = rng.standard_normal((n, n))
        lin = fft2(Tensor(2.5 * x - 0.75 * y)).data
        parts = 2.5 * fft2(Tensor(x)).data - 0.75 * fft2(Tensor(y)).data
        err = np.abs(lin - parts).max()
        assert err <= 1e-10, f"linearity violation {err:.3e} at {n}x{n}"


@check("autodiff-full-model-gradient")
def _full_model_gradient() -> None:
    from .model import DpotModel, ModelConfig
    from .tensor import Tensor, grad_check, tensor_mean

    cfg = ModelConfig(H=8, P=4, T_ctx=2, C_in=2, d_z=8, h=2, L=1, d_ffn=8, groups=2)
    model = DpotModel(cfg, seed=6)
    ctx = np.random.default_rng(0).standard_normal((2, 8, 8, 2))
    ctx[..., -1] = 1.0
    target = np.random.default_rng(1).standard_normal((8, 8, 1))

    def loss_fn():
        diff = model.forward(ctx) - Tensor(target)
        return tensor_mean(diff * diff)

    worst = grad_check(loss_fn, list(model.params.values()), h=1e-4)
    assert worst <= 1e-4, f"worst relative gradient error {worst:.3e}"


@check("autodiff-nano-loss-gradient", quick=False)
def _nano_loss_gradient() -> None:
    from .data import UnifiedSample
    from .model import DpotModel, nano_config
    from .tensor import grad_check
    from .train import ar_denoising_loss

    # nano-width stack on the smallest grid and context; parameter shapes
    # other than the temporal and embedding tensors do not depend on H or T
    cfg = nano_config(C_in=2, T_ctx=2, H=8)
    model = DpotModel(cfg, seed=9)
    rng = np.random.default_rng(3)
    batch = []
    for i in range(2):
        ctx = rng.standard_normal((2, 8, 8, 2))
        ctx[..., -1] = 1.0
        tgt = rng.standard_normal((8, 8, 2))
        tgt[..., -1] = 1.0
        batch.append(
            UnifiedSample(
                context=ctx,
                target=tgt,
                dataset_id=0,
                channel_validity=np.array([True, False]),
            )
        )

    def loss_fn():
        return ar_denoising_loss(model, batch, eps=0.0, rng=None)

    worst = grad_check(loss_fn, model.params, h=1e-4)
    assert worst <= 1e-4, f"worst relative gradient error {worst:.3e}"


@check("mixer-mode-pooling")
def _mixer_pooling() -> None:
    from .model.network import fourier_mixer
    from .tensor import Tensor

    h, d_h = 2, 4
    d = h * d_h
    rng = np.random.default_rng(2)
    z = rng.standard_normal((1, 8, 8, d))
    w1, b1, w2, b2 = _identity_mixer_params(h, d_h)
    mask = np.zeros((8, 8, 1))
    mask[0, 0, 0] = 1.0
    out = fourier_mixer(Tensor(z), w1, b1, w2, b2, mode_mask=mask).data
    expected = np.broadcast_to(z.mean(axis=(1, 2), keepdims=True), z.shape)
    err = np.abs(out - expected).max()
    assert err <= 1e-10, f"pooling error {err:.3e}"


@check("mixer-head-block-diagonal")
def _mixer_heads() -> None:
    from scipy.linalg import block_diag

    from .model.network import fourier_mixer
    from .tensor import Tensor

    rng = np.random.default_rng(3)
    for h in (2, 4):
        d_h = 8 // h
        z = rng.standard_normal((1, 4, 4, 8))
        w1 = rng.standard_normal((h, d_h, d_h))
        w2 = rng.standard_normal((h, d_h, d_h))
        b1 = rng.standard_normal((h, d_h))
        b2 = rng.standard_normal((h, d_h))
        multi = fourier_mixer(
            Tensor(z), Tensor(w1), Tensor(b1), Tensor(w2), Tensor(b2)
        ).data
        single = fourier_mixer(
            Tensor(z),
            Tensor(block_diag(*w1)[None]),
            Tensor(b1.reshape(1, -1)),
            Tensor(block_diag(*w2)[None]),
            Tensor(b2.reshape(1, -1)),
        ).data
        err = np.abs(multi - single).max()
        assert err <= 1e-10, f"h={h} disagreement {err:.3e}"


@check("mixer-resolution-equivariance")
def _mixer_equivariance() -> None:
    from .model.network import fourier_mixer
    from .tensor import Tensor

    h, d_h = 2, 2
    d = h * d_h
    rng = np.random.default_rng(4)
    coef = np.zeros((8, 8, d), dtype=complex)
    for kx in (-2, -1, 0, 1, 2):
        for ky in (-2, -1, 0, 1, 2):
            c = rng.standard_normal(d) + 1j * rng.standard_normal(d)
            coef[kx, ky] = c
            coef[-kx, -ky] = np.conj(c)
    z_low = np.fft.ifft2(coef * 8 * 8, axes=(0, 1)).real
    up = np.zeros((16, 16, d), dtype=complex)
    for kx in (-2, -1, 0, 1, 2):
        for ky in (-2, -1, 0, 1, 2):
            up[kx, ky] = coef[kx, ky]
    z_high = np.fft.ifft2(up * 16 * 16, axes=(0, 1)).real
    w1 = rng.standard_normal((h, d_h, d_h))
    w2 = rng.standard_normal((h, d_h, d_h))
    zero = np.zeros((h, d_h))
    out_low = fourier_mixer(
        Tensor(z_low[None]), Tensor(w1), Tensor(zero), Tensor(w2), Tensor(zero)
    ).data[0]
    out_high = fourier_mixer(
        Tensor(z_high[None]), Tensor(w1), Tensor(zero), Tensor(w2), Tensor(zero)
    ).data[0]
    err = np.abs(out_high[::2, ::2] - out_low).max()
    assert err <= 1e-6, f"cross-resolution disagreement {err:.3e}"


@check("patch-round-trip")
def _patch_round_trip() -> None:
    from .model.network import depatchify, patchify
    from .tensor import Tensor

    rng = np.random.default_rng(5)
    x = rng.standard_normal((2, 16, 16, 3))
    back = depatchify(patchify(Tensor(x), 4), 4, 3).data
    err = np.abs(back - x).max()
    assert err == 0.0, f"patch round trip error {err:.3e}"


@check("temporal-aggregation-reference")
def _temporal_reference() -> None:
    from .model.network import temporal_aggregate
    from .tensor import Tensor

    rng = np.random.default_rng(6)
    B, T, ht, wt, d = 2, 3, 2, 2, 4
    tokens = rng.standard_normal((B, T, ht, wt, d))
    w_t = rng.standard_normal((T, d, d))
    gamma = rng.standard_normal(d)
    got = temporal_aggregate(Tensor(tokens), Tensor(w_t), Tensor(gamma)).data
    ref = np.zeros((B, ht, wt, d))
    for t in range(T):
        t_norm = (t + 1.0) / T
        ref += np.cos(gamma * t_norm) * (tokens[:, t] @ w_t[t])
    err = np.abs(got - ref).max()
    assert err <= 1e-10, f"aggregation error {err:.3e}"


@check("parameter-count-closed-form")
def _param_count() -> None:
    from .model import DpotModel, nano_config, tiny_config

    nano = nano_config(C_in=2, T_ctx=10, H=32)
    model = DpotModel(nano, seed=0)
    actual = sum(p.data.size for p in model.params.values())
    assert actual == nano.param_count() == 65430, (
        f"nano count {actual} vs formula {nano.param_count()}"
    )
    tiny = tiny_config()
    assert tiny.param_count() == 5551375, f"tiny formula {tiny.param_count()}"


@check("heat-eigenmode-decay")
def _heat_eigenmode() -> None:
    from .solvers import SolverSpec, heat_frames
    from .solvers.fields import grid_2pi

    spec = SolverSpec(pde="heat", H=32, dt=0.01, n_steps=100, save_every=100)
    x, y = grid_2pi(32)
    init = np.sin(x) * np.sin(y)
    frames = heat_frames(init, nu=0.1, spec=spec)
    expected = init * math.exp(-0.2)
    err = np.abs(frames[-1] - expected).max() / np.abs(expected).max()
    assert err <= 1e-10, f"decay error {err:.3e}"


@check("heat-grid-refinement")
def _heat_refinement() -> None:
    from .data import fourier_resample
    from .solvers import SolverSpec, heat_frames
    from .solvers.fields import gaussian_random_field

    rng = np.random.default_rng(7)
    coarse = gaussian_random_field(32, rng)
    fine = fourier_resample(coarse, (64, 64))
    spec32 = SolverSpec(pde="heat", H=32, dt=0.01, n_steps=50, save_every=50)
    spec64 = replace(spec32, H=64)
    end32 = heat_frames(coarse, nu=0.1, spec=spec32)[-1]
    end64 = heat_frames(fine, nu=0.1, spec=spec64)[-1]
    err = np.abs(fourier_resample(end64, (32, 32)) - end32).max()
    scale = np.abs(end32).max()
    assert err <= 1e-9 * max(scale, 1.0), f"refinement mismatch {err:.3e}"


@check("taylor-green-vortex", quick=False)
def _taylor_green() -> None:
    from .solvers import SolverSpec, ns_frames
    from .solvers.fields import grid_2pi

    H, nu = 64, 0.05
    spec = SolverSpec(pde="ns_vorticity", H=H, dt=1e-3, n_steps=1000, save_every=1000)
    x, y = grid_2pi(H)
    init = 2.0 * np.cos(x) * np.cos(y)
    frames = ns_frames(init, nu=nu, spec=spec)
    expected = init * math.exp(-2.0 * nu * 1.0)
    err = np.abs(frames[-1] - expected).max() / np.abs(expected).max()
    assert err <= 1e-4, f"vortex decay error {err:.3e}"


@check("inviscid-invariants", quick=False)
def _inviscid() -> None:
    from .solvers import SolverSpec, kinetic_energy, ns_frames
    from .solvers.fields import gaussian_random_field
    from .solvers.navier_stokes import dealias_mask, enstrophy

    H = 64
    rng = np.random.default_rng(8)
    w0 = gaussian_random_field(H, rng)
    w0 = np.fft.ifft2(np.fft.fft2(w0) * dealias_mask(H)).real
    spec = SolverSpec(pde="ns_vorticity", H=H, dt=1e-3, n_steps=100, save_every=100)
    frames = ns_frames(w0, nu=0.0, spec=spec)
    for name, fn in (("energy", kinetic_energy), ("enstrophy", enstrophy)):
        drift = abs(fn(frames[-1]) - fn(frames[0])) / abs(fn(frames[0]))
        assert drift <= 1e-3, f"{name} drift {drift:.3e} over 100 steps"


@check("reaction-disabled-reduces-to-heat")
def _reaction_disabled() -> None:
    from .solvers import SolverSpec, dr_frames, heat_frames
    from .solvers.fields import gaussian_random_field

    H = 32
    rng = np.random.default_rng(9)
    init = np.stack([gaussian_random_field(H, rng) for _ in range(2)], axis=-1)
    spec = SolverSpec(pde="diffusion_reaction", H=H, dt=1e-3, n_steps=200, save_every=200)
    frames = dr_frames(
        init, d_u=1e-3, d_v=1e-3, k=5e-3, spec=spec, reaction_scale=0.0
    )
    heat_spec = replace(spec, pde="heat")
    for c in range(2):
        ref = heat_frames(init[..., c], nu=1e-3, spec=heat_spec)[-1]
        err = np.abs(frames[-1][..., c] - ref).max()
        assert err <= 1e-8, f"channel {c} deviates by {err:.3e}"


@check("reaction-ode-reference")
def _reaction_ode() -> None:
    from scipy.integrate import solve_ivp

    from .solvers import SolverSpec, dr_frames

    k = 5e-3
    u0, v0 = 0.3, -0.2
    spec = SolverSpec(
        pde="diffusion_reaction", H=8, dt=1e-5, n_steps=1000, save_every=1000
    )
    init = np.zeros((8, 8, 2))
    init[..., 0] = u0
    init[..., 1] = v0
    frames = dr_frames(init, d_u=1e-3, d_v=5e-3, k=k, spec=spec)

    def rhs(t, y):
        u, v = y
        return [u - u**3 - k - v, u - v]

    sol = solve_ivp(rhs, (0.0, spec.t_end), [u0, v0], rtol=1e-12, atol=1e-14)
    got = frames[-1][0, 0]
    err = max(abs(got[0] - sol.y[0, -1]), abs(got[1] - sol.y[1, -1]))
    assert err <= 1e-6, f"ODE deviation {err:.3e}"


@check("random-field-normalization")
def _grf_normalization() -> None:
    from .solvers.fields import gaussian_random_field

    rng = np.random.default_rng(10)
    fields = np.stack([gaussian_random_field(64, rng) for _ in range(20)])
    mean_err = np.abs(fields.mean(axis=(1, 2))).max()
    assert mean_err <= 1e-12, f"nonzero field mean {mean_err:.3e}"
    var = fields.var()
    assert abs(var - 1.0) <= 0.05, f"ensemble variance {var:.4f}"


@check("random-field-spectrum")
def _grf_spectrum() -> None:
    from .solvers.fields import gaussian_random_field

    rng = np.random.default_rng(11)
    H, n = 64, 50
    power = np.zeros((H, H))
    for _ in range(n):
        f = gaussian_random_field(H, rng)
        power += np.abs(np.fft.fft2(f)) ** 2
    power /= n
    p_low = (power[2, 0] + power[0, 2]) / 2.0
    p_high = (power[8, 0] + power[0, 8]) / 2.0
    expected = ((4.0 + 49.0) / (64.0 + 49.0)) ** -2.5
    ratio = p_low / p_high
    assert abs(ratio / expected - 1.0) <= 0.15, (
        f"spectrum ratio {ratio:.3f}, expected {expected:.3f}"
    )


@check("sampler-weight-frequencies")
def _sampler_frequencies() -> None:
    from .data import BalancedSampler, SamplerSpec

    class Fake:
        def __init__(self, n, T):
            self._n, self.n_frames = n, T

        def __len__(self):
            return self._n

    sampler = BalancedSampler(
        [Fake(5, 11), Fake(7, 11)], SamplerSpec((3.0, 1.0), seed=2), T_ctx=4
    )
    n = 10000
    ks = np.array([sampler.draw(i)[0] for i in range(n)])
    freq = (ks == 0).mean()
    sigma = math.sqrt(0.75 * 0.25 / n)
    assert abs(freq - 0.75) <= 4 * sigma, f"frequency {freq:.4f} vs 0.75"


@check("sampler-binomial-bound", quick=False)
def _sampler_binomial() -> None:
    from .data import BalancedSampler, SamplerSpec

    class Fake:
        def __init__(self, n, T):
            self._n, self.n_frames = n, T

        def __len__(self):
            return self._n

    n = 100_000
    z99 = 2.5758293035489004
    for weights in ((1.0, 1.0), (3.0, 1.0)):
        sampler = BalancedSampler(
            [Fake(5, 11), Fake(7, 11)], SamplerSpec(weights, seed=12), T_ctx=4
        )
        ks = np.array([sampler.draw(i)[0] for i in range(n)])
        total = sum(weights)
        for k, w in enumerate(weights):
            q = w / total
            freq = (ks == k).mean()
            bound = z99 * math.sqrt(q * (1 - q) / n)
            assert abs(freq - q) <= bound, (
                f"weights {weights}: dataset {k} frequency {freq:.5f} "
                f"outside {q:.5f} +/- {bound:.5f}"
            )


@check("sampler-counter-determinism")
def _sampler_determinism() -> None:
    from .data import BalancedSampler, SamplerSpec

    class Fake:
        def __init__(self, n, T):
            self._n, self.n_frames = n, T

        def __len__(self):
            return self._n

    sampler = BalancedSampler([Fake(6, 9)], SamplerSpec((1.0,), seed=5), T_ctx=3)
    a = [sampler.draw(i) for i in range(20)]
    b = [sampler.draw(i) for i in range(20)]
    assert a == b, "draws are not reproducible"
    stream = sampler.stream(start=10)
    assert next(stream) == sampler.draw(10), "stream start offset wrong"


@check("noise-injection-calibration")
def _noise_calibration() -> None:
    from .data.pipeline import inject_noise

    rng = np.random.default_rng(12)
    context = rng.standard_normal((6, 32, 32, 3)).astype(np.float32)
    context[..., -1] = 1.0
    validity = np.array([True, True, False])
    eps = 5e-3
    noisy = inject_noise(context, eps, np.random.default_rng(0), validity)
    delta = (noisy - context)[..., :2]
    rms = math.sqrt(float((context[..., :2].astype(np.float64) ** 2).mean()))
    measured = float(delta.std())
    assert abs(measured / (eps * rms) - 1.0) <= 0.05, (
        f"noise std {measured:.2e} vs target {eps * rms:.2e}"
    )
    assert np.all(noisy[..., -1] == context[..., -1]), "mask channel perturbed"


@check("noise-zero-identity")
def _noise_zero() -> None:
    from .data.pipeline import inject_noise

    rng = np.random.default_rng(13)
    context = rng.standard_normal((4, 8, 8, 2)).astype(np.float32)
    context[..., -1] = 1.0
    gen = np.random.default_rng(3)
    state = gen.bit_generator.state
    out = inject_noise(context, 0.0, gen, np.array([True, False]))
    assert out is context, "eps=0 must return the input object"
    assert gen.bit_generator.state == state, "eps=0 consumed random numbers"


@check("spectral-resampling-analytic")
def _resample_analytic() -> None:
    from .data import fourier_resample
    from .solvers.fields import grid_2pi

    x32, y32 = grid_2pi(32)
    x64, y64 = grid_2pi(64)
    f = np.sin(3 * x32) * np.cos(2 * y32)
    expected = np.sin(3 * x64) * np.cos(2 * y64)
    err = np.abs(fourier_resample(f, (64, 64)) - expected).max()
    assert err <= 1e-8, f"resampling error {err:.3e}"


@check("schedule-endpoints")
def _schedule() -> None:
    from .train import one_cycle_lr

    assert abs(one_cycle_lr(0, 1000, 1e-3) - 4e-5) <= 1e-16
    peak = one_cycle_lr(200, 1000, 1e-3)
    assert abs(peak - 1e-3) <= 1e-11, f"peak {peak}"
    end = one_cycle_lr(1000, 1000, 1e-3)
    assert abs(end - 1e-7) <= 1e-15, f"final {end}"


@check("optimizer-first-step")
def _optimizer() -> None:
    from .tensor import Tensor
    from .train import AdamW

    p = Tensor(np.array([1.0]))
    p.grad = np.array([1.0])
    AdamW({"p": p}, weight_decay=0.0).step(lr=0.1)
    assert abs(p.data[0] - 0.9) <= 1e-6, f"update to {p.data[0]}"
    q = Tensor(np.array([2.0]))
    q.grad = np.array([0.0])
    AdamW({"q": q}, weight_decay=0.01).step(lr=0.1)
    assert abs(q.data[0] - 1.998) <= 1e-15, f"decay-only update to {q.data[0]}"


@check("loss-perfect-prediction")
def _loss_zero() -> None:
    from .data.pipeline import UnifiedSample
    from .tensor import Tensor
    from .train import ar_denoising_loss

    rng = np.random.default_rng(14)
    context = rng.standard_normal((3, 8, 8, 2)).astype(np.float32)
    context[..., -1] = 1.0
    target = rng.standard_normal((8, 8, 2)).astype(np.float32)
    target[..., -1] = 1.0
    sample = UnifiedSample(
        context=context,
        target=target,
        dataset_id=0,
        channel_validity=np.array([True, False]),
    )
    truth = target[None, :, :, :1].astype(np.float64)
    loss = ar_denoising_loss(lambda ctx: Tensor(truth), [sample], 0.0, None)
    assert float(loss.data) == 0.0, f"nonzero loss {float(loss.data)}"
    zero = ar_denoising_loss(
        lambda ctx: Tensor(np.zeros_like(truth)), [sample], 0.0, None
    )
    assert abs(float(zero.data) - 1.0) <= 1e-12, f"relative loss {float(zero.data)}"


@check("dataset-file-round-trip")
def _dataset_file() -> None:
    from .persist import ChecksumError, decode_dataset, encode_dataset
    from .solvers.trajectory import TrajectoryDataset

    values = (np.arange(2 * 3 * 8 * 8 * 1, dtype=np.float32).reshape(2, 3, 8, 8, 1) / 11.0)
    masks = np.ones((2, 8, 8), np.uint8)
    ds = TrajectoryDataset(values=values, masks=masks, metadata={"pde": "heat"})
    data = encode_dataset(ds)
    back = decode_dataset(data)
    assert np.array_equal(back.values, values), "payload altered by round trip"
    assert encode_dataset(back) == data, "re-serialization not byte-identical"
    corrupted = bytearray(data)
    corrupted[60] ^= 0x01
    try:
        decode_dataset(bytes(corrupted))
    except ChecksumError:
        pass
    else:
        raise AssertionError("flipped byte not detected")


@check("checkpoint-round-trip")
def _checkpoint_file() -> None:
    from .model import DpotModel, ModelConfig
    from .persist import load_checkpoint, save_checkpoint
    from .train import AdamW, training_state

    cfg = ModelConfig(H=8, P=4, T_ctx=2, C_in=2, d_z=8, h=2, L=1, d_ffn=8, groups=2)
    model = DpotModel(cfg, seed=1)
    state = training_state(model, AdamW(model.params), step=3)
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "ck.bin")
        save_checkpoint(path, state)
        back = load_checkpoint(path)
        path2 = os.path.join(tmp, "ck2.bin")
        save_checkpoint(path2, back)
        with open(path, "rb") as f1, open(path2, "rb") as f2:
            assert f1.read() == f2.read(), "save-load-save not byte-identical"
    for k, v in state["arrays"].items():
        assert np.array_equal(back["arrays"][k], v), f"array {k} altered"


def run_verification(quick: bool = False, log: Callable[[str], None] = print) -> int:
    """Run the registered checks; returns the number of failures."""
    failures = 0
    for name, fn, is_quick in _CHECKS:
        if quick and not is_quick:
            log(f"SKIP {name}")
            continue
        start = time.time()
        try:
            fn()
        except Exception as exc:
            failures += 1
            reason = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
            log(f"FAIL {name}: {reason}")
        else:
            log(f"PASS {name} ({time.time() - start:.2f}s)")
    total = sum(1 for _, _, q in _CHECKS if q or not quick)
    log(f"{total - failures}/{total} checks passed")
    return failures
