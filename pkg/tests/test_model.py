"""Model oracles: embedding and aggregation against naive loops, the
zero-frequency pooling mechanism, multi-head block-diagonal equivalence,
mixer resolution equivariance, parameter accounting, gradient fidelity,
and weight transfer rules."""

import numpy as np
import pytest
from scipy.linalg import block_diag

from dpot.data.resolution import fourier_resample
from dpot.model import (
    DpotModel,
    ModelConfig,
    channel_ffn,
    copied_scalar_count,
    depatchify,
    fourier_attention_layer,
    fourier_mixer,
    frame_coordinates,
    group_norm,
    micro_config,
    nano_config,
    patch_embed,
    patchify,
    positional_encode,
    temporal_aggregate,
    tiny_config,
    transfer_weights,
    transferable_fields,
)
from dpot.tensor import Tensor, grad_check, tensor_mean, tensor_sum

RNG = np.random.default_rng(314159)


def tensors(*arrays):
    return tuple(Tensor(np.asarray(a, dtype=np.float64)) for a in arrays)


class TestConfig:
    def test_divisibility_invariants(self):
        with pytest.raises(ValueError, match="patch"):
            ModelConfig(H=30, P=4, T_ctx=2, C_in=2, d_z=8, h=2, L=1, d_ffn=8, groups=2)
        with pytest.raises(ValueError, match="heads"):
            ModelConfig(H=32, P=4, T_ctx=2, C_in=2, d_z=10, h=4, L=1, d_ffn=8, groups=2)
        with pytest.raises(ValueError, match="groups"):
            ModelConfig(H=32, P=4, T_ctx=2, C_in=2, d_z=8, h=2, L=1, d_ffn=8, groups=3)

    def test_output_channels_drop_mask(self):
        assert nano_config(C_in=3).C_out == 2

    @pytest.mark.parametrize("cfg", [nano_config(), micro_config(), tiny_config()])
    def test_param_count_matches_closed_form(self, cfg):
        model = DpotModel(cfg, seed=0)
        assert model.param_count() == cfg.param_count()

    def test_layer_scalar_count_formula(self):
        cfg = nano_config()
        d_h = cfg.d_z // cfg.h
        expected = (cfg.h * (2 * d_h * d_h + 2 * d_h) + 2 * cfg.d_z
                    + (2 * cfg.d_z * cfg.d_ffn + cfg.d_z + cfg.d_ffn))
        assert cfg.layer_param_count() == expected


class TestPositionalEncode:
    def test_zero_map_gives_zero(self):
        coords = frame_coordinates(2, 8, 8)
        (w,) = tensors(np.zeros((3, 2)))
        assert np.abs(positional_encode(coords, w).data).max() == 0.0

    def test_x_coordinate_broadcast(self):
        coords = frame_coordinates(1, 8, 8)
        w = np.zeros((3, 2))
        w[0, :] = 1.0
        (wt,) = tensors(w)
        out = positional_encode(coords, wt).data
        x = (np.arange(8) + 0.5) / 8
        for c in range(2):
            assert np.abs(out[0, :, :, c] - x[:, None]).max() <= 1e-12

    def test_matches_per_pixel_loop(self):
        coords = frame_coordinates(2, 4, 4)
        w = RNG.standard_normal((3, 2))
        out = positional_encode(coords, Tensor(w)).data
        for t in range(2):
            for i in range(4):
                for j in range(4):
                    expected = coords[t, i, j] @ w
                    assert np.abs(out[t, i, j] - expected).max() <= 1e-12


class TestPatchEmbed:
    def test_token_grid_arithmetic(self):
        frames = Tensor(RNG.standard_normal((1, 32, 32, 2)))
        kernel, bias = tensors(RNG.standard_normal((4 * 4 * 2, 8)), np.zeros(8))
        out = patch_embed(frames, kernel, bias, 4)
        assert out.shape == (1, 8, 8, 8)

    def test_zero_kernel_gives_bias(self):
        frames = Tensor(RNG.standard_normal((1, 16, 16, 2)))
        bias = RNG.standard_normal(8)
        kernel, b = tensors(np.zeros((4 * 4 * 2, 8)), bias)
        out = patch_embed(frames, kernel, b, 4).data
        assert np.abs(out - bias).max() <= 1e-12

    def test_matches_patch_extraction_oracle(self):
        P, C, d = 4, 3, 6
        frames = RNG.standard_normal((2, 16, 16, C))
        kernel = RNG.standard_normal((P * P * C, d))
        bias = RNG.standard_normal(d)
        kt, bt = tensors(kernel, bias)
        out = patch_embed(Tensor(frames), kt, bt, P).data
        for b in range(2):
            for i in range(4):
                for j in range(4):
                    patch = frames[b, i * P:(i + 1) * P, j * P:(j + 1) * P, :]
                    expected = patch.reshape(-1) @ kernel + bias
                    assert np.abs(out[b, i, j] - expected).max() <= 1e-10

    def test_depatchify_inverts_patchify(self):
        x = Tensor(RNG.standard_normal((2, 16, 16, 3)))
        packed = patchify(x, 4)
        back = depatchify(packed, 4, 3)
        assert np.array_equal(back.data, x.data)


class TestTemporalAggregate:
    def test_gamma_zero_identity_maps_give_mean(self):
        T, d = 4, 6
        z = RNG.standard_normal((1, T, 3, 3, d))
        w_t = np.stack([np.eye(d) / T] * T)
        wt, g = tensors(w_t, np.zeros(d))
        out = temporal_aggregate(Tensor(z), wt, g).data
        assert np.abs(out - z.mean(axis=1)).max() <= 1e-12

    def test_single_frame_is_plain_transform(self):
        d = 5
        z = RNG.standard_normal((1, 1, 2, 2, d))
        w = RNG.standard_normal((1, d, d))
        wt, g = tensors(w, np.zeros(d))
        out = temporal_aggregate(Tensor(z), wt, g).data
        assert np.abs(out - z[:, 0] @ w[0]).max() <= 1e-12

    def test_matches_complex_arithmetic_oracle(self):
        T, d = 3, 8
        z = RNG.standard_normal((2, T, 4, 4, d))
        w_t = RNG.standard_normal((T, d, d))
        gamma = RNG.standard_normal(d)
        wt, g = tensors(w_t, gamma)
        out = temporal_aggregate(Tensor(z), wt, g).data
        oracle = np.zeros((2, 4, 4, d))
        for t in range(T):
            t_norm = (t + 1) / T
            transformed = z[:, t] @ w_t[t]
            oracle += (transformed * np.exp(-1j * gamma * t_norm)).real
        assert np.abs(out - oracle).max() <= 1e-10

    def test_length_mismatch_rejected(self):
        z = Tensor(RNG.standard_normal((1, 4, 2, 2, 4)))
        wt, g = tensors(RNG.standard_normal((3, 4, 4)), np.zeros(4))
        with pytest.raises(ValueError, match="frames"):
            temporal_aggregate(z, wt, g)


def identity_mixer_params(h, d_h, shift=30.0):
    """Per-head MLP that acts as the identity on coefficients of modest size:
    W=I with a bias shift into the region where GELU is exactly linear."""
    eye = np.stack([np.eye(d_h)] * h)
    return tensors(eye, np.full((h, d_h), shift), eye, np.full((h, d_h), -shift))


class TestFourierMixer:
    def test_zero_parameters_contribute_nothing(self):
        z = Tensor(RNG.standard_normal((1, 8, 8, 8)))
        w1, b1, w2, b2 = tensors(np.zeros((2, 4, 4)), np.zeros((2, 4)),
                                 np.zeros((2, 4, 4)), np.zeros((2, 4)))
        out = fourier_mixer(z, w1, b1, w2, b2).data
        assert np.abs(out).max() == 0.0

    def test_zero_frequency_mask_is_mean_pooling(self):
        # Restricting the mixer to the k=0 mode with an identity-acting MLP
        # must broadcast the spatial mean: the mechanism behind reducing the
        # architecture to a sum-pooling network.
        h, d_h = 2, 4
        z = RNG.standard_normal((3, 8, 8, h * d_h))
        mask = np.zeros((8, 8, 1))
        mask[0, 0, 0] = 1.0
        w1, b1, w2, b2 = identity_mixer_params(h, d_h)
        out = fourier_mixer(Tensor(z), w1, b1, w2, b2, mode_mask=mask).data
        pooled = np.broadcast_to(z.mean(axis=(1, 2), keepdims=True), z.shape)
        assert np.abs(out - pooled).max() <= 1e-10

    @pytest.mark.parametrize("h", [2, 4])
    def test_head_split_matches_block_diagonal_single_head(self, h):
        d_z = 16
        d_h = d_z // h
        z = Tensor(RNG.standard_normal((2, 8, 8, d_z)))
        a1 = RNG.standard_normal((h, d_h, d_h))
        a2 = RNG.standard_normal((h, d_h, d_h))
        c1 = RNG.standard_normal((h, d_h))
        c2 = RNG.standard_normal((h, d_h))
        multi = fourier_mixer(z, *tensors(a1, c1, a2, c2)).data
        w1 = block_diag(*a1)[None]
        w2 = block_diag(*a2)[None]
        single = fourier_mixer(z, *tensors(w1, c1.reshape(1, -1),
                                           w2, c2.reshape(1, -1))).data
        assert np.abs(multi - single).max() <= 1e-10

    def test_resolution_equivariance_band_limited(self):
        # With bias-free MLPs, unused high modes stay exactly zero, so
        # mixing commutes with band-limited spectral upsampling.
        h, d_h = 2, 4
        d_z = h * d_h
        rng = np.random.default_rng(8)
        spectrum = np.zeros((8, 8, d_z), dtype=complex)
        for c in range(d_z):
            block = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
            spectrum[np.ix_([0, 1, 2, -2, -1], [0, 1, 2, -2, -1], [c])] = block[..., None]
        z = np.fft.ifft2(spectrum, axes=(0, 1)).real[None]
        w1, b1, w2, b2 = tensors(rng.standard_normal((h, d_h, d_h)),
                                 np.zeros((h, d_h)),
                                 rng.standard_normal((h, d_h, d_h)),
                                 np.zeros((h, d_h)))
        mixed_coarse = fourier_mixer(Tensor(z), w1, b1, w2, b2).data[0]
        z_up = np.moveaxis(fourier_resample(np.moveaxis(z[0], 2, 0), (16, 16)), 0, 2)
        mixed_fine = fourier_mixer(Tensor(z_up[None]), w1, b1, w2, b2).data[0]
        up_of_mixed = np.moveaxis(
            fourier_resample(np.moveaxis(mixed_coarse, 2, 0), (16, 16)), 0, 2
        )
        assert np.abs(mixed_fine - up_of_mixed).max() <= 1e-6


class TestGroupNorm:
    def test_matches_direct_computation(self):
        B, ht, wt, d, groups = 2, 4, 4, 8, 2
        z = RNG.standard_normal((B, ht, wt, d))
        gscale = RNG.standard_normal(d)
        gbias = RNG.standard_normal(d)
        st, bt = tensors(gscale, gbias)
        out = group_norm(Tensor(z), st, bt, groups).data
        zg = z.reshape(B, ht, wt, groups, d // groups)
        m = zg.mean(axis=(1, 2, 4), keepdims=True)
        v = zg.var(axis=(1, 2, 4), keepdims=True)
        normed = ((zg - m) / np.sqrt(v + 1e-5)).reshape(B, ht, wt, d)
        assert np.abs(out - (normed * gscale + gbias)).max() <= 1e-10

    def test_normalized_statistics(self):
        z = RNG.standard_normal((1, 8, 8, 8))
        ones, zeros = tensors(np.ones(8), np.zeros(8))
        out = group_norm(Tensor(z), ones, zeros, 2).data
        zg = out.reshape(1, 8, 8, 2, 4)
        assert np.abs(zg.mean(axis=(1, 2, 4))).max() <= 1e-10
        assert np.abs(zg.std(axis=(1, 2, 4)) - 1.0).max() <= 1e-4


class TestAttentionLayer:
    def test_zero_mixer_reduces_to_norm_and_ffn(self):
        d, groups = 8, 2
        z = Tensor(RNG.standard_normal((1, 4, 4, d)))
        params = {
            "mixer_w1": Tensor(np.zeros((2, 4, 4))),
            "mixer_b1": Tensor(np.zeros((2, 4))),
            "mixer_w2": Tensor(np.zeros((2, 4, 4))),
            "mixer_b2": Tensor(np.zeros((2, 4))),
            "gn_scale": Tensor(RNG.standard_normal(d)),
            "gn_bias": Tensor(RNG.standard_normal(d)),
            "ffn_w1": Tensor(RNG.standard_normal((d, d))),
            "ffn_b1": Tensor(RNG.standard_normal(d)),
            "ffn_w2": Tensor(RNG.standard_normal((d, d))),
            "ffn_b2": Tensor(RNG.standard_normal(d)),
        }
        out = fourier_attention_layer(z, params, groups).data
        gn = group_norm(z, params["gn_scale"], params["gn_bias"], groups)
        expected = gn.data + channel_ffn(gn, params["ffn_w1"], params["ffn_b1"],
                                         params["ffn_w2"], params["ffn_b2"]).data
        assert np.abs(out - expected).max() <= 1e-12


class TestForward:
    def test_zero_parameters_give_zero_output(self):
        cfg = micro_config(C_in=2, T_ctx=3, H=16)
        model = DpotModel(cfg, seed=0)
        for p in model.params.values():
            p.data = np.zeros_like(p.data)
        ctx = RNG.standard_normal((3, 16, 16, 2))
        out = model.forward(ctx).data
        assert np.abs(out).max() == 0.0

    def test_output_shape_and_finiteness(self):
        cfg = nano_config(C_in=2, T_ctx=4, H=32)
        model = DpotModel(cfg, seed=1)
        out = model.forward(RNG.standard_normal((4, 32, 32, 2)))
        assert out.shape == (32, 32, 1)
        assert np.isfinite(out.data).all()

    def test_shape_mismatch_reports_expected_and_actual(self):
        model = DpotModel(micro_config(C_in=2, T_ctx=3, H=16), seed=0)
        with pytest.raises(ValueError, match="expected"):
            model.forward(RNG.standard_normal((4, 16, 16, 2)))

    def test_deterministic_and_pure(self):
        model = DpotModel(micro_config(C_in=2, T_ctx=3, H=16), seed=2)
        ctx = RNG.standard_normal((2, 3, 16, 16, 2))
        a = model.forward(ctx).data
        b = model.forward(ctx).data
        assert np.array_equal(a, b)

    def test_resampled_eval_equals_native_on_band_limited_input(self):
        # A context upsampled from the native grid carries no content above
        # the training band, so evaluating it at the finer resolution must
        # reproduce the native prediction's interpolant exactly.
        model = DpotModel(micro_config(C_in=2, T_ctx=3, H=16), seed=3)
        ctx = RNG.standard_normal((2, 3, 16, 16, 2))
        native = model.forward(ctx).data
        up = np.moveaxis(fourier_resample(np.moveaxis(ctx, (2, 3), (3, 4)),
                                          (24, 24)), (3, 4), (2, 3))
        fine = model.forward(up).data
        expected = np.moveaxis(fourier_resample(np.moveaxis(native, (1, 2), (2, 3)),
                                                (24, 24)), (2, 3), (1, 2))
        assert np.abs(fine - expected).max() <= 1e-10

    def test_eval_at_other_resolutions(self):
        model = DpotModel(nano_config(C_in=2, T_ctx=3, H=32), seed=4)
        for H_new in (24, 44, 48, 64):
            out = model.forward(RNG.standard_normal((3, H_new, H_new, 2)))
            assert out.shape == (H_new, H_new, 1)
            assert np.isfinite(out.data).all()


class TestGradient:
    def test_full_model_gradients_match_finite_differences(self):
        cfg = ModelConfig(H=8, P=4, T_ctx=2, C_in=2, d_z=8, h=2, L=1,
                          d_ffn=8, groups=2)
        model = DpotModel(cfg, seed=6)
        ctx = np.random.default_rng(0).standard_normal((2, 8, 8, 2))
        ctx[..., -1] = 1.0
        target = np.random.default_rng(1).standard_normal((8, 8, 1))

        def loss_fn():
            pred = model.forward(ctx)
            diff = pred - Tensor(target)
            return tensor_mean(diff * diff)

        params = list(model.params.values())
        assert grad_check(loss_fn, params, h=1e-4) <= 1e-4


class TestTransfer:
    def test_same_config_copies_everything(self):
        cfg = micro_config(C_in=2, T_ctx=3, H=16)
        src = DpotModel(cfg, seed=7)
        model, copied, reinit = transfer_weights(src.state_arrays(), cfg, cfg, seed=8)
        assert reinit == []
        assert set(copied) == set(model.params)
        for k in model.params:
            assert np.array_equal(model.params[k].data, src.params[k].data)

    def test_resolution_change_copies_layers_reinits_patch(self):
        cfg32 = nano_config(C_in=2, T_ctx=3, H=32)
        cfg64 = ModelConfig(H=64, P=8, T_ctx=3, C_in=2, d_z=64, h=4, L=2,
                            d_ffn=64, groups=8)
        src = DpotModel(cfg32, seed=9)
        model, copied, reinit = transfer_weights(src.state_arrays(), cfg32, cfg64, seed=10)
        layer_names = set(transferable_fields(cfg64))
        assert layer_names <= set(copied)
        assert {"patch_w", "dec_w", "dec_b"} <= set(reinit)
        for name in layer_names:
            assert np.array_equal(model.params[name].data, src.params[name].data)
        out = model.forward(RNG.standard_normal((3, 64, 64, 2)))
        assert out.shape == (64, 64, 1)

    def test_copied_layer_scalar_count_formula(self):
        cfg = nano_config(C_in=2, T_ctx=3, H=32)
        model = DpotModel(cfg, seed=11)
        names = transferable_fields(cfg)
        assert copied_scalar_count(names, model) == cfg.L * cfg.layer_param_count()

    def test_width_mismatch_rejected_with_both_configs(self):
        cfg_a = micro_config(C_in=2, T_ctx=3, H=16)
        cfg_b = nano_config(C_in=2, T_ctx=3, H=32)
        src = DpotModel(cfg_a, seed=12)
        with pytest.raises(ValueError, match="d_z"):
            transfer_weights(src.state_arrays(), cfg_a, cfg_b)
