"""Scripted desk-scale studies: training, resolution, noise, and transfer.

Each study generates its own data from fixed seeds, trains from fixed
seeds, and returns plain dictionaries of measured values, so a repeated
run reproduces the same numbers exactly. The studies are deliberately
small: every configuration here finishes on a single CPU core.
"""

from __future__ import annotations

import time
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from ..data import make_window
from ..model import DpotModel, ModelConfig, nano_config, transfer_weights
from ..solvers import SolverSpec, default_dr_spec, default_heat_spec, generate_dataset
from ..tensor import Tensor
from .loss import l2re
from .trainer import (
    PreparedDataset,
    TrainConfig,
    evaluate_onestep,
    prepare_dataset,
    rollout,
    train,
)

Log = Optional[Callable[[str], None]]


def smooth_ns_spec(seed: int = 0) -> SolverSpec:
    """Forced vorticity flow viscous enough that a small model can fit it.

    Compared to the default family this raises viscosity and forcing so
    trajectories relax toward the forced state, which keeps rollout error
    low enough for input-noise effects to be measurable.
    """
    return SolverSpec(
        pde="ns_vorticity",
        H=32,
        dt=2e-3,
        n_steps=500,
        save_every=25,
        coefficients={"nu": 1e-2},
        forcing={"kind": "sincos", "amplitude": 0.15},
        seed=seed,
    )


class LastFrameBaseline:
    """Predicts the next frame by copying the last context frame."""

    def __init__(self, C_out: int):
        self.C_out = C_out

    def __call__(self, context: np.ndarray) -> Tensor:
        return Tensor(context[:, -1, :, :, : self.C_out])


def rollout_l2re(
    model,
    prepared: PreparedDataset,
    T_ctx: int,
    n_steps: int,
    start: int = 0,
) -> float:
    """Mean L2RE of an n_steps rollout seeded from an observed window.

    The context is frames [start, start + T_ctx) of each trajectory and
    the prediction is scored against the n_steps frames that follow, in
    destandardized units. A rollout that terminates early (non-finite
    prediction) scores infinity.
    """
    C_out = prepared.mean.shape[0]
    errs: List[float] = []
    for traj in prepared.trajectories:
        s = make_window(traj, start, T_ctx, channel_validity=prepared.channel_validity)
        pred = rollout(model, s.context, n_steps, prepared.channel_validity)
        if pred.shape[0] < n_steps:
            return float("inf")
        T0 = start + T_ctx
        truth = traj.values[T0 : T0 + n_steps].astype(np.float64)
        spatial = (truth[..., -1] > 0.5).astype(np.float64)
        weights = spatial[..., None] * prepared.channel_validity[:C_out]
        pred_phys = pred[..., :C_out] * prepared.std + prepared.mean
        truth_phys = truth[..., :C_out] * prepared.std + prepared.mean
        errs.append(l2re(pred_phys, truth_phys, weights))
    return float(np.mean(errs))


def heat_training_study(
    *,
    n_train: int = 500,
    n_eval: int = 50,
    steps: int = 4000,
    batch_size: int = 4,
    peak_lr: float = 2e-3,
    noise_eps: float = 5e-4,
    T_ctx: int = 10,
    data_seed: int = 0,
    eval_seed: int = 1,
    train_seed: int = 3,
    log: Log = None,
) -> Dict[str, object]:
    """Train the nano model on heat trajectories and score held-out windows.

    Returns the trained model, its one-step L2RE over all held-out windows,
    and the L2RE of the copy-last-frame baseline on the same windows.
    """
    say = log or (lambda s: None)
    t0 = time.time()
    train_ds = generate_dataset(default_heat_spec(seed=data_seed), n_train)
    eval_ds = generate_dataset(default_heat_spec(seed=eval_seed), n_eval)
    say(f"generated {n_train}+{n_eval} heat trajectories in {time.time()-t0:.0f}s")

    config = nano_config(C_in=2, T_ctx=T_ctx, H=32)
    model = DpotModel(config, seed=train_seed)
    tc = TrainConfig(
        epochs=1,
        steps_per_epoch=steps,
        batch_size=batch_size,
        peak_lr=peak_lr,
        noise_eps=noise_eps,
        seed=train_seed,
        eval_every=0,
    )
    t1 = time.time()
    train(model, [train_ds], tc)
    say(f"trained {steps} steps in {time.time()-t1:.0f}s")

    prep_eval = prepare_dataset(eval_ds, H=32, C_max=1, name="heat")
    err = evaluate_onestep(model, prep_eval, T_ctx=T_ctx)
    baseline = evaluate_onestep(LastFrameBaseline(1), prep_eval, T_ctx=T_ctx)
    say(f"one-step L2RE {err:.4f} (baseline {baseline:.4f})")
    return {
        "model": model,
        "l2re": err,
        "baseline": baseline,
        "prepared_eval": prep_eval,
        "seconds": time.time() - t0,
    }


def resolution_study(
    model,
    *,
    resolutions: Sequence[int] = (32, 48, 64),
    H_native: int = 64,
    n_eval: int = 20,
    T_ctx: int = 10,
    data_seed: int = 2,
    log: Log = None,
) -> Dict[str, object]:
    """Evaluate one trained model on the same fields at several resolutions.

    Trajectories are generated once at H_native and spectrally resampled to
    each target resolution, so every grid renders the same underlying
    fields and the finer grids retain content above the model's training
    band. Reports one-step L2RE per resolution and the worst degradation
    relative to the first resolution listed.
    """
    say = log or (lambda s: None)
    t0 = time.time()
    base_spec = default_heat_spec(seed=data_seed)
    spec = SolverSpec(
        pde=base_spec.pde,
        H=H_native,
        dt=base_spec.dt,
        n_steps=base_spec.n_steps,
        save_every=base_spec.save_every,
        coefficients=base_spec.coefficients,
        forcing=base_spec.forcing,
        seed=base_spec.seed,
    )
    eval_ds = generate_dataset(spec, n_eval)
    errors: Dict[int, float] = {}
    for H in resolutions:
        prep = prepare_dataset(eval_ds, H=H, C_max=1, name="heat", strict_grid=False)
        errors[H] = evaluate_onestep(model, prep, T_ctx=T_ctx)
        say(f"H={H}: one-step L2RE {errors[H]:.4f}")
    base = errors[resolutions[0]]
    degradation = max(errors[H] / base - 1.0 for H in resolutions[1:])
    return {
        "errors": errors,
        "base": base,
        "max_degradation": degradation,
        "seconds": time.time() - t0,
    }


def _trend_model_config() -> ModelConfig:
    return ModelConfig(
        H=32, P=4, T_ctx=10, C_in=2, d_z=48, h=4, L=2, d_ffn=48, groups=8
    )


def noise_study(
    *,
    eps_grid: Sequence[float] = (0.0, 5e-5, 5e-4, 5e-2),
    seeds: Sequence[int] = (1, 2, 3, 4, 5),
    n_train: int = 48,
    n_eval: int = 12,
    steps: int = 2500,
    batch_size: int = 8,
    peak_lr: float = 2e-3,
    rollout_steps: int = 10,
    T_ctx: int = 10,
    data_seed: int = 10,
    eval_seed: int = 11,
    log: Log = None,
) -> Dict[str, object]:
    """Sweep the training noise level and measure rollout error per seed.

    For every (noise level, seed) pair a fresh model is trained on the same
    smooth vorticity dataset and scored by rollout_l2re on held-out
    trajectories. Returns per-seed values and per-level means.
    """
    say = log or (lambda s: None)
    t0 = time.time()
    train_ds = generate_dataset(smooth_ns_spec(seed=data_seed), n_train)
    eval_ds = generate_dataset(smooth_ns_spec(seed=eval_seed), n_eval)
    prep_eval = prepare_dataset(eval_ds, H=32, C_max=1, name="ns")
    say(f"generated {n_train}+{n_eval} vorticity trajectories in {time.time()-t0:.0f}s")

    config = _trend_model_config()
    per_eps: Dict[float, Dict[str, object]] = {}
    for eps in eps_grid:
        vals: List[float] = []
        for seed in seeds:
            model = DpotModel(config, seed=seed)
            tc = TrainConfig(
                epochs=1,
                steps_per_epoch=steps,
                batch_size=batch_size,
                peak_lr=peak_lr,
                noise_eps=eps,
                seed=seed,
                eval_every=0,
            )
            t1 = time.time()
            train(model, [train_ds], tc)
            err = rollout_l2re(model, prep_eval, T_ctx, rollout_steps)
            vals.append(err)
            say(f"eps={eps:g} seed={seed}: rollout L2RE {err:.6f} ({time.time()-t1:.0f}s)")
        per_eps[eps] = {"per_seed": vals, "mean": float(np.mean(vals))}
        say(f"eps={eps:g}: mean {per_eps[eps]['mean']:.6f}")
    return {"per_eps": per_eps, "seeds": list(seeds), "seconds": time.time() - t0}


def transfer_study(
    *,
    seeds: Sequence[int] = (1, 2, 3, 4, 5),
    n_heat: int = 100,
    n_dr: int = 40,
    n_finetune: int = 64,
    n_eval: int = 12,
    pretrain_steps: int = 1500,
    finetune_steps: int = 400,
    batch_size: int = 8,
    pretrain_lr: float = 2e-3,
    finetune_lr: float = 1e-3,
    noise_eps: float = 5e-4,
    rollout_steps: int = 10,
    T_ctx: int = 10,
    log: Log = None,
) -> Dict[str, object]:
    """Compare fine-tuning a pretrained model against training from scratch.

    One model is pretrained on a heat plus diffusion-reaction mixture, then
    for each seed both a transferred copy and a freshly initialized model
    are trained on the same vorticity trajectories with an identical step
    budget and scored by rollout L2RE on held-out trajectories.
    """
    say = log or (lambda s: None)
    t0 = time.time()
    heat = generate_dataset(default_heat_spec(seed=20), n_heat)
    dr = generate_dataset(default_dr_spec(seed=21), n_dr)
    ns_ft = generate_dataset(smooth_ns_spec(seed=12), n_finetune)
    ns_ev = generate_dataset(smooth_ns_spec(seed=13), n_eval)
    say(f"generated all datasets in {time.time()-t0:.0f}s")
    prep_eval = prepare_dataset(ns_ev, H=32, C_max=2, name="ns")

    config = ModelConfig(
        H=32, P=4, T_ctx=T_ctx, C_in=3, d_z=48, h=4, L=2, d_ffn=48, groups=8
    )
    pretrained = DpotModel(config, seed=0)
    tc_pre = TrainConfig(
        epochs=1,
        steps_per_epoch=pretrain_steps,
        batch_size=batch_size,
        peak_lr=pretrain_lr,
        noise_eps=noise_eps,
        seed=0,
        eval_every=0,
    )
    t1 = time.time()
    train(pretrained, [heat, dr], tc_pre)
    say(f"pretrained {pretrain_steps} steps in {time.time()-t1:.0f}s")
    pre_state = {k: v.data.copy() for k, v in pretrained.params.items()}

    per_seed: List[Dict[str, float]] = []
    wins = 0
    for seed in seeds:
        tc_ft = TrainConfig(
            epochs=1,
            steps_per_epoch=finetune_steps,
            batch_size=batch_size,
            peak_lr=finetune_lr,
            noise_eps=noise_eps,
            seed=seed,
            eval_every=0,
        )
        tuned, _, _ = transfer_weights(pre_state, config, config, seed=seed)
        train(tuned, [ns_ft], tc_ft)
        err_tuned = rollout_l2re(tuned, prep_eval, T_ctx, rollout_steps)

        scratch = DpotModel(config, seed=seed)
        train(scratch, [ns_ft], tc_ft)
        err_scratch = rollout_l2re(scratch, prep_eval, T_ctx, rollout_steps)

        win = err_tuned <= err_scratch
        wins += int(win)
        per_seed.append({"seed": seed, "transfer": err_tuned, "scratch": err_scratch})
        say(
            f"seed={seed}: transfer {err_tuned:.4f} vs scratch {err_scratch:.4f}"
            f" ({'win' if win else 'loss'})"
        )
    return {"per_seed": per_seed, "wins": wins, "seconds": time.time() - t0}
