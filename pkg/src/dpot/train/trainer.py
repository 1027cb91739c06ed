"""Training loop, dataset preparation, and evaluation helpers.

Preparation brings every dataset to the model's grid, z-scores the physical
channels with that dataset's own statistics, and pads to the shared channel
budget with the mask appended. Training then repeats: balanced sampler draw,
window cut, noise injection, loss, backward, clipped AdamW step. All
randomness is counter-keyed (sampler draw n, noise at step s, eval window
choice), so a run resumed from a checkpoint reproduces the uninterrupted run
exactly; wall-clock columns are the only nondeterministic output.
"""

from __future__ import annotations

import csv
import time
import warnings
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..data.pipeline import (
    channel_validity_from_names,
    clamp_std,
    make_window,
    pad_channels_and_mask,
    standardize,
    window_count,
    window_start,
)
from ..data.resolution import resample_trajectory, unify_resolution
from ..data.sampler import BalancedSampler, SamplerSpec
from ..solvers.trajectory import Trajectory, TrajectoryDataset, channel_statistics
from ..tensor import no_grad
from .loss import ar_denoising_loss, l2re
from .optimizer import AdamW, clip_grad_norm
from .schedule import one_cycle_lr

NOISE_STREAM_KEY = 7919
EVAL_STREAM_KEY = 999983


@dataclass
class PreparedDataset:
    """A dataset after resolution unification, standardization, and channel
    padding, ready for window sampling."""

    name: str
    trajectories: List[Trajectory]
    channel_validity: np.ndarray
    mean: np.ndarray
    std: np.ndarray

    def __len__(self) -> int:
        return len(self.trajectories)

    @property
    def n_frames(self) -> int:
        return self.trajectories[0].n_frames

    @property
    def grid(self) -> Tuple[int, int]:
        return self.trajectories[0].grid


def prepare_dataset(
    ds: TrajectoryDataset,
    H: int,
    C_max: int,
    name: str = "",
    pad_value: float = 1.0,
    strict_grid: bool = True,
) -> PreparedDataset:
    """Resample to HxH, standardize physical channels, pad, append mask.

    ``strict_grid`` restricts the target to the power-of-two training grids;
    evaluation at arbitrary resolutions passes False. Standardization
    statistics come from the dataset metadata when present (so they describe
    the generating distribution, not the particular split) and are computed
    from the data otherwise.
    """
    names = list(ds.metadata.get("channel_names", []))
    C = ds.n_channels
    if len(names) != C:
        names = [f"c{i}" for i in range(C)]
    if "channel_mean" in ds.metadata and "channel_std" in ds.metadata:
        mean = np.asarray(ds.metadata["channel_mean"], dtype=np.float64)
        std = np.asarray(ds.metadata["channel_std"], dtype=np.float64)
    else:
        m, s = channel_statistics(ds.values, ds.masks)
        mean, std = np.asarray(m), np.asarray(s)
    if mean.shape != (C,) or std.shape != (C,):
        raise ValueError(
            f"statistics shapes {mean.shape}/{std.shape} do not match {C} channels"
        )
    std = clamp_std(std)
    mean_full = np.zeros(C_max, dtype=np.float64)
    std_full = np.ones(C_max, dtype=np.float64)
    mean_full[:C] = mean
    std_full[:C] = std

    trajectories = []
    for i in range(len(ds)):
        traj = ds.trajectory(i)
        if strict_grid:
            traj = unify_resolution(traj, H)
        else:
            traj = resample_trajectory(traj, H)
        traj = Trajectory(
            values=standardize(traj.values, mean, std),
            mask=traj.mask,
            dt_save=traj.dt_save,
            pde=traj.pde,
            channel_names=names,
        )
        trajectories.append(pad_channels_and_mask(traj, C_max, pad_value))
    validity = channel_validity_from_names(trajectories[0].channel_names)
    return PreparedDataset(
        name=name or ds.metadata.get("pde", "dataset"),
        trajectories=trajectories,
        channel_validity=validity,
        mean=mean_full,
        std=std_full,
    )


@dataclass
class TrainConfig:
    """Hyperparameters of one training run."""

    epochs: int = 1
    steps_per_epoch: int = 100
    batch_size: int = 4
    peak_lr: float = 1e-3
    warmup_frac: float = 0.2
    beta1: float = 0.9
    beta2: float = 0.9
    weight_decay: float = 1e-6
    clip_norm: float = 1.0
    noise_eps: float = 5e-4
    relative_loss: bool = True
    sampler_weights: Optional[Sequence[float]] = None
    seed: int = 0
    eval_every: int = 0
    eval_windows: int = 16
    rollout_steps: int = 0

    def __post_init__(self) -> None:
        if self.epochs < 1 or self.steps_per_epoch < 1:
            raise ValueError("epochs and steps_per_epoch must be >= 1")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.peak_lr <= 0:
            raise ValueError(f"peak_lr must be > 0, got {self.peak_lr}")
        if not 0 < self.warmup_frac < 1:
            raise ValueError(f"warmup_frac must be in (0, 1), got {self.warmup_frac}")
        if self.noise_eps < 0:
            raise ValueError(f"noise_eps must be >= 0, got {self.noise_eps}")
        if self.clip_norm <= 0:
            raise ValueError(f"clip_norm must be > 0, got {self.clip_norm}")
        if self.eval_every < 0 or self.rollout_steps < 0:
            raise ValueError("eval_every and rollout_steps must be >= 0")

    @property
    def total_steps(self) -> int:
        return self.epochs * self.steps_per_epoch

    def to_json(self) -> Dict:
        out = {k: getattr(self, k) for k in self.__dataclass_fields__}
        if out["sampler_weights"] is not None:
            out["sampler_weights"] = list(out["sampler_weights"])
        return out

    @classmethod
    def from_json(cls, data: Dict) -> "TrainConfig":
        return cls(**data)


class MetricsLog:
    """Per-step training rows plus per-dataset evaluation rows.

    ``wall_time`` is informational only; determinism guarantees cover every
    other column.
    """

    TRAIN_COLUMNS = ("epoch", "step", "lr", "loss", "grad_norm", "wall_time")

    def __init__(self) -> None:
        self.train_rows: List[Dict] = []
        self.eval_rows: List[Dict] = []

    def log_step(
        self, epoch: int, step: int, lr: float, loss: float, grad_norm: float
    ) -> None:
        self.train_rows.append(
            {
                "epoch": epoch,
                "step": step,
                "lr": lr,
                "loss": loss,
                "grad_norm": grad_norm,
                "wall_time": time.time(),
            }
        )

    def log_eval(self, epoch: int, step: int, dataset: str, metric: str, value: float) -> None:
        self.eval_rows.append(
            {
                "epoch": epoch,
                "step": step,
                "dataset": dataset,
                "metric": metric,
                "value": value,
            }
        )

    def losses(self) -> np.ndarray:
        return np.array([r["loss"] for r in self.train_rows], dtype=np.float64)

    def eval_values(self, metric: str, dataset: Optional[str] = None) -> List[float]:
        return [
            r["value"]
            for r in self.eval_rows
            if r["metric"] == metric and (dataset is None or r["dataset"] == dataset)
        ]

    def to_csv(self, path: str) -> None:
        """Wide table of the per-step rows."""
        with open(path, "w", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=self.TRAIN_COLUMNS)
            writer.writeheader()
            for row in self.train_rows:
                writer.writerow(row)

    def to_long_csv(self, path: str) -> None:
        """Long-format table: one (epoch, step, dataset, metric, value) row
        per training scalar and per evaluation result."""
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["epoch", "step", "dataset", "metric", "value"])
            for row in self.train_rows:
                for metric in ("lr", "loss", "grad_norm"):
                    writer.writerow([row["epoch"], row["step"], "", metric, row[metric]])
            for row in self.eval_rows:
                writer.writerow(
                    [row["epoch"], row["step"], row["dataset"], row["metric"], row["value"]]
                )


def _eval_window_indices(
    n_traj: int, windows_per_traj: int, n_windows: int, seed: int
) -> List[Tuple[int, int]]:
    total = n_traj * windows_per_traj
    rng = np.random.default_rng([seed, EVAL_STREAM_KEY])
    if n_windows >= total:
        flat = np.arange(total)
    else:
        flat = rng.choice(total, size=n_windows, replace=False)
    return [(int(f) // windows_per_traj, int(f) % windows_per_traj) for f in np.sort(flat)]


def evaluate_onestep(
    model,
    prepared: PreparedDataset,
    T_ctx: int,
    n_windows: int = 0,
    batch_size: int = 32,
    seed: int = 0,
) -> float:
    """Mean destandardized L2RE of single-step predictions over a
    deterministic selection of windows (all windows when n_windows is 0)."""
    wpt = window_count(prepared.n_frames)
    if n_windows <= 0:
        n_windows = len(prepared) * wpt
    pairs = _eval_window_indices(len(prepared), wpt, n_windows, seed)
    C_out = prepared.mean.shape[0]
    errs: List[float] = []
    for lo in range(0, len(pairs), batch_size):
        chunk = pairs[lo : lo + batch_size]
        samples = [
            make_window(
                prepared.trajectories[i],
                window_start(j, T_ctx),
                T_ctx,
                channel_validity=prepared.channel_validity,
            )
            for i, j in chunk
        ]
        contexts = np.stack([s.context for s in samples])
        targets = np.stack([s.target for s in samples]).astype(np.float64)
        with no_grad():
            pred = model(contexts).data
        truth = targets[..., :C_out]
        spatial = (targets[..., -1] > 0.5).astype(np.float64)
        validity = prepared.channel_validity[:C_out].astype(np.float64)
        weights = spatial[..., None] * validity[None, None, None, :]
        pred_phys = pred * prepared.std + prepared.mean
        truth_phys = truth * prepared.std + prepared.mean
        for b in range(len(chunk)):
            errs.append(
                l2re(pred_phys[b : b + 1], truth_phys[b : b + 1], weights[b : b + 1])
            )
    return float(np.mean(errs))


def rollout(
    model,
    context: np.ndarray,
    n_steps: int,
    channel_validity: np.ndarray,
) -> np.ndarray:
    """Autoregressive prediction: repeatedly predict the next frame, drop the
    oldest context frame, and append the prediction.

    ``context`` is [T_ctx, H, W, C_in] in standardized units. Padded channels
    and the mask channel are carried forward unchanged, and physical values
    outside the mask are frozen at their last context value. No noise is
    injected. A non-finite prediction ends the rollout early with a warning;
    the returned array holds the frames produced so far.
    """
    if n_steps < 1:
        raise ValueError(f"n_steps must be >= 1, got {n_steps}")
    context = np.asarray(context, dtype=np.float64)
    T_ctx, H, W, C_in = context.shape
    C_out = C_in - 1
    validity = np.asarray(channel_validity, dtype=bool)[:C_out]
    frames: List[np.ndarray] = []
    ctx = context.copy()
    for _ in range(n_steps):
        with no_grad():
            pred = model(ctx[None]).data[0]
        if not np.isfinite(pred).all():
            warnings.warn(
                f"non-finite prediction at rollout step {len(frames) + 1}; stopping",
                RuntimeWarning,
                stacklevel=2,
            )
            break
        prev = ctx[-1]
        mask = prev[..., -1] > 0.5
        keep = mask[..., None] & validity[None, None, :]
        frame = np.empty_like(prev)
        frame[..., :C_out] = np.where(keep, pred, prev[..., :C_out])
        frame[..., -1] = prev[..., -1]
        frames.append(frame)
        ctx = np.concatenate([ctx[1:], frame[None]], axis=0)
    if not frames:
        return np.empty((0, H, W, C_in), dtype=np.float64)
    return np.stack(frames)


def evaluate_rollout(
    model,
    prepared: PreparedDataset,
    T_ctx: int,
    n_steps: int,
    max_traj: Optional[int] = None,
) -> Dict:
    """Rollout from each trajectory's initial frame and score against truth.

    The starting context replicates frame 0 (the same left padding training
    windows use), so step s predicts frame s. Returns per-step destandardized
    L2RE over the evaluated trajectories and their mean.
    """
    T = prepared.n_frames
    n_steps = min(n_steps, T - 1)
    n_traj = len(prepared) if max_traj is None else min(max_traj, len(prepared))
    C_out = prepared.mean.shape[0]
    validity = prepared.channel_validity[:C_out].astype(np.float64)
    results = []
    for i in range(n_traj):
        traj = prepared.trajectories[i]
        sample = make_window(
            traj, 1 - T_ctx, T_ctx, channel_validity=prepared.channel_validity
        )
        frames = rollout(model, sample.context, n_steps, prepared.channel_validity)
        s = frames.shape[0]
        if s == 0:
            continue
        truth = traj.values[1 : s + 1, :, :, :C_out].astype(np.float64)
        spatial = (traj.values[1 : s + 1, :, :, -1] > 0.5).astype(np.float64)
        w = spatial[..., None] * validity[None, None, None, :]
        results.append((frames[..., :C_out], truth, w))
    if not results:
        raise ValueError("every rollout failed before producing a frame")
    per_step: List[float] = []
    for s in range(n_steps):
        live = [(p[s], t[s], w[s]) for p, t, w in results if p.shape[0] > s]
        live = [(p, t, w) for p, t, w in live if w.sum() > 0]
        if not live:
            per_step.append(float("nan"))
            continue
        p = np.stack([x[0] for x in live]) * prepared.std + prepared.mean
        t = np.stack([x[1] for x in live]) * prepared.std + prepared.mean
        w = np.stack([x[2] for x in live])
        per_step.append(l2re(p, t, w))
    finite = [v for v in per_step if np.isfinite(v)]
    return {"per_step": per_step, "mean": float(np.mean(finite))}


def training_state(model, opt: AdamW, step: int) -> Dict:
    """Everything needed to resume: parameters, moments, counters. Arrays
    are copied so the snapshot is immune to further training."""
    arrays = dict(model.state_arrays())
    arrays.update(opt.state_arrays())
    return {
        "arrays": {k: np.array(v, copy=True) for k, v in arrays.items()},
        "scalars": {"step": step, **opt.state_scalars()},
        "config": model.config.to_json(),
    }


def restore_training(model, opt: AdamW, state: Dict) -> int:
    """Load a snapshot produced by ``training_state``; returns the step to
    resume from."""
    arrays = state["arrays"]
    model.load_state({k: v for k, v in arrays.items() if not k.startswith("opt.")})
    opt.load_state(arrays, state["scalars"])
    return int(state["scalars"]["step"])


@dataclass
class TrainResult:
    model: object
    metrics: MetricsLog
    state: Dict
    prepared: List[PreparedDataset]
    final_eval: Dict = field(default_factory=dict)


def train(
    model,
    datasets: Sequence,
    config: TrainConfig,
    eval_datasets: Optional[Sequence] = None,
    dataset_names: Optional[Sequence[str]] = None,
    checkpoint_every: int = 0,
    checkpoint_fn: Optional[Callable[[int, Dict], None]] = None,
    resume_state: Optional[Dict] = None,
) -> TrainResult:
    """Run the pre-training / fine-tuning loop.

    ``datasets`` may be raw TrajectoryDatasets (prepared here) or already
    PreparedDatasets. Held-out ``eval_datasets`` default to the training
    sets. ``checkpoint_fn(epoch, state)`` is called every
    ``checkpoint_every`` epochs and after the final step. A run restarted
    with ``resume_state`` continues the identical step/noise/draw sequence.

    A non-finite loss skips the update and is logged; two in a row abort
    with a RuntimeError carrying the step and learning rate.
    """
    cfg = config
    C_max = model.config.C_in - 1
    names = list(dataset_names) if dataset_names else [None] * len(datasets)
    if len(names) != len(datasets):
        raise ValueError(f"{len(names)} names for {len(datasets)} datasets")
    prepared: List[PreparedDataset] = []
    seen = set()
    for ds, nm in zip(datasets, names):
        if isinstance(ds, PreparedDataset):
            p = ds
        else:
            p = prepare_dataset(ds, model.config.H, C_max, name=nm or "")
        if nm:
            p.name = nm
        while p.name in seen:
            p.name += "_"
        seen.add(p.name)
        prepared.append(p)
    eval_prepared: List[PreparedDataset]
    if eval_datasets is None:
        eval_prepared = prepared
    else:
        eval_prepared = [
            ds
            if isinstance(ds, PreparedDataset)
            else prepare_dataset(ds, model.config.H, C_max)
            for ds in eval_datasets
        ]

    weights = cfg.sampler_weights or [1.0] * len(prepared)
    sampler = BalancedSampler(prepared, SamplerSpec(weights, seed=cfg.seed), model.config.T_ctx)
    opt = AdamW(
        model.params,
        beta1=cfg.beta1,
        beta2=cfg.beta2,
        weight_decay=cfg.weight_decay,
    )
    start_step = 0
    if resume_state is not None:
        start_step = restore_training(model, opt, resume_state)

    metrics = MetricsLog()
    total = cfg.total_steps
    nan_streak = 0

    def run_eval(epoch: int, step: int) -> Dict:
        out: Dict = {}
        for p in eval_prepared:
            one = evaluate_onestep(
                model,
                p,
                model.config.T_ctx,
                n_windows=cfg.eval_windows,
                seed=cfg.seed,
            )
            metrics.log_eval(epoch, step, p.name, "l2re_onestep", one)
            out.setdefault(p.name, {})["l2re_onestep"] = one
            if cfg.rollout_steps > 0:
                roll = evaluate_rollout(
                    model, p, model.config.T_ctx, cfg.rollout_steps, max_traj=4
                )
                metrics.log_eval(epoch, step, p.name, "l2re_rollout", roll["mean"])
                out[p.name]["l2re_rollout"] = roll["mean"]
        return out

    final_eval: Dict = {}
    for step in range(start_step, total):
        epoch = step // cfg.steps_per_epoch
        batch = []
        for j in range(cfg.batch_size):
            k, i, t_start = sampler.draw(step * cfg.batch_size + j)
            batch.append(
                make_window(
                    prepared[k].trajectories[i],
                    t_start,
                    model.config.T_ctx,
                    dataset_id=k,
                    channel_validity=prepared[k].channel_validity,
                )
            )
        lr = one_cycle_lr(step, total, cfg.peak_lr, cfg.warmup_frac)
        noise_rng = np.random.default_rng([cfg.seed, NOISE_STREAM_KEY, step])
        model.zero_grad()
        loss = ar_denoising_loss(
            model, batch, cfg.noise_eps, noise_rng, relative=cfg.relative_loss
        )
        loss_val = float(loss.data)
        if not np.isfinite(loss_val):
            nan_streak += 1
            metrics.log_step(epoch, step, lr, loss_val, float("nan"))
            if nan_streak >= 2:
                raise RuntimeError(
                    f"non-finite loss at steps {step - 1} and {step} "
                    f"(lr={lr:.3e}); aborting"
                )
            continue
        nan_streak = 0
        loss.backward()
        grad_norm = clip_grad_norm(model.params, cfg.clip_norm)
        opt.step(lr)
        metrics.log_step(epoch, step, lr, loss_val, grad_norm)

        end_of_epoch = (step + 1) % cfg.steps_per_epoch == 0
        is_last = step + 1 == total
        if end_of_epoch:
            if cfg.eval_every and (epoch + 1) % cfg.eval_every == 0 and not is_last:
                run_eval(epoch, step)
            if (
                checkpoint_fn is not None
                and checkpoint_every
                and (epoch + 1) % checkpoint_every == 0
            ):
                checkpoint_fn(epoch, training_state(model, opt, step + 1))

    final_eval = run_eval(cfg.epochs - 1, total - 1)
    state = training_state(model, opt, total)
    if checkpoint_fn is not None:
        checkpoint_fn(cfg.epochs - 1, state)
    return TrainResult(
        model=model,
        metrics=metrics,
        state=state,
        prepared=prepared,
        final_eval=final_eval,
    )
