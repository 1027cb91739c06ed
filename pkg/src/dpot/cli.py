"""Command-line interface.

Subcommands: generate, pretrain, finetune, evaluate, rollout, ablate,
verify. Usage errors exit with status 2 (argparse), runtime failures with 1,
success with 0. The environment variable DPOT_SEED overrides every seed
flag, and each command logs its fully resolved configuration before running.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from dataclasses import replace
from typing import Dict, List, Optional, Sequence

import numpy as np


def _resolve_seed(flag_value: int) -> int:
    env = os.environ.get("DPOT_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ValueError(f"DPOT_SEED must be an integer, got {env!r}")
    return flag_value


def _log_config(command: str, settings: Dict) -> None:
    pairs = " ".join(f"{k}={v}" for k, v in sorted(settings.items()))
    print(f"[{command}] resolved config: {pairs}")


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--H", type=int, default=32, help="training grid resolution")
    p.add_argument("--patch", type=int, default=4, help="patch edge length")
    p.add_argument("--T-ctx", type=int, default=10, help="context frames")
    p.add_argument("--d-z", type=int, default=64, help="token width")
    p.add_argument("--heads", type=int, default=4, help="attention heads")
    p.add_argument("--layers", type=int, default=2, help="Fourier attention layers")
    p.add_argument("--d-ffn", type=int, default=0, help="FFN width (0: same as d-z)")
    p.add_argument("--groups", type=int, default=8, help="group-norm groups")


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epochs", type=int, default=1)
    p.add_argument("--steps-per-epoch", type=int, default=100)
    p.add_argument("--batch-size", type=int, default=4)
    p.add_argument("--peak-lr", type=float, default=1e-3)
    p.add_argument("--warmup-frac", type=float, default=0.2)
    p.add_argument("--noise-eps", type=float, default=5e-4)
    p.add_argument("--weight-decay", type=float, default=1e-6)
    p.add_argument("--clip-norm", type=float, default=1.0)
    p.add_argument("--weights", type=str, default="", help="comma-separated sampler weights")
    p.add_argument("--eval-every", type=int, default=0, help="epochs between evaluations")
    p.add_argument("--eval-windows", type=int, default=16)
    p.add_argument("--rollout-steps", type=int, default=0, help="rollout length during eval")
    p.add_argument("--metrics", type=str, default="", help="CSV path for training metrics")
    p.add_argument("--checkpoint-every", type=int, default=0, help="epochs between checkpoint saves")


def _model_config(args: argparse.Namespace, C_in: int):
    from .model import ModelConfig

    return ModelConfig(
        H=args.H,
        P=args.patch,
        T_ctx=args.T_ctx,
        C_in=C_in,
        d_z=args.d_z,
        h=args.heads,
        L=args.layers,
        d_ffn=args.d_ffn or args.d_z,
        groups=args.groups,
    )


def _train_config(args: argparse.Namespace, seed: int, n_datasets: int):
    from .train import TrainConfig

    weights: Optional[List[float]] = None
    if args.weights:
        weights = [float(w) for w in args.weights.split(",")]
        if len(weights) != n_datasets:
            raise ValueError(
                f"--weights has {len(weights)} entries for {n_datasets} datasets"
            )
    return TrainConfig(
        epochs=args.epochs,
        steps_per_epoch=args.steps_per_epoch,
        batch_size=args.batch_size,
        peak_lr=args.peak_lr,
        warmup_frac=args.warmup_frac,
        noise_eps=args.noise_eps,
        weight_decay=args.weight_decay,
        clip_norm=args.clip_norm,
        sampler_weights=weights,
        seed=seed,
        eval_every=args.eval_every,
        eval_windows=args.eval_windows,
        rollout_steps=args.rollout_steps,
    )


def _read_datasets(paths: Sequence[str]):
    from .persist import read_dataset

    return [read_dataset(p) for p in paths]


def _load_model(path: str):
    from .model import DpotModel, ModelConfig
    from .persist import load_checkpoint

    state = load_checkpoint(path)
    if not state.get("config"):
        raise ValueError(f"checkpoint {path} carries no model config")
    config = ModelConfig.from_json(state["config"])
    model = DpotModel(config, seed=0)
    model.load_state(
        {k: v for k, v in state["arrays"].items() if not k.startswith("opt.")}
    )
    return model, state


def _write_metrics(metrics, path: str) -> None:
    metrics.to_csv(path)
    root, ext = os.path.splitext(path)
    metrics.to_long_csv(f"{root}_long{ext or '.csv'}")
    print(f"metrics written to {path} and {root}_long{ext or '.csv'}")


def _checkpoint_writer(out_path: str):
    from .persist import save_checkpoint

    def write(epoch: int, state: Dict) -> None:
        save_checkpoint(out_path, state)
        print(f"checkpoint saved to {out_path} (epoch {epoch})")

    return write


def cmd_generate(args: argparse.Namespace) -> int:
    from .solvers import DEFAULT_SPECS, generate_dataset

    seed = _resolve_seed(args.seed)
    spec = DEFAULT_SPECS[args.pde](seed=seed)
    overrides = {}
    for name in ("H", "dt", "n_steps", "save_every"):
        flag = getattr(args, name)
        if flag is not None:
            overrides[name] = flag
    coefficients = dict(spec.coefficients)
    for pair in args.coeff:
        key, _, raw = pair.partition("=")
        if not _ or not key:
            raise ValueError(f"--coeff expects name=value, got {pair!r}")
        coefficients[key] = float(raw)
    overrides["coefficients"] = coefficients
    spec = replace(spec, **overrides)
    _log_config("generate", {"pde": spec.pde, "H": spec.H, "dt": spec.dt,
                             "n_steps": spec.n_steps, "save_every": spec.save_every,
                             "n_traj": args.n_traj, "seed": seed,
                             "coefficients": coefficients, "out": args.out})
    dataset = generate_dataset(spec, args.n_traj, out_path=args.out)
    print(
        f"wrote {len(dataset)} trajectories of shape "
        f"{dataset.values.shape[1:]} to {args.out}"
    )
    return 0


def cmd_pretrain(args: argparse.Namespace) -> int:
    from .model import DpotModel
    from .train import train

    seed = _resolve_seed(args.seed)
    datasets = _read_datasets(args.data)
    C_max = max(ds.n_channels for ds in datasets)
    model_config = _model_config(args, C_max + 1)
    train_config = _train_config(args, seed, len(datasets))
    _log_config("pretrain", {**model_config.to_json(), **train_config.to_json(),
                             "data": ",".join(args.data), "out": args.out})
    model = DpotModel(model_config, seed=seed)
    print(f"model parameters: {model_config.param_count()}")
    result = train(
        model,
        datasets,
        train_config,
        checkpoint_every=args.checkpoint_every,
        checkpoint_fn=_checkpoint_writer(args.out),
    )
    if args.metrics:
        _write_metrics(result.metrics, args.metrics)
    for name, vals in result.final_eval.items():
        for metric, value in vals.items():
            print(f"final {metric}[{name}] = {value:.6f}")
    return 0


def cmd_finetune(args: argparse.Namespace) -> int:
    from .model import transfer_weights
    from .train import train

    seed = _resolve_seed(args.seed)
    datasets = _read_datasets(args.data)
    source, state = _load_model(args.checkpoint)
    target_config = source.config
    if args.H:
        P = args.patch or source.config.P
        target_config = replace(source.config, H=args.H, P=P)
    _log_config("finetune", {**target_config.to_json(),
                             "checkpoint": args.checkpoint,
                             "data": ",".join(args.data), "out": args.out,
                             "seed": seed})
    model, copied, reinitialized = transfer_weights(
        source.state_arrays(), source.config, target_config, seed=seed
    )
    print(f"transferred {len(copied)} tensors; reinitialized {len(reinitialized) or 'none'}"
          f"{': ' + ','.join(reinitialized) if reinitialized else ''}")
    train_config = _train_config(args, seed, len(datasets))
    result = train(
        model,
        datasets,
        train_config,
        checkpoint_every=args.checkpoint_every,
        checkpoint_fn=_checkpoint_writer(args.out),
    )
    if args.metrics:
        _write_metrics(result.metrics, args.metrics)
    for name, vals in result.final_eval.items():
        for metric, value in vals.items():
            print(f"final {metric}[{name}] = {value:.6f}")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    from .train import evaluate_onestep, evaluate_rollout, prepare_dataset

    seed = _resolve_seed(args.seed)
    model, _ = _load_model(args.checkpoint)
    (dataset,) = _read_datasets([args.data])
    resolution = args.resolution or model.config.H
    _log_config("evaluate", {"checkpoint": args.checkpoint, "data": args.data,
                             "mode": args.mode, "steps": args.steps,
                             "resolution": resolution, "seed": seed,
                             "out": args.out or "-"})
    prepared = prepare_dataset(
        dataset, resolution, model.config.C_in - 1, strict_grid=False
    )
    if args.mode == "onestep":
        value = evaluate_onestep(
            model,
            prepared,
            model.config.T_ctx,
            n_windows=args.eval_windows,
            seed=seed,
        )
        print(f"l2re_onestep = {value:.6f}")
        if args.out:
            with open(args.out, "w", newline="") as f:
                writer = csv.writer(f)
                writer.writerow(["metric", "value"])
                writer.writerow(["l2re_onestep", value])
            print(f"wrote {args.out}")
    else:
        result = evaluate_rollout(
            model, prepared, model.config.T_ctx, args.steps, max_traj=args.max_traj
        )
        for i, v in enumerate(result["per_step"], start=1):
            print(f"step {i}: l2re = {v:.6f}")
        print(f"l2re_rollout mean = {result['mean']:.6f}")
        if args.out:
            with open(args.out, "w", newline="") as f:
                writer = csv.writer(f)
                writer.writerow(["step", "l2re"])
                for i, v in enumerate(result["per_step"], start=1):
                    writer.writerow([i, v])
            print(f"wrote {args.out}")
    return 0


def cmd_rollout(args: argparse.Namespace) -> int:
    from .data import make_window
    from .persist import write_dataset
    from .solvers.trajectory import TrajectoryDataset
    from .train import prepare_dataset, rollout

    seed = _resolve_seed(args.seed)
    model, _ = _load_model(args.checkpoint)
    (dataset,) = _read_datasets([args.data])
    _log_config("rollout", {"checkpoint": args.checkpoint, "data": args.data,
                            "traj": args.traj, "steps": args.steps,
                            "seed": seed, "out": args.out or "-"})
    prepared = prepare_dataset(
        dataset, model.config.H, model.config.C_in - 1, strict_grid=False
    )
    if not 0 <= args.traj < len(prepared):
        raise ValueError(f"--traj {args.traj} outside dataset of {len(prepared)}")
    traj = prepared.trajectories[args.traj]
    sample = make_window(
        traj,
        1 - model.config.T_ctx,
        model.config.T_ctx,
        channel_validity=prepared.channel_validity,
    )
    frames = rollout(model, sample.context, args.steps, prepared.channel_validity)
    print(f"produced {frames.shape[0]} frames of shape {frames.shape[1:]}")
    if args.out:
        C_out = model.config.C_in - 1
        phys = frames[..., :C_out] * prepared.std + prepared.mean
        values = np.concatenate([phys, frames[..., -1:]], axis=-1).astype(np.float32)
        out_ds = TrajectoryDataset(
            values=values[None],
            masks=traj.mask[None],
            metadata={
                "pde": traj.pde,
                "channel_names": list(traj.channel_names[:C_out]) + ["mask"],
                "dt_save": traj.dt_save,
                "source": args.data,
                "trajectory": args.traj,
                "kind": "rollout_prediction",
            },
        )
        write_dataset(args.out, out_ds)
        print(f"wrote predictions to {args.out}")
    return 0


def cmd_ablate(args: argparse.Namespace) -> int:
    from .train import DEFAULT_GRIDS, run_ablation

    seed = _resolve_seed(args.seed)
    datasets = _read_datasets(args.data)
    eval_dataset = _read_datasets([args.eval_data])[0] if args.eval_data else None
    model = None
    if args.checkpoint:
        model, _ = _load_model(args.checkpoint)
    C_max = max(ds.n_channels for ds in datasets)
    model_config = _model_config(args, C_max + 1)
    train_config = _train_config(args, seed, len(datasets))
    if args.grid:
        raw = [float(v) for v in args.grid.split(",")]
        grid = [int(v) if v == int(v) and args.kind != "noise" else v for v in raw]
    else:
        grid = list(DEFAULT_GRIDS[args.kind])
    _log_config("ablate", {"kind": args.kind, "grid": grid, "seed": seed,
                           "data": ",".join(args.data), "out": args.out})
    rows = run_ablation(
        args.kind,
        grid,
        model_config=model_config,
        train_config=train_config,
        datasets=datasets,
        eval_dataset=eval_dataset,
        model=model,
        rollout_steps=args.rollout_steps,
        csv_path=args.out,
    )
    for row in rows:
        print(
            f"{args.kind}={row['value']}: l2re_onestep={row['l2re_onestep']:.6f}"
            + (
                f" l2re_rollout={row['l2re_rollout']:.6f}"
                if row["l2re_rollout"] != ""
                else ""
            )
        )
    print(f"wrote {args.out}")
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    from .verify import run_verification

    failures = run_verification(quick=args.quick)
    return 1 if failures else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dpot",
        description="Spectral PDE data generation and Fourier-attention operator training",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="solve PDE trajectories into a dataset file")
    p.add_argument("--pde", choices=("heat", "ns_vorticity", "diffusion_reaction"), required=True)
    p.add_argument("--n-traj", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--H", type=int, default=None, help="grid resolution (default per pde)")
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--n-steps", type=int, default=None)
    p.add_argument("--save-every", type=int, default=None)
    p.add_argument("--coeff", action="append", default=[], metavar="NAME=VALUE",
                   help="override a coefficient, repeatable")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_generate)

    p = sub.add_parser("pretrain", help="train a fresh model on one or more datasets")
    p.add_argument("--data", nargs="+", required=True)
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--seed", type=int, default=0)
    _add_model_flags(p)
    _add_train_flags(p)
    p.set_defaults(fn=cmd_pretrain)

    p = sub.add_parser("finetune", help="continue training from a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--H", type=int, default=0, help="override resolution (0: keep)")
    p.add_argument("--patch", type=int, default=0, help="override patch size (0: keep)")
    _add_train_flags(p)
    p.set_defaults(fn=cmd_finetune)

    p = sub.add_parser("evaluate", help="score a checkpoint on a dataset")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--mode", choices=("onestep", "rollout"), default="onestep")
    p.add_argument("--steps", type=int, default=20, help="rollout length")
    p.add_argument("--resolution", type=int, default=0, help="evaluation grid (0: model's)")
    p.add_argument("--eval-windows", type=int, default=0, help="onestep windows (0: all)")
    p.add_argument("--max-traj", type=int, default=None)
    p.add_argument("--out", default="", help="CSV output path")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("rollout", help="autoregressively predict one trajectory")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--traj", type=int, default=0)
    p.add_argument("--steps", type=int, default=20)
    p.add_argument("--out", default="", help="write predictions as a dataset file")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_rollout)

    p = sub.add_parser("ablate", help="sweep one knob and record held-out error")
    p.add_argument("--kind", choices=("noise", "heads", "patch", "resolution"), required=True)
    p.add_argument("--data", nargs="+", required=True)
    p.add_argument("--eval-data", default="", help="held-out dataset (default: first --data)")
    p.add_argument("--grid", default="", help="comma-separated grid values")
    p.add_argument("--checkpoint", default="", help="trained model (resolution kind)")
    p.add_argument("--out", required=True, help="CSV output path")
    p.add_argument("--seed", type=int, default=0)
    _add_model_flags(p)
    _add_train_flags(p)
    p.set_defaults(fn=cmd_ablate)

    p = sub.add_parser("verify", help="run the built-in correctness checks")
    p.add_argument("--quick", action="store_true", help="skip the slow solver checks")
    p.set_defaults(fn=cmd_verify)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except KeyboardInterrupt:
        print("interrupted", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
