"""Training, evaluation, and ablation for the neural operator."""

from .ablation import ABLATION_KINDS, DEFAULT_GRIDS, run_ablation, write_ablation_csv
from .experiments import (
    LastFrameBaseline,
    heat_training_study,
    noise_study,
    resolution_study,
    rollout_l2re,
    smooth_ns_spec,
    transfer_study,
)
from .loss import ar_denoising_loss, destandardized_l2re, l2re
from .optimizer import AdamW, clip_grad_norm, global_grad_norm
from .schedule import one_cycle_lr
from .trainer import (
    MetricsLog,
    PreparedDataset,
    TrainConfig,
    TrainResult,
    evaluate_onestep,
    evaluate_rollout,
    prepare_dataset,
    restore_training,
    rollout,
    train,
    training_state,
)

__all__ = [
    "ABLATION_KINDS",
    "AdamW",
    "DEFAULT_GRIDS",
    "LastFrameBaseline",
    "MetricsLog",
    "PreparedDataset",
    "TrainConfig",
    "TrainResult",
    "ar_denoising_loss",
    "clip_grad_norm",
    "destandardized_l2re",
    "evaluate_onestep",
    "evaluate_rollout",
    "global_grad_norm",
    "heat_training_study",
    "l2re",
    "noise_study",
    "one_cycle_lr",
    "prepare_dataset",
    "resolution_study",
    "restore_training",
    "rollout",
    "rollout_l2re",
    "run_ablation",
    "smooth_ns_spec",
    "train",
    "training_state",
    "transfer_study",
    "write_ablation_csv",
]
