"""Dataset generation: draw initial conditions, run the matching solver per
trajectory, and assemble a TrajectoryDataset with summary statistics."""

from __future__ import annotations

from typing import Optional

import numpy as np

from .fields import gaussian_random_field
from .heat import solve_heat
from .navier_stokes import solve_ns_vorticity
from .reaction import solve_diffusion_reaction
from .spec import SolverSpec
from .trajectory import Trajectory, TrajectoryDataset, channel_statistics


class GenerationError(RuntimeError):
    """Raised when one trajectory of a dataset run fails; carries its index."""

    def __init__(self, index: int, cause: Exception):
        self.index = index
        super().__init__(f"trajectory {index} failed: {cause}")


def initial_condition(spec: SolverSpec, rng: np.random.Generator) -> np.ndarray:
    """Draw the initial state for one trajectory of the given family."""
    if spec.pde == "heat":
        return gaussian_random_field(spec.H, rng)
    if spec.pde == "ns_vorticity":
        return gaussian_random_field(spec.H, rng)
    if spec.pde == "diffusion_reaction":
        scale = float(spec.coefficients.get("init_scale", 0.5))
        u0 = scale * gaussian_random_field(spec.H, rng)
        v0 = scale * gaussian_random_field(spec.H, rng)
        return np.stack([u0, v0], axis=-1)
    raise ValueError(f"unknown pde {spec.pde!r}")


def trajectory_rng(spec: SolverSpec, index: int) -> np.random.Generator:
    """Independent stream for trajectory ``index``: seeded by seed XOR index,
    so any single trajectory is reproducible without generating the others."""
    if index < 0:
        raise ValueError(f"trajectory index must be >= 0, got {index}")
    return np.random.default_rng(spec.seed ^ index)


def generate_trajectory(spec: SolverSpec, index: int) -> Trajectory:
    """Generate the ``index``-th trajectory of a dataset run."""
    rng = trajectory_rng(spec, index)
    init = initial_condition(spec, rng)
    if spec.pde == "heat":
        nu = float(spec.coefficients["nu"])
        return solve_heat(init, nu, spec, mask_rect=spec.coefficients.get("mask_rect"))
    if spec.pde == "ns_vorticity":
        nu = float(spec.coefficients["nu"])
        return solve_ns_vorticity(init, nu, spec)
    if spec.pde == "diffusion_reaction":
        c = spec.coefficients
        return solve_diffusion_reaction(
            init,
            float(c["d_u"]),
            float(c["d_v"]),
            float(c["k"]),
            spec,
            reaction_scale=float(c.get("reaction_scale", 1.0)),
        )
    raise ValueError(f"unknown pde {spec.pde!r}")


def generate_dataset(
    spec: SolverSpec,
    n_traj: int,
    out_path: Optional[str] = None,
) -> TrajectoryDataset:
    """Generate ``n_traj`` trajectories and stack them into a dataset.

    Any solver failure aborts the whole run with the failing trajectory's
    index. If ``out_path`` is given, the dataset is also written to disk.
    """
    if n_traj < 1:
        raise ValueError(f"n_traj must be >= 1, got {n_traj}")
    trajectories = []
    for index in range(n_traj):
        try:
            traj = generate_trajectory(spec, index)
        except Exception as exc:
            raise GenerationError(index, exc) from exc
        if not np.isfinite(traj.values).all():
            raise GenerationError(index, ValueError("non-finite values in output"))
        trajectories.append(traj)

    dataset = TrajectoryDataset.from_trajectories(
        trajectories,
        metadata={
            "pde": spec.pde,
            "coefficients": dict(spec.coefficients),
            "forcing": spec.forcing,
            "H": spec.H,
            "dt": spec.dt,
            "n_steps": spec.n_steps,
            "save_every": spec.save_every,
            "dt_save": spec.dt_save,
            "seed": spec.seed,
            "n_traj": n_traj,
        },
    )
    mean, std = channel_statistics(dataset.values, dataset.masks)
    dataset.metadata["channel_mean"] = mean
    dataset.metadata["channel_std"] = std

    if out_path is not None:
        from ..persist.dataset_file import write_dataset

        write_dataset(out_path, dataset)
    return dataset
