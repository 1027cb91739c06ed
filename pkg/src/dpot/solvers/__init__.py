"""Pseudo-spectral PDE solvers on the periodic square and dataset generation."""

from .fields import gaussian_random_field, grid_2pi, laplacian_symbol, wavenumbers
from .generate import (
    GenerationError,
    generate_dataset,
    generate_trajectory,
    initial_condition,
    trajectory_rng,
)
from .heat import heat_frames, rect_mask, solve_heat
from .navier_stokes import (
    CflError,
    dealias_mask,
    enstrophy,
    kinetic_energy,
    make_forcing,
    ns_frames,
    solve_ns_vorticity,
    velocity_from_vorticity,
)
from .reaction import BlowUpError, dr_frames, reaction_rhs, solve_diffusion_reaction
from .spec import (
    DEFAULT_SPECS,
    SolverSpec,
    default_dr_spec,
    default_heat_spec,
    default_ns_spec,
)
from .trajectory import Trajectory, TrajectoryDataset, channel_statistics

__all__ = [
    "dr_frames",
    "ns_frames",
    "heat_frames",
    "BlowUpError",
    "CflError",
    "DEFAULT_SPECS",
    "GenerationError",
    "SolverSpec",
    "Trajectory",
    "TrajectoryDataset",
    "channel_statistics",
    "dealias_mask",
    "default_dr_spec",
    "default_heat_spec",
    "default_ns_spec",
    "enstrophy",
    "gaussian_random_field",
    "generate_dataset",
    "generate_trajectory",
    "grid_2pi",
    "initial_condition",
    "kinetic_energy",
    "laplacian_symbol",
    "make_forcing",
    "rect_mask",
    "reaction_rhs",
    "solve_heat",
    "solve_ns_vorticity",
    "trajectory_rng",
    "velocity_from_vorticity",
]
