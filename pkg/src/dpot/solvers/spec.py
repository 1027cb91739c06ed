"""Solver run specifications: grid, time stepping, coefficients, forcing."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, Optional

KNOWN_PDES = ("heat", "ns_vorticity", "diffusion_reaction")


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass
class SolverSpec:
    """Everything needed to reproduce one family of trajectories.

    The spatial domain is the periodic square [0, 2pi)^2 discretized on an
    H-by-H grid. Snapshots are saved every ``save_every`` steps, always
    including the initial condition, so a run yields
    ``n_steps // save_every + 1`` frames ``dt * save_every`` apart.
    """

    pde: str
    H: int
    dt: float
    n_steps: int
    save_every: int
    coefficients: Dict[str, float] = field(default_factory=dict)
    forcing: Optional[Dict] = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.pde not in KNOWN_PDES:
            raise ValueError(f"unknown pde {self.pde!r}; expected one of {KNOWN_PDES}")
        if not _is_power_of_two(self.H) or self.H < 4:
            raise ValueError(f"H must be a power of two >= 4, got {self.H}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.n_steps < 1:
            raise ValueError(f"n_steps must be >= 1, got {self.n_steps}")
        if self.save_every < 1 or self.n_steps % self.save_every != 0:
            raise ValueError(
                f"save_every ({self.save_every}) must be >= 1 and divide n_steps ({self.n_steps})"
            )

    @property
    def n_frames(self) -> int:
        return self.n_steps // self.save_every + 1

    @property
    def dt_save(self) -> float:
        return self.dt * self.save_every

    @property
    def t_end(self) -> float:
        return self.dt * self.n_steps

    def to_json(self) -> str:
        return json.dumps(
            {
                "pde": self.pde,
                "H": self.H,
                "dt": self.dt,
                "n_steps": self.n_steps,
                "save_every": self.save_every,
                "coefficients": self.coefficients,
                "forcing": self.forcing,
                "seed": self.seed,
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "SolverSpec":
        raw = json.loads(text)
        return cls(**raw)


def default_heat_spec(seed: int = 0) -> SolverSpec:
    return SolverSpec(
        pde="heat",
        H=32,
        dt=0.01,
        n_steps=500,
        save_every=25,
        coefficients={"nu": 0.1},
        seed=seed,
    )


def default_ns_spec(seed: int = 0) -> SolverSpec:
    return SolverSpec(
        pde="ns_vorticity",
        H=64,
        dt=2e-3,
        n_steps=500,
        save_every=25,
        coefficients={"nu": 1e-3},
        forcing={"kind": "sincos", "amplitude": 0.1},
        seed=seed,
    )


def default_dr_spec(seed: int = 0) -> SolverSpec:
    return SolverSpec(
        pde="diffusion_reaction",
        H=32,
        dt=1e-3,
        n_steps=2000,
        save_every=100,
        coefficients={"d_u": 1e-3, "d_v": 5e-3, "k": 5e-3, "init_scale": 0.5},
        seed=seed,
    )


DEFAULT_SPECS = {
    "heat": default_heat_spec,
    "ns_vorticity": default_ns_spec,
    "diffusion_reaction": default_dr_spec,
}
