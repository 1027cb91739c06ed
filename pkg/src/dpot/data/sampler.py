"""Weight-balanced sampling across heterogeneous datasets.

Each draw picks a dataset with probability q_k = w_k / sum(w), then a
trajectory uniformly within it, then a window start uniformly among the
valid starts. Draw ``n`` is generated from its own counter-keyed stream, so
the sequence is reproducible from (seed, n) alone and workers can take
disjoint strided sub-streams without coordination.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, List, Sequence, Tuple

import numpy as np

from .pipeline import window_count, window_start


@dataclass
class SamplerSpec:
    """Per-dataset positive weights and the derived sampling probabilities."""

    weights: Sequence[float]
    seed: int = 0
    probabilities: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights must be a non-empty 1-D sequence")
        if not (w > 0).all():
            raise ValueError(f"all weights must be > 0, got {list(w)}")
        self.weights = tuple(float(v) for v in w)
        self.probabilities = w / w.sum()


class BalancedSampler:
    """Deterministic stream of (dataset_id, trajectory_id, t_start) draws."""

    def __init__(self, datasets: List, spec: SamplerSpec, T_ctx: int):
        if len(datasets) != len(spec.weights):
            raise ValueError(
                f"{len(datasets)} datasets but {len(spec.weights)} weights"
            )
        if T_ctx < 1:
            raise ValueError(f"T_ctx must be >= 1, got {T_ctx}")
        self._sizes = []
        self._windows = []
        for k, ds in enumerate(datasets):
            n = len(ds)
            if n == 0:
                raise ValueError(f"dataset {k} is empty but has positive weight")
            T = ds.n_frames
            if T < 2:
                raise ValueError(f"dataset {k} has {T} frames; need >= 2 to form windows")
            self._sizes.append(n)
            self._windows.append(window_count(T))
        self.spec = spec
        self.T_ctx = T_ctx
        self._cum = np.cumsum(spec.probabilities)

    def draw(self, n: int) -> Tuple[int, int, int]:
        """The n-th draw of the stream, computed independently of all others."""
        if n < 0:
            raise ValueError(f"draw index must be >= 0, got {n}")
        rng = np.random.default_rng([self.spec.seed, n])
        u = rng.uniform(size=3)
        k = int(np.searchsorted(self._cum, u[0], side="right"))
        k = min(k, len(self._sizes) - 1)
        traj = min(int(u[1] * self._sizes[k]), self._sizes[k] - 1)
        j = min(int(u[2] * self._windows[k]), self._windows[k] - 1)
        return k, traj, window_start(j, self.T_ctx)

    def stream(self, start: int = 0) -> Iterator[Tuple[int, int, int]]:
        """Endless iterator over consecutive draws, resumable at any index."""
        n = start
        while True:
            yield self.draw(n)
            n += 1
