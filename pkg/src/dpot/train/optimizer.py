"""AdamW with decoupled weight decay, plus global gradient clipping."""

from __future__ import annotations

import math
from typing import Dict, Iterable, Optional

import numpy as np

from ..tensor import Tensor


def global_grad_norm(params: Dict[str, Tensor]) -> float:
    """Euclidean norm of all gradients concatenated."""
    total = 0.0
    for p in params.values():
        if p.grad is not None:
            total += float(np.sum(np.abs(p.grad) ** 2))
    return math.sqrt(total)


def clip_grad_norm(params: Dict[str, Tensor], max_norm: float) -> float:
    """Scale every gradient by max_norm / norm when the global norm exceeds
    max_norm. Returns the pre-clip norm."""
    if max_norm <= 0:
        raise ValueError(f"max_norm must be > 0, got {max_norm}")
    norm = global_grad_norm(params)
    if norm > max_norm and math.isfinite(norm):
        factor = max_norm / norm
        for p in params.values():
            if p.grad is not None:
                p.grad *= factor
    return norm


class AdamW:
    """Adam with bias correction and weight decay applied directly to the
    parameters (not through the gradient moments).

    Update per parameter, t counting completed steps:
      m <- b1 m + (1 - b1) g        v <- b2 v + (1 - b2) g^2
      mhat = m / (1 - b1^t)         vhat = v / (1 - b2^t)
      p <- p - lr * (mhat / (sqrt(vhat) + eps) + wd * p)

    A step whose gradients contain any non-finite value is skipped entirely:
    no moment, counter, or parameter changes. ``skipped_steps`` counts them.
    """

    def __init__(
        self,
        params: Dict[str, Tensor],
        beta1: float = 0.9,
        beta2: float = 0.9,
        eps: float = 1e-8,
        weight_decay: float = 1e-6,
    ) -> None:
        if not 0 <= beta1 < 1 or not 0 <= beta2 < 1:
            raise ValueError(f"betas must be in [0, 1), got {beta1}, {beta2}")
        if eps <= 0:
            raise ValueError(f"eps must be > 0, got {eps}")
        if weight_decay < 0:
            raise ValueError(f"weight_decay must be >= 0, got {weight_decay}")
        self.params = params
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.weight_decay = weight_decay
        self.t = 0
        self.skipped_steps = 0
        self.m = {k: np.zeros_like(p.data, dtype=np.float64) for k, p in params.items()}
        self.v = {k: np.zeros_like(p.data, dtype=np.float64) for k, p in params.items()}

    def step(self, lr: float) -> bool:
        """Apply one update with learning rate ``lr``. Returns False (and
        changes nothing) when any gradient is non-finite."""
        grads = {}
        for k, p in self.params.items():
            g = p.grad if p.grad is not None else np.zeros_like(p.data)
            if not np.isfinite(g).all():
                self.skipped_steps += 1
                return False
            grads[k] = np.asarray(g, dtype=np.float64)
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for k, p in self.params.items():
            g = grads[k]
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g * g
            mhat = self.m[k] / bc1
            vhat = self.v[k] / bc2
            p.data = p.data - lr * (
                mhat / (np.sqrt(vhat) + self.eps) + self.weight_decay * p.data
            )
        return True

    def state_arrays(self) -> Dict[str, np.ndarray]:
        """Moment buffers keyed as opt.m.<name> / opt.v.<name>."""
        out: Dict[str, np.ndarray] = {}
        for k in self.params:
            out[f"opt.m.{k}"] = self.m[k]
            out[f"opt.v.{k}"] = self.v[k]
        return out

    def state_scalars(self) -> Dict[str, int]:
        return {"t": self.t, "skipped_steps": self.skipped_steps}

    def load_state(
        self,
        arrays: Dict[str, np.ndarray],
        scalars: Optional[Dict[str, int]] = None,
    ) -> None:
        for k in self.params:
            for prefix, store in (("opt.m.", self.m), ("opt.v.", self.v)):
                key = prefix + k
                if key not in arrays:
                    raise KeyError(f"optimizer state missing {key}")
                arr = np.asarray(arrays[key], dtype=np.float64)
                if arr.shape != store[k].shape:
                    raise ValueError(
                        f"optimizer state {key} has shape {arr.shape}, "
                        f"expected {store[k].shape}"
                    )
                store[k] = arr.copy()
        if scalars is not None:
            self.t = int(scalars.get("t", self.t))
            self.skipped_steps = int(scalars.get("skipped_steps", self.skipped_steps))
