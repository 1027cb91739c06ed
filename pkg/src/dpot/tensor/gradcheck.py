"""Finite-difference validation of reverse-mode gradients.

The check compares the reverse-mode gradient of a scalar loss against
central differences, (f(x+h) - f(x-h)) / 2h, entry by entry over every
supplied parameter, and reports the worst relative error.

Relative error formula (fixed here so reported numbers are reproducible):

    rel = |g_ad - g_fd| / max(|g_ad|, |g_fd|, floor)
    floor = 1e-4 * max(1, max_entry |g_fd|)

The floor keeps entries whose true gradient is ~0 from turning the O(h^2)
truncation noise of the difference quotient (~1e-9 at h=1e-4 for an O(1)
loss) into spurious relative error, while leaving real adjoint bugs, which
show up as order-of-magnitude or sign errors on significant entries, fully
visible at the 1e-4 tolerance used by the acceptance checks.
"""

from __future__ import annotations

from typing import Callable, Dict, Iterable, Mapping, Union

import numpy as np

from .core import Tensor, no_grad

ParamSet = Union[Mapping[str, Tensor], Iterable[Tensor]]


def _as_param_dict(params: ParamSet) -> Dict[str, Tensor]:
    if isinstance(params, Mapping):
        return dict(params)
    return {f"param_{i}": p for i, p in enumerate(params)}


def grad_check(
    loss_fn: Callable[[], Tensor],
    params: ParamSet,
    h: float = 1e-4,
) -> float:
    """Return the worst relative error between reverse-mode and central
    finite-difference gradients of ``loss_fn`` over every entry of
    ``params``.

    ``loss_fn`` must return a scalar Tensor and must be deterministic
    (fix any randomness before calling). Parameters must be real float64.
    """
    pdict = _as_param_dict(params)
    for name, p in pdict.items():
        if p.is_complex:
            raise TypeError(f"grad_check requires real parameters, {name} is complex")
        if not p.requires_grad:
            raise ValueError(f"parameter {name} does not require grad")

    for p in pdict.values():
        p.zero_grad()
    loss = loss_fn()
    if loss.size != 1:
        raise ValueError(f"loss_fn must return a scalar, got shape {loss.shape}")
    loss.backward()

    analytic = {
        name: (p.grad.copy() if p.grad is not None else np.zeros_like(p.data))
        for name, p in pdict.items()
    }

    worst = 0.0
    with no_grad():
        for name, p in pdict.items():
            flat = p.data.reshape(-1)
            g_fd = np.zeros_like(flat)
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + h
                f_plus = loss_fn().item()
                flat[i] = orig - h
                f_minus = loss_fn().item()
                flat[i] = orig
                g_fd[i] = (f_plus - f_minus) / (2.0 * h)
            g_ad = analytic[name].reshape(-1)
            floor = 1e-4 * max(1.0, float(np.max(np.abs(g_fd), initial=0.0)))
            denom = np.maximum(np.maximum(np.abs(g_ad), np.abs(g_fd)), floor)
            rel = np.abs(g_ad - g_fd) / denom
            worst = max(worst, float(rel.max(initial=0.0)))
    return worst
