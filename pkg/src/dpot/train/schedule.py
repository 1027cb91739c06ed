"""One-cycle learning-rate schedule.

lr(s) for step s in [0, total_steps] with warmup length m = warmup_frac *
total_steps:

  warmup (s <= m):  lr = peak/25 + (peak - peak/25) * s / m
  decay  (s >  m):  lr = floor + (peak - floor) * (1 + cos(pi * r)) / 2,
                    r = (s - m) / (total_steps - m), floor = peak / 1e4

Linear from peak/25 up to peak at the end of warmup, then cosine down to
peak/1e4 at the final step. The maximum over the trace equals peak and is
attained exactly at the end of warmup whenever m lands on an integer step.
"""

from __future__ import annotations

import math

DIV_START = 25.0
DIV_FINAL = 1e4


def one_cycle_lr(
    step: int, total_steps: int, peak_lr: float, warmup_frac: float = 0.2
) -> float:
    """Learning rate at ``step`` of a run ``total_steps`` long."""
    if total_steps < 1:
        raise ValueError(f"total_steps must be >= 1, got {total_steps}")
    if not 0 < warmup_frac < 1:
        raise ValueError(f"warmup_frac must be in (0, 1), got {warmup_frac}")
    if peak_lr <= 0:
        raise ValueError(f"peak_lr must be > 0, got {peak_lr}")
    if not 0 <= step <= total_steps:
        raise ValueError(f"step {step} outside [0, {total_steps}]")
    start = peak_lr / DIV_START
    floor = peak_lr / DIV_FINAL
    warm = warmup_frac * total_steps
    if step <= warm:
        return start + (peak_lr - start) * (step / warm)
    r = (step - warm) / (total_steps - warm)
    return floor + (peak_lr - floor) * (1.0 + math.cos(math.pi * r)) / 2.0
