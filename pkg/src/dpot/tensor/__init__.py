"""Minimal differentiable tensor core: real/complex arrays, reverse-mode
adjoints, unitary 2D FFTs, and a finite-difference gradient checker."""

from .core import (
    COMPLEX_DTYPE,
    REAL_DTYPE,
    Tensor,
    add,
    astensor,
    cos,
    fft2,
    gelu,
    grad_enabled,
    ifft2,
    imag,
    matmul,
    mul,
    no_grad,
    power,
    real,
    reshape,
    scale,
    sub,
    tensor_mean,
    tensor_sum,
    transpose,
)
from .gradcheck import grad_check

__all__ = [
    "COMPLEX_DTYPE",
    "REAL_DTYPE",
    "Tensor",
    "add",
    "astensor",
    "cos",
    "fft2",
    "gelu",
    "grad_check",
    "grad_enabled",
    "ifft2",
    "imag",
    "matmul",
    "mul",
    "no_grad",
    "power",
    "real",
    "reshape",
    "scale",
    "sub",
    "tensor_mean",
    "tensor_sum",
    "transpose",
]
