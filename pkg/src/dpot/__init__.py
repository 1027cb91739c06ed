"""dpot: desk-scale Fourier-attention neural operator stack.

Spectral PDE data generation, multi-dataset balanced sampling, denoising
next-frame pre-training, fine-tuning, rollout evaluation, and bit-exact
persistence, all on a from-scratch reverse-mode tensor core.
"""

__version__ = "0.1.0"

from .tensor import Tensor, fft2, gelu, grad_check, ifft2, matmul, no_grad

__all__ = [
    "Tensor",
    "fft2",
    "gelu",
    "grad_check",
    "ifft2",
    "matmul",
    "no_grad",
    "__version__",
]
