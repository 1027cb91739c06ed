"""Differentiable n-dimensional arrays on numpy with hand-written reverse-mode adjoints.

Conventions
-----------
* Real tensors are float64, complex tensors are complex128. numpy's complex
  layout is interleaved (real, imag) pairs, which is the storage contract.
* Gradients of complex intermediates use the pair convention:
  ``grad = dL/dRe + 1j * dL/dIm``. No Wirtinger calculus: every weight is
  real, so adjoints of real leaves are plain float64 arrays.
* ``fft2``/``ifft2`` are unitary (symmetric 1/sqrt(N) normalization); the
  adjoint of ``fft2`` is therefore ``ifft2`` and vice versa. When the primal
  input was real the adjoint takes the real part (adjoint of the embedding
  of the reals into the complex numbers).
* All operations are pure. The only global state is a thread-local flag
  toggled by ``no_grad`` that suppresses graph construction.
"""

from __future__ import annotations

import threading
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import erf

REAL_DTYPE = np.float64
COMPLEX_DTYPE = np.complex128

_SQRT2 = np.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


class _GradMode(threading.local):
    enabled: bool = True


_grad_mode = _GradMode()


class no_grad:
    """Context manager that disables graph construction inside its scope."""

    def __enter__(self) -> "no_grad":
        self._prev = _grad_mode.enabled
        _grad_mode.enabled = False
        return self

    def __exit__(self, *exc) -> None:
        _grad_mode.enabled = self._prev


def grad_enabled() -> bool:
    return _grad_mode.enabled


def _coerce(data) -> np.ndarray:
    arr = np.asarray(data)
    dtype = COMPLEX_DTYPE if np.iscomplexobj(arr) else REAL_DTYPE
    arr = arr.astype(dtype, copy=False)
    # ascontiguousarray would promote 0-d scalars to shape (1,)
    if arr.ndim > 0 and not arr.flags["C_CONTIGUOUS"]:
        arr = np.ascontiguousarray(arr)
    return arr


class Tensor:
    """A node in the reverse-mode graph.

    The graph bookkeeping (operation tag, parent references, adjoint
    closure over saved activations) lives directly on the output tensor of
    each operation; leaves have an empty parent tuple.
    """

    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward", "_op")

    def __init__(self, data, requires_grad: bool = False):
        self.data: np.ndarray = _coerce(data)
        self.requires_grad: bool = bool(requires_grad)
        self.grad: Optional[np.ndarray] = None
        self._parents: Tuple["Tensor", ...] = ()
        self._backward: Optional[Callable[[], None]] = None
        self._op: str = "leaf"

    # -- basic introspection -------------------------------------------------

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.data)

    def item(self) -> float:
        return self.data.reshape(()).item()

    def detach(self) -> "Tensor":
        return Tensor(self.data.copy(), requires_grad=False)

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, op={self._op}{flag})"

    # -- gradient plumbing ---------------------------------------------------

    def _accumulate_grad(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad = self.grad + g

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self, gradient: Optional[np.ndarray] = None) -> None:
        """Reverse-mode sweep from this tensor.

        Visits every reachable graph node exactly once in reverse
        topological order. ``gradient`` defaults to 1 and then requires a
        scalar (size-1) tensor.
        """
        if gradient is None:
            if self.data.size != 1:
                raise ValueError(
                    f"backward() without a gradient requires a scalar, got shape {self.shape}"
                )
            gradient = np.ones_like(self.data)
        g = np.asarray(gradient, dtype=self.data.dtype).reshape(self.shape)

        topo: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in visited:
                    stack.append((parent, False))

        self._accumulate_grad(g)
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward()

    # -- operator sugar --------------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __pow__(self, exponent):
        return power(self, exponent)

    def reshape(self, *shape):
        return reshape(self, *shape)

    def transpose(self, axes):
        return transpose(self, axes)

    def sum(self, axis=None, keepdims=False):
        return tensor_sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        return tensor_mean(self, axis=axis, keepdims=keepdims)

    def real(self):
        return real(self)

    def imag(self):
        return imag(self)


TensorLike = Union[Tensor, np.ndarray, float, int, complex]


def astensor(x: TensorLike) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _unbroadcast(g: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum ``g`` down to ``shape``, undoing numpy broadcasting."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, (gd, sd) in enumerate(zip(g.shape, shape)) if sd == 1 and gd != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def _to_operand_dtype(g: np.ndarray, operand: Tensor) -> np.ndarray:
    # Adjoint of the real -> complex embedding is the real part.
    if not operand.is_complex and np.iscomplexobj(g):
        return g.real
    return g


def _make_node(data: np.ndarray, parents: Sequence[Tensor], op: str) -> Tuple[Tensor, bool]:
    track = grad_enabled() and any(p.requires_grad for p in parents)
    out = Tensor.__new__(Tensor)
    out.data = data
    out.requires_grad = track
    out.grad = None
    out._parents = tuple(parents) if track else ()
    out._backward = None
    out._op = op
    return out, track


# -- elementwise -----------------------------------------------------------


def add(a: TensorLike, b: TensorLike) -> Tensor:
    a, b = astensor(a), astensor(b)
    out, track = _make_node(a.data + b.data, (a, b), "add")
    if track:
        def _backward():
            g = out.grad
            if a.requires_grad:
                a._accumulate_grad(_unbroadcast(_to_operand_dtype(g, a), a.shape))
            if b.requires_grad:
                b._accumulate_grad(_unbroadcast(_to_operand_dtype(g, b), b.shape))
        out._backward = _backward
    return out


def sub(a: TensorLike, b: TensorLike) -> Tensor:
    a, b = astensor(a), astensor(b)
    out, track = _make_node(a.data - b.data, (a, b), "sub")
    if track:
        def _backward():
            g = out.grad
            if a.requires_grad:
                a._accumulate_grad(_unbroadcast(_to_operand_dtype(g, a), a.shape))
            if b.requires_grad:
                b._accumulate_grad(_unbroadcast(_to_operand_dtype(-g, b), b.shape))
        out._backward = _backward
    return out


def mul(a: TensorLike, b: TensorLike) -> Tensor:
    """Elementwise product. For complex operands the pair-convention adjoint
    is ``g * conj(other)``, which reduces to the familiar real rule when
    everything is real."""
    a, b = astensor(a), astensor(b)
    out, track = _make_node(a.data * b.data, (a, b), "mul")
    if track:
        def _backward():
            g = out.grad
            if a.requires_grad:
                ga = g * np.conj(b.data)
                a._accumulate_grad(_unbroadcast(_to_operand_dtype(ga, a), a.shape))
            if b.requires_grad:
                gb = g * np.conj(a.data)
                b._accumulate_grad(_unbroadcast(_to_operand_dtype(gb, b), b.shape))
        out._backward = _backward
    return out


def scale(a: TensorLike, c: Union[float, complex]) -> Tensor:
    """Multiply by a python scalar constant (never tracked)."""
    return mul(a, Tensor(np.asarray(c)))


def gelu(x: TensorLike) -> Tensor:
    """Exact-erf GELU: x * Phi(x). Complex inputs get the map applied to the
    real and imaginary parts independently."""
    x = astensor(x)
    if x.is_complex:
        re, im = x.data.real, x.data.imag
        phi_re = 0.5 * (1.0 + erf(re / _SQRT2))
        phi_im = 0.5 * (1.0 + erf(im / _SQRT2))
        data = re * phi_re + 1j * (im * phi_im)
        out, track = _make_node(data, (x,), "gelu")
        if track:
            def _backward():
                g = out.grad
                d_re = phi_re + re * _INV_SQRT_2PI * np.exp(-0.5 * re * re)
                d_im = phi_im + im * _INV_SQRT_2PI * np.exp(-0.5 * im * im)
                x._accumulate_grad(g.real * d_re + 1j * (g.imag * d_im))
            out._backward = _backward
        return out
    xd = x.data
    phi = 0.5 * (1.0 + erf(xd / _SQRT2))
    out, track = _make_node(xd * phi, (x,), "gelu")
    if track:
        def _backward():
            d = phi + xd * _INV_SQRT_2PI * np.exp(-0.5 * xd * xd)
            x._accumulate_grad(out.grad * d)
        out._backward = _backward
    return out


def cos(x: TensorLike) -> Tensor:
    x = astensor(x)
    if x.is_complex:
        raise TypeError("cos is defined for real tensors only")
    out, track = _make_node(np.cos(x.data), (x,), "cos")
    if track:
        def _backward():
            x._accumulate_grad(out.grad * (-np.sin(x.data)))
        out._backward = _backward
    return out


def power(x: TensorLike, exponent: float) -> Tensor:
    """x ** p for a constant real exponent; real tensors only."""
    x = astensor(x)
    if x.is_complex:
        raise TypeError("power is defined for real tensors only")
    p = float(exponent)
    out, track = _make_node(x.data ** p, (x,), f"pow{p}")
    if track:
        def _backward():
            x._accumulate_grad(out.grad * (p * x.data ** (p - 1.0)))
        out._backward = _backward
    return out


def real(x: TensorLike) -> Tensor:
    """Real part. Adjoint injects the (real) cotangent into dL/dRe."""
    x = astensor(x)
    out, track = _make_node(np.ascontiguousarray(x.data.real), (x,), "real")
    if track:
        def _backward():
            if x.is_complex:
                x._accumulate_grad(out.grad.astype(COMPLEX_DTYPE))
            else:
                x._accumulate_grad(out.grad)
        out._backward = _backward
    return out


def imag(x: TensorLike) -> Tensor:
    """Imaginary part. Adjoint injects the (real) cotangent into dL/dIm."""
    x = astensor(x)
    out, track = _make_node(np.ascontiguousarray(x.data.imag), (x,), "imag")
    if track:
        def _backward():
            if x.is_complex:
                x._accumulate_grad(1j * out.grad.astype(COMPLEX_DTYPE))
            # d(imag)/d(real input) = 0: nothing to accumulate
        out._backward = _backward
    return out


# -- contractions ------------------------------------------------------------


def _swap_last(a: np.ndarray) -> np.ndarray:
    return np.swapaxes(a, -1, -2)


def matmul(a: TensorLike, b: TensorLike) -> Tensor:
    """Batched matrix product [..., m, k] @ [..., k, n] with broadcasting
    over the batch dimensions. Adjoints: da = g @ conj(b)^T, db = conj(a)^T @ g
    (conjugation is the pair-convention rule; it is a no-op for real data)."""
    a, b = astensor(a), astensor(b)
    if a.ndim < 2 or b.ndim < 2:
        raise ValueError(f"matmul requires ndim >= 2 operands, got {a.ndim} and {b.ndim}")
    if a.shape[-1] != b.shape[-2]:
        raise ValueError(f"matmul inner extents disagree: {a.shape} @ {b.shape}")
    out, track = _make_node(a.data @ b.data, (a, b), "matmul")
    if track:
        def _backward():
            g = out.grad
            if a.requires_grad:
                ga = g @ _swap_last(np.conj(b.data))
                a._accumulate_grad(_unbroadcast(_to_operand_dtype(ga, a), a.shape))
            if b.requires_grad:
                gb = _swap_last(np.conj(a.data)) @ g
                b._accumulate_grad(_unbroadcast(_to_operand_dtype(gb, b), b.shape))
        out._backward = _backward
    return out


# -- shape ops ---------------------------------------------------------------


def reshape(x: TensorLike, *shape) -> Tensor:
    x = astensor(x)
    if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
        shape = tuple(shape[0])
    new = np.reshape(x.data, shape)
    out, track = _make_node(new, (x,), "reshape")
    if track:
        def _backward():
            x._accumulate_grad(out.grad.reshape(x.shape))
        out._backward = _backward
    return out


def transpose(x: TensorLike, axes: Sequence[int]) -> Tensor:
    x = astensor(x)
    axes = tuple(axes)
    out, track = _make_node(np.transpose(x.data, axes), (x,), "transpose")
    if track:
        inverse = tuple(np.argsort(axes))
        def _backward():
            x._accumulate_grad(np.transpose(out.grad, inverse))
        out._backward = _backward
    return out


def tensor_sum(x: TensorLike, axis=None, keepdims: bool = False) -> Tensor:
    x = astensor(x)
    out, track = _make_node(np.sum(x.data, axis=axis, keepdims=keepdims), (x,), "sum")
    if track:
        def _backward():
            g = out.grad
            if axis is not None and not keepdims:
                axes = axis if isinstance(axis, tuple) else (axis,)
                g = np.expand_dims(g, axes)
            x._accumulate_grad(np.broadcast_to(g, x.shape).astype(x.data.dtype))
        out._backward = _backward
    return out


def tensor_mean(x: TensorLike, axis=None, keepdims: bool = False) -> Tensor:
    x = astensor(x)
    if axis is None:
        count = x.size
    else:
        axes = axis if isinstance(axis, tuple) else (axis,)
        count = int(np.prod([x.shape[i] for i in axes]))
    return mul(tensor_sum(x, axis=axis, keepdims=keepdims), 1.0 / count)


# -- 2D Fourier transforms ----------------------------------------------------


def fft2(x: TensorLike, axes: Tuple[int, int] = (-2, -1)) -> Tensor:
    """Unitary 2D DFT over ``axes``. Parseval holds exactly; the adjoint is
    the unitary inverse (real part taken when the primal input was real)."""
    x = astensor(x)
    out, track = _make_node(
        np.fft.fft2(x.data, axes=axes, norm="ortho").astype(COMPLEX_DTYPE), (x,), "fft2"
    )
    if track:
        def _backward():
            h = np.fft.ifft2(out.grad, axes=axes, norm="ortho")
            x._accumulate_grad(h.real if not x.is_complex else h)
        out._backward = _backward
    return out


def ifft2(x: TensorLike, axes: Tuple[int, int] = (-2, -1)) -> Tensor:
    """Unitary inverse 2D DFT over ``axes``. Output is complex; compose with
    ``real`` to project back to a real field."""
    x = astensor(x)
    out, track = _make_node(
        np.fft.ifft2(x.data, axes=axes, norm="ortho").astype(COMPLEX_DTYPE), (x,), "ifft2"
    )
    if track:
        def _backward():
            h = np.fft.fft2(out.grad, axes=axes, norm="ortho")
            x._accumulate_grad(h.real if not x.is_complex else h)
        out._backward = _backward
    return out
