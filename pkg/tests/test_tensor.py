"""Tensor core: op semantics, FFT identities against independent DFT oracles,
adjoint consistency of every primitive, and the finite-difference checker."""

import numpy as np
import pytest

from dpot.tensor import (
    Tensor,
    add,
    cos,
    fft2,
    gelu,
    grad_check,
    ifft2,
    imag,
    matmul,
    mul,
    no_grad,
    power,
    real,
    reshape,
    sub,
    tensor_mean,
    tensor_sum,
    transpose,
)


def dft2_loop_oracle(x: np.ndarray) -> np.ndarray:
    """Quadratic-cost direct DFT summation, symmetric 1/sqrt(N) normalization.
    Pure python loops; independent of any FFT library."""
    H, W = x.shape
    out = np.zeros((H, W), dtype=complex)
    for p in range(H):
        for q in range(W):
            s = 0.0 + 0.0j
            for j in range(H):
                for l in range(W):
                    s += x[j, l] * np.exp(-2j * np.pi * (p * j / H + q * l / W))
            out[p, q] = s
    return out / np.sqrt(H * W)


def dft2_matrix_oracle(x: np.ndarray) -> np.ndarray:
    """Direct DFT via explicitly constructed exponential matrices (still
    O(N^2) work, no FFT algorithm involved)."""
    H, W = x.shape
    jH = np.arange(H)
    jW = np.arange(W)
    FH = np.exp(-2j * np.pi * np.outer(jH, jH) / H)
    FW = np.exp(-2j * np.pi * np.outer(jW, jW) / W)
    return FH @ x @ FW.T / np.sqrt(H * W)


def idft2_matrix_oracle(s: np.ndarray) -> np.ndarray:
    H, W = s.shape
    jH = np.arange(H)
    jW = np.arange(W)
    BH = np.exp(2j * np.pi * np.outer(jH, jH) / H)
    BW = np.exp(2j * np.pi * np.outer(jW, jW) / W)
    return BH @ s @ BW.T / np.sqrt(H * W)


def pair_inner(a: np.ndarray, b: np.ndarray) -> float:
    """Inner product under the (real, imag) pair convention."""
    if np.iscomplexobj(a) or np.iscomplexobj(b):
        a = np.asarray(a, dtype=complex)
        b = np.asarray(b, dtype=complex)
        return float(np.sum(a.real * b.real + a.imag * b.imag))
    return float(np.sum(a * b))


# ---------------------------------------------------------------------------
# elementwise ops
# ---------------------------------------------------------------------------


def test_gelu_zero_is_zero():
    assert gelu(Tensor(0.0)).item() == 0.0


def test_gelu_matches_high_precision_oracle():
    mpmath = pytest.importorskip("mpmath")
    mpmath.mp.dps = 50
    for x in [3.0, -1.5, 0.1, 7.0, -6.0]:
        expected = float(mpmath.mpf(x) * 0.5 * (1 + mpmath.erf(mpmath.mpf(x) / mpmath.sqrt(2))))
        got = gelu(Tensor(x)).item()
        assert abs(got - expected) < 1e-12, (x, got, expected)


def test_gelu_three_reference_value():
    # x * Phi(x) at x=3 with Phi the standard normal CDF
    assert abs(gelu(Tensor(3.0)).item() - 2.99595030590511) < 1e-9


def test_add_example():
    out = add(Tensor([1.0, 2.0]), Tensor([3.0, 4.0]))
    assert np.array_equal(out.data, [4.0, 6.0])


def test_shape_mismatch_reports_both_shapes():
    with pytest.raises(ValueError) as exc:
        matmul(Tensor(np.zeros((2, 3))), Tensor(np.zeros((4, 5))))
    msg = str(exc.value)
    assert "(2, 3)" in msg and "(4, 5)" in msg


def test_complex_storage_is_interleaved_pairs():
    t = Tensor(np.array([1 + 2j, 3 - 4j]))
    assert t.data.dtype == np.complex128
    raw = t.data.view(np.float64)
    assert np.array_equal(raw, [1.0, 2.0, 3.0, -4.0])


# ---------------------------------------------------------------------------
# matmul
# ---------------------------------------------------------------------------


def test_matmul_identity():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((3, 3))
    out = matmul(Tensor(np.eye(3)), Tensor(x))
    assert np.allclose(out.data, x, atol=1e-15)


def test_matmul_small_example():
    out = matmul(Tensor([[1.0, 2.0], [3.0, 4.0]]), Tensor([[1.0], [1.0]]))
    assert np.array_equal(out.data, [[3.0], [7.0]])


def test_matmul_matches_triple_loop_oracle():
    rng = np.random.default_rng(2)
    a = rng.standard_normal((4, 5))
    b = rng.standard_normal((5, 3))
    expected = np.zeros((4, 3))
    for i in range(4):
        for j in range(3):
            for k in range(5):
                expected[i, j] += a[i, k] * b[k, j]
    got = matmul(Tensor(a), Tensor(b)).data
    assert np.abs(got - expected).max() < 1e-12


# ---------------------------------------------------------------------------
# FFT identities and oracles
# ---------------------------------------------------------------------------


def test_fft2_constant_field():
    c = 2.5
    spec = fft2(Tensor(np.full((4, 4), c))).data
    assert abs(spec[0, 0] - 4 * c) < 1e-12  # 16c / sqrt(16)
    rest = spec.copy()
    rest[0, 0] = 0
    assert np.abs(rest).max() < 1e-12


def test_fft2_delta():
    x = np.zeros((4, 4))
    x[0, 0] = 1.0
    spec = fft2(Tensor(x)).data
    assert np.abs(spec - 0.25).max() < 1e-12


def test_fft2_matches_loop_oracle_8x8():
    rng = np.random.default_rng(3)
    x = rng.standard_normal((8, 8))
    got = fft2(Tensor(x)).data
    assert np.abs(got - dft2_loop_oracle(x)).max() < 1e-10


def test_fft2_matches_matrix_oracle_32x32():
    rng = np.random.default_rng(4)
    x = rng.standard_normal((32, 32))
    got = fft2(Tensor(x)).data
    assert np.abs(got - dft2_matrix_oracle(x)).max() < 1e-10


def test_ifft2_roundtrip():
    rng = np.random.default_rng(5)
    x = rng.standard_normal((8, 8))
    back = ifft2(fft2(Tensor(x))).data
    assert np.abs(back - x).max() < 1e-10


def test_ifft2_zero_mode_only():
    s = np.zeros((8, 8), dtype=complex)
    s[0, 0] = 3.0 + 0j
    field = ifft2(Tensor(s)).data
    assert np.abs(field - 3.0 / np.sqrt(64)).max() < 1e-12


def test_ifft2_matches_inverse_oracle():
    rng = np.random.default_rng(6)
    s = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
    got = ifft2(Tensor(s)).data
    assert np.abs(got - idft2_matrix_oracle(s)).max() < 1e-10


@pytest.mark.parametrize("n", [8, 32])
def test_fft2_unitarity(n):
    rng = np.random.default_rng(7)
    x = rng.standard_normal((n, n))
    spec = fft2(Tensor(x)).data
    assert abs(np.linalg.norm(spec) - np.linalg.norm(x)) < 1e-10


def test_fft2_linearity():
    rng = np.random.default_rng(8)
    x = rng.standard_normal((16, 16))
    y = rng.standard_normal((16, 16))
    a, b = 2.7, -0.3
    lhs = fft2(Tensor(a * x + b * y)).data
    rhs = a * fft2(Tensor(x)).data + b * fft2(Tensor(y)).data
    assert np.abs(lhs - rhs).max() < 1e-10


def test_fft2_batched_axes():
    rng = np.random.default_rng(9)
    x = rng.standard_normal((3, 8, 8, 2))
    got = fft2(Tensor(x), axes=(1, 2)).data
    expected = np.fft.fft2(x, axes=(1, 2), norm="ortho")
    assert np.abs(got - expected).max() < 1e-12


# ---------------------------------------------------------------------------
# adjoint consistency of every primitive
# ---------------------------------------------------------------------------


def _adjoint_consistency(f, x_data, eps=1e-6, seed=0):
    """<f(x+eps v) - f(x), u>/eps vs <v, adjoint_f(u)> under the pair inner
    product; returns the relative discrepancy."""
    rng = np.random.default_rng(seed)

    def sample_like(arr):
        if np.iscomplexobj(arr):
            return rng.standard_normal(arr.shape) + 1j * rng.standard_normal(arr.shape)
        return rng.standard_normal(arr.shape)

    x = Tensor(x_data, requires_grad=True)
    y = f(x)
    u = sample_like(y.data)
    u = u / np.linalg.norm(u)
    v = sample_like(x_data)
    v = v / np.linalg.norm(v)

    y.backward(u)
    vjp = pair_inner(v, x.grad)

    with no_grad():
        y0 = f(Tensor(x_data)).data
        y1 = f(Tensor(x_data + eps * v)).data
    jvp = pair_inner((y1 - y0) / eps, u)

    # unit-norm probes: 1e-4 reads as absolute at unit scale, relative beyond
    return abs(jvp - vjp) / max(abs(vjp), abs(jvp), 1.0)


RNG = np.random.default_rng(10)
_B = RNG.standard_normal((5, 4))
_BC = RNG.standard_normal((5, 4)) + 1j * RNG.standard_normal((5, 4))
_M = RNG.standard_normal((4, 6))
_MB = RNG.standard_normal((2, 4, 6))
_CMASK = RNG.standard_normal((3, 5)) + 1j * RNG.standard_normal((3, 5))

PRIMITIVES = [
    ("add", lambda x: add(x, Tensor(_B)), RNG.standard_normal((5, 4))),
    ("add_broadcast", lambda x: add(x, Tensor(_B)), RNG.standard_normal((1, 4))),
    ("sub", lambda x: sub(Tensor(_B), x), RNG.standard_normal((5, 4))),
    ("mul", lambda x: mul(x, Tensor(_B)), RNG.standard_normal((5, 4))),
    ("mul_complex", lambda x: mul(x, Tensor(_BC)), RNG.standard_normal((5, 4)) + 1j * RNG.standard_normal((5, 4))),
    ("mul_real_by_complex", lambda x: mul(x, Tensor(_BC)), RNG.standard_normal((5, 4))),
    ("matmul", lambda x: matmul(x, Tensor(_M)), RNG.standard_normal((3, 4))),
    ("matmul_batched", lambda x: matmul(x, Tensor(_MB)), RNG.standard_normal((2, 3, 4))),
    ("matmul_complex_real", lambda x: matmul(x, Tensor(_M)), RNG.standard_normal((3, 4)) + 1j * RNG.standard_normal((3, 4))),
    ("gelu", gelu, RNG.standard_normal((5, 4))),
    ("gelu_complex", gelu, RNG.standard_normal((5, 4)) + 1j * RNG.standard_normal((5, 4))),
    ("cos", cos, RNG.standard_normal((5, 4))),
    ("power", lambda x: power(x, 2.5), np.abs(RNG.standard_normal((5, 4))) + 0.5),
    ("real", real, RNG.standard_normal((3, 5)) + 1j * RNG.standard_normal((3, 5))),
    ("imag", imag, RNG.standard_normal((3, 5)) + 1j * RNG.standard_normal((3, 5))),
    ("reshape", lambda x: reshape(x, (4, 5)), RNG.standard_normal((5, 4))),
    ("transpose", lambda x: transpose(x, (1, 0)), RNG.standard_normal((5, 4))),
    ("sum_axis", lambda x: tensor_sum(x, axis=1), RNG.standard_normal((5, 4))),
    ("sum_keepdims", lambda x: tensor_sum(x, axis=(0, 1), keepdims=True), RNG.standard_normal((5, 4))),
    ("mean", lambda x: tensor_mean(x, axis=0), RNG.standard_normal((5, 4))),
    ("fft2_real", fft2, RNG.standard_normal((8, 8))),
    ("fft2_complex", fft2, RNG.standard_normal((8, 8)) + 1j * RNG.standard_normal((8, 8))),
    ("ifft2", ifft2, RNG.standard_normal((8, 8)) + 1j * RNG.standard_normal((8, 8))),
    ("ifft2_real_input", ifft2, RNG.standard_normal((8, 8))),
    ("mul_mask_complex", lambda x: mul(x, Tensor(_CMASK)), RNG.standard_normal((3, 5)) + 1j * RNG.standard_normal((3, 5))),
]


@pytest.mark.parametrize("name,f,x", PRIMITIVES, ids=[p[0] for p in PRIMITIVES])
def test_adjoint_consistency(name, f, x):
    rel = _adjoint_consistency(f, x)
    assert rel < 1e-4, f"{name}: {rel}"


# ---------------------------------------------------------------------------
# grad_check
# ---------------------------------------------------------------------------


def test_grad_check_square():
    x = Tensor(3.0, requires_grad=True)

    def loss():
        return x * x

    assert grad_check(loss, {"x": x}, h=1e-6) < 1e-8
    x.zero_grad()
    (x * x).backward()
    assert abs(x.grad - 6.0) < 1e-12


def test_grad_check_parseval():
    rng = np.random.default_rng(11)
    x = Tensor(rng.standard_normal((8, 8)), requires_grad=True)

    def loss():
        s = fft2(x)
        return (s.real() ** 2).sum() + (s.imag() ** 2).sum()

    # quadratic loss: central differences are exact, so h can be large
    # enough to keep subtractive roundoff below the 1e-8 bar
    assert grad_check(loss, {"x": x}, h=1e-3) < 1e-8
    x.zero_grad()
    loss().backward()
    assert np.abs(x.grad - 2 * x.data).max() < 1e-10  # Parseval: grad is 2x


def test_grad_check_rejects_non_scalar():
    x = Tensor(np.ones(3), requires_grad=True)
    with pytest.raises(ValueError):
        grad_check(lambda: x * 2.0, {"x": x})


def test_backward_rejects_non_scalar_without_gradient():
    x = Tensor(np.ones(3), requires_grad=True)
    with pytest.raises(ValueError):
        (x * 2.0).backward()


# ---------------------------------------------------------------------------
# graph bookkeeping
# ---------------------------------------------------------------------------


def test_leaf_off_path_stays_zero():
    x = Tensor(1.0, requires_grad=True)
    unused = Tensor(2.0, requires_grad=True)
    (x * x).backward()
    assert unused.grad is None  # never touched: exactly zero contribution


def test_grad_accumulates_once_per_path():
    # y = x + x must give dy/dx = 2 (node visited once, both contributions)
    x = Tensor(4.0, requires_grad=True)
    y = x + x
    z = y * y  # z = 4 x^2, dz/dx = 8x = 32
    z.backward()
    assert abs(x.grad - 32.0) < 1e-12


def test_unbroadcast_gradients():
    a = Tensor(np.ones((3, 1)), requires_grad=True)
    b = Tensor(np.ones((1, 4)), requires_grad=True)
    (a + b).sum().backward()
    assert a.grad.shape == (3, 1) and np.all(a.grad == 4)
    assert b.grad.shape == (1, 4) and np.all(b.grad == 3)


def test_no_grad_suppresses_graph():
    x = Tensor(2.0, requires_grad=True)
    with no_grad():
        y = x * x
    assert not y.requires_grad and y._parents == ()


def test_determinism_bit_identical():
    def run():
        rng = np.random.default_rng(12)
        x = Tensor(rng.standard_normal((16, 16)), requires_grad=True)
        y = gelu(fft2(x).real())
        (y * y).sum().backward()
        return y.data.copy(), x.grad.copy()

    y1, g1 = run()
    y2, g2 = run()
    assert np.array_equal(y1, y2) and np.array_equal(g1, g2)


def test_gradients_are_real64():
    x = Tensor(np.ones((2, 2), dtype=np.float32), requires_grad=True)
    assert x.data.dtype == np.float64  # engine promotes storage to real64
    (x * x).sum().backward()
    assert x.grad.dtype == np.float64
