import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import rel_err
from gtp import so3
from gtp.conversion import FourierCoeffs2D
from gtp.errors import DomainError
from gtp.oracle import conv2d_direct, gaunt_tp_reference
from gtp.tensor_product import (
    CHANNEL_MIXING,
    CHANNEL_WISE,
    conv2d_fft,
    gaunt_full_tp,
    gaunt_single_tp,
    gaunt_tp_batch,
    gaunt_weighted_tp,
)


def _grid(rng, L):
    shape = (2 * L + 1, 2 * L + 1)
    return FourierCoeffs2D(L, rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


# --- 2D convolution --------------------------------------------------------

def test_conv_unit_impulse(rng):
    a = FourierCoeffs2D.zeros(3)
    a.data[3, 3] = 1.0
    b = _grid(rng, 3)
    out = conv2d_fft(a, b)
    assert out.L == 6
    np.testing.assert_allclose(out.data, b.padded(6).data, atol=1e-14)


def test_conv_matches_direct(rng):
    a, b = _grid(rng, 3), _grid(rng, 3)
    assert np.max(np.abs(conv2d_fft(a, b).data - conv2d_direct(a, b).data)) < 1e-11


def test_conv_preserves_hermitian_symmetry(rng):
    def herm(L):
        g = _grid(rng, L).data
        return FourierCoeffs2D(L, 0.5 * (g + g[::-1, ::-1].conj()))

    out = conv2d_fft(herm(3), herm(3)).data
    np.testing.assert_allclose(out[::-1, ::-1], out.conj(), atol=1e-13)


def test_conv_size_mismatch():
    with pytest.raises(DomainError):
        conv2d_fft(FourierCoeffs2D.zeros(2), FourierCoeffs2D.zeros(3))


# --- full product ----------------------------------------------------------

def test_scalar_times_scalar():
    out = gaunt_full_tp([2.0], [3.0])
    assert out.shape == (1,)
    assert out[0] == pytest.approx(so3.gaunt_coefficient(0, 0, 0, 0, 0, 0) * 6.0, rel=1e-13)


def test_zero_input(rng):
    out = gaunt_full_tp(np.zeros(16), rng.standard_normal(16))
    assert not np.any(out)


@pytest.mark.parametrize("L1, L2", [(1, 1), (2, 3), (4, 4), (5, 2)])
def test_matches_reference(rng, L1, L2):
    x = rng.standard_normal(so3.num_coeffs(L1))
    y = rng.standard_normal(so3.num_coeffs(L2))
    assert rel_err(gaunt_full_tp(x, y), gaunt_tp_reference(x, y)) < 1e-9


def test_truncated_output(rng):
    x, y = rng.standard_normal(25), rng.standard_normal(25)
    np.testing.assert_allclose(gaunt_full_tp(x, y, 3), gaunt_full_tp(x, y)[:16], atol=1e-12)


def test_l_out_too_large(rng):
    with pytest.raises(DomainError):
        gaunt_full_tp(np.ones(4), np.ones(4), 3)


def test_pointwise_product(rng):
    """The output is the harmonic expansion of the product of the two functions."""
    x, y = rng.standard_normal(9), rng.standard_normal(16)
    z = gaunt_full_tp(x, y)
    r = rng.standard_normal((30, 3))
    r /= np.linalg.norm(r, axis=1, keepdims=True)
    for v in r:
        fx = x @ so3.eval_sh_vector(2, v)
        fy = y @ so3.eval_sh_vector(3, v)
        assert z @ so3.eval_sh_vector(5, v) == pytest.approx(fx * fy, abs=1e-11)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 4), st.integers(0, 4), st.integers(0, 2**32 - 1))
def test_commutative(L1, L2, seed):
    r = np.random.default_rng(seed)
    x, y = r.standard_normal(so3.num_coeffs(L1)), r.standard_normal(so3.num_coeffs(L2))
    np.testing.assert_allclose(gaunt_full_tp(x, y), gaunt_full_tp(y, x), atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 3), st.integers(0, 2**32 - 1), st.floats(-3, 3))
def test_bilinear(L, seed, a):
    r = np.random.default_rng(seed)
    n = so3.num_coeffs(L)
    x1, x2, y = r.standard_normal(n), r.standard_normal(n), r.standard_normal(n)
    lhs = gaunt_full_tp(a * x1 + x2, y)
    rhs = a * gaunt_full_tp(x1, y) + gaunt_full_tp(x2, y)
    assert np.max(np.abs(lhs - rhs)) < 1e-11 * (1 + abs(a)) * 10


def test_selection_zeros_single_degrees(rng):
    for l1 in range(5):
        for l2 in range(5):
            x = np.zeros(25)
            y = np.zeros(25)
            so3.block(x, l1)[:] = rng.standard_normal(2 * l1 + 1)
            so3.block(y, l2)[:] = rng.standard_normal(2 * l2 + 1)
            out = gaunt_full_tp(x, y)
            for l in range(9):
                if (l1 + l2 + l) % 2 or not abs(l1 - l2) <= l <= l1 + l2:
                    assert np.all(so3.block(out, l) == 0.0)


def test_batch_axes_broadcast(rng):
    x = rng.standard_normal((3, 1, 9))
    y = rng.standard_normal((1, 2, 9))
    out = gaunt_full_tp(x, y)
    assert out.shape == (3, 2, 25)
    np.testing.assert_allclose(out[2, 1], gaunt_full_tp(x[2, 0], y[0, 1]), atol=1e-13)


# --- weighted / single -----------------------------------------------------

def test_weights_of_one_are_identity(rng):
    x, y = rng.standard_normal(16), rng.standard_normal(16)
    np.testing.assert_array_equal(
        gaunt_weighted_tp(x, y, np.ones(4), np.ones(4), np.ones(7)), gaunt_full_tp(x, y))


def test_zero_output_weight_kills_block(rng):
    x, y = rng.standard_normal(16), rng.standard_normal(16)
    w = np.ones(7)
    w[2] = 0.0
    out = gaunt_weighted_tp(x, y, np.ones(4), np.ones(4), w)
    assert np.all(so3.block(out, 2) == 0.0)


def test_weighted_matches_reference(rng):
    x, y = rng.standard_normal(16), rng.standard_normal(9)
    wx, wy, wo = rng.standard_normal(4), rng.standard_normal(3), rng.standard_normal(6)
    ref = gaunt_tp_reference(x, y, 5, wx, wy, wo)
    assert rel_err(gaunt_weighted_tp(x, y, wx, wy, wo, 5), ref) < 1e-9


def test_output_weight_linearity(rng):
    x, y = rng.standard_normal(9), rng.standard_normal(9)
    w = rng.standard_normal(5)
    base = gaunt_weighted_tp(x, y, np.ones(3), np.ones(3), w)
    w2 = w.copy()
    w2[3] *= 2.5
    np.testing.assert_allclose(so3.block(gaunt_weighted_tp(x, y, np.ones(3), np.ones(3), w2), 3),
                               2.5 * so3.block(base, 3), atol=1e-12)


def test_weight_length_mismatch(rng):
    with pytest.raises(DomainError):
        gaunt_weighted_tp(np.ones(4), np.ones(4), np.ones(2), np.ones(2), np.ones(2))
    with pytest.raises(DomainError):
        gaunt_weighted_tp(np.ones(4), np.ones(4), np.ones(3), np.ones(2), np.ones(3))


def test_single_scalar_block(rng):
    y = rng.standard_normal(7)
    out = gaunt_single_tp(np.array([1.7]), y, 3)
    expect = np.array([1.7 * y[m + 3] * so3.gaunt_coefficient(0, 0, 3, m, 3, m) for m in range(-3, 4)])
    np.testing.assert_allclose(out, expect, atol=1e-13)


def test_single_parity_zero(rng):
    assert not np.any(gaunt_single_tp(rng.standard_normal(5), rng.standard_normal(7), 2))
    assert not np.any(gaunt_single_tp(rng.standard_normal(3), rng.standard_normal(3), 5))


def test_single_matches_explicit_sum(rng):
    a, b = rng.standard_normal(5), rng.standard_normal(7)
    expect = np.einsum("i,j,ijk->k", a, b, so3.gaunt_block(2, 3, 3))
    assert np.max(np.abs(gaunt_single_tp(a, b, 3) - expect)) < 1e-10


# --- batched channels ------------------------------------------------------

def test_batch_channel_wise_matches_loop(rng):
    X, Y = rng.standard_normal((2, 3, 16)), rng.standard_normal((2, 3, 16))
    wx, wy, wo = rng.standard_normal(4), rng.standard_normal(4), rng.standard_normal(7)
    out = gaunt_tp_batch(X, Y, CHANNEL_WISE, wx, wy, wo)
    for b in range(2):
        for c in range(3):
            loop = gaunt_weighted_tp(X[b, c], Y[b, c], wx, wy, wo)
            assert np.max(np.abs(out[b, c] - loop)) < 1e-10


def test_batch_single_channel_modes_agree(rng):
    X, Y = rng.standard_normal((2, 1, 9)), rng.standard_normal((2, 1, 9))
    a = gaunt_tp_batch(X, Y, CHANNEL_WISE)
    b = gaunt_tp_batch(X, Y, CHANNEL_MIXING, mixing=np.ones((1, 1, 1)))
    np.testing.assert_allclose(a, b, atol=1e-13)


def test_batch_indicator_mixing_equals_channel_wise(rng):
    C = 3
    X, Y = rng.standard_normal((2, C, 9)), rng.standard_normal((2, C, 9))
    W = np.zeros((C, C, C))
    for c in range(C):
        W[c, c, c] = 1.0
    np.testing.assert_allclose(gaunt_tp_batch(X, Y, CHANNEL_MIXING, mixing=W),
                               gaunt_tp_batch(X, Y, CHANNEL_WISE), atol=1e-13)


def test_batch_mixing_matches_double_sum(rng):
    C = 2
    X, Y = rng.standard_normal((1, C, 9)), rng.standard_normal((1, C, 9))
    W = rng.standard_normal((C, C, C))
    out = gaunt_tp_batch(X, Y, CHANNEL_MIXING, mixing=W)
    for c in range(C):
        ref = sum(W[c, i, j] * gaunt_tp_reference(X[0, i], Y[0, j]) for i in range(C) for j in range(C))
        assert rel_err(out[0, c], ref) < 1e-9


def test_batch_threads_do_not_change_results(rng):
    X, Y = rng.standard_normal((7, 2, 16)), rng.standard_normal((7, 2, 16))
    np.testing.assert_array_equal(gaunt_tp_batch(X, Y, threads=1), gaunt_tp_batch(X, Y, threads=3))


@pytest.mark.parametrize("kwargs", [
    dict(X=np.ones((2, 3, 9)), Y=np.ones((2, 2, 9))),
    dict(X=np.ones((2, 9)), Y=np.ones((2, 9))),
    dict(X=np.full((1, 1, 4), np.nan), Y=np.ones((1, 1, 4))),
    dict(X=np.ones((1, 1, 4)), Y=np.ones((1, 1, 4)), mode="bogus"),
    dict(X=np.ones((1, 2, 4)), Y=np.ones((1, 2, 4)), mode=CHANNEL_MIXING, mixing=np.ones((2, 2))),
])
def test_batch_errors(kwargs):
    with pytest.raises(DomainError):
        gaunt_tp_batch(**kwargs)


def test_gaunt_coefficient_normalization_matches_integral():
    # the product of two constant functions: (c Y00)^2 has Y00 coefficient c^2 / (2 sqrt(pi))
    out = gaunt_full_tp([1.0], [1.0])
    assert out[0] == pytest.approx(1 / (2 * math.sqrt(math.pi)), rel=1e-13)
