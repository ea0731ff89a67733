"""Gaunt tensor products computed as products of sphere functions.

Each operand is moved to the 2D Fourier basis, the two grids are convolved
with FFTs, and the product is projected back onto real spherical
harmonics. Grids are sized for the full bandwidth ``L1 + L2`` and only the
final projection truncates to ``L_out``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import so3
from .conversion import (
    FourierCoeffs2D,
    WorkCounter,
    fourier_to_sh,
    get_table,
    sh_to_fourier,
)
from .errors import DomainError

CHANNEL_WISE = "channel-wise"
CHANNEL_MIXING = "channel-mixing"


def next_pow2(n: int) -> int:
    return 1 << (n - 1).bit_length()


def fft_work(n: int) -> int:
    """Multiply-adds of one ``n x n`` complex 2D FFT (``n^2 log2 n`` model)."""
    return int(round(n * n * math.log2(n))) if n > 1 else 1


def linear_conv(a: np.ndarray, La: int, b: np.ndarray, Lb: int, size: int,
                counter: WorkCounter | None = None) -> FourierCoeffs2D:
    """Full linear 2D convolution of centred grids via zero-padded FFTs.

    ``a`` has shape ``(..., 2La+1, 2La+1)``; leading axes broadcast against
    ``b``. ``size`` is the padded FFT length per axis and must be at least
    ``2(La+Lb)+1``.
    """
    Lc = La + Lb
    if size < 2 * Lc + 1:
        raise DomainError(f"FFT size {size} too small for bandwidth {Lc}")
    fa = np.fft.fft2(a, s=(size, size))
    fb = np.fft.fft2(b, s=(size, size))
    out = np.fft.ifft2(fa * fb)[..., :2 * Lc + 1, :2 * Lc + 1]
    if counter is not None:
        nbatch = int(np.prod(np.broadcast_shapes(a.shape[:-2], b.shape[:-2]), dtype=np.int64))
        counter.add(nbatch * (3 * fft_work(size) + size * size))
    return FourierCoeffs2D(Lc, out)


def conv2d_fft(a: FourierCoeffs2D, b: FourierCoeffs2D,
               counter: WorkCounter | None = None) -> FourierCoeffs2D:
    """Linear convolution of two equal-size grids; the result has bandwidth ``2L``."""
    if a.L != b.L:
        raise DomainError(f"grid sizes differ: L={a.L} vs L={b.L}")
    return linear_conv(a.data, a.L, b.data, b.L, next_pow2(4 * a.L + 1), counter)


def nonzero_degrees(x: np.ndarray) -> set[int]:
    """Degrees whose block is not identically zero (across any batch axes)."""
    L = so3.degree_of(x)
    return {l for l in range(L + 1) if np.any(so3.block(x, l) != 0)}


def coupled_degrees(sa: set[int], sb: set[int], L_max: int) -> set[int]:
    """Output degrees reachable from degree sets ``sa`` and ``sb`` under the
    parity and triangle rules."""
    return {
        l for l in range(L_max + 1)
        if any((a + b + l) % 2 == 0 and abs(a - b) <= l <= a + b for a in sa for b in sb)
    }


def zero_forbidden(out: np.ndarray, allowed: set[int]) -> np.ndarray:
    """Set every block of ``out`` whose degree is not in ``allowed`` to exact zero."""
    L = so3.degree_of(out)
    keep = np.array([l in allowed for l in range(L + 1)])
    if not keep.all():
        out[..., ~keep[so3.degrees(L)]] = 0.0
    return out


def gaunt_full_tp(x: np.ndarray, y: np.ndarray, L_out: int | None = None,
                  counter: WorkCounter | None = None) -> np.ndarray:
    """Gaunt tensor product of all degree pairs, output degrees ``0..L_out``.

    Leading axes of ``x`` and ``y`` are batch axes and must broadcast.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    L1, L2 = so3.degree_of(x), so3.degree_of(y)
    Lc = L1 + L2
    if L_out is None:
        L_out = Lc
    if not 0 <= L_out <= Lc:
        raise DomainError(f"L_out={L_out} outside [0, {Lc}]")
    t = get_table(Lc)
    fx = sh_to_fourier(x, t, L1, counter)
    fy = sh_to_fourier(y, t, L2, counter)
    size = next_pow2(2 * Lc + 1)
    prod = linear_conv(fx.data, L1, fy.data, L2, size, counter)
    out = fourier_to_sh(prod, t, L_out, counter)
    return zero_forbidden(out, coupled_degrees(nonzero_degrees(x), nonzero_degrees(y), L_out))


def gaunt_weighted_tp(x, y, wx, wy, wout, L_out: int | None = None,
                      counter: WorkCounter | None = None) -> np.ndarray:
    """Tensor product with path weights factorized as ``wx[l1] * wy[l2] * wout[l]``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if L_out is None:
        L_out = so3.degree_of(x) + so3.degree_of(y)
    wout = np.asarray(wout, dtype=float)
    if wout.shape != (L_out + 1,):
        raise DomainError(f"expected {L_out + 1} output weights, got shape {wout.shape}")
    out = gaunt_full_tp(so3.scale_degrees(x, wx), so3.scale_degrees(y, wy), L_out, counter)
    return so3.scale_degrees(out, wout)


def gaunt_single_tp(x_l1: np.ndarray, y_l2: np.ndarray, l_out: int,
                    counter: WorkCounter | None = None) -> np.ndarray:
    """Degree-``l_out`` part of the product of a single degree-``l1`` and degree-``l2`` block."""
    x_l1 = np.asarray(x_l1, dtype=float)
    y_l2 = np.asarray(y_l2, dtype=float)
    l1 = (x_l1.shape[-1] - 1) // 2
    l2 = (y_l2.shape[-1] - 1) // 2
    if x_l1.shape[-1] != 2 * l1 + 1 or y_l2.shape[-1] != 2 * l2 + 1:
        raise DomainError("block lengths must be odd")
    zeros = np.zeros(np.broadcast_shapes(x_l1.shape[:-1], y_l2.shape[:-1]) + (2 * l_out + 1,))
    if not abs(l1 - l2) <= l_out <= l1 + l2 or (l1 + l2 + l_out) % 2:
        return zeros
    x = np.zeros(x_l1.shape[:-1] + (so3.num_coeffs(l1),))
    y = np.zeros(y_l2.shape[:-1] + (so3.num_coeffs(l2),))
    so3.block(x, l1)[...] = x_l1
    so3.block(y, l2)[...] = y_l2
    out = gaunt_full_tp(x, y, l_out, counter)
    return so3.block(out, l_out).copy()


def _check_batch(X: np.ndarray, name: str) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 3:
        raise DomainError(f"{name} must have shape (B, C, (L+1)^2), got {X.shape}")
    so3.degree_of(X)
    if not np.all(np.isfinite(X)):
        raise DomainError(f"{name} has non-finite entries")
    return X


def _run_chunks(fn, n: int, threads: int) -> list:
    if threads <= 1 or n <= 1:
        return [fn(slice(0, n))]
    bounds = np.linspace(0, n, min(threads, n) + 1).astype(int)
    parts = [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:])]
    with ThreadPoolExecutor(max_workers=len(parts)) as pool:
        return list(pool.map(fn, parts))


def gaunt_tp_batch(X, Y, mode: str = CHANNEL_WISE, wx=None, wy=None, wout=None,
                   L_out: int | None = None, mixing=None, threads: int = 1,
                   counter: WorkCounter | None = None) -> np.ndarray:
    """Weighted Gaunt products over a ``(batch, channel, coeff)`` feature array.

    ``channel-wise`` pairs channel ``c`` of ``X`` with channel ``c`` of ``Y``.
    ``channel-mixing`` forms ``sum_{c1,c2} mixing[c, c1, c2] * (X[c1] x Y[c2])``.
    Batch entries are independent; ``threads > 1`` splits the batch axis
    across worker threads without changing any result.
    """
    X = _check_batch(X, "X")
    Y = _check_batch(Y, "Y")
    if X.shape[:2] != Y.shape[:2]:
        raise DomainError(f"batch/channel shapes differ: {X.shape[:2]} vs {Y.shape[:2]}")
    L1, L2 = so3.degree_of(X), so3.degree_of(Y)
    if L_out is None:
        L_out = L1 + L2
    wx = np.ones(L1 + 1) if wx is None else wx
    wy = np.ones(L2 + 1) if wy is None else wy
    wout = np.ones(L_out + 1) if wout is None else wout
    C = X.shape[1]

    if mode == CHANNEL_WISE:
        def work(s):
            return gaunt_weighted_tp(X[s], Y[s], wx, wy, wout, L_out, counter)
    elif mode == CHANNEL_MIXING:
        W = np.asarray(mixing, dtype=float)
        if W.shape != (C, C, C) or not np.all(np.isfinite(W)):
            raise DomainError(f"mixing weights must be finite with shape {(C, C, C)}")

        def work(s):
            pairs = gaunt_weighted_tp(X[s, :, None], Y[s, None, :], wx, wy, wout, L_out, counter)
            return np.einsum("kij,bijn->bkn", W, pairs)
    else:
        raise DomainError(f"unknown channel mode {mode!r}")

    return np.concatenate(_run_chunks(work, X.shape[0], threads), axis=0)
