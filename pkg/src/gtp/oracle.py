"""Slow reference implementations used as ground truth for the fast paths.

Everything here is a direct transcription of the defining sums and
integrals. Only coefficient values are shared with the rest of the package.
"""

from __future__ import annotations

import math

import numpy as np

from . import so3
from .conversion import FourierCoeffs2D, WorkCounter


def _coupling_sum(x, y, L_out, coeff_block, allowed, wx=None, wy=None, wout=None,
                  counter: WorkCounter | None = None):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    L1, L2 = so3.degree_of(x), so3.degree_of(y)
    if L_out is None:
        L_out = L1 + L2
    wx = np.ones(L1 + 1) if wx is None else np.asarray(wx, dtype=float)
    wy = np.ones(L2 + 1) if wy is None else np.asarray(wy, dtype=float)
    wout = np.ones(L_out + 1) if wout is None else np.asarray(wout, dtype=float)
    lead = np.broadcast_shapes(x.shape[:-1], y.shape[:-1])
    nbatch = int(np.prod(lead, dtype=np.int64))
    out = np.zeros(lead + (so3.num_coeffs(L_out),))
    for l1 in range(L1 + 1):
        for l2 in range(L2 + 1):
            for l in range(abs(l1 - l2), min(l1 + l2, L_out) + 1):
                if not allowed(l1, l2, l):
                    continue
                c = coeff_block(l1, l2, l)
                w = wx[l1] * wy[l2] * wout[l]
                so3.block(out, l)[...] += w * np.einsum(
                    "...i,...j,ijk->...k", so3.block(x, l1), so3.block(y, l2), c
                )
                if counter is not None:
                    counter.add(c.size * nbatch)
    return out


def cg_tp_reference(x, y, L_out: int | None = None, counter: WorkCounter | None = None):
    """Full Clebsch-Gordan tensor product, summed over every ``(l1, l2) -> l`` path."""
    return _coupling_sum(
        x, y, L_out, so3.real_clebsch_gordan_block, lambda l1, l2, l: True, counter=counter
    )


def gaunt_tp_reference(x, y, L_out: int | None = None, wx=None, wy=None, wout=None,
                       counter: WorkCounter | None = None):
    """Full Gaunt tensor product as the explicit coefficient sum, optionally weighted."""
    return _coupling_sum(
        x, y, L_out, so3.gaunt_block, lambda l1, l2, l: (l1 + l2 + l) % 2 == 0,
        wx, wy, wout, counter,
    )


def _sphere_rule(total_degree: int):
    n_theta = 2 * total_degree + 1
    n_psi = 4 * total_degree + 1
    c, wc = np.polynomial.legendre.leggauss(n_theta)
    psi = 2.0 * math.pi * np.arange(n_psi) / n_psi
    theta = np.arccos(c)
    w = np.outer(wc, np.full(n_psi, 2.0 * math.pi / n_psi))
    return theta[:, None], psi[None, :], w


def gaunt_block_quadrature(l1: int, l2: int, l: int) -> np.ndarray:
    """Triple-product integrals for one degree triple by numerical quadrature.

    Gauss-Legendre in ``cos(theta)`` times the trapezoid rule in ``psi``,
    both exact for the band-limited integrand.
    """
    theta, psi, w = _sphere_rule(l1 + l2 + l)
    L = max(l1, l2, l)
    ys = so3.sh_basis(L, theta, psi)
    a, b, c = (so3.block(ys, k) for k in (l1, l2, l))
    return np.einsum("tpi,tpj,tpk,tp->ijk", a, b, c, w)


def gaunt_coeff_quadrature(l1: int, m1: int, l2: int, m2: int, l: int, m: int) -> float:
    """``integral Y_l1^m1 Y_l2^m2 Y_l^m dOmega`` by quadrature."""
    theta, psi, w = _sphere_rule(l1 + l2 + l)
    val = (w * so3.sh_basis(l1, theta, psi)[..., so3.index(l1, m1)]
           * so3.sh_basis(l2, theta, psi)[..., so3.index(l2, m2)]
           * so3.sh_basis(l, theta, psi)[..., so3.index(l, m)])
    return float(val.sum())


def conv2d_direct(a: FourierCoeffs2D, b: FourierCoeffs2D) -> FourierCoeffs2D:
    """Linear 2D convolution by the direct double sum over index pairs."""
    La, Lb = a.L, b.L
    Lc = La + Lb
    out = np.zeros(np.broadcast_shapes(a.data.shape[:-2], b.data.shape[:-2])
                   + (2 * Lc + 1, 2 * Lc + 1), dtype=complex)
    nb = 2 * Lb + 1
    for i in range(2 * La + 1):
        for j in range(2 * La + 1):
            out[..., i:i + nb, j:j + nb] += a.data[..., i, j, None, None] * b.data
    return FourierCoeffs2D(Lc, out)


def many_body_reference(operands, L_out: int | None = None) -> np.ndarray:
    """Product of several sphere functions by repeated explicit Gaunt sums."""
    operands = [np.asarray(o, dtype=float) for o in operands]
    if not operands:
        raise ValueError("need at least one operand")
    acc = operands[0]
    for op in operands[1:]:
        acc = gaunt_tp_reference(acc, op)
    total = sum(so3.degree_of(o) for o in operands)
    return so3.truncate(acc, total if L_out is None else L_out)

