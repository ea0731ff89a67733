"""Equivariant convolution kernel with edge-aligned spherical-harmonic filters.

Node features are rotated so that the edge direction lands on the polar
axis ``(0, 1, 0)``. There the filter ``h_l Y^(l)`` is non-zero only at
``m = 0``, so its Fourier grid is a single ``v = 0`` column built in
``O(L^2)``. After the product the result is rotated back.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import so3
from .conversion import WorkCounter, fourier_to_sh, get_table, sh_to_fourier, sh_to_fourier_sparse_filter
from .errors import DegenerateEdgeError, DomainError
from .tensor_product import (
    coupled_degrees,
    gaunt_weighted_tp,
    linear_conv,
    next_pow2,
    nonzero_degrees,
    zero_forbidden,
)

EDGE_TOL = 1e-9


@dataclass(frozen=True)
class EdgeGeometry:
    r_i: np.ndarray
    r_j: np.ndarray
    direction: np.ndarray
    distance: float
    euler: tuple[float, float, float]

    def rotation(self) -> np.ndarray:
        return so3.rotation_matrix(*self.euler)


def edge_frame(r_i, r_j) -> EdgeGeometry:
    """Geometry of the edge ``i -> j`` with direction ``(r_j - r_i) / |r_j - r_i|``."""
    r_i = np.asarray(r_i, dtype=float)
    r_j = np.asarray(r_j, dtype=float)
    d = r_j - r_i
    dist = float(np.linalg.norm(d))
    if dist <= EDGE_TOL:
        raise DegenerateEdgeError(f"edge endpoints coincide (|r_j - r_i| = {dist:.3e})")
    u = d / dist
    return EdgeGeometry(r_i, r_j, u, dist, so3.rotation_to_y_axis(u))


def aligned_filter(h) -> np.ndarray:
    """``m = 0`` filter coefficients ``h_l Y_l^0(0, 1, 0)``."""
    h = np.asarray(h, dtype=float)
    ls = np.arange(h.shape[-1])
    return h * np.sqrt((2 * ls + 1) / (4.0 * math.pi))


def equiv_convolution(x_j, e: EdgeGeometry, h, L_out: int | None = None,
                      counter: WorkCounter | None = None) -> np.ndarray:
    """Message from node ``j``: Gaunt product of ``x_j`` with the filter ``h_l Y^(l)(e)``.

    ``h`` has one entry per filter degree ``0..L_f``. Input and output
    degree weights, if any, are applied by the caller.
    """
    x_j = np.asarray(x_j, dtype=float)
    h = np.asarray(h, dtype=float)
    if h.ndim != 1 or not np.all(np.isfinite(h)):
        raise DomainError("filter weights must be a finite 1D array")
    L = so3.degree_of(x_j)
    L_f = len(h) - 1
    Lc = L + L_f
    if L_out is None:
        L_out = Lc
    if not 0 <= L_out <= Lc:
        raise DomainError(f"L_out={L_out} outside [0, {Lc}]")
    blocks = so3.wigner_d_blocks(max(L, L_out), *e.euler)
    t = get_table(Lc)
    xr = so3.rotate_irreps(x_j, blocks[:L + 1])
    fx = sh_to_fourier(xr, t, L, counter)
    ff = sh_to_fourier_sparse_filter(aligned_filter(h), L_f, t, L_f, counter)
    prod = linear_conv(fx.data, L, ff.data, L_f, next_pow2(2 * Lc + 1), counter)
    out = fourier_to_sh(prod, t, L_out, counter)
    nz_h = {l for l in range(L_f + 1) if h[l] != 0}
    zero_forbidden(out, coupled_degrees(nonzero_degrees(x_j), nz_h, L_out))
    return so3.rotate_irreps(out, blocks[:L_out + 1], transpose=True)


def dense_convolution(x_j, e: EdgeGeometry, h, L_out: int | None = None,
                      counter: WorkCounter | None = None) -> np.ndarray:
    """Same message computed with the full filter vector ``h_l Y^(l)(e)``."""
    x_j = np.asarray(x_j, dtype=float)
    h = np.asarray(h, dtype=float)
    L_f = len(h) - 1
    L_out = so3.degree_of(x_j) + L_f if L_out is None else L_out
    filt = so3.eval_sh_vector(L_f, e.direction)
    return gaunt_weighted_tp(
        x_j, filt, np.ones(so3.degree_of(x_j) + 1), h, np.ones(L_out + 1), L_out, counter
    )


def aggregate_messages(messages, L: int | None = None) -> np.ndarray:
    """Elementwise sum of messages; zero vector of degree ``L`` if empty.

    Each component is summed with correct rounding, so the result does not
    depend on message order.
    """
    messages = list(messages)
    if not messages:
        if L is None:
            raise DomainError("empty message list needs an explicit degree")
        return np.zeros(so3.num_coeffs(L))
    n = np.shape(messages[0])[-1]
    if any(np.shape(msg) != (n,) for msg in messages):
        raise DomainError("messages have inconsistent shapes")
    stacked = np.asarray(messages, dtype=float)
    return np.array([math.fsum(col) for col in stacked.T])
