"""Special functions on the sphere: real spherical harmonics, coupling
coefficients and real Wigner-D matrices.

Conventions used throughout the package:

* Real, orthonormal spherical harmonics with the polar axis along ``y``:
  ``cos(theta) = y``, ``sin(theta) cos(psi) = z``, ``sin(theta) sin(psi) = x``.
  With this choice the degree-1 block, ordered ``m = -1, 0, 1``, is
  ``sqrt(3 / 4pi) * (x, y, z)`` and every harmonic evaluated at ``(0, 1, 0)``
  vanishes unless ``m = 0``.
* ``Y_l^m = N_l^|m| P_l^|m|(cos theta) * T_m(psi)`` with ``T_m = sqrt(2) cos(m psi)``
  for ``m > 0``, ``1`` for ``m = 0`` and ``sqrt(2) sin(|m| psi)`` for ``m < 0``.
  The associated Legendre functions carry no Condon-Shortley sign.
* An ``IrrepsVector`` is a flat real array of length ``(L+1)**2``; the entry
  for ``(l, m)`` sits at offset ``l*l + l + m``.
* Euler angles are Z-Y-Z: ``R = Rz(alpha) @ Ry(beta) @ Rz(gamma)``.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.linalg import expm
from scipy.spatial.transform import Rotation

from .errors import DomainError

#: Largest input degree the library guarantees accuracy for.
MAX_DEGREE = 32

_UNIT_TOL = 1e-9


def num_coeffs(L: int) -> int:
    return (L + 1) ** 2


def degree_of(x: np.ndarray) -> int:
    """Max degree of an irreps vector (or batch of them, last axis)."""
    n = np.shape(x)[-1]
    L = math.isqrt(n) - 1
    if (L + 1) ** 2 != n:
        raise DomainError(f"length {n} is not a perfect square (L+1)^2")
    return L


def index(l: int, m: int) -> int:
    return l * l + l + m


def block(x: np.ndarray, l: int) -> np.ndarray:
    """View of the degree-``l`` block of ``x`` (last axis)."""
    return x[..., l * l:(l + 1) ** 2]


def degrees(L: int) -> np.ndarray:
    """Degree label for every entry of a length-``(L+1)^2`` vector."""
    return np.repeat(np.arange(L + 1), 2 * np.arange(L + 1) + 1)


def scale_degrees(x: np.ndarray, w) -> np.ndarray:
    """Multiply block ``l`` of ``x`` by ``w[l]``."""
    L = degree_of(x)
    w = np.asarray(w, dtype=float)
    if w.shape != (L + 1,):
        raise DomainError(f"expected {L + 1} degree weights, got shape {w.shape}")
    return x * w[degrees(L)]


def truncate(x: np.ndarray, L: int) -> np.ndarray:
    """Truncate or zero-pad ``x`` along the last axis to max degree ``L``."""
    n = num_coeffs(L)
    have = x.shape[-1]
    if have >= n:
        return x[..., :n].copy()
    out = np.zeros(x.shape[:-1] + (n,), dtype=x.dtype)
    out[..., :have] = x
    return out


# ---------------------------------------------------------------------------
# spherical harmonics


def normalized_legendre(L: int, c, s) -> np.ndarray:
    """Orthonormalized associated Legendre functions ``N_l^m P_l^m``.

    ``c`` and ``s`` are ``cos(theta)`` and ``sin(theta)``. ``s`` may be
    negative, which continues each function analytically onto
    ``theta in (pi, 2pi)``. Returns shape ``(L+1, L+1) + c.shape`` indexed
    ``[l, m]``; entries with ``m > l`` are zero.
    """
    c = np.asarray(c, dtype=float)
    s = np.asarray(s, dtype=float)
    out = np.zeros((L + 1, L + 1) + c.shape)
    pmm = np.full(c.shape, 1.0 / math.sqrt(4.0 * math.pi))
    for m in range(L + 1):
        if m > 0:
            pmm = math.sqrt((2 * m + 1) / (2.0 * m)) * s * pmm
        out[m, m] = pmm
        if m + 1 > L:
            break
        out[m + 1, m] = math.sqrt(2 * m + 3) * c * pmm
        for l in range(m + 2, L + 1):
            a = math.sqrt((4 * l * l - 1) / (l * l - m * m))
            b = math.sqrt(((l - 1) ** 2 - m * m) / (4 * (l - 1) ** 2 - 1))
            out[l, m] = a * (c * out[l - 1, m] - b * out[l - 2, m])
    return out


def azimuthal_factors(L: int, psi) -> np.ndarray:
    """``T_m(psi)`` for ``m = -L..L``; shape ``(2L+1,) + psi.shape``."""
    psi = np.asarray(psi, dtype=float)
    ms = np.arange(-L, L + 1).reshape((-1,) + (1,) * psi.ndim)
    root2 = math.sqrt(2.0)
    return np.where(
        ms > 0, root2 * np.cos(ms * psi),
        np.where(ms < 0, root2 * np.sin(-ms * psi), 1.0),
    )


def sh_basis(L: int, theta, psi) -> np.ndarray:
    """All real harmonics up to degree ``L`` at the given angles.

    Broadcasts ``theta`` and ``psi``; returns shape ``theta.shape + ((L+1)^2,)``.
    """
    theta, psi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(psi, float))
    plm = normalized_legendre(L, np.cos(theta), np.sin(theta))
    trig = azimuthal_factors(L, psi)
    out = np.empty(theta.shape + (num_coeffs(L),))
    for l in range(L + 1):
        for m in range(-l, l + 1):
            out[..., index(l, m)] = plm[l, abs(m)] * trig[m + L]
    return out


def to_spherical(r) -> tuple[np.ndarray, np.ndarray]:
    """Polar and azimuthal angles of unit vectors in the package frame."""
    r = np.asarray(r, dtype=float)
    theta = np.arccos(np.clip(r[..., 1], -1.0, 1.0))
    psi = np.mod(np.arctan2(r[..., 0], r[..., 2]), 2.0 * math.pi)
    return theta, psi


def from_spherical(theta, psi) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    psi = np.asarray(psi, dtype=float)
    st = np.sin(theta)
    return np.stack([st * np.sin(psi), np.cos(theta), st * np.cos(psi)], axis=-1)


def eval_real_sh(l: int, m: int, theta: float, psi: float) -> float:
    """Value of the real spherical harmonic ``Y_l^m`` at ``(theta, psi)``."""
    if l < 0 or abs(m) > l:
        raise DomainError(f"invalid (l, m) = ({l}, {m})")
    plm = normalized_legendre(l, math.cos(theta), math.sin(theta))
    return float(plm[l, abs(m)] * azimuthal_factors(l, psi)[m + l])


def eval_sh_vector(L: int, r) -> np.ndarray:
    """Irreps vector ``[Y^(0)(r); ...; Y^(L)(r)]`` for unit vector(s) ``r``."""
    r = np.asarray(r, dtype=float)
    if r.shape[-1] != 3:
        raise DomainError("expected 3-vectors")
    norms = np.linalg.norm(r, axis=-1)
    if np.any(np.abs(norms - 1.0) > _UNIT_TOL):
        raise DomainError("input direction is not unit-norm")
    theta, psi = to_spherical(r)
    return sh_basis(L, theta, psi)


# ---------------------------------------------------------------------------
# coupling coefficients


@lru_cache(maxsize=None)
def _factorial(n: int) -> int:
    return math.factorial(n)


@lru_cache(maxsize=None)
def wigner_3j(l1: int, l2: int, l3: int, m1: int, m2: int, m3: int) -> float:
    """Wigner 3-j symbol, evaluated exactly in rational arithmetic.

    The Racah sum and the square-root prefactor are kept as exact
    fractions; only the final ``sign * sqrt(S^2 * A)`` is rounded.
    """
    if abs(m1) > l1 or abs(m2) > l2 or abs(m3) > l3:
        raise DomainError("|m| exceeds l")
    if m1 + m2 + m3 != 0:
        return 0.0
    if not abs(l1 - l2) <= l3 <= l1 + l2:
        return 0.0
    f = _factorial
    kmin = max(0, l2 - l3 - m1, l1 - l3 + m2)
    kmax = min(l1 + l2 - l3, l1 - m1, l2 + m2)
    total = Fraction(0)
    for k in range(kmin, kmax + 1):
        den = (f(k) * f(l3 - l2 + k + m1) * f(l3 - l1 + k - m2)
               * f(l1 + l2 - l3 - k) * f(l1 - k - m1) * f(l2 - k + m2))
        total += Fraction((-1) ** k, den)
    if total == 0:
        return 0.0
    prefactor = Fraction(
        f(l1 + l2 - l3) * f(l1 - l2 + l3) * f(-l1 + l2 + l3)
        * f(l1 + m1) * f(l1 - m1) * f(l2 + m2) * f(l2 - m2) * f(l3 + m3) * f(l3 - m3),
        f(l1 + l2 + l3 + 1),
    )
    sign = (-1) ** ((l1 - l2 - m3) % 2) * (1 if total > 0 else -1)
    return sign * math.sqrt(total * total * prefactor)


def clebsch_gordan(l1: int, m1: int, l2: int, m2: int, l: int, m: int) -> float:
    """Clebsch-Gordan coefficient ``<l1 m1; l2 m2 | l m>`` (Condon-Shortley)."""
    if abs(m1) > l1 or abs(m2) > l2 or abs(m) > l:
        raise DomainError("|m| exceeds l")
    if m1 + m2 != m:
        return 0.0
    phase = -1 if (l1 - l2 + m) % 2 else 1
    return phase * math.sqrt(2 * l + 1) * wigner_3j(l1, l2, l, m1, m2, -m)


def complex_gaunt(l1: int, m1: int, l2: int, m2: int, l: int, m: int) -> float:
    """Integral of three complex harmonics ``Y_l1^m1 Y_l2^m2 Y_l^m`` over S^2."""
    if m1 + m2 + m != 0 or (l1 + l2 + l) % 2:
        return 0.0
    w0 = wigner_3j(l1, l2, l, 0, 0, 0)
    if w0 == 0.0:
        return 0.0
    pref = math.sqrt((2 * l1 + 1) * (2 * l2 + 1) * (2 * l + 1) / (4.0 * math.pi))
    return pref * w0 * wigner_3j(l1, l2, l, m1, m2, m)


@lru_cache(maxsize=None)
def real_to_complex(l: int) -> np.ndarray:
    """Unitary ``Q`` with ``Y_real = Q @ Y_complex`` for degree ``l``.

    Complex harmonics carry the Condon-Shortley phase; rows and columns are
    ordered ``m = -l..l``.
    """
    q = np.zeros((2 * l + 1, 2 * l + 1), dtype=complex)
    r2 = 1.0 / math.sqrt(2.0)
    q[l, l] = 1.0
    for k in range(1, l + 1):
        sgn = (-1) ** k
        q[l + k, l + k] = sgn * r2
        q[l + k, l - k] = r2
        q[l - k, l + k] = -1j * sgn * r2
        q[l - k, l - k] = 1j * r2
    q.setflags(write=False)
    return q


def _gaunt_selected(l1: int, l2: int, l: int) -> bool:
    return (l1 + l2 + l) % 2 == 0 and abs(l1 - l2) <= l <= l1 + l2


def gaunt_coefficient(l1: int, m1: int, l2: int, m2: int, l: int, m: int) -> float:
    """Integral of three real harmonics over the sphere.

    Assembled from complex Gaunt coefficients through the fixed
    real/complex change of basis.
    """
    if abs(m1) > l1 or abs(m2) > l2 or abs(m) > l:
        raise DomainError("|m| exceeds l")
    if not _gaunt_selected(l1, l2, l):
        return 0.0
    return float(gaunt_block(l1, l2, l)[m1 + l1, m2 + l2, m + l])


@lru_cache(maxsize=None)
def gaunt_block(l1: int, l2: int, l: int) -> np.ndarray:
    """Real Gaunt coefficients for one degree triple, shape (2l1+1, 2l2+1, 2l+1)."""
    out = np.zeros((2 * l1 + 1, 2 * l2 + 1, 2 * l + 1))
    if _gaunt_selected(l1, l2, l):
        q1, q2, q3 = real_to_complex(l1), real_to_complex(l2), real_to_complex(l)
        for m1 in range(-l1, l1 + 1):
            for m2 in range(-l2, l2 + 1):
                for m in {abs(m1) + abs(m2), abs(abs(m1) - abs(m2))}:
                    for mm in {m, -m}:
                        if mm < -l or mm > l:
                            continue
                        acc = 0j
                        for a in {m1, -m1}:
                            for b in {m2, -m2}:
                                c = -(a + b)
                                if abs(c) != abs(mm):
                                    continue
                                g = complex_gaunt(l1, a, l2, b, l, c)
                                if g:
                                    acc += (q1[m1 + l1, a + l1] * q2[m2 + l2, b + l2]
                                            * q3[mm + l, c + l] * g)
                        out[m1 + l1, m2 + l2, mm + l] = acc.real
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def real_clebsch_gordan_block(l1: int, l2: int, l: int) -> np.ndarray:
    """Clebsch-Gordan coefficients expressed in the real harmonic basis.

    Entry ``[m1, m2, m]`` couples real components ``x^(l1)_m1 y^(l2)_m2`` into
    output component ``m``. The complex-basis tensor is rotated by the
    change of basis; the result is real up to one global phase per degree
    triple, which is removed. Shape (2l1+1, 2l2+1, 2l+1).
    """
    out = np.zeros((2 * l1 + 1, 2 * l2 + 1, 2 * l + 1))
    if not abs(l1 - l2) <= l <= l1 + l2:
        out.setflags(write=False)
        return out
    cg = np.zeros_like(out)
    for m1 in range(-l1, l1 + 1):
        for m2 in range(-l2, l2 + 1):
            m = m1 + m2
            if abs(m) <= l:
                cg[m1 + l1, m2 + l2, m + l] = clebsch_gordan(l1, m1, l2, m2, l, m)
    q1, q2, q3 = real_to_complex(l1), real_to_complex(l2), real_to_complex(l)
    # out = Q3 . cg . (Q1^*, Q2^*) read as an operator from (x1, x2) to x
    t = np.einsum("ai,bj,ck,ijk->abc", q1.conj(), q2.conj(), q3, cg)
    k = np.unravel_index(np.argmax(np.abs(t)), t.shape)
    phase = t[k] / abs(t[k])
    t = t / phase
    if np.max(np.abs(t.imag)) > 1e-12:
        raise AssertionError("real-basis Clebsch-Gordan tensor is not real")
    out[...] = t.real
    out.setflags(write=False)
    return out


# ---------------------------------------------------------------------------
# rotations


@lru_cache(maxsize=None)
def _generators(l: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Real antisymmetric generators (about physical x, y, z) for degree ``l``.

    ``Y(R_a(t) r) = expm(t G_a) Y(r)`` for the rotation ``R_a(t)`` about
    axis ``a``.
    """
    ms = np.arange(-l, l + 1)
    jz = np.diag(ms).astype(complex)
    jp = np.zeros((2 * l + 1, 2 * l + 1), dtype=complex)
    for m in range(-l, l):
        jp[m + 1 + l, m + l] = math.sqrt(l * (l + 1) - m * (m + 1))
    jm = jp.T
    jx = (jp + jm) / 2.0
    jy = (jp - jm) / 2.0j
    q = real_to_complex(l)

    def real_gen(j):
        g = 1j * q @ j.T @ q.conj().T
        assert np.max(np.abs(g.imag)) < 1e-12
        return g.real

    # complex-basis axes (x', y', z') are the physical (z, x, y)
    gx, gy, gz = real_gen(jy), real_gen(jz), real_gen(jx)
    for g in (gx, gy, gz):
        g.setflags(write=False)
    return gx, gy, gz


def wigner_d_matrix(l: int, alpha: float, beta: float, gamma: float) -> np.ndarray:
    """Real Wigner-D block of degree ``l`` for Z-Y-Z Euler angles.

    Satisfies ``Y^(l)(R r) = D @ Y^(l)(r)`` with
    ``R = Rz(alpha) Ry(beta) Rz(gamma)``.
    """
    if l == 0:
        return np.ones((1, 1))
    _, gy, gz = _generators(l)
    return expm(alpha * gz) @ expm(beta * gy) @ expm(gamma * gz)


def wigner_d_blocks(L: int, alpha: float, beta: float, gamma: float) -> list[np.ndarray]:
    return [wigner_d_matrix(l, alpha, beta, gamma) for l in range(L + 1)]


def rotate_irreps(x: np.ndarray, blocks: list[np.ndarray], transpose: bool = False) -> np.ndarray:
    """Apply block-diagonal Wigner-D matrices to the last axis of ``x``."""
    L = degree_of(x)
    if len(blocks) < L + 1:
        raise DomainError("not enough Wigner-D blocks")
    out = np.empty_like(x)
    for l in range(L + 1):
        d = blocks[l].T if transpose else blocks[l]
        out[..., l * l:(l + 1) ** 2] = block(x, l) @ d.T
    return out


def rotation_matrix(alpha: float, beta: float, gamma: float) -> np.ndarray:
    return Rotation.from_euler("ZYZ", [alpha, beta, gamma]).as_matrix()


def euler_from_matrix(R: np.ndarray) -> tuple[float, float, float]:
    """Z-Y-Z angles of a rotation matrix, ``alpha, gamma`` wrapped to [0, 2pi)."""
    import warnings

    with warnings.catch_warnings():
        # gimbal lock is resolved by scipy setting gamma = 0
        warnings.simplefilter("ignore", UserWarning)
        a, b, c = Rotation.from_matrix(R).as_euler("ZYZ")
    two_pi = 2.0 * math.pi
    return float(a % two_pi), float(b), float(c % two_pi)


def rotation_to_y_axis(r) -> tuple[float, float, float]:
    """Deterministic Z-Y-Z rotation taking unit vector ``r`` onto ``(0, 1, 0)``.

    ``gamma`` is always zero. ``beta`` in ``[0, pi)`` turns ``r`` about ``y``
    into the ``xy`` plane and ``alpha`` then turns it onto ``+y``. Inputs
    within 1e-12 of ``+y`` give the identity, of ``-y`` a half-turn about ``z``.
    """
    r = np.asarray(r, dtype=float)
    if abs(np.linalg.norm(r) - 1.0) > _UNIT_TOL:
        raise DomainError("input direction is not unit-norm")
    if np.linalg.norm(r - (0.0, 1.0, 0.0)) < 1e-12:
        return 0.0, 0.0, 0.0
    if np.linalg.norm(r + (0.0, 1.0, 0.0)) < 1e-12:
        return math.pi, 0.0, 0.0
    x, y, z = r
    beta = math.atan2(z, x) % math.pi
    p = math.cos(beta) * x + math.sin(beta) * z
    alpha = (0.5 * math.pi - math.atan2(y, p)) % (2.0 * math.pi)
    return alpha, beta, 0.0
