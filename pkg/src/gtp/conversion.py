"""Change of basis between spherical-harmonic and 2D Fourier coefficients.

A sphere function ``F(theta, psi)`` is continued onto the torus by
``F(2pi - theta, psi + pi) = F(theta, psi)``. Under that continuation every
real harmonic ``Y_l^m`` is a finite Fourier series
``sum_{u,v} y^{l,m}_{u,v} exp(i(u theta + v psi))`` with ``|u| <= l`` and
``v = +-m``. Fourier grids are stored as complex arrays of shape
``(..., 2L+1, 2L+1)`` indexed ``[u + L, v + L]``.

The inverse map integrates a torus series against ``Y_l^m sin(theta)`` over
the sphere, which is exact whenever the series represents a genuine sphere
function (for instance a product of harmonic expansions).
"""

from __future__ import annotations

import logging
import math
import os
import struct
import tempfile
import threading
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from . import so3
from .errors import CacheFormatError, CapacityError, DomainError, NumericalConsistencyError

log = logging.getLogger(__name__)

#: Largest table bandwidth: products of two maximal-degree inputs.
TABLE_CAP = 2 * so3.MAX_DEGREE

PRUNE_TOL = 1e-14
IMAG_TOL = 1e-8

ENTRY_DTYPE = np.dtype(
    [("l", "<u2"), ("m", "<i2"), ("u", "<i2"), ("v", "<i2"), ("re", "<f8"), ("im", "<f8")]
)
MAGIC = b"GNTB"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIIQ")
_COUNT = struct.Struct("<Q")
_CRC = struct.Struct("<I")


@dataclass
class FourierCoeffs2D:
    """Coefficients ``f[u, v]`` of ``sum f[u, v] exp(i(u theta + v psi))``."""

    L: int
    data: np.ndarray

    def __post_init__(self):
        n = 2 * self.L + 1
        if self.data.shape[-2:] != (n, n):
            raise DomainError(f"grid shape {self.data.shape[-2:]} does not match L={self.L}")

    @classmethod
    def zeros(cls, L: int, batch: tuple = ()) -> "FourierCoeffs2D":
        return cls(L, np.zeros(batch + (2 * L + 1, 2 * L + 1), dtype=complex))

    def at(self, u: int, v: int):
        return self.data[..., u + self.L, v + self.L]

    def padded(self, L: int) -> "FourierCoeffs2D":
        """Embed into a larger grid centred on ``(0, 0)``."""
        if L < self.L:
            raise DomainError("cannot pad to a smaller grid")
        out = FourierCoeffs2D.zeros(L, self.data.shape[:-2])
        s = slice(L - self.L, L + self.L + 1)
        out.data[..., s, s] = self.data
        return out


@dataclass
class ConversionTable:
    """Sparse SH->Fourier (``y``) and Fourier->SH (``z``) coefficients for one ``L``."""

    L: int
    y_entries: np.ndarray
    z_entries: np.ndarray
    _ops: dict = field(default_factory=dict, repr=False, compare=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def _cached(self, key, build):
        with self._lock:
            op = self._ops.get(key)
        if op is None:
            op = build()
            with self._lock:
                op = self._ops.setdefault(key, op)
        return op

    def forward_operator(self, L_in: int, B: int) -> sp.csr_matrix:
        """Sparse matrix mapping a degree-``L_in`` vector to a bandwidth-``B`` grid."""

        def build():
            e = self.y_entries[self.y_entries["l"] <= L_in]
            l = e["l"].astype(np.int64)
            rows = (e["u"].astype(np.int64) + B) * (2 * B + 1) + (e["v"] + B)
            cols = l * l + l + e["m"]
            return sp.csr_matrix(
                (e["re"] + 1j * e["im"], (rows, cols)),
                shape=((2 * B + 1) ** 2, so3.num_coeffs(L_in)),
            )

        return self._cached(("fwd", L_in, B), build)

    def inverse_operator(self, B: int, L_out: int) -> sp.csr_matrix:
        """Sparse matrix mapping a bandwidth-``B`` grid to a degree-``L_out`` vector."""

        def build():
            z = self.z_entries
            e = z[(z["l"] <= L_out) & (np.abs(z["u"]) <= B) & (np.abs(z["v"]) <= B)]
            l = e["l"].astype(np.int64)
            rows = l * l + l + e["m"]
            cols = (e["u"].astype(np.int64) + B) * (2 * B + 1) + (e["v"] + B)
            return sp.csr_matrix(
                (e["re"] + 1j * e["im"], (rows, cols)),
                shape=(so3.num_coeffs(L_out), (2 * B + 1) ** 2),
            )

        return self._cached(("inv", B, L_out), build)

    def filter_matrix(self, L_f: int, B: int) -> np.ndarray:
        """Dense ``(2B+1, L_f+1)`` matrix of the ``m = v = 0`` coefficients."""

        def build():
            e = self.y_entries
            e = e[(e["m"] == 0) & (e["l"] <= L_f)]
            a = np.zeros((2 * B + 1, L_f + 1), dtype=complex)
            a[e["u"] + B, e["l"]] = e["re"] + 1j * e["im"]
            a.setflags(write=False)
            return a

        return self._cached(("filter", L_f, B), build)


# ---------------------------------------------------------------------------
# construction


def _theta_series(L: int) -> np.ndarray:
    """Fourier coefficients in ``theta`` of ``N_l^m P_l^m(cos theta)``.

    Shape ``(L+1, L+1, 2L+1)`` indexed ``[l, m, u + L]``.
    """
    n = 4 * L + 4
    theta = 2.0 * math.pi * np.arange(n) / n
    plm = so3.normalized_legendre(L, np.cos(theta), np.sin(theta))
    coef = np.fft.fft(plm, axis=-1) / n
    return coef[..., np.arange(-L, L + 1) % n]


def _sin_weighted_overlap(L: int) -> np.ndarray:
    """``K[u, k] = int_0^pi exp(i(u+k) theta) sin(theta) dtheta`` for ``|u|, |k| <= L``."""
    idx = np.arange(-L, L + 1)
    n = idx[:, None] + idx[None, :]
    out = np.zeros(n.shape, dtype=complex)
    even = n % 2 == 0
    out[even] = 2.0 / (1.0 - n[even].astype(float) ** 2)
    out[n == 1] = 0.5j * math.pi
    out[n == -1] = -0.5j * math.pi
    return out


def _psi_factors(m: int) -> dict[int, tuple[complex, complex]]:
    """``{v: (t_v, tau_v)}``: expansion of ``T_m(psi)`` in ``exp(i v psi)`` and
    its integral against ``exp(i v psi)`` over ``[0, 2pi)``."""
    if m == 0:
        return {0: (1.0, 2.0 * math.pi)}
    r2 = math.sqrt(2.0)
    k = abs(m)
    if m > 0:
        return {k: (1 / r2, r2 * math.pi), -k: (1 / r2, r2 * math.pi)}
    return {k: (-1j / r2, 1j * r2 * math.pi), -k: (1j / r2, -1j * r2 * math.pi)}


def _pack(records: list[tuple]) -> np.ndarray:
    out = np.zeros(len(records), dtype=ENTRY_DTYPE)
    if records:
        arr = np.array(records, dtype=float)
        for i, name in enumerate(ENTRY_DTYPE.names):
            out[name] = arr[:, i]
    return out


def build_conversion_table(L: int) -> ConversionTable:
    """Build the ``y`` and ``z`` coefficient tables for degrees and frequencies up to ``L``."""
    if L < 0:
        raise DomainError("L must be non-negative")
    if L > TABLE_CAP:
        raise CapacityError(f"L={L} exceeds table cap {TABLE_CAP}")
    a = _theta_series(L)
    zt = np.einsum("lmk,uk->lmu", a, _sin_weighted_overlap(L))
    us = np.arange(-L, L + 1)
    y_rec, z_rec = [], []
    for l in range(L + 1):
        for m in range(-l, l + 1):
            for v, (t, tau) in sorted(_psi_factors(m).items()):
                for table, coef, out in ((a, t, y_rec), (zt, tau, z_rec)):
                    vals = table[l, abs(m)] * coef
                    keep = np.abs(vals) >= PRUNE_TOL
                    for u, val in zip(us[keep], vals[keep]):
                        out.append((l, m, u, v, val.real, val.imag))
    return ConversionTable(L, _pack(y_rec), _pack(z_rec))


# ---------------------------------------------------------------------------
# application


class WorkCounter:
    """Accumulates multiply-add counts reported by the conversion routines."""

    def __init__(self):
        self.ops = 0
        self._lock = threading.Lock()

    def add(self, n: int):
        with self._lock:
            self.ops += int(n)


def _batched_matvec(op: sp.csr_matrix, x: np.ndarray) -> np.ndarray:
    lead = x.shape[:-1]
    flat = x.reshape(-1, x.shape[-1])
    return (op @ flat.T).T.reshape(lead + (op.shape[0],))


def sh_to_fourier(x: np.ndarray, t: ConversionTable, L_grid: int | None = None,
                  counter: WorkCounter | None = None) -> FourierCoeffs2D:
    """Fourier grid of the function with harmonic coefficients ``x``.

    ``x`` may carry leading batch axes. The grid bandwidth defaults to
    ``t.L``; any ``L_grid >= degree(x)`` is exact.
    """
    L_in = so3.degree_of(x)
    B = t.L if L_grid is None else L_grid
    if not L_in <= B <= t.L:
        raise DomainError(f"need degree {L_in} <= grid {B} <= table {t.L}")
    op = t.forward_operator(L_in, B)
    if counter is not None:
        counter.add(op.nnz * int(np.prod(x.shape[:-1], dtype=np.int64)))
    g = _batched_matvec(op, np.asarray(x, dtype=float))
    return FourierCoeffs2D(B, g.reshape(x.shape[:-1] + (2 * B + 1, 2 * B + 1)))


def fourier_to_sh(f: FourierCoeffs2D, t: ConversionTable, L_out: int,
                  counter: WorkCounter | None = None) -> np.ndarray:
    """Harmonic coefficients up to ``L_out`` of the sphere function ``f``."""
    if f.L > t.L:
        raise DomainError(f"grid bandwidth {f.L} exceeds table {t.L}")
    if not 0 <= L_out <= t.L:
        raise DomainError(f"L_out={L_out} outside [0, {t.L}]")
    op = t.inverse_operator(f.L, L_out)
    lead = f.data.shape[:-2]
    if counter is not None:
        counter.add(op.nnz * int(np.prod(lead, dtype=np.int64)))
    x = _batched_matvec(op, f.data.reshape(lead + (-1,)))
    scale = max(1.0, float(np.max(np.abs(x.real), initial=0.0)))
    resid = float(np.max(np.abs(x.imag), initial=0.0))
    if resid > IMAG_TOL * scale:
        raise NumericalConsistencyError(
            f"imaginary residue {resid:.3e} in back-conversion; grid is not a real sphere function"
        )
    return np.ascontiguousarray(x.real)


def sh_to_fourier_sparse_filter(filt, L: int, t: ConversionTable, L_grid: int | None = None,
                                counter: WorkCounter | None = None) -> FourierCoeffs2D:
    """Fourier grid of a filter aligned with the polar axis.

    ``filt[l]`` is the ``m = 0`` coefficient of degree ``l``; all other
    coefficients of such a filter vanish, so only the ``v = 0`` column of
    the grid is populated.
    """
    filt = np.asarray(filt, dtype=float)
    if filt.shape[-1] != L + 1:
        raise DomainError(f"expected {L + 1} filter entries, got {filt.shape[-1]}")
    B = t.L if L_grid is None else L_grid
    if not L <= B <= t.L:
        raise DomainError(f"need degree {L} <= grid {B} <= table {t.L}")
    a = t.filter_matrix(L, B)
    col = np.zeros(filt.shape[:-1] + (2 * B + 1,), dtype=complex)
    for l in range(L + 1):
        col += filt[..., l, None] * a[:, l]
    if counter is not None:
        counter.add(a.size * int(np.prod(filt.shape[:-1], dtype=np.int64)))
    out = FourierCoeffs2D.zeros(B, filt.shape[:-1])
    out.data[..., :, B] = col
    return out


def evaluate_fourier(f: FourierCoeffs2D, theta, psi) -> np.ndarray:
    """Real part of the torus series at the given angles (no batch axes)."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    psi = np.atleast_1d(np.asarray(psi, dtype=float))
    k = np.arange(-f.L, f.L + 1)
    eu = np.exp(1j * theta[:, None] * k)
    ev = np.exp(1j * psi[:, None] * k)
    return np.einsum("nu,uv,nv->n", eu, f.data, ev).real


def evaluate_sh(x: np.ndarray, theta, psi) -> np.ndarray:
    """Value of the harmonic expansion ``x`` at the given angles."""
    return so3.sh_basis(so3.degree_of(x), theta, psi) @ x


# ---------------------------------------------------------------------------
# on-disk cache


def default_cache_dir() -> Path:
    env = os.environ.get("GTP_CACHE_DIR")
    if env:
        return Path(env)
    return Path(os.environ.get("XDG_CACHE_HOME", Path.home() / ".cache")) / "gtp"


def cache_path(L: int, cache_dir=None) -> Path:
    return Path(cache_dir or default_cache_dir()) / f"gaunt_L{L:03d}.gntb"


def table_to_bytes(t: ConversionTable) -> bytes:
    body = b"".join([
        _HEADER.pack(MAGIC, FORMAT_VERSION, t.L, len(t.y_entries)),
        t.y_entries.astype(ENTRY_DTYPE).tobytes(),
        _COUNT.pack(len(t.z_entries)),
        t.z_entries.astype(ENTRY_DTYPE).tobytes(),
    ])
    return body + _CRC.pack(zlib.crc32(body))


def table_from_bytes(buf: bytes, expect_L: int | None = None) -> ConversionTable:
    if len(buf) < _HEADER.size + _COUNT.size + _CRC.size:
        raise CacheFormatError("file too short")
    body, (crc,) = buf[:-_CRC.size], _CRC.unpack(buf[-_CRC.size:])
    magic, version, L, ny = _HEADER.unpack_from(body, 0)
    if magic != MAGIC:
        raise CacheFormatError(f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise CacheFormatError(f"unsupported format version {version}")
    if zlib.crc32(body) != crc:
        raise CacheFormatError("CRC mismatch")
    if expect_L is not None and L != expect_L:
        raise CacheFormatError(f"file holds L={L}, expected {expect_L}")
    rec = ENTRY_DTYPE.itemsize
    off = _HEADER.size
    y = np.frombuffer(body, dtype=ENTRY_DTYPE, count=ny, offset=off)
    off += ny * rec
    if off + _COUNT.size > len(body):
        raise CacheFormatError("truncated y section")
    (nz,) = _COUNT.unpack_from(body, off)
    off += _COUNT.size
    if off + nz * rec != len(body):
        raise CacheFormatError("section sizes do not match file length")
    z = np.frombuffer(body, dtype=ENTRY_DTYPE, count=nz, offset=off)
    return ConversionTable(L, y.copy(), z.copy())


def write_table(t: ConversionTable, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(table_to_bytes(t))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def read_table(path, expect_L: int | None = None) -> ConversionTable:
    return table_from_bytes(Path(path).read_bytes(), expect_L)


_memory: dict[int, ConversionTable] = {}
_memory_lock = threading.Lock()


def load_or_build(L: int, cache_dir=None, write: bool = True) -> ConversionTable:
    """Read the cached table for ``L``; rebuild (and rewrite) if missing or invalid."""
    path = cache_path(L, cache_dir)
    if path.exists():
        try:
            return read_table(path, expect_L=L)
        except CacheFormatError as exc:
            log.warning("rebuilding %s: %s", path, exc)
    else:
        log.info("building conversion table for L=%d", L)
    t = build_conversion_table(L)
    if write:
        try:
            write_table(t, path)
        except OSError as exc:
            log.warning("could not write cache %s: %s", path, exc)
    return t


def get_table(L: int, cache_dir=None, use_disk: bool = True) -> ConversionTable:
    """Process-wide table for bandwidth ``L`` (memory, then disk, then build)."""
    if L > TABLE_CAP:
        raise CapacityError(f"L={L} exceeds table cap {TABLE_CAP}")
    with _memory_lock:
        t = _memory.get(L)
    if t is not None:
        return t
    t = load_or_build(L, cache_dir) if use_disk else build_conversion_table(L)
    with _memory_lock:
        return _memory.setdefault(L, t)


def clear_memory_cache():
    with _memory_lock:
        _memory.clear()
