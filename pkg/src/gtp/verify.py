"""Self-check suites run by ``gtp verify``.

Each check returns its largest observed residual together with the
tolerance it is held to. ``quick`` keeps degrees at or below 4; ``full``
goes to 8 and scans selection rules exhaustively up to degree 6.
"""

from __future__ import annotations

import contextlib
import itertools
import math
import time
from dataclasses import dataclass

import numpy as np

from . import conversion, so3
from .convolution import dense_convolution, edge_frame, equiv_convolution
from .many_body import multi_tp, self_product
from .oracle import (
    conv2d_direct,
    gaunt_block_quadrature,
    gaunt_tp_reference,
    many_body_reference,
)
from .tensor_product import conv2d_fft, gaunt_full_tp, gaunt_single_tp


@dataclass
class CheckResult:
    name: str
    residual: float
    tol: float
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.residual)) and self.residual <= self.tol


LEVELS = {
    "quick": dict(L_max=4, roundtrip=(1, 2, 4), scan=4, cg=2, pairs=5),
    "full": dict(L_max=8, roundtrip=(1, 2, 4, 8, 16), scan=6, cg=3, pairs=20),
}


def _rel(a, b) -> float:
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


def random_rotation(rng) -> tuple[float, float, float]:
    from scipy.spatial.transform import Rotation

    return so3.euler_from_matrix(Rotation.random(random_state=rng).as_matrix())


def check_roundtrip(rng, Ls) -> float:
    worst = 0.0
    for L in Ls:
        t = conversion.get_table(L)
        x = rng.standard_normal((10, so3.num_coeffs(L)))
        back = conversion.fourier_to_sh(conversion.sh_to_fourier(x, t), t, L)
        worst = max(worst, float(np.max(np.abs(back - x))))
    return worst


def check_sparsity(Ls) -> float:
    bad = 0
    for L in Ls:
        t = conversion.get_table(L)
        for e in (t.y_entries, t.z_entries):
            bad += int(np.count_nonzero(np.abs(e["v"]) != np.abs(e["m"])))
    return float(bad)


def check_pointwise(rng, L) -> float:
    t = conversion.get_table(L)
    x = rng.standard_normal(so3.num_coeffs(L))
    f = conversion.sh_to_fourier(x, t, L)
    theta = rng.uniform(0, math.pi, 10 * so3.num_coeffs(L))
    psi = rng.uniform(0, 2 * math.pi, theta.size)
    return float(np.max(np.abs(conversion.evaluate_fourier(f, theta, psi)
                               - conversion.evaluate_sh(x, theta, psi))))


def check_conv(rng) -> float:
    L = 3
    shape = (2 * L + 1, 2 * L + 1)
    a = conversion.FourierCoeffs2D(L, rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    b = conversion.FourierCoeffs2D(L, rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    return float(np.max(np.abs(conv2d_fft(a, b).data - conv2d_direct(a, b).data)))


def check_oracle(rng, L_max, pairs) -> float:
    worst = 0.0
    for L in range(1, L_max + 1):
        for _ in range(pairs):
            x = rng.standard_normal(so3.num_coeffs(L))
            y = rng.standard_normal(so3.num_coeffs(L))
            worst = max(worst, _rel(gaunt_full_tp(x, y), gaunt_tp_reference(x, y)))
    return worst


def check_gaunt_quadrature(scan) -> float:
    worst = 0.0
    for l1, l2, l in itertools.product(range(scan + 1), repeat=3):
        d = np.abs(so3.gaunt_block(l1, l2, l) - gaunt_block_quadrature(l1, l2, l))
        worst = max(worst, float(d.max()))
    return worst


def check_cg_orthogonality(l_max) -> float:
    worst = 0.0
    for l1, l2 in itertools.product(range(l_max + 1), repeat=2):
        rows = []
        for l in range(abs(l1 - l2), l1 + l2 + 1):
            for m in range(-l, l + 1):
                rows.append([so3.clebsch_gordan(l1, m1, l2, m2, l, m)
                             for m1 in range(-l1, l1 + 1) for m2 in range(-l2, l2 + 1)])
        c = np.array(rows)
        n = c.shape[0]
        worst = max(worst, float(np.max(np.abs(c @ c.T - np.eye(n)))),
                    float(np.max(np.abs(c.T @ c - np.eye(n)))))
    return worst


def check_selection(rng, scan) -> float:
    """Largest magnitude found in any block the selection rules force to zero."""
    worst = 0.0
    for l1, l2 in itertools.product(range(scan + 1), repeat=2):
        x = rng.standard_normal(2 * l1 + 1)
        y = rng.standard_normal(2 * l2 + 1)
        for l in range(0, scan + 1):
            if (l1 + l2 + l) % 2 == 0 and abs(l1 - l2) <= l <= l1 + l2:
                continue
            worst = max(worst, float(np.max(np.abs(gaunt_single_tp(x, y, l)))))
            if l <= l1 + l2:
                gb = np.abs(so3.gaunt_block(l1, l2, l))
                worst = max(worst, float(gb.max()))
    return worst


def check_equivariance(rng, L, trials) -> float:
    worst = 0.0
    for _ in range(trials):
        g = random_rotation(rng)
        D = so3.wigner_d_blocks(3 * L, *g)
        x = rng.standard_normal(so3.num_coeffs(L))
        y = rng.standard_normal(so3.num_coeffs(L))
        lhs = gaunt_full_tp(so3.rotate_irreps(x, D[:L + 1]), so3.rotate_irreps(y, D[:L + 1]))
        worst = max(worst, float(np.max(np.abs(lhs - so3.rotate_irreps(gaunt_full_tp(x, y), D)))))
        h = rng.standard_normal(L + 1)
        r_i, r_j = rng.standard_normal(3), rng.standard_normal(3)
        R = so3.rotation_matrix(*g)
        msg = equiv_convolution(x, edge_frame(r_i, r_j), h)
        msg_rot = equiv_convolution(so3.rotate_irreps(x, D[:L + 1]), edge_frame(R @ r_i, R @ r_j), h)
        worst = max(worst, float(np.max(np.abs(msg_rot - so3.rotate_irreps(msg, D)))))
        sp = self_product(so3.rotate_irreps(x, D[:L + 1]), 3)
        worst = max(worst, float(np.max(np.abs(sp - so3.rotate_irreps(self_product(x, 3), D)))))
    return worst


def check_sparse_filter(rng, Ls, trials) -> float:
    worst = 0.0
    for L in Ls:
        for _ in range(trials):
            x = rng.standard_normal(so3.num_coeffs(L))
            h = rng.standard_normal(L + 1)
            e = edge_frame(rng.standard_normal(3), rng.standard_normal(3))
            worst = max(worst, _rel(equiv_convolution(x, e, h), dense_convolution(x, e, h)))
    return worst


def check_many_body(rng) -> float:
    worst = 0.0
    for n in (2, 3, 4):
        ops = [rng.standard_normal(9) for _ in range(n)]
        worst = max(worst, _rel(multi_tp(ops, 2 * n), many_body_reference(ops, 2 * n)))
    return worst


def check_wigner(rng, L, trials) -> float:
    worst = 0.0
    for _ in range(trials):
        g = random_rotation(rng)
        r = rng.standard_normal(3)
        r /= np.linalg.norm(r)
        D = so3.wigner_d_blocks(L, *g)
        lhs = so3.eval_sh_vector(L, so3.rotation_matrix(*g) @ r)
        worst = max(worst, float(np.max(np.abs(lhs - so3.rotate_irreps(so3.eval_sh_vector(L, r), D)))))
    return worst


def run_suite(level: str = "quick", seed: int = 0) -> list[CheckResult]:
    if level not in LEVELS:
        raise ValueError(f"unknown level {level!r}")
    p = LEVELS[level]
    rng = np.random.default_rng(seed)
    L_max = p["L_max"]
    checks = [
        ("basis round-trip", lambda: check_roundtrip(rng, p["roundtrip"]), 1e-10),
        ("table sparsity v=+-m", lambda: check_sparsity(p["roundtrip"]), 0.0),
        ("pointwise fidelity", lambda: check_pointwise(rng, L_max), 1e-9),
        ("fft vs direct convolution", lambda: check_conv(rng), 1e-11),
        ("fast vs reference Gaunt product", lambda: check_oracle(rng, L_max, p["pairs"]), 1e-9),
        ("Gaunt vs quadrature", lambda: check_gaunt_quadrature(p["scan"]), 1e-10),
        ("Clebsch-Gordan orthogonality", lambda: check_cg_orthogonality(p["cg"]), 1e-11),
        ("selection-rule zeros", lambda: check_selection(rng, p["scan"]), 0.0),
        ("Wigner-D defining property", lambda: check_wigner(rng, min(L_max, 6), 20), 1e-9),
        ("O(3) equivariance", lambda: check_equivariance(rng, 4, 10), 1e-8),
        ("sparse vs dense filter", lambda: check_sparse_filter(rng, (2, 4), 5), 1e-9),
        ("tree vs reference many-body", lambda: check_many_body(rng), 1e-9),
    ]
    results = []
    for name, fn, tol in checks:
        t0 = time.perf_counter()
        res = fn()
        results.append(CheckResult(name, res, tol, time.perf_counter() - t0))
    return results


@contextlib.contextmanager
def injected_sign_flip(L_values, entry: int = 0):
    """Temporarily replace in-memory tables with copies whose ``y`` entry
    ``entry`` has its sign flipped. Test hook for the mutation canary."""
    saved = {}
    for L in L_values:
        t = conversion.get_table(L)
        y = t.y_entries.copy()
        k = min(entry, len(y) - 1)
        y["re"][k] = -y["re"][k]
        y["im"][k] = -y["im"][k]
        with conversion._memory_lock:
            saved[L] = t
            conversion._memory[L] = conversion.ConversionTable(L, y, t.z_entries.copy())
    try:
        yield
    finally:
        with conversion._memory_lock:
            conversion._memory.update(saved)
