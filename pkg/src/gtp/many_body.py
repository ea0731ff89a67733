"""Products of several sphere functions (many-body interactions).

The operands' Fourier grids are convolved pairwise in a balanced binary
tree: neighbours ``(1,2), (3,4), ...`` are merged level by level, so every
convolution runs at the bandwidth of its own subtree. Intermediate results
are never truncated.
"""

from __future__ import annotations

import numpy as np
from scipy.fft import next_fast_len

from . import so3
from .conversion import FourierCoeffs2D, WorkCounter, fourier_to_sh, get_table, sh_to_fourier
from .errors import DomainError
from .tensor_product import coupled_degrees, fft_work, linear_conv, nonzero_degrees, zero_forbidden

MAX_BODY_ORDER = 16


def _conv_size(L: int) -> int:
    return next_fast_len(2 * L + 1)


def _prepare(operands, L_out):
    ops = [np.asarray(o, dtype=float) for o in operands]
    if not ops:
        raise DomainError("need at least one operand")
    if len(ops) > MAX_BODY_ORDER:
        raise DomainError(f"at most {MAX_BODY_ORDER} operands supported")
    total = sum(so3.degree_of(o) for o in ops)
    if L_out is None:
        L_out = total
    if not 0 <= L_out <= total:
        raise DomainError(f"L_out={L_out} outside [0, {total}]")
    return ops, total, L_out


def _allowed(ops, L_out) -> set[int]:
    total = 0
    allowed = {0}
    for o in ops:
        total += so3.degree_of(o)
        allowed = coupled_degrees(allowed, nonzero_degrees(o), total)
    return {l for l in allowed if l <= L_out}


def multi_tp(operands, L_out: int | None = None, fused: bool = False,
             counter: WorkCounter | None = None,
             conv_counter: WorkCounter | None = None) -> np.ndarray:
    """Coefficients of the product of all operand functions, up to ``L_out``.

    With ``fused=True`` every leaf is transformed once at the final FFT
    size and the whole product is a single pointwise multiplication.
    ``conv_counter`` collects only the FFT/convolution work.
    """
    ops, total, L_out = _prepare(operands, L_out)
    if len(ops) == 1:
        return so3.truncate(ops[0], L_out)
    t = get_table(total)
    level = [(sh_to_fourier(o, t, so3.degree_of(o), counter).data, so3.degree_of(o)) for o in ops]

    if fused:
        n = _conv_size(total)
        acc = None
        for data, L in level:
            shifted = np.fft.fft2(data, s=(n, n))
            acc = shifted if acc is None else acc * shifted
        for c in (counter, conv_counter):
            if c is not None:
                c.add((len(level) + 1) * fft_work(n) + (len(level) - 1) * n * n)
        grid = np.fft.ifft2(acc)[..., :2 * total + 1, :2 * total + 1]
    else:
        while len(level) > 1:
            nxt = []
            for k in range(0, len(level) - 1, 2):
                (a, La), (b, Lb) = level[k], level[k + 1]
                size = _conv_size(La + Lb)
                prod = linear_conv(a, La, b, Lb, size, conv_counter)
                if counter is not None:
                    counter.add(3 * fft_work(size) + size * size)
                nxt.append((prod.data, prod.L))
            if len(level) % 2:
                nxt.append(level[-1])
            level = nxt
        grid = level[0][0]

    out = fourier_to_sh(FourierCoeffs2D(total, grid), t, L_out, counter)
    return zero_forbidden(out, _allowed(ops, L_out))


def leftfold_tp(operands, L_out: int | None = None, counter: WorkCounter | None = None,
                conv_counter: WorkCounter | None = None) -> np.ndarray:
    """Same product accumulated sequentially: ``((x1 * x2) * x3) * ...``."""
    ops, total, L_out = _prepare(operands, L_out)
    if len(ops) == 1:
        return so3.truncate(ops[0], L_out)
    t = get_table(total)
    acc, La = sh_to_fourier(ops[0], t, so3.degree_of(ops[0]), counter).data, so3.degree_of(ops[0])
    for o in ops[1:]:
        Lb = so3.degree_of(o)
        b = sh_to_fourier(o, t, Lb, counter).data
        size = _conv_size(La + Lb)
        prod = linear_conv(acc, La, b, Lb, size, conv_counter)
        if counter is not None:
            counter.add(3 * fft_work(size) + size * size)
        acc, La = prod.data, prod.L
    out = fourier_to_sh(FourierCoeffs2D(total, acc), t, L_out, counter)
    return zero_forbidden(out, _allowed(ops, L_out))


def self_product(x, nu: int, wx=None, L_out: int | None = None, fused: bool = False,
                 counter: WorkCounter | None = None) -> np.ndarray:
    """``nu``-fold product of the (degree-weighted) function ``x`` with itself."""
    if not 1 <= nu <= MAX_BODY_ORDER:
        raise DomainError(f"body order must be in [1, {MAX_BODY_ORDER}], got {nu}")
    x = np.asarray(x, dtype=float)
    if wx is not None:
        x = so3.scale_degrees(x, wx)
    return multi_tp([x] * nu, L_out, fused=fused, counter=counter)
