"""Reference exponential in compensated (double-double) arithmetic.

Matrices are carried as (hi, lo) array pairs worth ~106 bits.  The
reference path scales the input until its 1-norm is at most 2^-4, sums
the Taylor series until terms fall 2^-100 below the accumulated sum,
then squares back, all in double-double.  That leaves well over ten
guard digits beyond binary64, enough to adjudicate 1e-8-level
tolerances with several orders of margin.

:func:`poly_reference` evaluates an arbitrary polynomial in the same
arithmetic, so truncation remainders can be measured directly against
the series tail rather than against another binary64 evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .matrix import Matrix, MatrixError, NonFiniteError, frobenius_norm, one_norm

__all__ = [
    "ErrorReport",
    "expm_reference",
    "poly_reference",
    "relative_error",
]

_SPLITTER = 134217729.0  # 2^27 + 1, exact in binary64
_NORM_CAP = 2.0 ** 64
_SCALE_TARGET = 2.0 ** -4
_TERM_CUTOFF = 2.0 ** -100


def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _quick_two_sum(a, b):
    s = a + b
    return s, b - (s - a)


def _two_prod(a, b):
    p = a * b
    c = _SPLITTER * a
    ah = c - (c - a)
    al = a - ah
    c = _SPLITTER * b
    bh = c - (c - b)
    bl = b - bh
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


def _dd_add(xh, xl, yh, yl):
    sh, se = _two_sum(xh, yh)
    th, te = _two_sum(xl, yl)
    se = se + th
    sh, se = _quick_two_sum(sh, se)
    se = se + te
    return _quick_two_sum(sh, se)


def _dd_mul(xh, xl, yh, yl):
    ph, pe = _two_prod(xh, yh)
    pe = pe + (xh * yl + xl * yh)
    return _quick_two_sum(ph, pe)


def _dd_matmul(ah, al, bh, bl):
    """Double-double product of two (hi, lo) square matrices."""
    n = ah.shape[0]
    ch = np.zeros((n, n))
    cl = np.zeros((n, n))
    for q in range(n):
        ph, pl = _dd_mul(ah[:, q:q + 1], al[:, q:q + 1], bh[q:q + 1, :], bl[q:q + 1, :])
        ch, cl = _dd_add(ch, cl, ph, pl)
    return ch, cl


def _dd_inv_int(k: int):
    """Double-double value of 1/k for a positive integer k."""
    hi = 1.0 / k
    p, pe = _two_prod(hi, float(k))
    lo = ((1.0 - p) - pe) / k
    return hi, lo


def expm_reference(A: Matrix) -> Matrix:
    """High-accuracy e^A; at least ~1e-19 relative on well-conditioned
    inputs, i.e. several digits past binary64 roundoff."""
    norm1 = one_norm(A)
    if norm1 > _NORM_CAP:
        raise MatrixError(f"1-norm {norm1:.3g} too large for the reference path")
    s = 0
    while math.ldexp(norm1, -s) > _SCALE_TARGET:
        s += 1
    n = A.n
    bh = np.ldexp(A.a, -s)
    bl = np.zeros((n, n))
    xh = np.eye(n)
    xl = np.zeros((n, n))
    th = np.eye(n)
    tl = np.zeros((n, n))
    for k in range(1, 200):
        th, tl = _dd_matmul(th, tl, bh, bl)
        rh, rl = _dd_inv_int(k)
        th, tl = _dd_mul(th, tl, rh, rl)
        xh, xl = _dd_add(xh, xl, th, tl)
        if np.abs(th).max() <= _TERM_CUTOFF * np.abs(xh).max():
            break
    else:  # pragma: no cover - norm <= 1/16 converges in ~20 terms
        raise ArithmeticError("reference series failed to converge")
    for _ in range(s):
        xh, xl = _dd_matmul(xh, xl, xh, xl)
        if not np.isfinite(xh).all():
            raise NonFiniteError("overflow while squaring the reference value")
    return Matrix(xh + xl)


def poly_reference(A: Matrix, coeffs) -> Matrix:
    """Evaluate sum_i coeffs[i] * A^i by Horner in double-double."""
    if len(coeffs) == 0:
        raise MatrixError("empty coefficient list")
    n = A.n
    ah = A.a.copy()
    al = np.zeros((n, n))
    eye = np.eye(n)
    xh = coeffs[-1] * eye
    xl = np.zeros((n, n))
    for c in reversed(coeffs[:-1]):
        xh, xl = _dd_matmul(xh, xl, ah, al)
        xh, xl = _dd_add(xh, xl, c * eye, np.zeros((n, n)))
    return Matrix(xh + xl)


@dataclass(frozen=True)
class ErrorReport:
    """Normwise relative error in the Frobenius norm."""

    rel_err: float
    norm_kind: str = "frobenius"


def relative_error(X: Matrix, ref: Matrix) -> ErrorReport:
    """||X - ref||_F / ||ref||_F; zero exactly when the operands match."""
    if X.n != ref.n:
        raise MatrixError(f"order mismatch: {X.n} vs {ref.n}")
    denom = frobenius_norm(ref)
    if denom == 0.0:
        raise MatrixError("reference matrix has zero norm")
    return ErrorReport(rel_err=frobenius_norm(X - ref) / denom)
