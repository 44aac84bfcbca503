"""Matrix exponential drivers.

* :func:`expm_baseline` - the term-accumulation scheme: scale until the
  1-norm drops below 1/2, add Taylor terms until the next term's norm
  falls under the tolerance, square back.
* :func:`expm` - select (m, s) with one of the two selectors, evaluate
  the degree-m polynomial on the scaled matrix (reusing the powers the
  selector already formed, rescaled exactly by powers of two), square s
  times.
* :func:`expm_lowrank` - for W = A1 A2 with small inner rank, evaluate
  the index-shifted series on V = A2 A1 and assemble I + A1 psi(V) A2;
  no scaling is applied on this path, so the order search fails loudly
  when ||V||_1 is too large for the unscaled series.

Every driver owns one ledger per call; ``mults`` in the result is the
full square-product count including the squaring phase.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .matrix import Matrix, MatrixError, MulLedger, identity, mat_mul, one_norm, scale_pow2
from .poly import (
    EXP_COEFFS,
    eval_low_order,
    eval_t8,
    eval_t15p,
    phi1_coeffs,
    ps_eval,
    taylor_coeffs_exp,
)
from .select import (
    SCHEME_BASELINE,
    SCHEME_LOWRANK,
    SCHEME_PS,
    SCHEME_SASTRE,
    EvalPlan,
    check_tolerance,
    select_ps,
    select_sastre,
)

__all__ = [
    "ExpmResult",
    "LOWRANK_ORDERS",
    "LowRankOrderError",
    "LowRankPair",
    "expm",
    "expm_baseline",
    "expm_lowrank",
    "squaring",
]


class LowRankOrderError(ArithmeticError):
    """No admissible order for the unscaled low-rank series."""


@dataclass
class ExpmResult:
    """Computed exponential plus the plan and cost that produced it.

    ``mults`` counts square matrix-matrix products (polynomial evaluation
    plus exactly s squarings); rectangular factor products on the
    low-rank path are a different currency and live in ``rect_mults``.
    """

    value: Matrix
    plan: EvalPlan
    mults: int
    wall_time: float
    rect_mults: int = 0


def squaring(X: Matrix, s: int, ledger: MulLedger) -> Matrix:
    """X^(2^s) by s repeated squarings; charges exactly s products."""
    s = int(s)
    if s < 0:
        raise MatrixError("squaring count must be nonnegative")
    for _ in range(s):
        X = mat_mul(X, X, ledger)
    return X


def expm_baseline(W: Matrix, eps: float) -> ExpmResult:
    """Term-accumulation exponential with norm-halving scaling.

    The smallest s with ||W||_1 / 2^s < 1/2 is used; the term loop then
    charges one product per term formed, including the final term whose
    norm falls at or below the tolerance (that product is what detects
    termination).
    """
    eps = check_tolerance(eps)
    t0 = time.perf_counter()
    ledger = MulLedger()
    s = 0
    norm1 = one_norm(W)
    while math.ldexp(norm1, -s) >= 0.5:
        s += 1
    B = scale_pow2(W, s)
    X = identity(W.n)
    Y = B
    k = 2
    while one_norm(Y) > eps:
        X = X + Y
        Y = mat_mul(B, Y, ledger) / k
        k += 1
    X = squaring(X, s, ledger)
    plan = EvalPlan(m=k - 2, s=s, scheme=SCHEME_BASELINE,
                    e1=one_norm(Y), e2=0.0, cached_powers={}, cached_norms={})
    return ExpmResult(X, plan, ledger.count, time.perf_counter() - t0)


def expm(W: Matrix, eps: float, scheme: str = SCHEME_SASTRE) -> ExpmResult:
    """Selected-order scaled-Taylor exponential.

    ``scheme`` picks the selector/evaluator pair: ``"ps"`` for
    Paterson-Stockmeyer (orders up to 16) or ``"sastre"`` for the
    evaluation formulas (orders up to 15+).  Powers cached by the
    selector are powers of the unscaled W; they are rescaled entrywise by
    the exact factors 2^(-s*p) instead of being recomputed, which keeps
    the total cost at the polynomial budget plus s.
    """
    eps = check_tolerance(eps)
    t0 = time.perf_counter()
    ledger = MulLedger()
    if scheme == SCHEME_PS:
        plan = select_ps(W, eps, ledger=ledger)
    elif scheme == SCHEME_SASTRE:
        plan = select_sastre(W, eps, ledger=ledger)
    else:
        raise MatrixError(f"unknown scheme {scheme!r}; expected 'ps' or 'sastre'")

    B = scale_pow2(W, plan.s)
    scaled = {p: scale_pow2(P, plan.s * p) for p, P in plan.cached_powers.items()}
    if plan.m == 0:
        X = identity(W.n)
    elif scheme == SCHEME_PS:
        X = ps_eval(taylor_coeffs_exp(plan.m), B, ledger, powers=scaled)
    elif plan.m in (1, 2, 4):
        X = eval_low_order(B, plan.m, ledger, a2=scaled.get(2))
    elif plan.m == 8:
        X = eval_t8(B, EXP_COEFFS, ledger, a2=scaled.get(2))
    else:
        X = eval_t15p(B, EXP_COEFFS, ledger, a2=scaled.get(2))
    X = squaring(X, plan.s, ledger)
    return ExpmResult(X, plan, ledger.count, time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# Low-rank path
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LowRankPair:
    """Factored weight W = A1 A2 with A1 (n x t) and A2 (t x n), t <= n."""

    a1: np.ndarray
    a2: np.ndarray

    def __post_init__(self):
        a1 = np.array(self.a1, dtype=np.float64)
        a2 = np.array(self.a2, dtype=np.float64)
        if a1.ndim != 2 or a2.ndim != 2:
            raise MatrixError("low-rank factors must be 2-d arrays")
        n, t = a1.shape
        if a2.shape != (t, n):
            raise MatrixError(f"factor shapes incompatible: {a1.shape} and {a2.shape}")
        if t > n:
            raise MatrixError(f"inner rank {t} exceeds order {n}")
        if not (np.isfinite(a1).all() and np.isfinite(a2).all()):
            raise MatrixError("low-rank factors must be finite")
        a1.setflags(write=False)
        a2.setflags(write=False)
        object.__setattr__(self, "a1", a1)
        object.__setattr__(self, "a2", a2)

    @property
    def n(self) -> int:
        return self.a1.shape[0]

    @property
    def t(self) -> int:
        return self.a1.shape[1]


# Evaluation-formula ladder extended by Paterson-Stockmeyer degrees; the
# shifted series has no published formula coefficients, so every order
# here is evaluated by ps_eval.
LOWRANK_ORDERS = (1, 2, 4, 8, 15, 16, 20, 25, 30)


def expm_lowrank(pair: LowRankPair, eps: float) -> ExpmResult:
    """Exponential of W = A1 A2 via I + A1 (sum_i V^i/(i+1)!) A2, V = A2 A1.

    The order is the smallest on :data:`LOWRANK_ORDERS` whose two leading
    remainder terms, bounded with ||V^2||_1 and ||V||_1 products against
    the shifted factorials 1/(m+2)! and 1/(m+3)!, meet the tolerance.  No
    scaling is applied; if no order qualifies, the call raises.

    ``mults`` counts the t x t products of the series evaluation; the
    three factor products (A2*A1 and the two assembly products) are
    reported in ``rect_mults``.
    """
    eps = check_tolerance(eps)
    t0 = time.perf_counter()
    ledger = MulLedger()
    rect = 1  # V = A2 A1
    V = Matrix(pair.a2 @ pair.a1)
    nv = one_norm(V)

    log_eps = math.log2(eps)
    lw1 = math.log2(nv) if nv > 0 else -math.inf
    powers = {1: V}
    norms = {1: nv}
    m = 0
    e1 = e2 = 0.0
    found = nv == 0.0
    if not found:
        lw2 = None
        for m in LOWRANK_ORDERS:
            if m >= 2 and 2 not in powers:
                powers[2] = mat_mul(V, V, ledger)
                norms[2] = one_norm(powers[2])
                lw2 = math.log2(norms[2]) if norms[2] > 0 else -math.inf
            if m == 1:
                l1 = 2 * lw1 - _LOG2_FACT[3]
                l2 = 3 * lw1 - _LOG2_FACT[4]
            else:
                l1 = _power_bound_log(m + 1, lw1, lw2) - _LOG2_FACT[m + 2]
                l2 = _power_bound_log(m + 2, lw1, lw2) - _LOG2_FACT[m + 3]
            if float(np.logaddexp2(l1, l2)) <= log_eps:
                found = True
                e1, e2 = _exp2_pair(l1, l2)
                break
        if not found:
            raise LowRankOrderError(
                f"||V||_1 = {nv:.6g} admits no order <= {LOWRANK_ORDERS[-1]} at "
                f"tolerance {eps:.3g}; the factored path runs unscaled"
            )

    plan = EvalPlan(m=m, s=0, scheme=SCHEME_LOWRANK, e1=e1, e2=e2,
                    cached_powers=powers, cached_norms=norms)
    if m == 0:
        psi = identity(V.n)
    else:
        psi = ps_eval(phi1_coeffs(m), V, ledger, powers=powers)
    out = np.eye(pair.n) + pair.a1 @ (psi.a @ pair.a2)
    rect += 2
    value = Matrix(out)
    return ExpmResult(value, plan, ledger.count, time.perf_counter() - t0,
                      rect_mults=rect)


_LOG2_FACT = [math.lgamma(i + 1) / math.log(2.0) for i in range(40)]


def _power_bound_log(q: int, lw1: float, lw2: float) -> float:
    """log2 of the ||V^q||_1 bound ||V^2||^(q//2) * ||V||^(q%2)."""
    return (q // 2) * lw2 + (q % 2) * lw1


def _exp2_pair(l1: float, l2: float):
    with np.errstate(over="ignore"):
        return float(np.exp2(l1)), float(np.exp2(l2))
