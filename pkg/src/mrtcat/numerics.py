"""Dense linear algebra and F-distribution kernels.

The statistical code in this package needs four things beyond plain
arithmetic: Kronecker products, solves against symmetric positive
definite matrices with a condition diagnostic, the regularized
incomplete beta function, and central / noncentral F distribution
functions built on top of it.  Everything here is deterministic and
validates its inputs eagerly.

The incomplete beta evaluation uses the modified Lentz continued
fraction with the usual symmetry switch at x = (a + 1)/(a + b + 2), so
the fraction is only ever evaluated in its fast-converging region.  The
noncentral F CDF is the Poisson-weighted beta series

    P(F <= x) = sum_j  pois(j; lam/2) * I_y(d1/2 + j, d2/2),
    y = d1 x / (d1 x + d2),

summed outward from the Poisson mode so that weights never underflow
even for large noncentrality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError
from scipy.linalg.lapack import dpocon

from .errors import ConvergenceError, NumericalError, SingularSystemError

__all__ = [
    "SpdSolveReport",
    "kron",
    "solve_spd",
    "reg_inc_beta",
    "f_cdf",
    "f_quantile",
    "noncentral_f_cdf",
]

#: Condition estimates above this raise SingularSystemError.
CONDITION_LIMIT = 1e12

_CF_MAX_ITER = 300
_CF_EPS = 3e-16
_CF_FPMIN = 1e-300


@dataclass(frozen=True)
class SpdSolveReport:
    """Result of a symmetric positive definite solve.

    condition_estimate is a 1-norm condition number estimate of the
    matrix (LAPACK dpocon applied to its Cholesky factor).
    """

    solution: np.ndarray
    condition_estimate: float


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product of two 2-D arrays."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError("kron expects 2-D arrays")
    return np.kron(a, b)


def solve_spd(a: np.ndarray, rhs: np.ndarray) -> SpdSolveReport:
    """Solve a @ x = rhs for symmetric positive definite a.

    rhs may be a vector or a matrix of stacked right-hand sides.
    Raises NumericalError on non-finite entries and SingularSystemError
    when the Cholesky factorization fails or the 1-norm condition
    estimate exceeds CONDITION_LIMIT.
    """
    a = np.ascontiguousarray(a, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    if not np.all(np.isfinite(a)) or not np.all(np.isfinite(rhs)):
        raise NumericalError("solve_spd requires finite entries")
    if rhs.shape[0] != a.shape[0]:
        raise ValueError("right-hand side has incompatible leading dimension")
    anorm = float(np.linalg.norm(a, 1)) if a.size else 0.0
    try:
        factor = cho_factor(a, lower=False, check_finite=False)
    except LinAlgError as exc:
        raise SingularSystemError(
            f"matrix of size {a.shape[0]} is not positive definite: {exc}"
        ) from exc
    rcond, info = dpocon(factor[0], anorm, uplo="U")
    if info != 0:  # pragma: no cover - dpocon only fails on bad arguments
        raise SingularSystemError("condition estimation failed")
    condition = math.inf if rcond == 0.0 else 1.0 / float(rcond)
    if condition > CONDITION_LIMIT:
        raise SingularSystemError(
            f"matrix condition estimate {condition:.3e} exceeds {CONDITION_LIMIT:.1e}"
        )
    x = cho_solve(factor, rhs, check_finite=False)
    return SpdSolveReport(solution=x, condition_estimate=condition)


def _beta_cont_frac(a: float, b: float, x: float) -> float:
    """Modified Lentz evaluation of the incomplete beta continued fraction."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_FPMIN:
        d = _CF_FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_FPMIN:
            d = _CF_FPMIN
        c = 1.0 + aa / c
        if abs(c) < _CF_FPMIN:
            c = _CF_FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_FPMIN:
            d = _CF_FPMIN
        c = 1.0 + aa / c
        if abs(c) < _CF_FPMIN:
            c = _CF_FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ConvergenceError(
        f"incomplete beta continued fraction did not converge for a={a}, b={b}, x={x}"
    )


def reg_inc_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b).

    Requires a > 0, b > 0 and x in [0, 1].  Exact at the endpoints.
    """
    a = float(a)
    b = float(b)
    x = float(x)
    if not (a > 0.0 and b > 0.0):
        raise ValueError("shape parameters must be positive")
    if not (0.0 <= x <= 1.0):
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    # Evaluate the continued fraction on whichever side converges fast,
    # using the reflection I_x(a, b) = 1 - I_{1-x}(b, a).
    if x > (a + 1.0) / (a + b + 2.0):
        return 1.0 - reg_inc_beta(b, a, 1.0 - x)
    front = math.exp(
        a * math.log(x)
        + b * math.log1p(-x)
        + math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
    )
    return front * _beta_cont_frac(a, b, x) / a


def f_cdf(d1: float, d2: float, x: float) -> float:
    """CDF of the central F distribution with (d1, d2) degrees of freedom."""
    d1 = float(d1)
    d2 = float(d2)
    if not (d1 > 0.0 and d2 > 0.0):
        raise ValueError("degrees of freedom must be positive")
    x = float(x)
    if math.isnan(x):
        raise ValueError("x must not be NaN")
    if x <= 0.0:
        return 0.0
    if math.isinf(x):
        return 1.0
    y = d1 * x / (d1 * x + d2)
    return reg_inc_beta(0.5 * d1, 0.5 * d2, y)


def f_quantile(d1: float, d2: float, p: float) -> float:
    """Quantile of the central F distribution.

    Solves f_cdf(d1, d2, q) = p by bracket doubling followed by
    bisection.  p must lie in [0, 1); p = 0 returns 0.
    """
    p = float(p)
    if not (0.0 <= p < 1.0):
        raise ValueError("p must lie in [0, 1)")
    if p == 0.0:
        return 0.0
    lo = 0.0
    hi = 1.0
    while f_cdf(d1, d2, hi) < p:
        lo = hi
        hi *= 2.0
        if hi > 1e300:
            raise ConvergenceError("quantile bracket escaped to overflow")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f_cdf(d1, d2, mid) < p:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-13 * max(1.0, hi):
            break
    else:
        raise ConvergenceError("quantile bisection did not converge in 200 steps")
    return 0.5 * (lo + hi)


def noncentral_f_cdf(d1: float, d2: float, lam: float, x: float) -> float:
    """CDF of the noncentral F distribution with noncentrality lam.

    lam = 0 reduces exactly to the central CDF.  The Poisson-beta series
    is summed outward from the Poisson mode with per-term log weights,
    and truncated once the accumulated Poisson mass is within 1e-13 of
    one, so it stays accurate for lam up to at least 1e4.
    """
    d1 = float(d1)
    d2 = float(d2)
    lam = float(lam)
    if not (d1 > 0.0 and d2 > 0.0):
        raise ValueError("degrees of freedom must be positive")
    if not lam >= 0.0:
        raise ValueError("noncentrality must be nonnegative")
    x = float(x)
    if math.isnan(x):
        raise ValueError("x must not be NaN")
    if x <= 0.0:
        return 0.0
    if math.isinf(x):
        return 1.0
    if lam == 0.0:
        return f_cdf(d1, d2, x)

    y = d1 * x / (d1 * x + d2)
    half = 0.5 * lam
    a0 = 0.5 * d1
    b0 = 0.5 * d2

    def log_weight(j: int) -> float:
        return j * math.log(half) - half - math.lgamma(j + 1.0)

    mode = int(half)
    total = 0.0
    mass = 0.0
    # Downward sweep from the mode: weights decay fast toward j = 0.
    for j in range(mode, -1, -1):
        w = math.exp(log_weight(j))
        if w < 1e-18:
            break
        total += w * reg_inc_beta(a0 + j, b0, y)
        mass += w
    # Upward sweep until the remaining Poisson tail is negligible.
    j = mode + 1
    while mass < 1.0 - 1e-13:
        w = math.exp(log_weight(j))
        total += w * reg_inc_beta(a0 + j, b0, y)
        mass += w
        j += 1
        if j > mode + 200000:  # pragma: no cover - tail mass shrinks long before
            raise ConvergenceError("noncentral series failed to exhaust Poisson mass")
    return min(total, 1.0)
