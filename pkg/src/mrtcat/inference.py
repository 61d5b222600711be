"""Linear contrasts, the scaled-F Wald test, and confidence intervals.

A hypothesis about the K arm effects is a nu x K matrix L acting on the
stacked coefficient vector through L_tilde = L kron I_p.  The Wald
statistic

    T = (L_tilde b)' (L_tilde C L_tilde')^{-1} (L_tilde b)

is compared, after the small-sample scaling, against an F distribution
with (l, n - q - l) degrees of freedom, where l = rank(L).  The printed
scaling factor (n - q - l) / (l (n - q - l)) reduces to 1/l; an
alternative factor (n - q - l) / (l (n - q - 1)) is available behind
the scaling switch.  The two coincide when l = 1.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import DataValidationError, NullContrastError, SingularSystemError
from .numerics import f_cdf, f_quantile, kron, solve_spd
from .wcls import FitResult

__all__ = [
    "ContrastSpec",
    "TestResult",
    "CiRow",
    "build_contrast",
    "contrast_preset",
    "parse_contrast_text",
    "wald_test",
    "confidence_intervals",
]

SCALINGS = ("printed", "alternative")

_RANK_TOL = 1e-10


@dataclass(frozen=True)
class ContrastSpec:
    l_matrix: np.ndarray
    p: int
    l_tilde: np.ndarray
    rank_l: int


@dataclass(frozen=True)
class TestResult:
    statistic: float
    scaled_statistic: float
    df1: int
    df2: int
    p_value: float
    reject: bool
    critical_value: float


@dataclass(frozen=True)
class CiRow:
    estimate: float
    se: float
    lower: float
    upper: float
    p_value: float


def build_contrast(l_matrix: np.ndarray, p: int) -> ContrastSpec:
    """Lift an arm-level contrast L to coefficient space via L kron I_p."""
    l_matrix = np.atleast_2d(np.asarray(l_matrix, dtype=float))
    if p < 1:
        raise DataValidationError("moderator dimension p must be >= 1")
    if not np.isfinite(l_matrix).all():
        raise DataValidationError("contrast matrix must be finite")
    svals = np.linalg.svd(l_matrix, compute_uv=False)
    scale = svals[0] if svals.size else 0.0
    if scale == 0.0:
        raise NullContrastError("contrast matrix is zero")
    rank = int(np.sum(svals > _RANK_TOL * scale))
    return ContrastSpec(
        l_matrix=l_matrix,
        p=int(p),
        l_tilde=kron(l_matrix, np.eye(p)),
        rank_l=rank,
    )


def contrast_preset(name: str, k_arms: int) -> np.ndarray:
    """Expand a named contrast: 'all-null' or 'pairwise(j,k)' (1-based arms)."""
    if name == "all-null":
        return np.eye(k_arms)
    match = re.fullmatch(r"pairwise\((\d+),\s*(\d+)\)", name.strip())
    if match:
        j, k = int(match.group(1)), int(match.group(2))
        if not (1 <= j <= k_arms and 1 <= k <= k_arms) or j == k:
            raise DataValidationError(
                f"pairwise arms must be distinct and within 1..{k_arms}, got ({j},{k})"
            )
        row = np.zeros((1, k_arms))
        row[0, j - 1] = 1.0
        row[0, k - 1] = -1.0
        return row
    raise DataValidationError(
        f"unknown contrast preset {name!r}; expected 'all-null' or 'pairwise(j,k)'"
    )


def parse_contrast_text(text: str, k_arms: int) -> np.ndarray:
    """Parse a contrast given as a preset name or semicolon-separated rows."""
    text = text.strip()
    if text == "all-null" or text.startswith("pairwise"):
        return contrast_preset(text, k_arms)
    try:
        rows = [
            [float(cell) for cell in row.split(",")]
            for row in text.split(";")
            if row.strip()
        ]
    except ValueError as exc:
        raise DataValidationError(f"cannot parse contrast {text!r}: {exc}") from exc
    mat = np.array(rows, dtype=float)
    if mat.ndim != 2 or mat.shape[1] != k_arms:
        raise DataValidationError(
            f"contrast rows must have {k_arms} entries, got shape {mat.shape}"
        )
    return mat


def _row_space_basis(l_tilde: np.ndarray) -> np.ndarray:
    """Full-row-rank matrix with the same row space (and same statistic)."""
    u, s, vt = np.linalg.svd(l_tilde, full_matrices=False)
    rank = int(np.sum(s > _RANK_TOL * s[0]))
    if rank == 0:
        raise NullContrastError("contrast matrix is zero")
    return s[:rank, None] * vt[:rank]


def wald_test(
    fit: FitResult, contrast: ContrastSpec, eta: float = 0.05, scaling: str = "printed"
) -> TestResult:
    """Scaled-F Wald test of H0: L_tilde beta = 0 at level eta."""
    if scaling not in SCALINGS:
        raise DataValidationError(f"unknown scaling {scaling!r}; expected one of {SCALINGS}")
    if not (0.0 < eta < 1.0):
        raise DataValidationError("eta must lie in (0, 1)")
    if contrast.l_tilde.shape[1] != fit.beta_hat.shape[0]:
        raise DataValidationError(
            f"contrast expects {contrast.l_tilde.shape[1]} coefficients, "
            f"fit has {fit.beta_hat.shape[0]}"
        )
    n, q, l = fit.n, fit.q, contrast.rank_l
    if n <= q + l + 1:
        raise DataValidationError(
            f"need n > q + l + 1 for the scaled-F test (n={n}, q={q}, l={l})"
        )
    reduced = _row_space_basis(contrast.l_tilde)
    v = reduced @ fit.beta_hat
    gram = reduced @ fit.cov_beta @ reduced.T
    try:
        statistic = float(v @ solve_spd(gram, v).solution)
    except SingularSystemError as exc:
        raise SingularSystemError(f"contrasted covariance is singular: {exc}") from exc
    statistic = max(statistic, 0.0)

    df2 = n - q - l
    if scaling == "printed":
        scaled = statistic * (n - q - l) / (l * (n - q - l))
    else:
        scaled = statistic * (n - q - l) / (l * (n - q - 1))
    critical = f_quantile(l, df2, 1.0 - eta)
    p_value = 1.0 - f_cdf(l, df2, scaled)
    return TestResult(
        statistic=statistic,
        scaled_statistic=scaled,
        df1=l,
        df2=df2,
        p_value=p_value,
        reject=bool(scaled > critical),
        critical_value=critical,
    )


def confidence_intervals(
    fit: FitResult, rows: np.ndarray, level: float = 0.95
) -> list[CiRow]:
    """Estimate, SE, CI, and p-value for each linear combination c' beta.

    rows is a sequence of Kp-vectors.  The interval half-width uses the
    t-like quantile sqrt of the (1, n - q - 1) F quantile at the given
    confidence level, matching the single-row Wald test.
    """
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    if rows.shape[1] != fit.beta_hat.shape[0]:
        raise DataValidationError(
            f"contrast rows must have {fit.beta_hat.shape[0]} entries"
        )
    if not (0.0 < level < 1.0):
        raise DataValidationError("confidence level must lie in (0, 1)")
    n, q = fit.n, fit.q
    if n <= q + 2:
        raise DataValidationError(f"need n > q + 2 for intervals (n={n}, q={q})")
    df2 = n - q - 1
    quant = np.sqrt(f_quantile(1, df2, level))
    out = []
    for c in rows:
        if not c.any():
            raise NullContrastError("zero contrast row")
        estimate = float(c @ fit.beta_hat)
        se = float(np.sqrt(max(c @ fit.cov_beta @ c, 0.0)))
        if se > 0.0:
            p_value = 1.0 - f_cdf(1, df2, (estimate / se) ** 2)
        else:
            p_value = 1.0 if estimate == 0.0 else 0.0
        out.append(
            CiRow(
                estimate=estimate,
                se=se,
                lower=estimate - quant * se,
                upper=estimate + quant * se,
                p_value=p_value,
            )
        )
    return out
