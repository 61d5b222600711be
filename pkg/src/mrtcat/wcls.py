"""Weighted and centered least squares for categorical treatments.

Fits the linear model

    Y_t  ~  g_t' alpha  +  sum_k C_k(A_t) f_t' beta_k

over all decision points whose excursion window fits inside the panel,
with per-point weights

    w_t = I_t * [ptilde_t(A_t) / p_t(A_t | H_t)]
              * prod_{j=t+1}^{t+delta-1} 1(A_j = 0) / p_j(0 | H_j)

and centered arm indicators C_k(A_t) = 1(A_t = k) - ptilde_t(k).  The
estimating function is linear in (alpha, beta), so the fit is one
weighted least-squares solve.  The covariance of beta_hat is the robust
sandwich built from per-subject score sums, optionally with the
hat-matrix small-sample residual adjustment.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import MrtDataset, NumeratorPolicy, fit_numerator_probs, validate
from .errors import (
    DataValidationError,
    DegenerateArmError,
    PositivityError,
    SingularSystemError,
)
from .numerics import solve_spd

__all__ = [
    "ModelSpec",
    "DesignRow",
    "FitResult",
    "SandwichResult",
    "build_design_rows",
    "fit_wcls",
    "sandwich_variance",
]

CORRECTIONS = ("none", "mancl_derouen")


@dataclass(frozen=True)
class ModelSpec:
    """Analysis model: moderator basis f, control basis g, window, weights.

    f_columns and g_columns name feature columns of the dataset; an
    intercept is prepended to each basis unless the corresponding toggle
    is off.  delta is the excursion window length (proximal outcome
    horizon).  correction selects the small-sample residual adjustment
    applied inside the sandwich covariance.
    """

    f_columns: tuple[str, ...] = ()
    g_columns: tuple[str, ...] = ()
    f_intercept: bool = True
    g_intercept: bool = True
    delta: int = 1
    numerator: NumeratorPolicy = field(default_factory=NumeratorPolicy)
    correction: str = "mancl_derouen"

    def __post_init__(self) -> None:
        if self.delta < 1:
            raise DataValidationError("delta must be >= 1")
        if self.correction not in CORRECTIONS:
            raise DataValidationError(
                f"unknown correction {self.correction!r}; expected one of {CORRECTIONS}"
            )
        if self.p == 0:
            raise DataValidationError("moderator basis f is empty")
        if self.q == 0:
            raise DataValidationError("control basis g is empty")

    @property
    def p(self) -> int:
        return int(self.f_intercept) + len(self.f_columns)

    @property
    def q(self) -> int:
        return int(self.g_intercept) + len(self.g_columns)

    @property
    def f_names(self) -> tuple[str, ...]:
        return (("intercept",) if self.f_intercept else ()) + self.f_columns

    @property
    def g_names(self) -> tuple[str, ...]:
        return (("intercept",) if self.g_intercept else ()) + self.g_columns


@dataclass(frozen=True)
class DesignRow:
    """One weighted regression row: d_full = (g; C_1 f; ...; C_K f)."""

    subject: str
    t: int
    weight: float
    d_full: np.ndarray
    d_beta: np.ndarray
    outcome: float


@dataclass(frozen=True)
class FitResult:
    alpha_hat: np.ndarray
    beta_hat: np.ndarray
    cov_beta: np.ndarray
    n: int
    t_points: int
    k_arms: int
    p: int
    q: int
    residuals: np.ndarray
    delta: int
    correction: str
    md_fallbacks: int
    numerator_table: np.ndarray
    f_names: tuple[str, ...]
    g_names: tuple[str, ...]

    @property
    def beta_names(self) -> tuple[str, ...]:
        return tuple(
            f"arm{k}:{name}" for k in range(1, self.k_arms + 1) for name in self.f_names
        )


@dataclass(frozen=True)
class SandwichResult:
    cov_beta: np.ndarray
    md_fallbacks: int


def _basis_matrix(
    data: MrtDataset, columns: tuple[str, ...], intercept: bool, t_used: int, label: str
) -> np.ndarray:
    parts = []
    if intercept:
        parts.append(np.ones((data.n, t_used)))
    for name in columns:
        if name not in data.features:
            raise DataValidationError(
                f"{label} column {name!r} not in dataset features {sorted(data.features)}"
            )
        parts.append(data.features[name][:, :t_used])
    return np.stack(parts, axis=2)


def _build_arrays(data: MrtDataset, spec: ModelSpec):
    """Assemble weights, centered indicators, and stacked design blocks.

    Returns (W, Dfull, Y, t_used, ptilde) where W is (n, t_used),
    Dfull is (n, t_used, q + K p) and Y is (n, t_used).  Decision
    points with t + delta - 1 > T are dropped because their proximal
    outcome window extends past the panel.
    """
    n, big_t, k = data.n, data.t_points, data.k_arms
    t_used = big_t - spec.delta + 1
    if t_used < 1:
        raise DataValidationError(
            f"delta={spec.delta} leaves no usable decision points in a panel with T={big_t}"
        )
    ptilde = fit_numerator_probs(data, spec.numerator)

    trt = data.trt[:, :t_used]
    avail = data.avail[:, :t_used]
    realized = np.take_along_axis(data.probs[:, :t_used], trt[:, :, None], axis=2)[:, :, 0]
    if ((avail == 1) & (realized <= 0.0)).any():
        raise PositivityError("realized arm has zero randomization probability")

    ptilde_realized = ptilde[np.arange(t_used)[None, :], trt]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(avail == 1, ptilde_realized / np.where(realized > 0, realized, 1.0), 0.0)
    weights = ratio
    # Trailing excursion factor: reference arm held for delta - 1 points.
    # Unavailable interim points deliver arm 0 deterministically, so the
    # conditional probability there is 1, not the recorded prob_0.
    for offset in range(1, spec.delta):
        idx = np.arange(t_used) + offset
        a_j = data.trt[:, idx]
        i_j = data.avail[:, idx]
        p0_j = data.probs[:, idx, 0]
        factor = np.where(a_j == 0, np.where(i_j == 1, 1.0 / np.maximum(p0_j, 1e-300), 1.0), 0.0)
        weights = weights * factor

    f_mat = _basis_matrix(data, spec.f_columns, spec.f_intercept, t_used, "moderator")
    g_mat = _basis_matrix(data, spec.g_columns, spec.g_intercept, t_used, "control")
    centered = (trt[:, :, None] == np.arange(1, k + 1)[None, None, :]).astype(float)
    centered -= ptilde[None, :t_used, 1:]

    dim = spec.q + k * spec.p
    d_full = np.empty((n, t_used, dim))
    d_full[:, :, : spec.q] = g_mat
    for arm in range(k):
        lo = spec.q + arm * spec.p
        d_full[:, :, lo : lo + spec.p] = centered[:, :, arm, None] * f_mat

    return weights, d_full, data.outcome[:, :t_used].copy(), t_used, ptilde


def build_design_rows(data: MrtDataset, spec: ModelSpec) -> list[DesignRow]:
    """Materialize the per-(subject, t) weighted design rows.

    Rows at unavailable points are retained with weight zero; decision
    points whose excursion window runs past the panel are excluded.
    """
    weights, d_full, outcome, t_used, _ = _build_arrays(data, spec)
    rows = []
    for i, sid in enumerate(data.subject_ids):
        for t in range(t_used):
            full = d_full[i, t].copy()
            rows.append(
                DesignRow(
                    subject=sid,
                    t=t + 1,
                    weight=float(weights[i, t]),
                    d_full=full,
                    d_beta=full[spec.q :],
                    outcome=float(outcome[i, t]),
                )
            )
    return rows


def _check_arms_observed(data: MrtDataset, t_used: int) -> None:
    seen = np.unique(data.trt[:, :t_used][data.avail[:, :t_used] == 1])
    missing = [k for k in range(1, data.k_arms + 1) if k not in seen]
    if missing:
        raise DegenerateArmError(
            f"declared arm(s) {missing} never observed among available decision points; "
            f"the design is singular (reduce k_arms or supply data covering every arm)"
        )


def _sandwich_core(
    d_full: np.ndarray,
    weights: np.ndarray,
    resid: np.ndarray,
    q: int,
    correction: str,
) -> SandwichResult:
    """Robust covariance of beta_hat from per-subject score sums.

    d_full is (n, rows, q + Kp); the beta block is everything past q.
    With the hat-matrix correction, each subject's residual vector e_i
    is replaced by (I - H_i)^{-1} e_i where H_i is that subject's block
    of the weighted hat matrix on the full (alpha, beta) design.
    """
    n = d_full.shape[0]
    dim = d_full.shape[2]
    kp = dim - q
    d_beta = d_full[:, :, q:]

    m_sum = np.einsum("itr,it,its->rs", d_beta, weights, d_beta)
    fallbacks = 0
    if correction == "mancl_derouen":
        b_full = np.einsum("itr,it,its->rs", d_full, weights, d_full)
        b_report = solve_spd(b_full, np.eye(dim))
        b_inv = b_report.solution
        scores = np.empty((n, kp))
        for i in range(n):
            hat = (d_full[i] @ b_inv @ d_full[i].T) * weights[i][None, :]
            try:
                adjusted = np.linalg.solve(np.eye(hat.shape[0]) - hat, resid[i])
            except np.linalg.LinAlgError:
                fallbacks += 1
                adjusted = resid[i]
            scores[i] = (weights[i] * adjusted) @ d_beta[i]
    else:
        scores = np.einsum("it,itr->ir", weights * resid, d_beta)

    sigma_sum = scores.T @ scores
    # cov = M^{-1} Sigma M^{-1}; the 1/n factors of the per-subject
    # averages cancel when raw sums are used throughout.
    left = solve_spd(m_sum, sigma_sum).solution
    cov = solve_spd(m_sum, left.T).solution.T
    cov = 0.5 * (cov + cov.T)
    return SandwichResult(cov_beta=cov, md_fallbacks=fallbacks)


def sandwich_variance(
    rows: list[DesignRow], residuals: np.ndarray, correction: str = "none"
) -> SandwichResult:
    """Sandwich covariance of beta_hat from explicit design rows.

    residuals must align with rows.  Rows are grouped by subject in
    first-appearance order; every subject must contribute the same
    number of rows (rectangular panels).
    """
    if correction not in CORRECTIONS:
        raise DataValidationError(f"unknown correction {correction!r}")
    residuals = np.asarray(residuals, dtype=float)
    if residuals.shape != (len(rows),):
        raise DataValidationError("residuals must align one-to-one with rows")
    order: list[str] = []
    grouped: dict[str, list[int]] = {}
    for idx, row in enumerate(rows):
        if row.subject not in grouped:
            grouped[row.subject] = []
            order.append(row.subject)
        grouped[row.subject].append(idx)
    counts = {len(v) for v in grouped.values()}
    if len(counts) != 1:
        raise DataValidationError("subjects contribute unequal row counts")
    rows_per = counts.pop()
    n = len(order)
    dim = rows[0].d_full.shape[0]
    q = dim - rows[0].d_beta.shape[0]
    d_full = np.empty((n, rows_per, dim))
    weights = np.empty((n, rows_per))
    resid = np.empty((n, rows_per))
    for i, sid in enumerate(order):
        for j, idx in enumerate(grouped[sid]):
            d_full[i, j] = rows[idx].d_full
            weights[i, j] = rows[idx].weight
            resid[i, j] = residuals[idx]
    return _sandwich_core(d_full, weights, resid, q, correction)


def fit_wcls(data: MrtDataset, spec: ModelSpec) -> FitResult:
    """Solve the weighted-centered least-squares estimating equation.

    The root is exact (one linear solve).  cov_beta is the sandwich
    covariance of beta_hat with the configured small-sample correction.
    Raises DegenerateArmError when a declared arm is never observed,
    SingularSystemError when the normal matrix is singular anyway, and
    DataValidationError when there are too few subjects for the
    covariance to make sense.
    """
    report = validate(data)
    if not report.ok:
        raise DataValidationError("; ".join(report.violations))

    weights, d_full, outcome, t_used, ptilde = _build_arrays(data, spec)
    _check_arms_observed(data, t_used)

    dim = spec.q + data.k_arms * spec.p
    if data.n <= dim:
        raise DataValidationError(
            f"n={data.n} subjects cannot support a sandwich covariance for "
            f"q + K*p = {dim} coefficients; need n > {dim}"
        )

    normal = np.einsum("itr,it,its->rs", d_full, weights, d_full)
    rhs = np.einsum("itr,it->r", d_full, weights * outcome)
    try:
        theta = solve_spd(normal, rhs).solution
    except SingularSystemError as exc:
        raise SingularSystemError(f"normal matrix is singular: {exc}") from exc

    resid = outcome - d_full @ theta
    sandwich = _sandwich_core(d_full, weights, resid, spec.q, spec.correction)

    return FitResult(
        alpha_hat=theta[: spec.q].copy(),
        beta_hat=theta[spec.q :].copy(),
        cov_beta=sandwich.cov_beta,
        n=data.n,
        t_points=data.t_points,
        k_arms=data.k_arms,
        p=spec.p,
        q=spec.q,
        residuals=resid,
        delta=spec.delta,
        correction=spec.correction,
        md_fallbacks=sandwich.md_fallbacks,
        numerator_table=ptilde,
        f_names=spec.f_names,
        g_names=spec.g_names,
    )
