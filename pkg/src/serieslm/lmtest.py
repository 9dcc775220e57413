"""LM-type quadratic-form statistics and their reference distributions.

The headline statistic regresses Y on the null design W, residualizes the
alternative block Z on W, and forms

    stat = r' Zt (Zt' S Zt)^{-1} Zt' r,      S = diag(weights),

with weights equal to the squared restricted residuals (or the true error
variances, for oracle diagnostics).  Centering by the number of restrictions
r_n and scaling by sqrt(2 r_n) gives an asymptotically standard normal test
statistic; the chi-square(r_n) rule is reported alongside.  The comparator
statistics differ in the residuals used (OLS vs FGLS-weighted) and in whether
the variance estimate is the restriction block alone ("short") or the Schur
complement of the full moment set ("long").
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .distributions import chisq_cdf, chisq_quantile, normal_cdf, normal_quantile
from .errors import SingularMomentMatrixError
from .regress import FitResult, ols_fit, residualize_block

__all__ = [
    "VarianceWeights",
    "TestResult",
    "VARIANTS",
    "lm_statistic",
    "lm_statistic_nr2",
    "variant_statistic",
    "standardize",
    "run_test",
]

# residual type (OLS or FGLS-weighted) x variance block (short or long)
VARIANTS = ("ols_short", "ols_long", "fgls_long", "fgls_short")

RESIDUAL_FLOOR_REL = 1e-12


@dataclass(frozen=True)
class VarianceWeights:
    """Per-observation variance weights with a small-value floor.

    FGLS-style statistics divide by these, so exact zeros (possible when the
    null fit interpolates some points) are floored at
    ``RESIDUAL_FLOOR_REL * mean`` and the flooring is recorded.
    """

    values: np.ndarray
    floor_applied: bool
    kind: str  # "residual" or "true"

    @classmethod
    def from_residuals(cls, residuals) -> "VarianceWeights":
        r2 = np.asarray(residuals, dtype=float).ravel() ** 2
        floor = RESIDUAL_FLOOR_REL * float(r2.mean())
        needs = r2 < floor
        return cls(np.where(needs, floor, r2), bool(needs.any()), "residual")

    @classmethod
    def from_true(cls, sigma2) -> "VarianceWeights":
        s = np.asarray(sigma2, dtype=float).ravel()
        if np.any(s <= 0.0) or not np.all(np.isfinite(s)):
            raise ValueError("true variances must be positive and finite")
        return cls(s.copy(), False, "true")


def _weighted_gram(a: np.ndarray, s: np.ndarray, b: np.ndarray) -> np.ndarray:
    return (a * s[:, None]).T @ b


def _chol(mat: np.ndarray, what: str) -> np.ndarray:
    try:
        return scipy.linalg.cholesky(mat, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise SingularMomentMatrixError(
            f"{what} is singular or indefinite; the alternative block is "
            "collinear or carries too many terms for this sample"
        ) from exc


def _quadform(inner: np.ndarray, u: np.ndarray, what: str) -> float:
    v = scipy.linalg.solve_triangular(_chol(inner, what), u, lower=True)
    return float(v @ v)


def lm_statistic(residuals, z_resid, weights: VarianceWeights) -> float:
    """Quadratic form r' Zt (Zt' S Zt)^{-1} Zt' r; always nonnegative."""
    r = np.asarray(residuals, dtype=float).ravel()
    zt = np.asarray(z_resid, dtype=float)
    if zt.ndim != 2 or zt.shape[0] != r.shape[0]:
        raise ValueError("z_resid must be n x r with n matching the residuals")
    if zt.shape[1] < 1:
        raise ValueError("need at least one restriction column")
    if zt.shape[0] <= zt.shape[1]:
        raise ValueError("need n > r")
    inner = _weighted_gram(zt, weights.values, zt)
    return _quadform(inner, zt.T @ r, "restriction moment matrix")


def lm_statistic_nr2(residuals, z_resid) -> float:
    """Same statistic computed as n R^2 of 1 on the score columns Zt_i * r_i.

    Independent computational route (least squares instead of an explicit
    quadratic form); agrees with ``lm_statistic`` under residual weights.
    """
    r = np.asarray(residuals, dtype=float).ravel()
    zt = np.asarray(z_resid, dtype=float)
    scores = zt * r[:, None]
    ones = np.ones(r.shape[0])
    coef, *_ = np.linalg.lstsq(scores, ones, rcond=None)
    fitted = scores @ coef
    return float(ones @ fitted)


def _fgls_residuals(residuals, w, v):
    """Residuals of the variance-weighted refit, from the plain OLS residuals.

    With weights V the weighted fit of Y on W leaves residuals
    [I - W (W'VW)^{-1} W'V] applied to the OLS residuals (the fitted part of
    Y drops out), which satisfy W'V r = 0 exactly.
    """
    c = _weighted_gram(w, v, w)
    lc = _chol(c, "weighted null moment matrix")
    coef = scipy.linalg.cho_solve((lc, True), w.T @ (v * residuals))
    return residuals - w @ coef, lc


def variant_statistic(variant: str, residuals, w, z,
                      weights: VarianceWeights, fit: FitResult = None) -> float:
    """Evaluate one of the statistic variants on raw designs.

    With S = diag(weights), V = S^{-1}, r the OLS residuals of Y on W, and
    rv the residuals of the V-weighted refit (so W'V rv = 0):

    ols_short   r' Zt (Zt' S Zt)^{-1} Zt' r                       (the default)
    ols_long    r' Z  (Z'SZ - Z'SW (W'SW)^{-1} W'SZ)^{-1} Z' r
    fgls_long   rv' V Z (Z'VZ - Z'VW (W'VW)^{-1} W'VZ)^{-1} Z' V rv
    fgls_short  rv' V Zt (Zt' V Zt)^{-1} Zt' V rv

    The short variants need the annihilated block Zt = M_W Z; pass ``fit``
    to reuse an existing factorization of W.
    """
    r = np.asarray(residuals, dtype=float).ravel()
    w = np.asarray(w, dtype=float)
    z = np.asarray(z, dtype=float)
    s = weights.values

    if variant == "ols_short":
        if fit is None:
            # only the projection context of the fit is used
            fit = ols_fit(w, np.zeros(r.shape[0]))
        zt = residualize_block(fit, z)
        return lm_statistic(r, zt, weights)

    if variant == "ols_long":
        a = _weighted_gram(z, s, z)
        b = _weighted_gram(w, s, z)
        c = _weighted_gram(w, s, w)
        lc = _chol(c, "null-block moment matrix")
        x = scipy.linalg.cho_solve((lc, True), b)
        inner = a - b.T @ x
        inner = 0.5 * (inner + inner.T)
        return _quadform(inner, z.T @ r, "long variance matrix")

    if variant not in ("fgls_long", "fgls_short"):
        raise ValueError(f"unknown variant {variant!r}")

    v = 1.0 / s
    rv, lc_w = _fgls_residuals(r, w, v)
    if variant == "fgls_short":
        if fit is None:
            fit = ols_fit(w, np.zeros(r.shape[0]))
        zt = residualize_block(fit, z)
        inner = _weighted_gram(zt, v, zt)
        return _quadform(inner, zt.T @ (v * rv),
                         "weighted restriction moment matrix")

    b = _weighted_gram(w, v, z)
    x = scipy.linalg.cho_solve((lc_w, True), b)
    inner = _weighted_gram(z, v, z) - b.T @ x
    inner = 0.5 * (inner + inner.T)
    return _quadform(inner, z.T @ (v * rv), "long variance matrix")


def standardize(stat: float, df: int) -> float:
    """Center a quadratic form at df and scale by sqrt(2 df).

    df is the number of restrictions for the degrees-of-freedom-corrected
    test, or the total term count for the uncorrected comparator.
    """
    if df < 1:
        raise ValueError("df must be >= 1")
    return (stat - df) / math.sqrt(2.0 * df)


@dataclass(frozen=True)
class TestResult:
    """Outcome of one specification test."""

    variant: str
    statistic: float
    r_n: int
    t: float
    p_normal: float
    p_chisq: float
    reject_normal: dict
    reject_chisq: dict
    m_n: int = 0
    k_n: int = 0
    weights_floored: bool = False
    extras: dict = field(default_factory=dict)


def run_test(y, w, z, variant: str = "ols_short", levels=(0.05,),
             true_variances=None) -> TestResult:
    """Fit the null model, evaluate a statistic variant, and decide.

    The headline decision rule is one-sided normal: reject at level a when
    t > z_{1-a}.  The chi-square(r_n) rule (reject when the quadratic form
    reaches its upper quantile) is always computed alongside.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    y = np.asarray(y, dtype=float).ravel()
    w = np.asarray(w, dtype=float)
    z = np.asarray(z, dtype=float)
    if z.ndim != 2 or z.shape[1] < 1:
        raise ValueError("alternative design Z must have at least one column")

    fit = ols_fit(w, y)
    zt = residualize_block(fit, z)
    weights = (
        VarianceWeights.from_true(true_variances)
        if true_variances is not None
        else VarianceWeights.from_residuals(fit.residuals)
    )
    if variant == "ols_short":
        stat = lm_statistic(fit.residuals, zt, weights)
    else:
        stat = variant_statistic(variant, fit.residuals, w, z, weights, fit=fit)

    r_n = z.shape[1]
    t = standardize(stat, r_n)
    p_normal = 1.0 - normal_cdf(t)
    p_chisq = 1.0 - chisq_cdf(stat, r_n)
    reject_normal = {
        float(a): bool(t > normal_quantile(1.0 - a)) for a in levels
    }
    reject_chisq = {
        float(a): bool(stat >= chisq_quantile(1.0 - a, r_n)) for a in levels
    }
    return TestResult(
        variant=variant,
        statistic=stat,
        r_n=r_n,
        t=t,
        p_normal=float(p_normal),
        p_chisq=float(p_chisq),
        reject_normal=reject_normal,
        reject_chisq=reject_chisq,
        m_n=w.shape[1],
        k_n=w.shape[1] + r_n,
        weights_floored=weights.floor_applied,
        extras={"fit": fit, "z_resid": zt},
    )
