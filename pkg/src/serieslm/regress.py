"""Restricted least squares and the annihilator of the null design.

The restricted model is fit once by column-pivoted QR; the stored orthonormal
factor is then reused to apply the annihilator M = I - W(W'W)^{-1}W' to
arbitrary vectors or matrices without ever forming the n-by-n projector.
Power-series designs are ill conditioned, so everything goes through the
orthogonal factorization rather than the normal equations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import RankDeficiencyError

__all__ = ["FitResult", "ols_fit", "annihilate", "residualize_block"]

# Relative pivot threshold below which a design counts as rank deficient.
RANK_RTOL = 1e-12


@dataclass(frozen=True)
class FitResult:
    """Least-squares fit of Y on W plus the reusable projection context.

    Attributes
    ----------
    beta : ndarray, shape (m,)
        Coefficients in the original column order of W.
    residuals : ndarray, shape (n,)
        Y minus its orthogonal projection onto the column span of W.
    ortho : ndarray, shape (n, m)
        Orthonormal columns spanning col(W); applying the annihilator is
        ``u - ortho @ (ortho.T @ u)``.
    rss : float
        Residual sum of squares.
    """

    beta: np.ndarray
    residuals: np.ndarray
    ortho: np.ndarray

    @property
    def n_obs(self) -> int:
        return self.ortho.shape[0]

    @property
    def n_params(self) -> int:
        return self.ortho.shape[1]

    @property
    def rss(self) -> float:
        return float(self.residuals @ self.residuals)


def ols_fit(w, y, column_labels=None) -> FitResult:
    """Fit Y on W by pivoted QR; error out on rank deficiency.

    Parameters
    ----------
    w : array, shape (n, m)
    y : array, shape (n,)
    column_labels : sequence of str, optional
        Used to name offending columns when W is rank deficient.
    """
    w = np.asarray(w, dtype=float)
    if w.ndim == 1:
        w = w[:, None]
    y = np.asarray(y, dtype=float).ravel()
    n, m = w.shape
    if y.shape[0] != n:
        raise ValueError(f"length of y ({y.shape[0]}) != rows of W ({n})")
    if n <= m:
        raise ValueError(f"need n > m (got n={n}, m={m})")
    if not (np.all(np.isfinite(w)) and np.all(np.isfinite(y))):
        raise ValueError("non-finite values in regression inputs")

    q, r, piv = scipy.linalg.qr(w, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    if diag[0] == 0.0 or np.any(diag < RANK_RTOL * diag[0]):
        bad = np.where(diag < RANK_RTOL * max(diag[0], np.finfo(float).tiny))[0]
        cols = piv[bad] if bad.size else piv
        names = (
            [column_labels[j] for j in cols]
            if column_labels is not None
            else [f"column {j}" for j in cols]
        )
        raise RankDeficiencyError(
            f"design is rank deficient; offending columns: {', '.join(map(str, names))}",
            columns=list(cols),
        )

    qty = q.T @ y
    beta = np.empty(m)
    beta[piv] = scipy.linalg.solve_triangular(r, qty)
    residuals = y - q @ qty
    return FitResult(beta=beta, residuals=residuals, ortho=q)


def annihilate(fit: FitResult, u) -> np.ndarray:
    """Apply M = I - W(W'W)^{-1}W' to a vector using the stored factor."""
    u = np.asarray(u, dtype=float)
    if u.shape[0] != fit.n_obs:
        raise ValueError(f"length {u.shape[0]} does not match n = {fit.n_obs}")
    return u - fit.ortho @ (fit.ortho.T @ u)


def residualize_block(fit: FitResult, z) -> np.ndarray:
    """Columnwise annihilation: residuals of every column of Z on W."""
    z = np.asarray(z, dtype=float)
    if z.ndim == 1:
        z = z[:, None]
    return annihilate(fit, z)
