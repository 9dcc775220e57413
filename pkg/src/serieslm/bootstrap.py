"""Wild bootstrap critical values for the standardized LM statistic.

Each draw multiplies the restricted residuals by an i.i.d. mean-zero,
unit-variance two-point variable (Rademacher or Mammen), re-applies the
annihilator of the null design to the synthetic errors (no refitting is
needed: the bootstrap residuals equal M_W eps* exactly), and recomputes the
statistic with the draw's own squared residuals as weights.  Draw b uses the
substream ``SeedSequence(seed, spawn_key=(b,))`` of a Philox counter-based
generator, so results are reproducible independently of how draws are
partitioned across workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import SingularMomentMatrixError
from .regress import FitResult, annihilate

__all__ = ["MULTIPLIERS", "draw_multipliers", "wild_bootstrap", "BootstrapResult"]

_SQRT5 = math.sqrt(5.0)
MAMMEN_LOW = (1.0 - _SQRT5) / 2.0
MAMMEN_HIGH = (1.0 + _SQRT5) / 2.0
MAMMEN_P_HIGH = (_SQRT5 - 1.0) / (2.0 * _SQRT5)

MULTIPLIERS = ("rademacher", "mammen")


def draw_multipliers(dist: str, n: int, rng: np.random.Generator) -> np.ndarray:
    """n i.i.d. draws from the named two-point multiplier distribution."""
    if dist == "rademacher":
        return rng.integers(0, 2, size=n).astype(float) * 2.0 - 1.0
    if dist == "mammen":
        u = rng.random(n)
        return np.where(u < MAMMEN_P_HIGH, MAMMEN_HIGH, MAMMEN_LOW)
    raise ValueError(f"unknown multiplier distribution {dist!r}")


@dataclass(frozen=True)
class BootstrapResult:
    """Bootstrap distribution of the standardized statistic.

    ``p_value`` uses the add-one convention (#{t* >= t} + 1) / (B + 1) over
    the valid draws; ``critical_values`` are empirical upper quantiles.
    """

    t_star: np.ndarray
    p_value: float
    critical_values: dict
    n_draws: int
    n_failed: int
    seed: int

    def reject(self, level: float) -> bool:
        return self.p_value <= level


def _draw_statistic(fit: FitResult, z_resid, dist, seed, b, r_n):
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(
        seed, spawn_key=(b,))))
    v = draw_multipliers(dist, fit.n_obs, rng)
    eps_star = v * fit.residuals
    resid_star = annihilate(fit, eps_star)
    weights = resid_star ** 2
    inner = (z_resid * weights[:, None]).T @ z_resid
    u = z_resid.T @ resid_star
    try:
        low = np.linalg.cholesky(inner)
    except np.linalg.LinAlgError:
        return math.nan
    y = scipy.linalg.solve_triangular(low, u, lower=True)
    stat = float(y @ y)
    return (stat - r_n) / math.sqrt(2.0 * r_n)


def wild_bootstrap(fit: FitResult, z_resid, t_observed: float, n_draws: int = 399,
                   dist: str = "rademacher", seed: int = 0, levels=(0.05,),
                   max_failure_frac: float = 0.01, threads: int = 1) -> BootstrapResult:
    """Bootstrap p-value and critical values for an observed t statistic.

    Parameters
    ----------
    fit : FitResult
        Restricted fit; its residuals and projection context are reused
        across all draws.
    z_resid : array, shape (n, r)
        The annihilated alternative block (fixed across draws).
    t_observed : float
        The standardized statistic computed on the data.
    n_draws : int
        Number of bootstrap draws B.
    dist : str
        "rademacher" or "mammen".
    seed : int
        Base seed; draw b derives its own substream, so the result does not
        depend on ``threads``.
    max_failure_frac : float
        Draws with a singular inner matrix are skipped; more than this
        fraction aborts the run.
    """
    if n_draws < 1:
        raise ValueError("need at least one bootstrap draw")
    if dist not in MULTIPLIERS:
        raise ValueError(f"unknown multiplier distribution {dist!r}")
    z_resid = np.asarray(z_resid, dtype=float)
    r_n = z_resid.shape[1]
    if r_n < 1 or z_resid.shape[0] != fit.n_obs:
        raise ValueError("z_resid must be n x r with r >= 1")

    def run(b):
        return _draw_statistic(fit, z_resid, dist, seed, b, r_n)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            t_star = np.fromiter(pool.map(run, range(n_draws)), dtype=float,
                                 count=n_draws)
    else:
        t_star = np.fromiter((run(b) for b in range(n_draws)), dtype=float,
                             count=n_draws)

    valid = t_star[np.isfinite(t_star)]
    n_failed = n_draws - valid.size
    if valid.size == 0 or n_failed > max_failure_frac * n_draws:
        raise SingularMomentMatrixError(
            f"{n_failed} of {n_draws} bootstrap draws had singular moment "
            "matrices; the design is too rich for this sample"
        )
    p_value = (float(np.sum(valid >= t_observed)) + 1.0) / (valid.size + 1.0)
    critical_values = {
        float(a): float(np.quantile(valid, 1.0 - a)) for a in levels
    }
    return BootstrapResult(
        t_star=t_star,
        p_value=p_value,
        critical_values=critical_values,
        n_draws=n_draws,
        n_failed=n_failed,
        seed=int(seed),
    )
