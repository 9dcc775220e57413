"""Monte Carlo harness: data generating processes, replication driver, reports.

The simulation regressors are correlated affine maps of two independent
uniforms onto [-2, 2]; the errors are independent normals whose variance
1 + 1.75 exp(0.75 (x1 + x2)) moves with both regressors.  Under the null the
mean is 3 + 2 x1 + 2 (exp(x2) - 2 ln(x2 + 3)); the alternative adds
1.21 cos(x1 - 2) sin(0.75 x2).

Randomness: every replication draws from a Philox counter-based generator
seeded with ``SeedSequence(base_seed, spawn_key=(family, n, a_n, hyp, rep))``
(a_n = 0 for the grid-based data-driven variants), and normal variates come
from the inverse-cdf transform of the uniform stream.  Results are therefore
byte-identical across runs and worker counts.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .bootstrap import wild_bootstrap
from .design import simulation_design
from .distributions import normal_quantile
from .errors import SeriesLMError
from .lmtest import VarianceWeights, lm_statistic, standardize, variant_statistic
from .regress import ols_fit, residualize_block
from .tuning import TuningGrid, data_driven_decisions

__all__ = [
    "DgpSpec",
    "McConfig",
    "McRow",
    "McReport",
    "gen_sample",
    "run_mc",
    "emit_report",
    "MC_VARIANTS",
    "CSV_HEADER",
]

FIXED_VARIANTS = (
    "ols_short",
    "ols_short_total",
    "ols_long",
    "fgls_long",
    "fgls_short",
    "ols_short_oracle",
    "ols_long_oracle",
    "fgls_long_oracle",
    "fgls_short_oracle",
    "wild_bootstrap",
)
GRID_VARIANTS = ("data_driven_cp", "data_driven_gcv")
MC_VARIANTS = FIXED_VARIANTS + GRID_VARIANTS

HYPOTHESES = ("null", "alternative")
_FAMILY_CODE = {"power": 1, "spline": 2}
_HYP_CODE = {"null": 1, "alternative": 2}

CSV_HEADER = "variant,family,n,a_n,hypothesis,alpha,reject_rate,mc_se,M,seed"


@dataclass(frozen=True)
class DgpSpec:
    """One simulated sample: size, which hypothesis holds, and a seed."""

    n: int
    hypothesis: str = "null"
    seed: int = 0

    def __post_init__(self):
        if self.n < 50:
            raise ValueError("sample size must be at least 50")
        if self.hypothesis not in HYPOTHESES:
            raise ValueError(f"hypothesis must be one of {HYPOTHESES}")


def _make_rng(base_seed: int, spawn_key) -> np.random.Generator:
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(base_seed, spawn_key=spawn_key))
    )


def gen_sample(spec: DgpSpec, rng: np.random.Generator = None,
               include_variance: bool = False):
    """Draw (y, x1, x2) from the simulation DGP; optionally the true variances.

    The three uniform vectors are drawn in the fixed order (V1, V2, U_err);
    uniforms feeding the normal inverse cdf are clipped away from 0.
    """
    if rng is None:
        rng = _make_rng(spec.seed, ())
    n = spec.n
    v1 = rng.random(n)
    v2 = rng.random(n)
    u = np.maximum(rng.random(n), 2.0 ** -54)

    x1 = -2.0 + 4.0 * (0.8 * v1 + 0.2 * v2)
    x2 = -2.0 + 4.0 * (0.2 * v1 + 0.8 * v2)
    sigma2 = 1.0 + 1.75 * np.exp(0.75 * (x1 + x2))
    eps = np.sqrt(sigma2) * normal_quantile(u)
    mean = 3.0 + 2.0 * x1 + 2.0 * (np.exp(x2) - 2.0 * np.log(x2 + 3.0))
    if spec.hypothesis == "alternative":
        mean = mean + 1.21 * np.cos(x1 - 2.0) * np.sin(0.75 * x2)
    y = mean + eps
    if include_variance:
        return y, x1, x2, sigma2
    return y, x1, x2


@dataclass(frozen=True)
class McConfig:
    """Full description of a Monte Carlo run."""

    replications: int
    n_values: tuple = (250, 1000)
    a_values: tuple = (4, 5, 6, 7, 8, 9)
    families: tuple = ("power",)
    variants: tuple = ("ols_short",)
    hypotheses: tuple = HYPOTHESES
    alphas: tuple = (0.05,)
    seed: int = 0
    bootstrap_draws: int = 399
    bootstrap_dist: str = "rademacher"
    tuning_c: float = 3.0
    max_failure_frac: float = 0.01
    threads: int = 1

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("need at least one replication")
        for v in self.variants:
            if v not in MC_VARIANTS:
                raise ValueError(f"unknown variant {v!r}; known: {MC_VARIANTS}")
        for f in self.families:
            if f not in _FAMILY_CODE:
                raise ValueError(f"unknown family {f!r}")
        for h in self.hypotheses:
            if h not in HYPOTHESES:
                raise ValueError(f"unknown hypothesis {h!r}")
        object.__setattr__(self, "n_values", tuple(int(n) for n in self.n_values))
        object.__setattr__(self, "a_values", tuple(int(a) for a in self.a_values))
        object.__setattr__(self, "families", tuple(self.families))
        object.__setattr__(self, "variants", tuple(self.variants))
        object.__setattr__(self, "hypotheses", tuple(self.hypotheses))
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))


@dataclass(frozen=True)
class McRow:
    """One (variant, cell, alpha) rejection rate."""

    variant: str
    family: str
    n: int
    a_n: int          # 0 marks the grid-based data-driven variants
    hypothesis: str
    alpha: float
    reject_rate: float
    mc_se: float
    m_eff: int        # replications that completed
    seed: int
    mean_statistic: float = math.nan  # in-memory diagnostic, not in the CSV

    def csv_line(self) -> str:
        return ",".join([
            self.variant, self.family, str(self.n), str(self.a_n),
            self.hypothesis, repr(self.alpha), repr(self.reject_rate),
            repr(self.mc_se), str(self.m_eff), str(self.seed),
        ])


@dataclass(frozen=True)
class McReport:
    rows: tuple
    config: McConfig

    def to_csv(self) -> str:
        return "\n".join([CSV_HEADER] + [row.csv_line() for row in self.rows]) + "\n"

    def rate(self, variant: str, family: str, n: int, a_n: int,
             hypothesis: str, alpha: float = 0.05) -> float:
        for row in self.rows:
            if (row.variant, row.family, row.n, row.a_n, row.hypothesis) == \
                    (variant, family, n, a_n, hypothesis) and row.alpha == alpha:
                return row.reject_rate
        raise KeyError((variant, family, n, a_n, hypothesis, alpha))

    def mean_statistic(self, variant: str, family: str, n: int, a_n: int,
                       hypothesis: str) -> float:
        for row in self.rows:
            if (row.variant, row.family, row.n, row.a_n, row.hypothesis) == \
                    (variant, family, n, a_n, hypothesis):
                return row.mean_statistic
        raise KeyError((variant, family, n, a_n, hypothesis))


class _CellFailure(SeriesLMError):
    pass


def _fixed_cell_key(family, n, a_n, hyp):
    return (_FAMILY_CODE[family], n, a_n, _HYP_CODE[hyp])


def _run_fixed_cell(config: McConfig, family: str, n: int, a_n: int, hyp: str,
                    variants: tuple):
    m_reps = config.replications
    alphas = config.alphas
    z_crit = {a: float(normal_quantile(1.0 - a)) for a in alphas}
    counts = {v: {a: 0 for a in alphas} for v in variants}
    stat_sums = {v: 0.0 for v in variants}
    failures = 0
    need_oracle = any(v.endswith("_oracle") for v in variants)
    key = _fixed_cell_key(family, n, a_n, hyp)

    for b in range(m_reps):
        rng = _make_rng(config.seed, key + (b,))
        y, x1, x2, sig2 = gen_sample(DgpSpec(n, hyp), rng, include_variance=True)
        try:
            pair = simulation_design(x1, x2, a_n, family)
            fit = ols_fit(pair.w, y)
            zt = residualize_block(fit, pair.z)
            w_feas = VarianceWeights.from_residuals(fit.residuals)
            w_true = VarianceWeights.from_true(sig2) if need_oracle else None

            stat_short = None
            for variant in variants:
                weights = w_true if variant.endswith("_oracle") else w_feas
                base = variant.replace("_oracle", "")
                if base in ("ols_short", "ols_short_total", "wild_bootstrap"):
                    if variant.endswith("_oracle"):
                        stat = lm_statistic(fit.residuals, zt, weights)
                    else:
                        if stat_short is None:
                            stat_short = lm_statistic(fit.residuals, zt, w_feas)
                        stat = stat_short
                else:
                    stat = variant_statistic(base, fit.residuals, pair.w, pair.z,
                                             weights, fit=fit)
                stat_sums[variant] += stat

                if variant == "ols_short_total":
                    t = standardize(stat, pair.k_n)
                    for a in alphas:
                        counts[variant][a] += t > z_crit[a]
                elif variant == "wild_bootstrap":
                    t = standardize(stat, pair.r_n)
                    boot_seed = int(np.random.SeedSequence(
                        config.seed, spawn_key=key + (b, 1)).generate_state(1)[0])
                    boot = wild_bootstrap(
                        fit, zt, t, n_draws=config.bootstrap_draws,
                        dist=config.bootstrap_dist, seed=boot_seed, levels=alphas)
                    for a in alphas:
                        counts[variant][a] += boot.p_value <= a
                else:
                    t = standardize(stat, pair.r_n)
                    for a in alphas:
                        counts[variant][a] += t > z_crit[a]
        except SeriesLMError:
            failures += 1
            continue

    m_eff = m_reps - failures
    if failures > config.max_failure_frac * m_reps or m_eff == 0:
        raise _CellFailure(
            f"cell (family={family}, n={n}, a_n={a_n}, {hyp}): "
            f"{failures}/{m_reps} replications failed"
        )
    rows = []
    for variant in variants:
        mean_stat = stat_sums[variant] / m_eff
        for a in alphas:
            p_hat = counts[variant][a] / m_eff
            se = math.sqrt(p_hat * (1.0 - p_hat) / m_eff)
            rows.append(McRow(variant, family, n, a_n, hyp, a, p_hat, se,
                              m_eff, config.seed, mean_stat))
    return rows


def _run_grid_cell(config: McConfig, family: str, n: int, hyp: str,
                   variants: tuple):
    m_reps = config.replications
    alphas = config.alphas
    grid = TuningGrid(config.a_values, config.tuning_c)
    counts = {v: {a: 0 for a in alphas} for v in variants}
    stat_sums = {v: 0.0 for v in variants}
    failures = 0
    key = (_FAMILY_CODE[family], n, 0, _HYP_CODE[hyp])

    criteria = tuple(v.rsplit("_", 1)[1] for v in variants)
    for b in range(m_reps):
        rng = _make_rng(config.seed, key + (b,))
        y, x1, x2 = gen_sample(DgpSpec(n, hyp), rng)
        try:
            results = data_driven_decisions(y, x1, x2, grid, family=family,
                                            levels=alphas, criteria=criteria)
            for variant, criterion in zip(variants, criteria):
                result = results[criterion]
                stat_sums[variant] += result.statistic
                for a in alphas:
                    counts[variant][a] += result.reject[a]
        except SeriesLMError:
            failures += 1
            continue

    m_eff = m_reps - failures
    if failures > config.max_failure_frac * m_reps or m_eff == 0:
        raise _CellFailure(
            f"cell (family={family}, n={n}, data-driven, {hyp}): "
            f"{failures}/{m_reps} replications failed"
        )
    rows = []
    for variant in variants:
        mean_stat = stat_sums[variant] / m_eff
        for a in alphas:
            p_hat = counts[variant][a] / m_eff
            se = math.sqrt(p_hat * (1.0 - p_hat) / m_eff)
            rows.append(McRow(variant, family, n, 0, hyp, a, p_hat, se,
                              m_eff, config.seed, mean_stat))
    return rows


def _cell_worker(args):
    config, kind, cell = args
    if kind == "fixed":
        family, n, a_n, hyp, variants = cell
        return _run_fixed_cell(config, family, n, a_n, hyp, variants)
    family, n, hyp, variants = cell
    return _run_grid_cell(config, family, n, hyp, variants)


def run_mc(config: McConfig) -> McReport:
    """Run every requested cell and return the tidy rejection-rate report.

    Cells are independent and may run in separate processes
    (``config.threads``); aggregation order is fixed by the cell enumeration,
    so the report is identical for any thread count.
    """
    fixed = tuple(v for v in config.variants if v in FIXED_VARIANTS)
    grids = tuple(v for v in config.variants if v in GRID_VARIANTS)

    jobs = []
    for family in config.families:
        for n in config.n_values:
            for hyp in config.hypotheses:
                for a_n in config.a_values:
                    if fixed:
                        jobs.append((config, "fixed", (family, n, a_n, hyp, fixed)))
                if grids:
                    jobs.append((config, "grid", (family, n, hyp, grids)))

    if config.threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.threads) as pool:
            chunks = list(pool.map(_cell_worker, jobs))
    else:
        chunks = [_cell_worker(job) for job in jobs]

    rows = tuple(row for chunk in chunks for row in chunk)
    return McReport(rows=rows, config=config)


def emit_report(report: McReport, csv_path, plot_path=None):
    """Write the tidy CSV and, optionally, a gnuplot-style plot-data file.

    The plot file holds one block per (family, n, hypothesis, alpha) with
    a_n in the first column and one rejection-rate column per variant
    (grid-based variants have no a_n axis and are omitted there).
    """
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write(report.to_csv())
    if plot_path is None:
        return

    fixed_rows = [r for r in report.rows if r.a_n != 0]
    blocks = []
    seen = []
    for r in fixed_rows:
        key = (r.family, r.n, r.hypothesis, r.alpha)
        if key not in seen:
            seen.append(key)
    for key in seen:
        family, n, hyp, alpha = key
        sub = [r for r in fixed_rows
               if (r.family, r.n, r.hypothesis, r.alpha) == key]
        variants = sorted({r.variant for r in sub})
        a_values = sorted({r.a_n for r in sub})
        lines = [
            f"# family={family} n={n} hypothesis={hyp} alpha={alpha!r}",
            "# a_n\t" + "\t".join(variants),
        ]
        table = {(r.variant, r.a_n): r.reject_rate for r in sub}
        for a_n in a_values:
            vals = [repr(table[(v, a_n)]) if (v, a_n) in table else "nan"
                    for v in variants]
            lines.append(f"{a_n}\t" + "\t".join(vals))
        blocks.append("\n".join(lines))
    with open(plot_path, "w", encoding="utf-8") as fh:
        fh.write("\n\n\n".join(blocks) + "\n")
