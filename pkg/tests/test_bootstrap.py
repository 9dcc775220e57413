"""Wild bootstrap: multiplier laws, the no-refit shortcut, determinism."""

import math

import numpy as np
import pytest

import serieslm.bootstrap as bt
from serieslm.errors import SingularMomentMatrixError
from serieslm.lmtest import VarianceWeights, lm_statistic, standardize
from serieslm.regress import ols_fit, residualize_block


def make_fit(seed=0, n=60, m=3, r=4):
    rng = np.random.default_rng(seed)
    w = np.column_stack([np.ones(n), rng.normal(size=(n, m - 1))])
    z = rng.normal(size=(n, r))
    y = w @ rng.normal(size=m) + rng.normal(size=n) * (1 + rng.random(n))
    fit = ols_fit(w, y)
    return fit, residualize_block(fit, z), w, z, y


class TestMultipliers:
    def test_mammen_support(self):
        rng = np.random.default_rng(1)
        draws = bt.draw_multipliers("mammen", 10000, rng)
        lo, hi = (1 - math.sqrt(5)) / 2, (1 + math.sqrt(5)) / 2
        assert set(np.unique(draws)) == {lo, hi}
        assert lo == pytest.approx(-0.618, abs=5e-4)
        assert hi == pytest.approx(1.618, abs=5e-4)

    def test_rademacher_moments(self):
        rng = np.random.default_rng(2)
        draws = bt.draw_multipliers("rademacher", 10 ** 6, rng)
        assert set(np.unique(draws)) == {-1.0, 1.0}
        assert abs(draws.mean()) <= 4.0 / 1000.0
        assert draws.var() == pytest.approx(1.0, abs=1e-2)

    def test_mammen_moments_and_branch_probability(self):
        rng = np.random.default_rng(3)
        draws = bt.draw_multipliers("mammen", 10 ** 6, rng)
        p_high = (math.sqrt(5) - 1) / (2 * math.sqrt(5))
        assert p_high == pytest.approx(0.2764, abs=1e-4)
        assert abs(np.mean(draws > 0) - p_high) <= 0.002
        assert abs(draws.mean()) <= 4.0 / 1000.0
        assert draws.var() == pytest.approx(1.0, abs=5e-3)
        # third moment of the two-point law is exactly 1
        assert np.mean(draws ** 3) == pytest.approx(1.0, abs=2e-2)

    def test_unknown_distribution(self):
        with pytest.raises(ValueError):
            bt.draw_multipliers("webb", 5, np.random.default_rng(0))


class TestWildBootstrap:
    def test_degenerate_multiplier_reproduces_observed(self, monkeypatch):
        fit, zt, _, _, _ = make_fit()
        t_obs = standardize(
            lm_statistic(fit.residuals, zt,
                         VarianceWeights.from_residuals(fit.residuals)),
            zt.shape[1])
        monkeypatch.setattr(bt, "draw_multipliers",
                            lambda dist, n, rng: np.ones(n))
        res = bt.wild_bootstrap(fit, zt, t_obs, n_draws=25, seed=5)
        np.testing.assert_allclose(res.t_star, t_obs, rtol=1e-10)
        assert res.p_value == 1.0

    def test_tiny_instance_matches_scripted_oracle(self):
        fit, zt, w, _, _ = make_fit(seed=9, n=12, m=2, r=2)
        res = bt.wild_bootstrap(fit, zt, 0.3, n_draws=3, dist="mammen", seed=77)
        m_w = np.eye(12) - w @ np.linalg.inv(w.T @ w) @ w.T
        expected = []
        for b in range(3):
            rng = np.random.Generator(np.random.Philox(
                np.random.SeedSequence(77, spawn_key=(b,))))
            v = bt.draw_multipliers("mammen", 12, rng)
            resid_star = m_w @ (v * fit.residuals)
            inner = (zt * (resid_star ** 2)[:, None]).T @ zt
            u = zt.T @ resid_star
            stat = float(u @ np.linalg.inv(inner) @ u)
            expected.append((stat - 2) / math.sqrt(4.0))
        np.testing.assert_allclose(res.t_star, expected, rtol=1e-9)

    def test_conditional_moments(self):
        fit, _, _, _, _ = make_fit(seed=10, n=50)
        b_draws = 4000
        eps_star = np.empty((b_draws, 50))
        for b in range(b_draws):
            rng = np.random.Generator(np.random.Philox(
                np.random.SeedSequence(123, spawn_key=(b,))))
            eps_star[b] = bt.draw_multipliers("mammen", 50, rng) * fit.residuals
        scale = np.abs(fit.residuals) / math.sqrt(b_draws)
        assert np.all(np.abs(eps_star.mean(axis=0)) <= 4.0 * scale + 1e-12)
        second = (eps_star ** 2).mean(axis=0)
        se2 = (eps_star ** 2).std(axis=0, ddof=1) / math.sqrt(b_draws)
        assert np.all(np.abs(second - fit.residuals ** 2) <= 4.0 * se2 + 1e-12)

    def test_shortcut_equals_refit(self):
        fit, _, w, _, _ = make_fit(seed=11)
        rng = np.random.default_rng(111)
        v = bt.draw_multipliers("rademacher", len(fit.residuals), rng)
        eps_star = v * fit.residuals
        shortcut = eps_star - fit.ortho @ (fit.ortho.T @ eps_star)
        y_star = w @ fit.beta + eps_star
        refit = ols_fit(w, y_star)
        np.testing.assert_allclose(shortcut, refit.residuals,
                                   rtol=1e-10, atol=1e-12)

    def test_deterministic_and_thread_invariant(self):
        fit, zt, _, _, _ = make_fit(seed=12)
        kwargs = dict(t_observed=0.5, n_draws=37, dist="rademacher", seed=99,
                      levels=(0.05, 0.1))
        a = bt.wild_bootstrap(fit, zt, **kwargs)
        b = bt.wild_bootstrap(fit, zt, **kwargs)
        c = bt.wild_bootstrap(fit, zt, threads=4, **kwargs)
        np.testing.assert_array_equal(a.t_star, b.t_star)
        np.testing.assert_array_equal(a.t_star, c.t_star)
        assert a.p_value == b.p_value == c.p_value
        assert a.critical_values == c.critical_values

    def test_p_value_convention(self):
        fit, zt, _, _, _ = make_fit(seed=13)
        res = bt.wild_bootstrap(fit, zt, t_observed=-math.inf, n_draws=19, seed=3)
        assert res.p_value == 1.0  # every draw is at least the observed value
        res = bt.wild_bootstrap(fit, zt, t_observed=math.inf, n_draws=19, seed=3)
        assert res.p_value == pytest.approx(1.0 / 20.0)
        # recompute from the draws themselves
        res = bt.wild_bootstrap(fit, zt, t_observed=0.21, n_draws=19, seed=3)
        manual = (np.sum(np.sort(res.t_star) >= 0.21) + 1) / 20.0
        assert res.p_value == pytest.approx(manual)

    def test_systematic_singularity_aborts(self):
        fit, zt, _, _, _ = make_fit(seed=14)
        bad = np.column_stack([zt, zt[:, 0]])
        with pytest.raises(SingularMomentMatrixError):
            bt.wild_bootstrap(fit, bad, 0.0, n_draws=20, seed=1)

    def test_validation(self):
        fit, zt, _, _, _ = make_fit(seed=15)
        with pytest.raises(ValueError):
            bt.wild_bootstrap(fit, zt, 0.0, n_draws=0)
        with pytest.raises(ValueError):
            bt.wild_bootstrap(fit, zt, 0.0, dist="theta")
