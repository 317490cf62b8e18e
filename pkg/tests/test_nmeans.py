import math

import numpy as np
import pytest

from bridgetune.errors import ValidationError
from bridgetune.nmeans import (
    ScalarModelConfig,
    ep_log_density,
    scalar_diagnostics,
    scalar_fit,
)
from bridgetune.tilted_stable import StableIndex, draw_latent, sample_tilted_stable

from _oracles import FROZEN_IG_CASES, ep_normalizer, ig_quadrature_moments

HALF = StableIndex(0.5, 0.5)


def cfg(nu=1.0, sigma2=1.0, J=1000, alpha=1.0):
    return ScalarModelConfig(alpha=alpha, nu=nu, sigma2=sigma2, n_draws=J)


@pytest.fixture(scope="module")
def big_draws():
    return sample_tilted_stable(HALF, 100_000, seed=314)


class TestEpLogDensity:
    def test_origin_alpha1_nu1(self):
        assert ep_log_density(0.0, 1.0, 1.0) == pytest.approx(0.0, abs=1e-15)

    @pytest.mark.parametrize("beta", [0.3, 1.7, 5.0])
    @pytest.mark.parametrize("alpha,nu", [(0.5, 0.5), (1.0, 1.0), (1.5, 2.0)])
    def test_symmetry(self, beta, alpha, nu):
        assert ep_log_density(beta, alpha, nu) == ep_log_density(-beta, alpha, nu)

    @pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
    @pytest.mark.parametrize("nu", [0.5, 2.0])
    def test_normalization(self, alpha, nu):
        # density constant times the independent quadrature of the kernel
        log_const = math.log(alpha * nu) - math.lgamma(1.0 / alpha)
        total = math.exp(log_const) * ep_normalizer(alpha, nu)
        assert total == pytest.approx(1.0, abs=1e-6)

    def test_domain(self):
        with pytest.raises(ValidationError):
            ep_log_density(1.0, 2.5, 1.0)


class TestScalarFit:
    def test_zero_observation_gives_zero_mean(self, big_draws):
        sp = scalar_fit(0.0, cfg(J=100_000), big_draws[:100_000])
        assert sp.mean_hat == 0.0

    def test_quadrature_match_at_y2(self, big_draws):
        sp = scalar_fit(2.0, cfg(J=100_000), big_draws)
        m, mean, second = ig_quadrature_moments(2.0, 1.0, 1.0)
        assert abs(sp.mean_hat - mean) < 3.0 * sp.mc_se[1]
        assert abs(sp.second_moment_hat - second) < 3.0 * sp.mc_se[2]
        assert abs(sp.marginal_hat - m) < 3.0 * sp.mc_se[0]

    def test_frozen_oracle_cases_still_valid(self):
        for (y, s2, nu), expected in FROZEN_IG_CASES.items():
            got = ig_quadrature_moments(y, s2, nu)
            assert got == pytest.approx(expected, rel=1e-9)

    def test_weak_shrinkage_limit(self, big_draws):
        sp = scalar_fit(2.0, cfg(nu=1e6, J=100_000), big_draws)
        assert abs(sp.mean_hat - 2.0) < 0.05

    def test_total_shrinkage_limit(self, big_draws):
        sp = scalar_fit(2.0, cfg(nu=1e-6, J=100_000), big_draws)
        assert abs(sp.mean_hat) < 0.05

    @pytest.mark.parametrize("y", [-3.0, -0.5, 0.0, 1.2, 3.0])
    @pytest.mark.parametrize("nu", [0.25, 1.0, 4.0])
    def test_jensen_gap_nonnegative(self, y, nu, big_draws):
        sp = scalar_fit(y, cfg(nu=nu, J=5000), big_draws[:5000])
        assert sp.second_moment_hat - sp.mean_hat**2 >= 0.0

    def test_rejects_nonfinite_y(self, big_draws):
        with pytest.raises(ValidationError):
            scalar_fit(float("inf"), cfg(), big_draws[:1000])

    def test_rejects_mismatched_draws(self):
        draws = draw_latent(StableIndex(0.25, 0.5), 100, 1, seed=0)
        with pytest.raises(ValidationError):
            scalar_fit(1.0, cfg(alpha=1.0, J=100), draws)


class TestMarginalSandwich:
    """Lower and upper envelopes of the marginal hold draw-by-draw, so the
    Monte Carlo estimate satisfies them surely on shared draws."""

    @pytest.mark.parametrize("y", [-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0])
    def test_sandwich(self, y, big_draws):
        col = big_draws[:2000]
        c = cfg(nu=0.7, sigma2=1.3, J=2000)
        sp = scalar_fit(y, c, col)
        diag = scalar_diagnostics(y, c, col)
        lower = math.exp(-y * y / (2.0 * c.sigma2)) * diag.c_sigma_nu
        upper = 1.0 / math.sqrt(2.0 * math.pi * c.sigma2)
        if y == 0.0:
            # the lower envelope is an equality at the origin
            assert sp.marginal_hat == pytest.approx(lower, rel=1e-12)
        else:
            assert lower < sp.marginal_hat
        assert sp.marginal_hat < upper

    def test_c_below_gaussian_height(self, big_draws):
        c = cfg(nu=2.0, sigma2=0.8, J=4000)
        diag = scalar_diagnostics(0.5, c, big_draws[:4000])
        assert diag.c_sigma_nu < 1.0 / math.sqrt(2.0 * math.pi * c.sigma2)


class TestVarianceBounds:
    def test_empirical_variances_below_bounds(self):
        # 100 independent draw sets; empirical estimator variances must sit
        # under the stated bounds for every y on the grid
        J = 500
        ys = [-3.0, -1.0, 0.0, 2.0]
        c = cfg(J=J)
        fits = np.empty((100, len(ys), 3))
        for r in range(100):
            col = sample_tilted_stable(HALF, J, seed=9_000 + r)
            for k, y in enumerate(ys):
                sp = scalar_fit(y, c, col)
                fits[r, k] = (sp.marginal_hat, sp.mean_hat, sp.second_moment_hat)
        col = sample_tilted_stable(HALF, J, seed=8_999)
        for k, y in enumerate(ys):
            bounds = scalar_diagnostics(y, c, col).var_bounds
            emp = fits[:, k, :].var(axis=0, ddof=1)
            for e, b in zip(emp, bounds):
                # at y = 0 the mean estimator is identically zero and its
                # bound degenerates to zero as well
                assert e < b or (e == 0.0 and b == 0.0)

    def test_variance_ratio_tenfold_draws(self):
        # tenfold draw budget should cut estimator variance roughly tenfold
        J = 100
        means = {J: [], 10 * J: []}
        c_small, c_big = cfg(J=J), cfg(J=10 * J)
        for r in range(100):
            col = sample_tilted_stable(HALF, 10 * J, seed=20_000 + r)
            means[J].append(scalar_fit(1.5, c_small, col[:J]).mean_hat)
            means[10 * J].append(scalar_fit(1.5, c_big, col).mean_hat)
        ratio = np.var(means[10 * J], ddof=1) / np.var(means[J], ddof=1)
        assert 0.03 <= ratio <= 0.3

    def test_mc_se_scale_sanity(self, big_draws):
        # reported standard errors should predict spread across replicates
        J = 2000
        vals = [
            scalar_fit(1.0, cfg(J=J), sample_tilted_stable(HALF, J, seed=500 + r)).mean_hat
            for r in range(60)
        ]
        se_reported = scalar_fit(1.0, cfg(J=J), big_draws[:J]).mc_se[1]
        observed = np.std(vals, ddof=1)
        assert 0.5 * observed < se_reported < 2.0 * observed
