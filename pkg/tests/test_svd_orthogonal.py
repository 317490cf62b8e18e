import numpy as np
import pytest

from bridgetune.errors import ValidationError
from bridgetune.nmeans import ScalarModelConfig, scalar_fit
from bridgetune.regression import ModelConfig
from bridgetune.svd_orthogonal import orthogonal_fit, orthogonal_sure, svd_reduce
from bridgetune.sure import estimate_dof_fd, sure_value
from bridgetune.tilted_stable import StableIndex, draw_latent


class TestSvdReduce:
    def test_identity(self):
        y = np.array([1.0, -2.0, 0.5])
        b = svd_reduce(np.eye(3), y)
        np.testing.assert_allclose(b.d, np.ones(3))
        np.testing.assert_allclose(np.abs(b.u), np.eye(3), atol=1e-14)
        np.testing.assert_allclose(b.gamma_hat, b.u.T @ y, atol=1e-14)
        np.testing.assert_allclose(b.z @ b.gamma_hat, y, atol=1e-12)
        assert b.perp_sq < 1e-24

    def test_scaled_identity(self):
        y = np.array([2.0, 4.0])
        b = svd_reduce(2.0 * np.eye(2), y)
        np.testing.assert_allclose(b.d, [2.0, 2.0])
        np.testing.assert_allclose(np.sort(np.abs(b.gamma_hat)), [1.0, 2.0], atol=1e-14)

    def test_reconstruction_wide_matrix(self):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((10, 25))
        b = svd_reduce(X, rng.standard_normal(10))
        rel = np.linalg.norm(X - b.u @ np.diag(b.d) @ b.v.T) / np.linalg.norm(X)
        assert rel < 1e-10

    def test_orthonormal_columns(self):
        rng = np.random.default_rng(1)
        X = rng.standard_normal((12, 7))
        b = svd_reduce(X, rng.standard_normal(12))
        np.testing.assert_allclose(b.u.T @ b.u, np.eye(b.rank), atol=1e-10)
        np.testing.assert_allclose(b.v.T @ b.v, np.eye(b.rank), atol=1e-10)
        assert np.all(np.diff(b.d) <= 0) and np.all(b.d > 0)

    def test_rank_truncation_on_duplicated_columns(self):
        rng = np.random.default_rng(2)
        base = rng.standard_normal((9, 3))
        X = np.hstack([base, base])          # rank 3 by construction
        b = svd_reduce(X, rng.standard_normal(9))
        assert b.rank == 3

    def test_rank_zero_rejected(self):
        with pytest.raises(ValidationError):
            svd_reduce(np.zeros((4, 3)), np.ones(4))


class TestOrthogonalFit:
    def test_identity_design_equals_scalar_path(self):
        # shared draw columns make the reduction exact, not just statistical
        n = 6
        rng = np.random.default_rng(3)
        y = rng.standard_normal(n) * 1.4
        draws = draw_latent(StableIndex(0.5, 0.5), 800, n, seed=10)
        cfg = ModelConfig(1.0, 0.9, 1.2, n_draws=800)
        fit = orthogonal_fit(svd_reduce(np.eye(n), y), cfg, draws)
        # identity SVD may permute/flip components; compare through beta
        for i in range(n):
            sp = scalar_fit(y[i], ScalarModelConfig(1.0, 0.9, 1.2, n_draws=800), draws.values[:, _col(fit, i)])
            assert abs(fit.beta_mean[i] - sp.mean_hat) < 1e-10

    def test_zero_gamma_hat_gives_zero_beta(self):
        draws = draw_latent(StableIndex(0.35, 0.5), 200, 4, seed=11)
        cfg = ModelConfig(0.7, 1.0, 1.0, n_draws=200)
        fit = orthogonal_fit(svd_reduce(np.eye(4), np.zeros(4)), cfg, draws)
        assert np.all(fit.beta_mean == 0.0)
        assert np.all(fit.fitted_mean == 0.0)

    def test_huge_singular_value_tracks_least_squares(self):
        # noise sigma2/d^2 -> 0 pins the component posterior at gamma_hat
        basis = svd_reduce(np.array([[1000.0]]), np.array([1000.0]))
        draws = draw_latent(StableIndex(0.5, 0.5), 2000, 1, seed=12)
        cfg = ModelConfig(1.0, 1.0, 1.0, n_draws=2000)
        fit = orthogonal_fit(basis, cfg, draws)
        assert abs(fit.gamma_mean[0] - 1.0) < 1e-3

    def test_requires_scalar_noise_and_enough_columns(self):
        rng = np.random.default_rng(4)
        X = rng.standard_normal((5, 3))
        basis = svd_reduce(X, rng.standard_normal(5))
        draws = draw_latent(StableIndex(0.5, 0.5), 100, 2, seed=13)
        with pytest.raises(ValidationError):
            orthogonal_fit(basis, ModelConfig(1.0, 1.0, 1.0, n_draws=100), draws)
        full = draw_latent(StableIndex(0.5, 0.5), 100, 3, seed=13)
        with pytest.raises(ValidationError):
            orthogonal_fit(basis, ModelConfig(1.0, 1.0, np.eye(5), n_draws=100), full)


def _col(fit, i):
    # identity SVD maps coordinate i to the component whose v-column hits i
    return int(np.argmax(np.abs(fit.basis.v[i])))


class TestOrthogonalSure:
    def test_agrees_with_summary_route(self):
        # same numbers assembled along two different routes
        rng = np.random.default_rng(5)
        n, p = 10, 6
        X = rng.standard_normal((n, p))
        y = rng.standard_normal(n) * 2.0
        draws = draw_latent(StableIndex(0.35, 0.5), 500, p, seed=14)
        cfg = ModelConfig(0.7, 1.1, 2.0, n_draws=500)
        basis = svd_reduce(X, y)
        s1 = orthogonal_sure(basis, cfg, draws)
        s2 = sure_value(y, orthogonal_fit(basis, cfg, draws).summary(), 2.0)
        assert abs(s1 - s2) < 1e-10

    def test_weak_shrinkage_bias_tends_to_least_squares(self):
        rng = np.random.default_rng(6)
        n, p = 12, 5
        X = rng.standard_normal((n, p))
        y = rng.standard_normal(n)
        basis = svd_reduce(X, y)
        draws = draw_latent(StableIndex(0.5, 0.5), 1000, p, seed=15)
        cfg = ModelConfig(1.0, 1e6, 1.0, n_draws=1000)
        fit = orthogonal_fit(basis, cfg, draws)
        bias = basis.perp_sq + float((basis.d**2 * (basis.gamma_hat - fit.gamma_mean) ** 2).sum())
        ls_resid = float((y - basis.z @ basis.gamma_hat) @ (y - basis.z @ basis.gamma_hat))
        assert abs(bias - ls_resid) < 0.05 * max(ls_resid, 1.0)

    def test_total_shrinkage_gives_y_norm(self):
        rng = np.random.default_rng(7)
        n, p = 9, 4
        X = rng.standard_normal((n, p))
        y = rng.standard_normal(n)
        basis = svd_reduce(X, y)
        draws = draw_latent(StableIndex(0.5, 0.5), 1000, p, seed=16)
        s = orthogonal_sure(basis, ModelConfig(1.0, 1e-8, 1.0, n_draws=1000), draws)
        assert abs(s - float(y @ y)) < 1e-3 * float(y @ y)

    def test_variance_term_matches_fd_dof(self):
        # Tweedie: the analytic variance term equals the numerical divergence
        rng = np.random.default_rng(8)
        n, p = 6, 4
        X = rng.standard_normal((n, p))
        y = rng.standard_normal(n) * 1.3
        draws = draw_latent(StableIndex(0.5, 0.5), 300, p, seed=17)
        cfg = ModelConfig(1.0, 0.8, 1.0, n_draws=300)
        basis = svd_reduce(X, y)
        fit = orthogonal_fit(basis, cfg, draws)
        dof_term = 2.0 * fit.fitted_cov_trace
        fd = estimate_dof_fd(X, y, cfg, draws, method="svd")
        assert abs(fd - dof_term) < 1e-4 * abs(dof_term)

    def test_fd_dof_with_nonunit_sigma2(self):
        # the noise scale must not double-count in the variance term
        rng = np.random.default_rng(9)
        n, p = 6, 4
        X = rng.standard_normal((n, p))
        y = rng.standard_normal(n)
        draws = draw_latent(StableIndex(0.5, 0.5), 300, p, seed=18)
        cfg = ModelConfig(1.0, 0.8, 2.5, n_draws=300)
        fit = orthogonal_fit(svd_reduce(X, y), cfg, draws)
        fd = estimate_dof_fd(X, y, cfg, draws, method="svd")
        assert abs(fd - 2.0 * fit.fitted_cov_trace) < 1e-4 * abs(fd)
