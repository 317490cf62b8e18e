"""Scalar (one observation per coefficient) posterior moments under the
exponential-power prior, computed by weighted Monte Carlo over latent scales.

Model per coordinate: y | b ~ N(b, sigma2), b has the exponential-power prior
with exponent ``alpha`` and scale ``nu``.  Conditionally on a latent scale t
drawn from the tilted stable law with gamma = alpha/2, delta = 1/2, the pair
(y, b) is jointly Gaussian with b | t ~ N(0, nu/t), so

    y | t ~ N(0, sigma2 + nu/t),
    b | y, t ~ N(nu y / (sigma2 t + nu), sigma2 nu / (sigma2 t + nu)).

Averaging the conditional moments with weights proportional to the conditional
marginal density of y gives simulation-consistent estimates of the marginal
m(y), E[b|y] and E[b^2|y].  All weight arithmetic is done in log space with a
max shift; the latent scale can be astronomically large or small for small
alpha, so the conditional variance is always evaluated as sigma2 + nu/t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .backend import kernels
from .errors import ValidationError
from .tilted_stable import LatentDraws, StableIndex

__all__ = [
    "ScalarModelConfig",
    "ScalarPosterior",
    "ScalarDiagnostics",
    "ep_log_density",
    "scalar_fit",
    "scalar_fit_many",
    "scalar_diagnostics",
]

DEFAULT_MC_SIZE = 500


@dataclass(frozen=True)
class ScalarModelConfig:
    """Knobs of the scalar model: prior exponent/scale, noise, MC budget."""

    alpha: float
    nu: float
    sigma2: float
    n_draws: int = DEFAULT_MC_SIZE
    seed: int = 0

    def __post_init__(self):
        if not (np.isfinite(self.alpha) and 0.0 < self.alpha < 2.0):
            raise ValidationError(f"alpha must lie in (0, 2); got {self.alpha}")
        if not (np.isfinite(self.nu) and self.nu > 0.0):
            raise ValidationError(f"nu must be positive; got {self.nu}")
        if not (np.isfinite(self.sigma2) and self.sigma2 > 0.0):
            raise ValidationError(f"sigma2 must be positive; got {self.sigma2}")
        if self.n_draws < 2:
            raise ValidationError(f"n_draws must be >= 2; got {self.n_draws}")

    @property
    def stable_index(self) -> StableIndex:
        return StableIndex(gamma=self.alpha / 2.0, delta=0.5)


@dataclass(frozen=True)
class ScalarPosterior:
    marginal_hat: float
    mean_hat: float
    second_moment_hat: float
    mc_se: tuple[float, float, float]   # (marginal, mean, second moment)
    ess: float

    @property
    def variance_hat(self) -> float:
        return self.second_moment_hat - self.mean_hat**2


@dataclass(frozen=True)
class ScalarDiagnostics:
    """Marginal lower-bound constant and the three estimator-variance bounds."""

    c_sigma_nu: float
    var_bounds: tuple[float, float, float]


def ep_log_density(beta: float, alpha: float, nu: float) -> float:
    """Log density of the exponential-power prior:
    log(alpha * nu / Gamma(1/alpha)) - 2^alpha nu^alpha |beta|^alpha."""
    if not (0.0 < alpha < 2.0) or not nu > 0.0:
        raise ValidationError("need alpha in (0,2) and nu > 0")
    return (
        math.log(alpha * nu)
        - math.lgamma(1.0 / alpha)
        - (2.0 * nu) ** alpha * abs(beta) ** alpha
    )


def _check_draws(cfg: ScalarModelConfig, draws: LatentDraws | np.ndarray) -> np.ndarray:
    if isinstance(draws, LatentDraws):
        idx = draws.index
        if not math.isclose(idx.gamma, cfg.alpha / 2.0, rel_tol=0, abs_tol=1e-12):
            raise ValidationError(
                f"draws were generated at gamma={idx.gamma}, need alpha/2={cfg.alpha / 2}"
            )
        if idx.delta != 0.5:
            raise ValidationError("draws must use tilt delta = 1/2")
        values = draws.values
    else:
        values = np.asarray(draws, dtype=np.float64)
    return values


def scalar_fit_many(
    y: np.ndarray, sigma2: np.ndarray, nu: float, tcols: np.ndarray
) -> tuple[np.ndarray, ...]:
    """Vectorized fits for r independent coordinates with per-coordinate noise.

    tcols has shape (r, J): row i holds the latent draws for coordinate i.
    Returns (log_marginal, mean, second_moment, se_marg, se_mean, se_second, ess).
    """
    y = np.ascontiguousarray(y, dtype=np.float64)
    sigma2 = np.ascontiguousarray(sigma2, dtype=np.float64)
    tcols = np.ascontiguousarray(tcols, dtype=np.float64)
    if tcols.shape[0] != y.shape[0] or sigma2.shape[0] != y.shape[0]:
        raise ValidationError("y, sigma2 and draw rows must align")
    if not np.all(np.isfinite(y)):
        raise ValidationError("y contains non-finite entries")
    return kernels()["nmeans_moments"](y, sigma2, nu, tcols)


def scalar_fit(y_i: float, cfg: ScalarModelConfig, draws) -> ScalarPosterior:
    """Posterior moments for one observation from one column of latent draws.

    ``draws`` may be a LatentDraws (first column is used after checking the
    index matches cfg.alpha) or a bare 1-D array of positive scales.
    """
    if not np.isfinite(y_i):
        raise ValidationError(f"y must be finite; got {y_i}")
    values = _check_draws(cfg, draws)
    col = values[:, 0] if values.ndim == 2 else values
    logm, mean, second, se_m, se_mu, se_s, ess = scalar_fit_many(
        np.array([y_i]), np.array([cfg.sigma2]), cfg.nu, col[None, :]
    )
    return ScalarPosterior(
        marginal_hat=float(np.exp(logm[0])),
        mean_hat=float(mean[0]),
        second_moment_hat=float(second[0]),
        mc_se=(float(se_m[0]), float(se_mu[0]), float(se_s[0])),
        ess=float(ess[0]),
    )


def scalar_diagnostics(y_i: float, cfg: ScalarModelConfig, draws) -> ScalarDiagnostics:
    """Monte Carlo marginal lower-bound constant and estimator-variance bounds.

    The constant is C = (2 pi sigma2)^(-1/2) E_T[(t / (t + nu/sigma2))^(1/2)],
    estimated on the supplied draws.  The three bounds are, with J draws,

        Var[marginal]       <  1 / (J 2 pi sigma2)
        Var[mean est.]      <  exp(y^2/sigma2) (|y| + |mean|)^2 / (J 2 pi sigma2 C^2)
        Var[2nd moment est.]<  exp(y^2/sigma2) (sigma2 + y^2 - m2)^2 / (J 2 pi sigma2 C^2)
    """
    values = _check_draws(cfg, draws)
    col = values[:, 0] if values.ndim == 2 else values
    J = col.shape[0]
    s2, nu = cfg.sigma2, cfg.nu
    c = float(np.sqrt(col / (col + nu / s2)).mean() / math.sqrt(2.0 * math.pi * s2))
    fit = scalar_fit(y_i, cfg, col)
    base = 1.0 / (J * 2.0 * math.pi * s2)
    blow = math.exp(y_i**2 / s2) / c**2
    bounds = (
        base,
        base * blow * (abs(y_i) + abs(fit.mean_hat)) ** 2,
        base * blow * (s2 + y_i**2 - fit.second_moment_hat) ** 2,
    )
    return ScalarDiagnostics(c_sigma_nu=c, var_bounds=bounds)
