"""Synthetic data generators for the benchmark designs.

Design matrices have i.i.d. rows from N(0, S_rho) with the equicorrelation
matrix S_rho = (1-rho) I + rho 11', generated by the shared-factor
construction sqrt(rho) g 1' + sqrt(1-rho) Z.  Coefficients are a sparse
pattern of strong signals plus a small Gaussian perturbation on every
coordinate; observation noise is unit-variance by construction in all three
regimes (Gaussian i.i.d., t with 3 degrees of freedom scaled to variance one,
or equicorrelated Gaussian).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

__all__ = ["SimDesign", "gen_equicorrelated_design", "gen_response", "gen_noise"]

NOISE_KINDS = ("gaussian-iid", "student-t", "gaussian-equicorrelated")


@dataclass(frozen=True)
class SimDesign:
    n: int
    p: int
    rho: float = 0.9
    signal_count: int = 10
    signal_value: float = 10.0
    coef_noise_sd: float = 0.1
    noise_kind: str = "gaussian-iid"
    noise_df: float = 3.0          # student-t only
    noise_corr: float = 0.1        # gaussian-equicorrelated only
    alpha_grid: tuple[float, ...] = (0.7,)
    replicates: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.p < 1:
            raise ValidationError("n and p must be positive")
        if not (0.0 <= self.rho < 1.0):
            raise ValidationError(f"rho must lie in [0, 1); got {self.rho}")
        if not (0 <= self.signal_count <= self.p):
            raise ValidationError("signal_count must lie in [0, p]")
        if self.noise_kind not in NOISE_KINDS:
            raise ValidationError(f"noise_kind must be one of {NOISE_KINDS}")
        if self.noise_kind == "student-t" and self.noise_df <= 2.0:
            raise ValidationError("student-t noise needs df > 2 for a finite variance")
        if self.noise_kind == "gaussian-equicorrelated" and not (0.0 <= self.noise_corr < 1.0):
            raise ValidationError("noise_corr must lie in [0, 1)")
        if any(not (0.0 < a < 2.0) for a in self.alpha_grid):
            raise ValidationError("alpha values must lie in (0, 2)")
        if self.replicates < 1:
            raise ValidationError("replicates must be >= 1")


def gen_equicorrelated_design(n: int, p: int, rho: float, seed_or_rng) -> np.ndarray:
    """n i.i.d. rows from N(0, (1-rho) I + rho 11')."""
    if not (0.0 <= rho < 1.0):
        raise ValidationError(f"rho must lie in [0, 1); got {rho}")
    rng = _as_rng(seed_or_rng)
    z = rng.standard_normal((n, p))
    if rho == 0.0:
        return z
    g = rng.standard_normal(n)
    return np.sqrt(rho) * g[:, None] + np.sqrt(1.0 - rho) * z


def gen_response(X: np.ndarray, design: SimDesign, seed_or_rng) -> tuple[np.ndarray, np.ndarray]:
    """Draw (y, beta_true) for a given design matrix.

    beta places ``signal_value`` on the last ``signal_count`` coordinates and
    adds N(0, coef_noise_sd^2) to every coordinate; the observation noise has
    unit variance in each regime.
    """
    n, p = X.shape
    if p != design.p:
        raise ValidationError(f"X has {p} columns, design says {design.p}")
    if design.signal_count > p:
        raise ValidationError("signal_count exceeds the number of columns")
    rng = _as_rng(seed_or_rng)
    beta = np.zeros(p)
    if design.signal_count:
        beta[p - design.signal_count :] = design.signal_value
    if design.coef_noise_sd > 0:
        beta = beta + rng.normal(0.0, design.coef_noise_sd, size=p)
    return X @ beta + gen_noise(design, n, rng), beta


def gen_noise(design: SimDesign, n: int, seed_or_rng) -> np.ndarray:
    """Unit-variance observation noise in the regime named by the design."""
    rng = _as_rng(seed_or_rng)
    if design.noise_kind == "gaussian-iid":
        return rng.standard_normal(n)
    if design.noise_kind == "student-t":
        eps = rng.standard_t(design.noise_df, size=n)
        return eps * np.sqrt((design.noise_df - 2.0) / design.noise_df)  # variance one
    r = design.noise_corr
    return np.sqrt(r) * rng.standard_normal() + np.sqrt(1.0 - r) * rng.standard_normal(n)


def _as_rng(seed_or_rng) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)
