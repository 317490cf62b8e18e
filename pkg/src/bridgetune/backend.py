"""Kernel backend selection: numba-compiled hot loops with a pure-numpy fallback.

The numerically hot inner loops (stable-sampler acceptance math, the gamma
rejection round, and the per-coordinate weighted-moment accumulation) exist in
two interchangeable implementations:

* ``numba``  -- scalar loops compiled with ``@njit(cache=True)``; fuses the
  transcendental-heavy arithmetic into a single pass.
* ``numpy``  -- vectorized twins of the same formulas.

The active backend is chosen once at import time from the environment variable
``BRIDGETUNE_BACKEND`` (``auto`` | ``numba`` | ``numpy``; default ``auto``,
which uses numba when it imports cleanly).  Both backends evaluate the same
IEEE-double expressions and consume randomness identically (all random numbers
are drawn by the caller), so they agree to the last few ulps; results are
reproducible per backend.  ``benchmarks/bench_backends.py`` compares the two.
"""

from __future__ import annotations

import math
import os

import numpy as np

_ENV_VAR = "BRIDGETUNE_BACKEND"


def _requested_backend() -> str:
    value = os.environ.get(_ENV_VAR, "auto").strip().lower()
    if value not in ("auto", "numba", "numpy"):
        raise RuntimeError(
            f"{_ENV_VAR} must be one of 'auto', 'numba', 'numpy'; got {value!r}"
        )
    return value


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------

def _sinc_np(x: np.ndarray) -> np.ndarray:
    # sin(x)/x with a short series below 1e-4 to avoid 0/0 and cancellation.
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    small = np.abs(x) < 1e-4
    xs = x[small]
    out[small] = 1.0 - xs * xs / 6.0 * (1.0 - xs * xs / 20.0)
    xl = x[~small]
    with np.errstate(invalid="ignore"):
        out[~small] = np.sin(xl) / xl
    return out


def _log_tilt_ratio_np(u: np.ndarray, gamma: float) -> np.ndarray:
    """log B(u) with B(u) = sinc(u) / (sinc(g u)^g sinc((1-g)u)^(1-g)), in (-inf, 0]."""
    with np.errstate(divide="ignore"):
        return (
            np.log(_sinc_np(u))
            - gamma * np.log(_sinc_np(gamma * u))
            - (1.0 - gamma) * np.log(_sinc_np((1.0 - gamma) * u))
        )


def _stable_stage1_np(u, logw, gamma, tilt_over_gamma):
    log_b = _log_tilt_ratio_np(u, gamma)
    accept = logw <= tilt_over_gamma * log_b
    return accept, log_b


def _gamma_mt_round_np(z, logu, d):
    """One Marsaglia--Tsang round for Gamma(shape = d + 1/3, scale 1)."""
    c = 1.0 / math.sqrt(9.0 * d)
    x = 1.0 + c * z
    pos = x > 0.0
    v = np.where(pos, x * x * x, 1.0)
    logv = np.log(v)
    accept = pos & (logu < 0.5 * z * z + d - d * v + d * logv)
    return accept, d * v


def _nmeans_moments_np(y, sigma2, nu, tcols):
    """Weighted latent-scale moments for independent scalar coordinates.

    y, sigma2   -- (r,) observations and per-coordinate noise variances
    tcols       -- (r, J) latent scale draws, one row per coordinate
    Returns (logm, mean, second, se_marg, se_mean, se_second, ess), all (r,).
    """
    y = y[:, None]
    s2 = sigma2[:, None]
    J = tcols.shape[1]
    pv = nu / tcols                      # prior variance contribution nu * t^-1
    v = s2 + pv                          # marginal variance of y given t
    logp = -0.5 * (np.log(2.0 * np.pi * v) + y * y / v)
    shrink = pv / v
    mj = shrink * y                      # conditional posterior mean
    cj = s2 * shrink                     # conditional posterior variance
    mx = logp.max(axis=1, keepdims=True)
    wt = np.exp(logp - mx)
    s0 = wt.sum(axis=1, keepdims=True)
    w = wt / s0
    mean = (w * mj).sum(axis=1, keepdims=True)
    # centered form keeps the Jensen gap nonnegative in floating point
    centered = (w * cj).sum(axis=1) + (w * (mj - mean) ** 2).sum(axis=1)
    second = mean[:, 0] ** 2 + centered
    logm = mx[:, 0] + np.log(s0[:, 0]) - np.log(J)
    fac = J / (J - 1.0)
    se_marg = np.exp(mx[:, 0]) * wt.std(axis=1, ddof=1) / np.sqrt(J)
    se_mean = np.sqrt(fac * (w * w * (mj - mean) ** 2).sum(axis=1))
    e2 = cj + mj * mj
    se_second = np.sqrt(fac * (w * w * (e2 - second[:, None]) ** 2).sum(axis=1))
    ess = 1.0 / (w * w).sum(axis=1)
    return logm, mean[:, 0], second, se_marg, se_mean, se_second, ess


_NUMPY_KERNELS = {
    "stable_stage1": _stable_stage1_np,
    "gamma_mt_round": _gamma_mt_round_np,
    "nmeans_moments": _nmeans_moments_np,
}


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

def _build_numba_kernels():
    from numba import njit

    @njit(cache=True)
    def sinc(x):
        ax = abs(x)
        if ax < 1e-4:
            x2 = x * x
            return 1.0 - x2 / 6.0 * (1.0 - x2 / 20.0)
        return math.sin(x) / x

    @njit(cache=True)
    def stable_stage1(u, logw, gamma, tilt_over_gamma):
        m = u.shape[0]
        accept = np.empty(m, dtype=np.bool_)
        log_b = np.empty(m, dtype=np.float64)
        for i in range(m):
            sb = sinc(u[i])
            if sb <= 0.0:
                log_b[i] = -np.inf
                accept[i] = False
                continue
            lb = (
                math.log(sb)
                - gamma * math.log(sinc(gamma * u[i]))
                - (1.0 - gamma) * math.log(sinc((1.0 - gamma) * u[i]))
            )
            log_b[i] = lb
            accept[i] = logw[i] <= tilt_over_gamma * lb
        return accept, log_b

    @njit(cache=True)
    def gamma_mt_round(z, logu, d):
        m = z.shape[0]
        c = 1.0 / math.sqrt(9.0 * d)
        accept = np.empty(m, dtype=np.bool_)
        val = np.empty(m, dtype=np.float64)
        for i in range(m):
            x = 1.0 + c * z[i]
            if x <= 0.0:
                accept[i] = False
                val[i] = d
                continue
            v = x * x * x
            accept[i] = logu[i] < 0.5 * z[i] * z[i] + d - d * v + d * math.log(v)
            val[i] = d * v
        return accept, val

    @njit(cache=True)
    def nmeans_moments(y, sigma2, nu, tcols):
        r, J = tcols.shape
        logm = np.empty(r)
        mean = np.empty(r)
        second = np.empty(r)
        se_marg = np.empty(r)
        se_mean = np.empty(r)
        se_second = np.empty(r)
        ess = np.empty(r)
        logp = np.empty(J)
        mj = np.empty(J)
        cj = np.empty(J)
        w = np.empty(J)
        log2pi = math.log(2.0 * math.pi)
        fac = J / (J - 1.0)
        for i in range(r):
            yi = y[i]
            s2 = sigma2[i]
            mx = -np.inf
            for j in range(J):
                pv = nu / tcols[i, j]
                v = s2 + pv
                lp = -0.5 * (log2pi + math.log(v) + yi * yi / v)
                logp[j] = lp
                sh = pv / v
                mj[j] = sh * yi
                cj[j] = s2 * sh
                if lp > mx:
                    mx = lp
            s0 = 0.0
            for j in range(J):
                w[j] = math.exp(logp[j] - mx)
                s0 += w[j]
            sm = 0.0
            for j in range(J):
                w[j] /= s0
                sm += w[j] * mj[j]
            cen = 0.0
            sw2 = 0.0
            for j in range(J):
                dmu = mj[j] - sm
                cen += w[j] * (cj[j] + dmu * dmu)
                sw2 += w[j] * w[j]
            sec = sm * sm + cen
            # spread of the unnormalized weights gives the marginal's MC error
            wbar = s0 / J
            sswt = 0.0
            for j in range(J):
                dw = w[j] * s0 - wbar
                sswt += dw * dw
            v_mean = 0.0
            v_sec = 0.0
            for j in range(J):
                e2 = cj[j] + mj[j] * mj[j]
                v_mean += w[j] * w[j] * (mj[j] - sm) ** 2
                v_sec += w[j] * w[j] * (e2 - sec) ** 2
            logm[i] = mx + math.log(s0) - math.log(J)
            mean[i] = sm
            second[i] = sec
            se_marg[i] = math.exp(mx) * math.sqrt(sswt / (J - 1.0)) / math.sqrt(J)
            se_mean[i] = math.sqrt(fac * v_mean)
            se_second[i] = math.sqrt(fac * v_sec)
            ess[i] = 1.0 / sw2
        return logm, mean, second, se_marg, se_mean, se_second, ess

    return {
        "stable_stage1": stable_stage1,
        "gamma_mt_round": gamma_mt_round,
        "nmeans_moments": nmeans_moments,
    }


def _select() -> tuple[str, dict]:
    req = _requested_backend()
    if req in ("auto", "numba"):
        try:
            return "numba", _build_numba_kernels()
        except ImportError:
            if req == "numba":
                raise RuntimeError(
                    f"{_ENV_VAR}=numba requested but numba is not importable"
                )
    return "numpy", _NUMPY_KERNELS


_BACKEND_NAME, _KERNELS = _select()


def active_backend() -> str:
    """Name of the kernel backend in use ('numba' or 'numpy')."""
    return _BACKEND_NAME


def kernels(name: str | None = None) -> dict:
    """Kernel table for the active backend, or for an explicit backend name."""
    if name is None or name == _BACKEND_NAME:
        return _KERNELS
    if name == "numpy":
        return _NUMPY_KERNELS
    if name == "numba":
        return _build_numba_kernels()
    raise ValueError(f"unknown backend {name!r}")
