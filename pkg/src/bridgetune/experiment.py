"""Simulation-study harness: replicate fits, out-of-sample error, timing.

Each replicate draws a fresh training set from the design, tunes and fits the
model, then scores it on an independent size-n test response drawn at the
same design points (same X and true coefficients, fresh noise).  That is the
prediction risk the tuned risk estimate is unbiased for, and it keeps both
quantities on the same ~2n sigma2 scale; a test draw with fresh design rows
would instead measure random-design generalization, which is a different
(and, for p >> n, far larger) quantity.  A closed-form ridge fit tuned by the
same risk rule rides along as an internal baseline; externally computed
baselines can be joined onto the results table by alpha.  Wall time is
measured around fitting only (latent draw generation, tuning, final fit), not
data generation.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .data_io import write_results
from .errors import ValidationError
from .regression import ModelConfig
from .simulate import SimDesign, gen_equicorrelated_design, gen_noise, gen_response
from .sure import GridSpec, fit_bridge, ridge_sure_fit
from .tilted_stable import StableIndex, draw_latent

__all__ = ["ReplicateResult", "run_replicate", "run_experiment", "timing_sweep"]

SIGMA2 = 1.0   # designs are generated with unit-variance noise


@dataclass(frozen=True)
class ReplicateResult:
    alpha: float
    replicate: int
    nu_star: float
    sure: float
    sse: float
    ridge_sse: float
    fit_seconds: float
    ess: float


def _seed_int(ss: np.random.SeedSequence) -> int:
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def run_replicate(
    design: SimDesign,
    alpha: float,
    replicate: int,
    n_draws: int,
    method: str = "latent",
    grid: GridSpec | None = None,
) -> ReplicateResult:
    """One train/fit/test cycle; fully determined by (design.seed, alpha, replicate)."""
    root = np.random.SeedSequence(design.seed, spawn_key=(int(replicate),))
    data_ss, test_ss, draw_ss = root.spawn(3)
    data_rng = np.random.default_rng(data_ss)
    X = gen_equicorrelated_design(design.n, design.p, design.rho, data_rng)
    y, beta_true = gen_response(X, design, data_rng)

    # independent test response at the training design points (fresh noise)
    test_rng = np.random.default_rng(test_ss)
    y_test = X @ beta_true + gen_noise(design, design.n, test_rng)
    X_test = X

    cfg = ModelConfig(alpha=alpha, nu=1.0, noise=SIGMA2, n_draws=n_draws)
    t0 = time.perf_counter()
    draws = draw_latent(StableIndex(alpha / 2.0, 0.5), n_draws, design.p, _seed_int(draw_ss))
    fit = fit_bridge(X, y, cfg, draws, grid=grid, method=method)
    fit_seconds = time.perf_counter() - t0

    resid = y_test - X_test @ fit.beta_mean
    _, _, beta_ridge = ridge_sure_fit(X, y, SIGMA2, grid=grid)
    resid_r = y_test - X_test @ beta_ridge
    return ReplicateResult(
        alpha=alpha,
        replicate=replicate,
        nu_star=fit.nu_star,
        sure=fit.sure_star,
        sse=float(resid @ resid),
        ridge_sse=float(resid_r @ resid_r),
        fit_seconds=fit_seconds,
        ess=fit.ess,
    )


def _run_replicate_args(args):
    return run_replicate(*args)


def run_experiment(
    design: SimDesign,
    n_draws: int = 500,
    method: str = "latent",
    grid: GridSpec | None = None,
    out_path=None,
    details_path=None,
    n_jobs: int = 1,
) -> tuple[list[dict], list[ReplicateResult]]:
    """All (alpha, replicate) cells of a design; aggregate rows per alpha.

    Replicates own independent seed substreams and rows are emitted in
    (alpha, replicate) order whatever the worker pool does, so results are
    byte-reproducible for a given design.
    """
    tasks = [
        (design, alpha, rep, n_draws, method, grid)
        for alpha in design.alpha_grid
        for rep in range(design.replicates)
    ]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            details = list(pool.map(_run_replicate_args, tasks))
    else:
        details = [run_replicate(*t) for t in tasks]

    rows = []
    for alpha in design.alpha_grid:
        sub = [d for d in details if d.alpha == alpha]
        sure = np.array([d.sure for d in sub])
        sse = np.array([d.sse for d in sub])
        rsse = np.array([d.ridge_sse for d in sub])
        secs = np.array([d.fit_seconds for d in sub])
        ddof = 1 if len(sub) > 1 else 0
        rows.append(
            {
                "alpha": alpha,
                "sure_mean": float(sure.mean()),
                "sure_sd": float(sure.std(ddof=ddof)),
                "sse_mean": float(sse.mean()),
                "sse_sd": float(sse.std(ddof=ddof)),
                "ridge_sse_mean": float(rsse.mean()),
                "ridge_sse_sd": float(rsse.std(ddof=ddof)),
                "time_mean_s": float(secs.mean()),
                "time_sd_s": float(secs.std(ddof=ddof)),
            }
        )

    if out_path is not None:
        meta = _metadata(design, n_draws, method)
        write_results(out_path, rows, meta)
    if details_path is not None:
        detail_rows = [vars(d).copy() for d in details]
        write_results(details_path, detail_rows, _metadata(design, n_draws, method))
    return rows, details


def join_external(rows: list[dict], external: list[dict], prefix: str = "ext") -> list[dict]:
    """Merge externally computed baseline columns onto aggregate rows by alpha."""
    by_alpha = {}
    for ext in external:
        if "alpha" not in ext:
            raise ValidationError("external baseline rows need an 'alpha' column")
        by_alpha[float(ext["alpha"])] = ext
    merged = []
    for row in rows:
        out = dict(row)
        ext = by_alpha.get(float(row["alpha"]))
        if ext:
            for key, val in ext.items():
                if key != "alpha":
                    out[f"{prefix}_{key}"] = val
        merged.append(out)
    return merged


def timing_sweep(
    n: int,
    p_list: list[int],
    alpha: float = 0.7,
    rho: float = 0.9,
    n_draws: int = 200,
    seed: int = 0,
    method: str = "latent",
    replicates: int = 1,
) -> tuple[list[dict], float]:
    """Fit-time scaling over p at fixed n; returns rows and the log-log slope."""
    if len(p_list) < 2:
        raise ValidationError("need at least two p values to fit a slope")
    rows = []
    for p in p_list:
        design = SimDesign(
            n=n,
            p=int(p),
            rho=rho,
            signal_count=min(10, int(p)),
            alpha_grid=(alpha,),
            replicates=replicates,
            seed=seed,
        )
        secs = [
            run_replicate(design, alpha, rep, n_draws, method=method).fit_seconds
            for rep in range(replicates)
        ]
        rows.append({"p": int(p), "fit_seconds": float(np.mean(secs))})
    slope = float(
        np.polyfit(
            np.log([r["p"] for r in rows]), np.log([r["fit_seconds"] for r in rows]), 1
        )[0]
    )
    return rows, slope


def _metadata(design: SimDesign, n_draws: int, method: str) -> dict:
    import datetime

    from . import __version__

    return {
        "design": vars(design).copy(),
        "n_draws": n_draws,
        "method": method,
        "sigma2": SIGMA2,
        "package_version": __version__,
        "numpy_version": np.__version__,
        "written_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
