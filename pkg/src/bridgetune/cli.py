"""Command-line interface.

Subcommands: simulate, fit, predict, sure-path, sample-stable, scaling.
Config files are JSON; any flag given on the command line overrides the file
value.  Exit codes: 0 success, 2 validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import __version__
from .data_io import Dataset, load_dataset, load_xy, standardize, write_results
from .errors import NumericalError, ValidationError
from .experiment import join_external, run_experiment, timing_sweep
from .regression import ModelConfig
from .simulate import SimDesign
from .sure import GridSpec, fit_bridge, sure_profile
from .tilted_stable import LatentDraws, StableIndex, draw_latent


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bridgetune",
        description="Bridge regression fitted by latent-scale Monte Carlo with "
        "risk-minimizing penalty selection.",
    )
    parser.add_argument("--version", action="version", version=f"bridgetune {__version__}")
    sub = parser.add_subparsers(required=True, metavar="command")

    sim = sub.add_parser("simulate", help="run a simulation experiment from a design JSON")
    sim.add_argument("--design", required=True, help="design JSON file")
    sim.add_argument("--out", required=True, help="aggregate results CSV")
    sim.add_argument("--details", help="optional per-replicate CSV")
    sim.add_argument("--draws", type=int, help="Monte Carlo size (overrides design file)")
    sim.add_argument("--replicates", type=int, help="override replicate count")
    sim.add_argument("--seed", type=int, help="override seed")
    sim.add_argument("--alpha", help="override alpha grid, comma separated")
    sim.add_argument("--method", default="auto", choices=["auto", "svd", "latent"])
    sim.add_argument("--jobs", type=int, default=1, help="parallel replicate workers")
    sim.add_argument("--join-external", dest="join_ext", help="CSV of external baselines keyed by alpha")
    sim.set_defaults(func=_cmd_simulate)

    fit = sub.add_parser("fit", help="fit a model to user data and tune the penalty")
    _add_data_args(fit)
    _add_model_args(fit)
    fit.add_argument("--out", required=True, help="model JSON output")
    fit.add_argument("--sure-csv", help="also write the risk profile CSV")
    fit.add_argument("--dump-draws", help="write latent draws as CSV for external audit")
    fit.set_defaults(func=_cmd_fit)

    pred = sub.add_parser("predict", help="predict with a fitted model JSON")
    pred.add_argument("--model", required=True)
    pred.add_argument("--x", required=True, help="predictor CSV (header row)")
    pred.add_argument("--out", help="predictions CSV (default stdout)")
    pred.set_defaults(func=_cmd_predict)

    spath = sub.add_parser("sure-path", help="evaluate the risk profile over the penalty grid")
    _add_data_args(spath)
    _add_model_args(spath)
    spath.add_argument("--out", required=True, help="profile CSV (nu,sure,bias,dof)")
    spath.add_argument("--dump-draws", help="write latent draws as CSV for external audit")
    spath.set_defaults(func=_cmd_sure_path)

    samp = sub.add_parser("sample-stable", help="draw tilted positive-stable variates")
    samp.add_argument("--gamma", type=float, required=True)
    samp.add_argument("--delta", type=float, default=0.5)
    samp.add_argument("--count", type=int, required=True)
    samp.add_argument("--coords", type=int, default=1, help="number of independent columns")
    samp.add_argument("--seed", type=int, default=0)
    samp.add_argument("--out", required=True, help="CSV, one column per coordinate")
    samp.set_defaults(func=_cmd_sample_stable)

    scal = sub.add_parser("scaling", help="fit-time scaling sweep over the number of covariates")
    scal.add_argument("--n", type=int, default=100)
    scal.add_argument("--p-list", default="500,1000,2000")
    scal.add_argument("--alpha", type=float, default=0.7)
    scal.add_argument("--rho", type=float, default=0.9)
    scal.add_argument("--draws", type=int, default=200)
    scal.add_argument("--seed", type=int, default=0)
    scal.add_argument("--method", default="latent", choices=["auto", "svd", "latent"])
    scal.add_argument("--replicates", type=int, default=1)
    scal.add_argument("--out", help="CSV of (p, fit_seconds)")
    scal.set_defaults(func=_cmd_scaling)

    return parser


def _add_data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file of option values; flags override")
    p.add_argument("--data", help="single CSV containing predictors and the response")
    p.add_argument("--y-col", default="y", help="response column name or index for --data")
    p.add_argument("--x", help="predictor CSV (two-file layout)")
    p.add_argument("--y", help="response CSV (two-file layout)")
    p.add_argument("--standardize", action="store_true", help="center/scale X and y before fitting")


def _add_model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--sigma2", type=float, default=None)
    p.add_argument("--draws", type=int, default=None, dest="n_draws")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--nu-grid", default=None, help="lo:hi:n, relative geometric grid")
    p.add_argument("--method", default=None, choices=["auto", "svd", "latent"])


_MODEL_DEFAULTS = {
    "alpha": 0.7,
    "sigma2": 1.0,
    "n_draws": 500,
    "seed": 0,
    "nu_grid": None,
    "method": "auto",
    "standardize": False,
}


def _merged_options(args) -> dict:
    opts = dict(_MODEL_DEFAULTS)
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            try:
                file_opts = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{args.config}: invalid JSON ({exc})") from None
        unknown = set(file_opts) - set(opts)
        if unknown:
            raise ValidationError(f"{args.config}: unknown option(s) {sorted(unknown)}")
        opts.update(file_opts)
    for key in _MODEL_DEFAULTS:
        flag = getattr(args, key, None)
        if flag not in (None, False):
            opts[key] = flag
    return opts


def _load_cli_dataset(args) -> Dataset:
    if args.data and (args.x or args.y):
        raise ValidationError("give either --data or --x/--y, not both")
    if args.data:
        y_col = args.y_col
        if isinstance(y_col, str) and y_col.lstrip("-").isdigit():
            y_col = int(y_col)
        return load_dataset(args.data, response=y_col)
    if args.x and args.y:
        return load_xy(args.x, args.y)
    raise ValidationError("no input data: give --data or both --x and --y")


def _parse_grid(spec: str | None) -> GridSpec | None:
    if spec is None:
        return None
    try:
        lo, hi, num = spec.split(":")
        return GridSpec(lo=float(lo), hi=float(hi), num=int(num))
    except (ValueError, TypeError):
        raise ValidationError(f"bad --nu-grid {spec!r}; expected lo:hi:n") from None


def _prepare(args):
    opts = _merged_options(args)
    ds = _load_cli_dataset(args)
    if opts["standardize"]:
        ds = standardize(ds)
    cfg = ModelConfig(
        alpha=float(opts["alpha"]),
        nu=1.0,
        noise=float(opts["sigma2"]),
        n_draws=int(opts["n_draws"]),
        seed=int(opts["seed"]),
    )
    draws = draw_latent(cfg.stable_index, cfg.n_draws, ds.p, cfg.seed)
    return opts, ds, cfg, draws


def _dump_draws(path, draws: LatentDraws) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"coord_{j}" for j in range(draws.n_coords)])
        for row in draws.values:
            writer.writerow([repr(float(v)) for v in row])


def _cmd_fit(args) -> int:
    opts, ds, cfg, draws = _prepare(args)
    if args.dump_draws:
        _dump_draws(args.dump_draws, draws)
    fit = fit_bridge(ds.x, ds.y, cfg, draws, grid=_parse_grid(opts["nu_grid"]), method=opts["method"])
    model = _model_record(opts, ds, fit)
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(model, fh, indent=2)
        fh.write("\n")
    if args.sure_csv:
        fit.path.to_csv(args.sure_csv)
    print(f"nu_star={fit.nu_star:.6g} sure={fit.sure_star:.6g} method={fit.method}")
    return 0


def _model_record(opts, ds: Dataset, fit) -> dict:
    beta_std = np.asarray(fit.beta_mean, dtype=np.float64)
    if ds.standardized:
        beta_orig = ds.y_sd * beta_std / ds.column_sds
        intercept = float(ds.y_mean - ds.column_means @ beta_orig)
    else:
        beta_orig = beta_std
        intercept = 0.0
    return {
        "package_version": __version__,
        "alpha": opts["alpha"],
        "sigma2": opts["sigma2"],
        "n_draws": opts["n_draws"],
        "seed": opts["seed"],
        "method": fit.method,
        "nu_star": fit.nu_star,
        "sure_star": fit.sure_star,
        "ess": fit.ess,
        "column_names": list(ds.column_names),
        "standardized": ds.standardized,
        "dropped_columns": list(ds.dropped_columns),
        "intercept": intercept,
        "beta": [float(b) for b in beta_orig],
    }


def _cmd_predict(args) -> int:
    with open(args.model, encoding="utf-8") as fh:
        model = json.load(fh)
    from .data_io import _read_table

    header, x = _read_table(args.x)
    names = model["column_names"]
    if set(names) <= set(header):
        cols = [header.index(n) for n in names]
        x = x[:, cols]
    elif x.shape[1] == len(names):
        pass  # positional match
    else:
        raise ValidationError(
            f"predictor file lacks the {len(names)} fitted columns and has "
            f"{x.shape[1]} columns"
        )
    beta = np.asarray(model["beta"], dtype=np.float64)
    yhat = model["intercept"] + x @ beta
    lines = ["prediction"] + [repr(float(v)) for v in yhat]
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_sure_path(args) -> int:
    opts, ds, cfg, draws = _prepare(args)
    if args.dump_draws:
        _dump_draws(args.dump_draws, draws)
    path = sure_profile(
        ds.x, ds.y, cfg, draws, grid=_parse_grid(opts["nu_grid"]), method=opts["method"]
    )
    path.to_csv(args.out)
    print(f"nu_star={path.nu_star:.6g} sure={path.sure_star:.6g} method={path.method}")
    return 0


def _cmd_sample_stable(args) -> int:
    index = StableIndex(gamma=args.gamma, delta=args.delta)
    draws = draw_latent(index, args.count, args.coords, args.seed)
    _dump_draws(args.out, draws)
    print(f"wrote {args.count} x {args.coords} draws to {args.out}")
    return 0


def _cmd_simulate(args) -> int:
    with open(args.design, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{args.design}: invalid JSON ({exc})") from None
    n_draws = int(raw.pop("n_draws", 500))
    if args.draws is not None:
        n_draws = args.draws
    if args.replicates is not None:
        raw["replicates"] = args.replicates
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.alpha is not None:
        raw["alpha_grid"] = tuple(float(a) for a in args.alpha.split(","))
    if "alpha_grid" in raw:
        raw["alpha_grid"] = tuple(raw["alpha_grid"])
    try:
        design = SimDesign(**raw)
    except TypeError as exc:
        raise ValidationError(f"{args.design}: {exc}") from None
    rows, _ = run_experiment(
        design,
        n_draws=n_draws,
        method=args.method,
        out_path=None if args.join_ext else args.out,
        details_path=args.details,
        n_jobs=args.jobs,
    )
    if args.join_ext:
        with open(args.join_ext, newline="", encoding="utf-8") as fh:
            external = list(csv.DictReader(fh))
        rows = join_external(rows, external)
        write_results(args.out, rows, {"design": vars(design), "n_draws": n_draws})
    for row in rows:
        print(
            f"alpha={row['alpha']:g} sure={row['sure_mean']:.2f} ({row['sure_sd']:.2f}) "
            f"sse={row['sse_mean']:.2f} ({row['sse_sd']:.2f}) time={row['time_mean_s']:.2f}s"
        )
    return 0


def _cmd_scaling(args) -> int:
    p_list = [int(v) for v in args.p_list.split(",")]
    rows, slope = timing_sweep(
        n=args.n,
        p_list=p_list,
        alpha=args.alpha,
        rho=args.rho,
        n_draws=args.draws,
        seed=args.seed,
        method=args.method,
        replicates=args.replicates,
    )
    for row in rows:
        print(f"p={row['p']}: {row['fit_seconds']:.3f}s")
    print(f"log-log slope: {slope:.3f}")
    if args.out:
        write_results(args.out, rows, {"n": args.n, "slope": slope, "method": args.method})
    return 0


if __name__ == "__main__":
    sys.exit(main())
