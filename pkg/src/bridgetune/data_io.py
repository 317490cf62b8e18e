"""Dataset ingestion, standardization, splitting, and results persistence.

CSV is the only on-disk format: either a single file with a named response
column, or an X file plus a y file.  Parsing is strict; malformed cells are
reported with their row and column and never imputed.  All numeric output is
written with ``repr`` so values round-trip exactly through decimal text.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ValidationError

__all__ = [
    "Dataset",
    "SplitPlan",
    "load_dataset",
    "load_xy",
    "write_dataset",
    "standardize",
    "destandardize_predictions",
    "make_splits",
    "make_folds",
    "write_results",
]


@dataclass(frozen=True)
class Dataset:
    x: np.ndarray
    y: np.ndarray
    column_names: list[str]
    column_means: np.ndarray | None = None
    column_sds: np.ndarray | None = None
    y_mean: float = 0.0
    y_sd: float = 1.0
    standardized: bool = False
    dropped_columns: list[str] = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]


@dataclass(frozen=True)
class SplitPlan:
    train_idx: np.ndarray
    test_idx: np.ndarray
    seed: int
    spec: str   # e.g. "fraction=0.5" or "fold 2/5"


def _parse_cell(text: str, row: int, col_name: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ValidationError(
            f"non-numeric cell {text!r} at row {row}, column {col_name!r}"
        ) from None
    if not np.isfinite(value):
        raise ValidationError(f"non-finite cell {text!r} at row {row}, column {col_name!r}")
    return value


def _read_table(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        rows = []
        for r, row in enumerate(reader, start=2):   # header is line 1
            if len(row) != len(header):
                raise ValidationError(
                    f"{path}: ragged row at line {r}: expected {len(header)} "
                    f"fields, found {len(row)}"
                )
            rows.append([_parse_cell(c, r, header[j]) for j, c in enumerate(row)])
    if not rows:
        raise ValidationError(f"{path}: no data rows")
    return header, np.asarray(rows, dtype=np.float64)


def load_dataset(path, response: str | int = "y") -> Dataset:
    """Read one CSV with a header; ``response`` names or indexes the y column."""
    header, table = _read_table(path)
    if isinstance(response, int):
        if not (-len(header) <= response < len(header)):
            raise ValidationError(f"response index {response} out of range")
        y_col = response % len(header)
    else:
        if response not in header:
            raise ValidationError(
                f"response column {response!r} not among {header}"
            )
        y_col = header.index(response)
    mask = np.arange(len(header)) != y_col
    names = [h for j, h in enumerate(header) if j != y_col]
    return Dataset(x=table[:, mask], y=table[:, y_col], column_names=names)


def load_xy(x_path, y_path) -> Dataset:
    """Two-file layout: an X table and a single-column y table."""
    header, x = _read_table(x_path)
    y_header, y = _read_table(y_path)
    if y.shape[1] != 1:
        raise ValidationError(f"{y_path}: expected a single response column, got {y.shape[1]}")
    if y.shape[0] != x.shape[0]:
        raise ValidationError(
            f"row mismatch: {x_path} has {x.shape[0]} rows, {y_path} has {y.shape[0]}"
        )
    return Dataset(x=x, y=y[:, 0], column_names=header)


def write_dataset(path, ds: Dataset, y_name: str = "y") -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(ds.column_names) + [y_name])
        for i in range(ds.n):
            writer.writerow([repr(float(v)) for v in ds.x[i]] + [repr(float(ds.y[i]))])


def standardize(ds: Dataset) -> Dataset:
    """Center/scale columns and response (sample sd, ddof=1); drop constants.

    The inverse-transform record rides along so predictions can be mapped back
    to the original units.  Applying this to already-standardized data is a
    no-op up to roundoff.
    """
    if ds.n < 2:
        raise ValidationError("standardization needs at least 2 rows")
    means = ds.x.mean(axis=0)
    sds = ds.x.std(axis=0, ddof=1)
    keep = sds > 0
    if not np.any(keep):
        raise ValidationError("all predictor columns are constant")
    dropped = [n for n, k in zip(ds.column_names, keep) if not k]
    x = (ds.x[:, keep] - means[keep]) / sds[keep]
    y_mean = float(ds.y.mean())
    y_sd = float(ds.y.std(ddof=1))
    if y_sd == 0.0:
        raise ValidationError("response is constant")
    return Dataset(
        x=x,
        y=(ds.y - y_mean) / y_sd,
        column_names=[n for n, k in zip(ds.column_names, keep) if k],
        column_means=means[keep],
        column_sds=sds[keep],
        y_mean=y_mean,
        y_sd=y_sd,
        standardized=True,
        dropped_columns=dropped,
    )


def destandardize_predictions(ds: Dataset, yhat_std: np.ndarray) -> np.ndarray:
    """Map predictions of a standardized fit back to original response units."""
    if not ds.standardized:
        return np.asarray(yhat_std, dtype=np.float64)
    return ds.y_mean + ds.y_sd * np.asarray(yhat_std, dtype=np.float64)


def make_splits(n: int, fraction: float = 0.5, seed: int = 0) -> SplitPlan:
    """One random train/test split; integer permutation only, so the same
    seed gives the same split on any platform."""
    if not (0.0 < fraction < 1.0):
        raise ValidationError(f"fraction must lie in (0, 1); got {fraction}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    k = int(round(fraction * n))
    if k == 0 or k == n:
        raise ValidationError("split leaves an empty part")
    return SplitPlan(
        train_idx=np.sort(perm[:k]),
        test_idx=np.sort(perm[k:]),
        seed=seed,
        spec=f"fraction={fraction}",
    )


def make_folds(n: int, k: int, seed: int = 0) -> list[SplitPlan]:
    """k disjoint covering folds; sizes differ by at most one."""
    if not (2 <= k <= n):
        raise ValidationError(f"fold count must lie in [2, n]; got {k}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    folds = np.array_split(perm, k)
    plans = []
    for i, fold in enumerate(folds):
        train = np.sort(np.concatenate([f for j, f in enumerate(folds) if j != i]))
        plans.append(
            SplitPlan(train_idx=train, test_idx=np.sort(fold), seed=seed, spec=f"fold {i + 1}/{k}")
        )
    return plans


def write_results(path, rows: list[dict], metadata: dict, sidecar_path=None) -> None:
    """Persist a results table as CSV plus a JSON sidecar of the run recipe.

    The CSV depends only on ``rows`` (full-precision repr floats), so
    identical configurations produce byte-identical files; volatile context
    (timestamps, versions) lives in the sidecar.
    """
    if not rows:
        raise ValidationError("no result rows to write")
    fields = list(rows[0].keys())
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(fields)
        for row in rows:
            writer.writerow(
                [repr(float(row[f])) if isinstance(row[f], float) else row[f] for f in fields]
            )
    sidecar = sidecar_path or (str(path) + ".meta.json")
    with open(sidecar, "w", encoding="utf-8") as fh:
        json.dump(metadata, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
