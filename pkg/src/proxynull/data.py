"""Columnar sample container and CSV ingestion."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidConfigError, InvalidInputError

__all__ = ["Dataset", "load_csv"]

CONTINUOUS = "continuous"
CATEGORICAL = "categorical"


@dataclass
class Dataset:
    """Sample of (x, y, w) with optional z and covariate columns.

    Continuous columns are float arrays.  Categorical columns keep their raw
    labels (any hashable dtype); estimators map labels to levels by first
    appearance.  ``x`` may be a 2-d array when covariates have been folded
    into the conditioning set.
    """

    x: np.ndarray
    y: np.ndarray
    w: np.ndarray
    z: np.ndarray | None = None
    covariates: np.ndarray | None = None
    kinds: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.y)
        for name in ("x", "y", "w"):
            col = getattr(self, name)
            if len(col) != n:
                raise InvalidInputError(f"column {name!r} has length {len(col)} != {n}")
        if self.z is not None and len(self.z) != n:
            raise InvalidInputError("column 'z' length mismatch")
        if self.covariates is not None:
            cov = np.asarray(self.covariates, dtype=float)
            if cov.ndim == 1:
                cov = cov[:, None]
            if cov.shape[0] != n:
                raise InvalidInputError("covariate rows mismatch sample size")
            self.covariates = cov
        if not self.kinds:
            self.kinds = {name: CONTINUOUS for name in ("x", "y", "w", "z")}

    @property
    def n(self) -> int:
        return len(self.y)

    def kind(self, name: str) -> str:
        return self.kinds.get(name, CONTINUOUS)


def _parse_numeric(values, column: str) -> np.ndarray:
    out = np.empty(len(values), dtype=float)
    for i, v in enumerate(values):
        try:
            out[i] = float(v)
        except (TypeError, ValueError):
            raise InvalidInputError(
                f"column {column!r}, row {i}: cannot parse {v!r} as a number"
            ) from None
    if not np.all(np.isfinite(out)):
        bad = int(np.flatnonzero(~np.isfinite(out))[0])
        raise InvalidInputError(f"column {column!r}, row {bad}: non-finite value")
    return out


def load_csv(
    path,
    x: str,
    y: str,
    w: str,
    z: str | None = None,
    covariates: tuple[str, ...] = (),
    kinds: dict | None = None,
    delimiter: str = ",",
) -> Dataset:
    """Read a header-first CSV into a Dataset using a column-name map.

    ``kinds`` maps logical names (x, y, w, z) to 'continuous' or
    'categorical'; unlisted columns default to continuous.  Categorical
    columns keep their string labels.
    """
    kinds = dict(kinds or {})
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise InvalidInputError(f"{path}: empty file") from None
        rows = list(reader)

    header = [h.strip() for h in header]
    index = {name: i for i, name in enumerate(header)}
    wanted = {"x": x, "y": y, "w": w}
    if z is not None:
        wanted["z"] = z
    for logical, column in wanted.items():
        if column not in index:
            raise InvalidConfigError(
                f"column {column!r} (mapped to {logical}) not found; file has {header}"
            )
    for column in covariates:
        if column not in index:
            raise InvalidConfigError(f"covariate column {column!r} not found")

    width = len(header)
    for i, row in enumerate(rows):
        if len(row) != width:
            raise InvalidInputError(
                f"row {i}: expected {width} fields, found {len(row)}"
            )

    def pull(column: str):
        j = index[column]
        return [row[j] for row in rows]

    def coerce(logical: str, column: str):
        values = pull(column)
        if kinds.get(logical, CONTINUOUS) == CATEGORICAL:
            return np.asarray([v.strip() for v in values], dtype=object)
        return _parse_numeric(values, column)

    cov = None
    if covariates:
        cov = np.column_stack([_parse_numeric(pull(c), c) for c in covariates])

    return Dataset(
        x=coerce("x", x),
        y=coerce("y", y),
        w=coerce("w", w),
        z=coerce("z", z) if z is not None else None,
        covariates=cov,
        kinds={k: kinds.get(k, CONTINUOUS) for k in ("x", "y", "w", "z")},
    )
