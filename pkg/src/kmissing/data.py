"""Dataset model, CSV ingestion and the log/standardize preprocessing.

CSV layout: a header row, an indicator column ``m`` (literal ``0``/``1``),
a response column ``y`` (empty when ``m == 0``), feature columns
``x1..xd`` and, for simulated data, an optional ``pi`` column.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import (
    BadSize,
    DimensionMismatch,
    EmptyFile,
    NonPositiveLog,
    ParseError,
    SchemaViolation,
    ZeroVariance,
)


@dataclass(frozen=True, eq=False)
class Dataset:
    """The triple (M, X, Y), with ``nan`` in ``y`` where the response is absent.

    ``true_pi`` and ``y_true`` are simulation-only ground truth.
    """

    x: np.ndarray
    y: np.ndarray
    m: np.ndarray
    true_pi: np.ndarray | None = None
    y_true: np.ndarray | None = None
    feature_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64)
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
            raise DimensionMismatch(f"x must be n-by-d with n, d >= 1, got {x.shape}")
        n = x.shape[0]
        m = np.asarray(self.m)
        if m.shape != (n,):
            raise DimensionMismatch(f"m has shape {m.shape}, expected ({n},)")
        if not np.all((m == 0) | (m == 1)):
            raise SchemaViolation("missingness indicator must be 0 or 1")
        m = m.astype(np.int8)
        y = np.asarray(self.y, dtype=np.float64)
        if y.shape != (n,):
            raise DimensionMismatch(f"y has shape {y.shape}, expected ({n},)")
        if not np.all(np.isfinite(y[m == 1])):
            raise SchemaViolation("response missing on a row with m = 1")
        y = np.where(m == 1, y, np.nan)
        if not np.all(np.isfinite(x)):
            raise ValueError("covariates must be finite")
        for name in ("true_pi", "y_true"):
            v = getattr(self, name)
            if v is not None:
                v = np.asarray(v, dtype=np.float64)
                if v.shape != (n,):
                    raise DimensionMismatch(f"{name} has shape {v.shape}, expected ({n},)")
                object.__setattr__(self, name, v)
        names = tuple(self.feature_names) or tuple(f"x{j + 1}" for j in range(x.shape[1]))
        if len(names) != x.shape[1]:
            raise DimensionMismatch("feature_names length does not match x")
        for arr in (x, y, m):
            arr.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "feature_names", names)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]

    @property
    def observed(self) -> np.ndarray:
        return self.m == 1

    @property
    def n_complete(self) -> int:
        return int(self.m.sum())

    def y_filled(self, fill: float = 0.0) -> np.ndarray:
        """Responses with absent entries replaced by ``fill``."""
        return np.where(self.observed, self.y, fill)

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(
            x=self.x[idx],
            y=self.y[idx],
            m=self.m[idx],
            true_pi=None if self.true_pi is None else self.true_pi[idx],
            y_true=None if self.y_true is None else self.y_true[idx],
            feature_names=self.feature_names,
        )

    def complete_cases(self) -> "Dataset":
        return self.subset(np.flatnonzero(self.observed))


# ---------------------------------------------------------------- CSV


def _fmt(v: float) -> str:
    return repr(float(v))


def save_csv(ds: Dataset, path, include_pi: bool | None = None) -> None:
    """Write ``ds`` in the package CSV layout.

    The ``pi`` column is written when ``include_pi`` is true, or by default
    whenever the dataset carries ``true_pi``.
    """
    if include_pi is None:
        include_pi = ds.true_pi is not None
    if include_pi and ds.true_pi is None:
        raise ValueError("dataset has no true_pi to write")
    header = ["m", "y", *ds.feature_names] + (["pi"] if include_pi else [])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i in range(ds.n):
            row = [str(int(ds.m[i])), _fmt(ds.y[i]) if ds.m[i] == 1 else ""]
            row.extend(_fmt(v) for v in ds.x[i])
            if include_pi:
                row.append(_fmt(ds.true_pi[i]))
            w.writerow(row)


def _parse_float(text: str, row: int, column: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise ParseError(f"not a number: {text!r}", row, column) from None
    if not math.isfinite(v):
        raise ParseError(f"non-finite value {text!r}", row, column)
    return v


def load_csv(path, schema: dict | None = None) -> Dataset:
    """Read a dataset.

    ``schema`` maps roles to column names: ``m`` and ``y`` (single names),
    ``x`` (list of names) and optionally ``pi``. By default ``m``, ``y``,
    every other column except ``pi`` as features, and ``pi`` if present.
    Row numbers in errors are 1-based file lines.
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or not any(cell.strip() for cell in rows[0]):
        raise EmptyFile(f"{path}: no header")
    header = [h.strip() for h in rows[0]]
    body = [(i + 2, r) for i, r in enumerate(rows[1:]) if any(c.strip() for c in r)]
    if not body:
        raise EmptyFile(f"{path}: no data rows")

    schema = dict(schema or {})
    m_col = schema.get("m", "m")
    y_col = schema.get("y", "y")
    pi_col = schema.get("pi", "pi" if "pi" in header else None)
    x_cols = schema.get("x") or [h for h in header if h not in (m_col, y_col, pi_col)]
    for name in [m_col, y_col, *x_cols] + ([pi_col] if pi_col else []):
        if name not in header:
            raise SchemaViolation(f"{path}: column {name!r} not in header")
    if not x_cols:
        raise SchemaViolation(f"{path}: no feature columns")
    pos = {h: j for j, h in enumerate(header)}

    n = len(body)
    x = np.empty((n, len(x_cols)))
    y = np.full(n, np.nan)
    m = np.empty(n, dtype=np.int8)
    pi = np.empty(n) if pi_col else None
    for i, (line, r) in enumerate(body):
        if len(r) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(r)}", line)
        mv = r[pos[m_col]].strip()
        if mv not in ("0", "1"):
            raise SchemaViolation(f"{path}: line {line}: indicator must be 0 or 1, got {mv!r}")
        m[i] = int(mv)
        yv = r[pos[y_col]].strip()
        if m[i] == 1:
            if not yv:
                raise SchemaViolation(f"{path}: line {line}: response missing while m = 1")
            y[i] = _parse_float(yv, line, y_col)
        for j, c in enumerate(x_cols):
            x[i, j] = _parse_float(r[pos[c]].strip(), line, c)
        if pi_col:
            pi[i] = _parse_float(r[pos[pi_col]].strip(), line, pi_col)
    return Dataset(x=x, y=y, m=m, true_pi=pi, feature_names=tuple(x_cols))


# ---------------------------------------------------------------- transforms

RESPONSE = "y"


@dataclass(frozen=True)
class ColumnTransform:
    """A log or standardize step on one feature column (index) or on ``"y"``."""

    column: int | str
    kind: str
    mean: float | None = None
    sd: float | None = None

    def __post_init__(self):
        if self.kind not in ("log", "standardize"):
            raise ValueError(f"unknown transform kind {self.kind!r}")
        if isinstance(self.column, str) and self.column != RESPONSE:
            raise ValueError("string columns must be 'y'")


def apply_transforms(ds: Dataset, transforms, fit: bool):
    """Apply transforms, logs first, returning ``(dataset, fitted_transforms)``.

    With ``fit=True`` standardization statistics are estimated from ``ds``
    (observed responses only for ``"y"``); with ``fit=False`` the stored
    statistics are reused, which is how a test split is put on the
    training scale.
    """
    transforms = sorted(transforms, key=lambda t: t.kind != "log")
    x = ds.x.copy()
    y = ds.y.copy()
    obs = ds.observed
    fitted = []
    for t in transforms:
        if t.column == RESPONSE:
            col, mask = y, obs
        else:
            if not 0 <= int(t.column) < ds.d:
                raise DimensionMismatch(f"column {t.column} out of range for d={ds.d}")
            col, mask = x[:, int(t.column)], slice(None)
        vals = col[mask]
        if t.kind == "log":
            if np.any(vals <= 0):
                raise NonPositiveLog(f"column {t.column} has non-positive values")
            col[mask] = np.log(vals)
            fitted.append(t)
            continue
        if fit:
            mean = float(np.mean(vals))
            sd = float(np.std(vals, ddof=1)) if vals.size > 1 else 0.0
            t = replace(t, mean=mean, sd=sd)
        elif t.mean is None or t.sd is None:
            raise ValueError(f"transform on column {t.column} is not fitted")
        if not t.sd > 0 or (fit and np.ptp(vals) == 0):
            raise ZeroVariance(f"column {t.column} has zero variance")
        col[mask] = (vals - t.mean) / t.sd
        fitted.append(t)
    out = Dataset(
        x=x, y=y, m=ds.m, true_pi=ds.true_pi, y_true=ds.y_true, feature_names=ds.feature_names
    )
    return out, fitted


def split(ds: Dataset, n_test: int, seed: int):
    """Uniform random train/test partition; row order kept inside each part."""
    if not 0 < n_test < ds.n:
        raise BadSize(f"n_test must be in (0, {ds.n}), got {n_test}")
    rng = np.random.default_rng(seed)
    test = np.zeros(ds.n, dtype=bool)
    test[rng.choice(ds.n, size=n_test, replace=False)] = True
    return ds.subset(np.flatnonzero(~test)), ds.subset(np.flatnonzero(test))
