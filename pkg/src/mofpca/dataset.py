"""Loading, scaling and group partitioning of tabular data."""

import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .exceptions import InputError

SCALING_MODES = ("zscore", "pixel", "none")


@dataclass(frozen=True)
class RawTable:
    values: np.ndarray
    column_names: List[str]

    def __post_init__(self):
        if self.values.ndim != 2:
            raise InputError("feature matrix must be 2-dimensional")
        if self.n < 2:
            raise InputError(f"need at least 2 samples, got {self.n}")
        if self.d < 1:
            raise InputError("need at least 1 attribute")
        if not np.all(np.isfinite(self.values)):
            raise InputError("feature matrix contains missing or non-finite values")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class StandardizedDataset:
    """Scaled sample matrix plus the A/B row partition.

    ``mean`` and ``scale`` hold the affine map that was applied, so new
    samples can be brought into the same space with :meth:`apply_scaling`.
    """

    x: np.ndarray
    group_a_rows: np.ndarray
    group_b_rows: np.ndarray
    scaling_mode: str = "zscore"
    column_names: List[str] = field(default_factory=list)
    mean: Optional[np.ndarray] = None
    scale: Optional[np.ndarray] = None
    constant_columns: Tuple[int, ...] = ()

    def __post_init__(self):
        n = self.x.shape[0]
        a = np.asarray(self.group_a_rows, dtype=np.intp)
        b = np.asarray(self.group_b_rows, dtype=np.intp)
        if len(a) == 0 or len(b) == 0:
            raise InputError("both sensitive groups must be non-empty")
        seen = np.zeros(n, dtype=int)
        np.add.at(seen, a, 1)
        np.add.at(seen, b, 1)
        if not np.all(seen == 1):
            raise InputError("group rows must partition the samples")
        object.__setattr__(self, "group_a_rows", a)
        object.__setattr__(self, "group_b_rows", b)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]

    @property
    def x_a(self) -> np.ndarray:
        return self.x[self.group_a_rows]

    @property
    def x_b(self) -> np.ndarray:
        return self.x[self.group_b_rows]

    def apply_scaling(self, values) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        if self.mean is None:
            return values.copy()
        return (values - self.mean) / self.scale


def _partition(labels, group_a_value) -> Tuple[np.ndarray, np.ndarray]:
    labels = np.asarray(labels).astype(str)
    distinct = np.unique(labels)
    if len(distinct) != 2:
        raise InputError(
            f"sensitive attribute not binary: found {len(distinct)} distinct values"
        )
    if group_a_value is None:
        group_a_value = distinct[0]
    group_a_value = str(group_a_value)
    if group_a_value not in distinct:
        raise InputError(
            f"group A value {group_a_value!r} not among sensitive values {list(distinct)}"
        )
    is_a = labels == group_a_value
    return np.flatnonzero(is_a), np.flatnonzero(~is_a)


def _numeric_table(frame: pd.DataFrame) -> RawTable:
    columns = []
    for name in frame.columns:
        col = pd.to_numeric(frame[name], errors="coerce")
        bad = col.isna() & frame[name].notna()
        if bad.any():
            row = int(np.flatnonzero(bad.to_numpy())[0])
            raise InputError(
                f"non-numeric value {frame[name].iloc[row]!r} in column {name!r} (row {row})"
            )
        if col.isna().any():
            raise InputError(f"missing value in column {name!r}")
        columns.append(col.to_numpy(dtype=float))
    values = np.column_stack(columns) if columns else np.empty((len(frame), 0))
    return RawTable(values, [str(c) for c in frame.columns])


def load_csv(path, sensitive_column: str, group_a_value=None, keep_sensitive: bool = False):
    """Read a headed CSV and split rows on a two-valued sensitive column.

    Returns ``(table, group_a_rows, group_b_rows)``. The sensitive column is
    dropped from the features unless ``keep_sensitive`` is set.
    """
    path = Path(path)
    if not path.is_file():
        raise InputError(f"input file not found: {path}")
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, na_values=[""])
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise InputError(f"could not parse {path}: {exc}") from exc
    frame.columns = [c.strip() for c in frame.columns]
    if sensitive_column not in frame.columns:
        raise InputError(f"sensitive column {sensitive_column!r} not found in {path}")
    labels = frame[sensitive_column]
    if labels.isna().any():
        raise InputError(f"missing value in sensitive column {sensitive_column!r}")
    a_rows, b_rows = _partition(labels.str.strip(), group_a_value)
    features = frame if keep_sensitive else frame.drop(columns=[sensitive_column])
    return _numeric_table(features), a_rows, b_rows


def load_default_credit(path):
    """Load the UCI "default of credit card clients" table.

    Accepts the CSV export (with or without the extra ``X1..X23`` header row
    of the original spreadsheet). Rows with EDUCATION in {1, 2} (graduate
    school, university) form the higher-education group B; all others form
    group A. The 23 attributes, EDUCATION included, are kept as features.
    """
    path = Path(path)
    if not path.is_file():
        raise InputError(f"input file not found: {path}")
    frame = pd.read_csv(path)
    if "EDUCATION" not in frame.columns:
        frame = pd.read_csv(path, header=1)
    if "EDUCATION" not in frame.columns:
        raise InputError(f"{path} does not look like the Default Credit table")
    drop = [c for c in frame.columns
            if c.upper() == "ID" or c.lower().startswith("default") or c.startswith("Unnamed")]
    features = frame.drop(columns=drop)
    higher = features["EDUCATION"].isin([1, 2]).to_numpy()
    return _numeric_table(features), np.flatnonzero(~higher), np.flatnonzero(higher)


def standardize(table: RawTable, group_a_rows, group_b_rows, mode: str = "zscore") -> StandardizedDataset:
    """Scale ``table`` and attach the group partition.

    zscore statistics (mean, population std) come from all rows jointly.
    Constant columns become zeros and trigger a warning.
    """
    if mode not in SCALING_MODES:
        raise InputError(f"unknown scaling mode {mode!r}; expected one of {SCALING_MODES}")
    values = np.asarray(table.values, dtype=float)
    d = values.shape[1]
    constant = ()
    if mode == "zscore":
        mean = values.mean(axis=0)
        std = values.std(axis=0)
        constant_mask = std == 0
        constant = tuple(int(i) for i in np.flatnonzero(constant_mask))
        if constant:
            names = [table.column_names[i] for i in constant] if table.column_names else constant
            warnings.warn(f"constant columns mapped to zero: {list(names)}", stacklevel=2)
        scale = np.where(constant_mask, 1.0, std)
        x = (values - mean) / scale
    elif mode == "pixel":
        mean, scale = np.zeros(d), np.full(d, 255.0)
        x = values / 255.0
    else:
        mean, scale = None, None
        x = values.copy()
    return StandardizedDataset(
        x=x,
        group_a_rows=group_a_rows,
        group_b_rows=group_b_rows,
        scaling_mode=mode,
        column_names=list(table.column_names),
        mean=mean,
        scale=scale,
        constant_columns=constant,
    )


def from_arrays(x, groups, group_a_value=None, mode: str = "zscore",
                column_names: Optional[Sequence[str]] = None) -> StandardizedDataset:
    x = np.asarray(x, dtype=float)
    names = list(column_names) if column_names is not None else [f"x{i}" for i in range(x.shape[1])]
    a_rows, b_rows = _partition(groups, group_a_value)
    return standardize(RawTable(x, names), a_rows, b_rows, mode)


def make_two_group_dataset(n_a: int = 120, n_b: int = 280, d: int = 12, seed: int = 0):
    """Synthetic table whose groups spread their variance over different axes.

    Returns ``(x, groups)`` with groups labelled ``"A"`` and ``"B"``.
    """
    rng = np.random.default_rng(seed)
    spectrum = np.linspace(3.0, 0.5, d)
    rotation, _ = np.linalg.qr(rng.standard_normal((d, d)))
    tilt = np.exp(rng.uniform(-0.8, 0.8, size=d))
    xa = rng.standard_normal((n_a, d)) * (spectrum * tilt) @ rotation.T
    xb = rng.standard_normal((n_b, d)) * (spectrum / tilt) @ rotation.T
    x = np.vstack([xa, xb])
    groups = np.array(["A"] * n_a + ["B"] * n_b)
    order = rng.permutation(n_a + n_b)
    return x[order], groups[order]


def make_image_like_dataset(n_a: int = 150, n_b: int = 250, shape=(10, 20), seed: int = 0):
    """Synthetic 8-bit "images" built from smooth blobs; the two groups use
    different blob mixtures. Returns ``(x, groups)`` with integer pixels."""
    rng = np.random.default_rng(seed)
    h, w = shape
    yy, xx = np.mgrid[0:h, 0:w]
    n_blobs = 12
    centres = rng.uniform([0, 0], [h, w], size=(n_blobs, 2))
    widths = rng.uniform(1.5, 4.0, size=n_blobs)
    blobs = np.exp(-((yy[None] - centres[:, 0, None, None]) ** 2
                     + (xx[None] - centres[:, 1, None, None]) ** 2) / (2 * widths[:, None, None] ** 2))
    blobs = blobs.reshape(n_blobs, -1)
    weights_a = np.linspace(1.0, 0.2, n_blobs)
    weights_b = weights_a[::-1].copy()

    def draw(n, weights):
        coef = rng.standard_normal((n, n_blobs)) * weights + 1.0
        img = 100 + 40 * coef @ blobs + rng.normal(0, 4, size=(n, h * w))
        return np.clip(np.rint(img), 0, 255)

    x = np.vstack([draw(n_a, weights_a), draw(n_b, weights_b)])
    groups = np.array(["A"] * n_a + ["B"] * n_b)
    return x, groups
