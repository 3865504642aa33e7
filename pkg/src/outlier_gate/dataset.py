"""Numeric tabular data: CSV ingestion, row subsetting and the Iris fixture."""
from __future__ import annotations

import csv
import functools
import io
import math
import os
from dataclasses import dataclass
from importlib import resources
from typing import BinaryIO, Iterable, Sequence, Union

import numpy as np

__all__ = [
    "Dataset",
    "DatasetError",
    "CsvOptions",
    "RowSelection",
    "load_csv",
    "dump_csv",
    "drop_rows",
    "iris",
    "iris_outlier_fixture",
    "INJECTED_ROW",
]

# Tuple injected into Fisher's Iris for the outlier experiment.
INJECTED_ROW = (10.0, 7.0, 8.0, 5.0)


class DatasetError(ValueError):
    """Raised for malformed input data or invalid row selections."""


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable n x d table of finite reals with unique column names."""

    columns: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        cols = tuple(str(c) for c in self.columns)
        if not cols:
            raise DatasetError("dataset needs at least one column")
        if any(not c for c in cols):
            raise DatasetError("column names must be non-empty")
        if len(set(cols)) != len(cols):
            raise DatasetError(f"duplicate column names in {cols!r}")
        vals = np.array(self.values, dtype=float, copy=True)
        if vals.ndim != 2 or vals.shape[1] != len(cols):
            raise DatasetError(
                f"values must have shape (n, {len(cols)}), got {vals.shape}"
            )
        if vals.shape[0] < 1:
            raise DatasetError("dataset needs at least one row")
        if not np.isfinite(vals).all():
            raise DatasetError("dataset values must be finite")
        vals.flags.writeable = False
        object.__setattr__(self, "columns", cols)
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def column(self, name: str) -> np.ndarray:
        try:
            j = self.columns.index(name)
        except ValueError:
            raise DatasetError(
                f"unknown column {name!r}; available: {', '.join(self.columns)}"
            ) from None
        return self.values[:, j]

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return self.columns == other.columns and np.array_equal(
            self.values, other.values
        )

    def __hash__(self):
        return hash((self.columns, self.values.tobytes()))

    def __repr__(self):
        return f"Dataset(columns={self.columns!r}, n={self.n})"


@dataclass(frozen=True)
class RowSelection:
    """Sorted, duplicate-free 0-based row indices."""

    indices: tuple[int, ...] = ()

    def __post_init__(self):
        idx = tuple(sorted({int(i) for i in self.indices}))
        if idx and idx[0] < 0:
            raise DatasetError(f"negative row index {idx[0]}")
        object.__setattr__(self, "indices", idx)

    @classmethod
    def of(cls, indices: Iterable[int]) -> "RowSelection":
        return cls(tuple(indices))

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __contains__(self, i):
        return i in self.indices

    def __bool__(self):
        return bool(self.indices)


@dataclass(frozen=True)
class CsvOptions:
    delimiter: str = ","
    encoding: str = "utf-8"


Source = Union[str, os.PathLike, bytes, BinaryIO]


def _read_bytes(source: Source) -> bytes:
    if isinstance(source, bytes):
        return source
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            return fh.read()
    return source.read()


def _parse_value(text: str, row: int, col: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise DatasetError(
            f"non-numeric value {text!r} at row {row}, column {col!r}"
        ) from None
    if not math.isfinite(value):
        raise DatasetError(f"non-finite value {text!r} at row {row}, column {col!r}")
    return value


def load_csv(source: Source, options: CsvOptions | None = None) -> Dataset:
    """Parse a header-first numeric CSV into a :class:`Dataset`.

    ``source`` may be a path, raw bytes or a binary file object. Rows are
    numbered from 1 (the first record after the header) in error messages.
    Blank lines are ignored.
    """
    options = options or CsvOptions()
    try:
        text = _read_bytes(source).decode(options.encoding)
    except UnicodeDecodeError as exc:
        raise DatasetError(f"input is not valid {options.encoding}: {exc}") from None
    records = [
        [field.strip() for field in rec]
        for rec in csv.reader(
            io.StringIO(text), delimiter=options.delimiter, quoting=csv.QUOTE_NONE
        )
        if any(field.strip() for field in rec)
    ]
    if not records:
        raise DatasetError("empty input: no header")
    header, body = records[0], records[1:]
    if not body:
        raise DatasetError("empty body: header has no data rows")
    if len(set(header)) != len(header):
        dupes = sorted({h for h in header if header.count(h) > 1})
        raise DatasetError(f"duplicate header name(s): {', '.join(dupes)}")
    rows = []
    for r, rec in enumerate(body, start=1):
        if len(rec) != len(header):
            raise DatasetError(
                f"ragged record at row {r}: expected {len(header)} fields, got {len(rec)}"
            )
        rows.append([_parse_value(v, r, c) for v, c in zip(rec, header)])
    return Dataset(tuple(header), np.array(rows, dtype=float))


def dump_csv(ds: Dataset, options: CsvOptions | None = None) -> bytes:
    """Serialize with shortest round-trip float repr, so reloading is bit-exact."""
    options = options or CsvOptions()
    lines = [options.delimiter.join(ds.columns)]
    lines.extend(options.delimiter.join(repr(float(v)) for v in row) for row in ds.values)
    return ("\n".join(lines) + "\n").encode(options.encoding)


def drop_rows(ds: Dataset, sel: RowSelection | Sequence[int]) -> Dataset:
    """Return a new dataset without the selected rows, order preserved."""
    if not isinstance(sel, RowSelection):
        sel = RowSelection.of(sel)
    if not sel:
        return ds
    if sel.indices[-1] >= ds.n:
        raise DatasetError(f"row index {sel.indices[-1]} out of range for n={ds.n}")
    if len(sel) == ds.n:
        raise DatasetError("removal would leave zero rows")
    keep = np.ones(ds.n, dtype=bool)
    keep[list(sel.indices)] = False
    return Dataset(ds.columns, ds.values[keep])


@functools.lru_cache(maxsize=None)
def iris() -> Dataset:
    """Fisher's 150-row Iris measurements (SL, SW, PL, PW)."""
    raw = resources.files("outlier_gate").joinpath("data/iris.csv").read_bytes()
    return load_csv(raw)


def iris_outlier_fixture() -> Dataset:
    """Iris with the injected outlier tuple stored at row 0 (151 rows)."""
    base = iris()
    return Dataset(base.columns, np.vstack([INJECTED_ROW, base.values]))
